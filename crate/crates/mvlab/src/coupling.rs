//! Reflection/synchronous coupling on the torus: the concave distance
//! profile f built from psi, Phi, g and the constant c; the coupled SDE
//! pair driven by a reflected and a synchronous noise channel; and the
//! high-temperature threshold below which the contraction argument closes.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{MvError, Result};
use crate::numerics::{linear_fit, MonotoneCubic};
use crate::particles::sde::{replica_rng, FrozenDrift};
use crate::pde::field::DensityField;
use crate::potentials::{semiconvexity_kappa, CosineSeries};
use crate::stationary::StationaryState;

const PROFILE_NODES: usize = 4096;

/// Concave distance profile on [0, 1/2] built from
/// psi(r) = exp(beta kappa r^2 / 8), Phi = int psi,
/// c = (int_0^{1/2} Phi/psi)^{-1}, g = 1 - (c/2) int_0^r Phi/psi,
/// f = int_0^r g psi.
#[derive(Debug, Clone)]
pub struct DistanceProfile {
    pub kappa: f64,
    pub beta: f64,
    pub c: f64,
    h: f64,
    f_nodes: Vec<f64>,
    fp_nodes: Vec<f64>,
    f_interp: MonotoneCubic,
}

impl DistanceProfile {
    fn psi_of(kappa: f64, beta: f64, r: f64) -> f64 {
        (beta * kappa * r * r / 8.0).exp()
    }

    pub fn psi(&self, r: f64) -> f64 {
        Self::psi_of(self.kappa, self.beta, r)
    }

    /// f evaluated by monotone-cubic interpolation of the node table.
    pub fn f(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, 0.5);
        self.f_interp.eval(r)
    }

    /// f' from the exact relation f' = g psi tabulated at the nodes.
    pub fn f_prime(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, 0.5);
        let t = r / self.h;
        let j = (t as usize).min(self.fp_nodes.len() - 2);
        let frac = t - j as f64;
        self.fp_nodes[j] + frac * (self.fp_nodes[j + 1] - self.fp_nodes[j])
    }

    /// Analytic contraction rate 2 c / beta of E[f(gamma_t)].
    pub fn contraction_rate(&self) -> f64 {
        2.0 * self.c / self.beta
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.f_nodes
            .iter()
            .zip(&self.fp_nodes)
            .enumerate()
            .map(move |(j, (&f, &fp))| (j as f64 * self.h, f, fp))
    }
}

/// Build the distance profile by cumulative Simpson integration on a
/// 4096-node grid (per-interval Simpson with midpoint evaluation; the
/// integrands are analytic so each panel is accurate far below 1e-12).
pub fn build_distance_profile(kappa: f64, beta: f64) -> Result<DistanceProfile> {
    if kappa > 0.0 || beta <= 0.0 {
        return Err(MvError::InvalidParameter(format!(
            "distance profile requires kappa <= 0 and beta > 0, got kappa = {kappa}, beta = {beta}"
        )));
    }
    let m = PROFILE_NODES - 1; // intervals
    let h = 0.5 / m as f64;
    let psi = |r: f64| DistanceProfile::psi_of(kappa, beta, r);

    // Phi at nodes and interval midpoints
    let mut phi = vec![0.0; m + 1];
    let mut phi_mid = vec![0.0; m];
    for j in 0..m {
        let a = j as f64 * h;
        let mid = a + 0.5 * h;
        phi_mid[j] = phi[j] + h / 12.0 * (psi(a) + 4.0 * psi(a + 0.25 * h) + psi(mid));
        phi[j + 1] = phi[j] + h / 6.0 * (psi(a) + 4.0 * psi(mid) + psi(a + h));
    }

    // Q(r) = int_0^r Phi / psi at nodes and midpoints
    let q_int = |r: f64, phi_r: f64| phi_r / psi(r);
    let mut q = vec![0.0; m + 1];
    let mut q_mid = vec![0.0; m];
    for j in 0..m {
        let a = j as f64 * h;
        let mid = a + 0.5 * h;
        // Phi at the quarter point by a half-panel Simpson step
        let phi_quarter = phi[j] + h / 24.0 * (psi(a) + 4.0 * psi(a + 0.125 * h) + psi(a + 0.25 * h));
        q_mid[j] = q[j]
            + h / 12.0 * (q_int(a, phi[j]) + 4.0 * q_int(a + 0.25 * h, phi_quarter) + q_int(mid, phi_mid[j]));
        q[j + 1] = q[j]
            + h / 6.0 * (q_int(a, phi[j]) + 4.0 * q_int(mid, phi_mid[j]) + q_int(a + h, phi[j + 1]));
    }
    let c = 1.0 / q[m];

    // g = 1 - (c/2) Q, f = int g psi, f' = g psi
    let g = |qv: f64| 1.0 - 0.5 * c * qv;
    let mut f_nodes = vec![0.0; m + 1];
    let mut fp_nodes = vec![0.0; m + 1];
    fp_nodes[0] = 1.0;
    for j in 0..m {
        let a = j as f64 * h;
        let mid = a + 0.5 * h;
        let fa = g(q[j]) * psi(a);
        let fm = g(q_mid[j]) * psi(mid);
        let fb = g(q[j + 1]) * psi(a + h);
        f_nodes[j + 1] = f_nodes[j] + h / 6.0 * (fa + 4.0 * fm + fb);
        fp_nodes[j + 1] = fb;
    }

    // type invariants: bounds, monotonicity, concavity of the node table,
    // and the sampled differential inequality
    // f'' - (beta kappa r / 4) f' = -(c/2) Phi <= -(c/2) f
    let lower = 0.5 * psi(0.5);
    for j in 0..=m {
        let r = j as f64 * h;
        let f = f_nodes[j];
        if f < lower * r - 1e-12 || f > r + 1e-12 {
            return Err(MvError::InvalidParameter(format!(
                "profile bound violated at r = {r}: f = {f}"
            )));
        }
    }
    for j in 0..m {
        if f_nodes[j + 1] <= f_nodes[j] || fp_nodes[j + 1] > fp_nodes[j] + 1e-14 {
            return Err(MvError::InvalidParameter(
                "profile lost monotonicity or concavity".into(),
            ));
        }
        let r = (j as f64 + 0.5) * h;
        let second = -0.5 * c * phi_mid[j] + beta * kappa * r / 4.0 * g(q_mid[j]) * psi(r);
        let lhs = second - beta * kappa * r / 4.0 * g(q_mid[j]) * psi(r);
        if lhs > -0.5 * c * (0.5 * (f_nodes[j] + f_nodes[j + 1])) + 1e-8 {
            return Err(MvError::InvalidParameter(
                "sampled contraction inequality violated".into(),
            ));
        }
    }

    let f_interp = MonotoneCubic::new(0.0, h, f_nodes.clone());
    Ok(DistanceProfile {
        kappa,
        beta,
        c,
        h,
        f_nodes,
        fp_nodes,
        f_interp,
    })
}

/// Options of a coupled simulation.
#[derive(Debug, Clone, Copy)]
pub struct CouplingOptions {
    pub delta: f64,
    pub dt: f64,
    pub t_final: f64,
    pub replicas: usize,
    pub seed: u64,
    pub n_records: usize,
    /// freeze the Y drift at the target state as well (frozen-vs-frozen mode)
    pub frozen_target_dynamics: bool,
    /// start Y at exactly the X draw (trivial synchronisation check)
    pub identical_starts: bool,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            dt: 1e-4,
            t_final: 1.0,
            replicas: 1000,
            seed: 0,
            n_records: 100,
            frozen_target_dynamics: false,
            identical_starts: false,
        }
    }
}

/// Trace of E[f(gamma_t)] over a coupled ensemble.
#[derive(Debug, Clone)]
pub struct CouplingTrace {
    pub times: Vec<f64>,
    pub mean_f: Vec<f64>,
    pub stderr: Vec<f64>,
    pub replicas: usize,
    pub delta: f64,
    /// final quotient positions of the two marginals
    pub final_x: Vec<f64>,
    pub final_y: Vec<f64>,
    pub profile: DistanceProfile,
}

impl CouplingTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,mean_f,stderr\n");
        for i in 0..self.times.len() {
            s.push_str(&format!("{},{},{}\n", self.times[i], self.mean_f[i], self.stderr[i]));
        }
        s
    }
}

/// Smoothstep reflection cutoff: 0 below delta/2, 1 above delta.
fn phi_r(gamma: f64, delta: f64) -> f64 {
    let s = ((gamma - 0.5 * delta) / (0.5 * delta)).clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

/// Signed torus displacement in [-1/2, 1/2).
fn torus_diff(x: f64, y: f64) -> f64 {
    let d = x - y;
    d - d.round()
}

/// Couple X_t (frozen drift of the target stationary state) with Y_t
/// (drift from the evolving mean field started at nu0, or frozen at the
/// target in frozen-vs-frozen mode) through a reflected and a synchronous
/// Brownian channel, and record E[f(gamma_t)] over the replicas.
pub fn simulate_coupling(
    v: &CosineSeries,
    w: &CosineSeries,
    target: &StationaryState,
    nu0: Option<&DensityField>,
    beta: f64,
    opts: &CouplingOptions,
) -> Result<CouplingTrace> {
    let kappa = semiconvexity_kappa(v, w);
    let profile = build_distance_profile(kappa, beta)?;
    let dt = opts.dt;
    let steps = (opts.t_final / dt).round() as usize;
    let stride = (steps / opts.n_records.max(1)).max(1);

    let x_drift = FrozenDrift::new(v, w, &target.density);
    let lip = x_drift.lipschitz.max(1.0);
    if dt * lip >= 0.1 {
        return Err(MvError::StepSize { dt, bound: 0.1 / lip });
    }

    // mean-field trajectory of the Y drift: one lookup table per chunk,
    // computed once and shared read-only across replicas
    let chunk = (steps / 200).max(1);
    let y_drifts: Vec<FrozenDrift> = if opts.frozen_target_dynamics || nu0.is_none() {
        Vec::new()
    } else {
        let mut nu = nu0.unwrap().clone();
        let mut tables = Vec::with_capacity(steps / chunk + 1);
        let n_chunks = steps.div_ceil(chunk);
        // the PDE has its own (diffusive) step restriction, independent of
        // the particle step
        let h_pde = 1.0 / nu.grid_size() as f64;
        let dt_pde = 0.2 * h_pde * h_pde * beta;
        for _ in 0..n_chunks {
            tables.push(FrozenDrift::new(v, w, &nu));
            let span = chunk as f64 * dt;
            let sub_steps = (span / dt_pde).ceil().max(1.0) as usize;
            let (next, _) =
                crate::pde::evolve_mv(&nu, v, w, beta, span / sub_steps as f64, span, sub_steps, None)?;
            nu = next;
        }
        tables
    };

    let x_quant = target.density.quantiles(8192)?;
    let y_quant = match nu0 {
        Some(f) => Some(f.quantiles(8192)?),
        None => None,
    };
    let sigma = (2.0 * dt / beta).sqrt();
    let n_rec = steps / stride + 1;

    let per_replica: Vec<(Vec<f64>, f64, f64)> = (0..opts.replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng: ChaCha8Rng = replica_rng(opts.seed, rep as u64);
            let mut x = x_quant[rng.gen_range(0..x_quant.len())];
            let mut y = if opts.identical_starts {
                x
            } else {
                match &y_quant {
                    Some(q) => q[rng.gen_range(0..q.len())],
                    None => x_quant[rng.gen_range(0..x_quant.len())],
                }
            };
            let mut fs = Vec::with_capacity(n_rec);
            fs.push(profile.f(torus_diff(x, y).abs()));
            for step in 0..steps {
                let d = torus_diff(x, y);
                let gamma = d.abs();
                let pr = phi_r(gamma, opts.delta);
                let ps = (1.0 - pr * pr).max(0.0).sqrt();
                let xi: f64 = rng.sample(StandardNormal);
                let eta: f64 = rng.sample(StandardNormal);
                // reflected channel acts along the connecting direction and
                // flips sign for X; synchronous channel is common
                let e = if d >= 0.0 { 1.0 } else { -1.0 };
                let bx = x_drift.eval(x);
                let by = if opts.frozen_target_dynamics || y_drifts.is_empty() {
                    x_drift.eval(y)
                } else {
                    y_drifts[(step / chunk).min(y_drifts.len() - 1)].eval(y)
                };
                x += bx * dt + sigma * (-pr * e * xi + ps * eta);
                y += by * dt + sigma * (pr * e * xi + ps * eta);
                if (step + 1) % stride == 0 {
                    fs.push(profile.f(torus_diff(x, y).abs()));
                }
            }
            (fs, x.rem_euclid(1.0), y.rem_euclid(1.0))
        })
        .collect();

    let reps = opts.replicas as f64;
    let mut mean_f = vec![0.0; n_rec];
    let mut second = vec![0.0; n_rec];
    let mut final_x = Vec::with_capacity(opts.replicas);
    let mut final_y = Vec::with_capacity(opts.replicas);
    for (fs, fx, fy) in &per_replica {
        for (i, &f) in fs.iter().enumerate() {
            mean_f[i] += f;
            second[i] += f * f;
        }
        final_x.push(*fx);
        final_y.push(*fy);
    }
    let mut stderr = vec![0.0; n_rec];
    for i in 0..n_rec {
        mean_f[i] /= reps;
        let var = (second[i] / reps - mean_f[i] * mean_f[i]).max(0.0);
        stderr[i] = (var / reps).sqrt();
    }
    let times: Vec<f64> = (0..n_rec).map(|i| i as f64 * stride as f64 * dt).collect();
    Ok(CouplingTrace {
        times,
        mean_f,
        stderr,
        replicas: opts.replicas,
        delta: opts.delta,
        final_x,
        final_y,
        profile,
    })
}

/// Fitted exponential decay rate of E[f(gamma_t)]: minus the slope of
/// log mean_f against t over the reliable window (records after the first
/// 10% of the trace with mean_f above 1% of its initial value and above
/// twice the standard error).
pub fn fitted_decay_rate(trace: &CouplingTrace) -> Option<f64> {
    let f0 = trace.mean_f.first().copied()?;
    if f0 <= 0.0 {
        return None;
    }
    let skip = trace.times.len() / 10;
    let (mut ts, mut logs) = (Vec::new(), Vec::new());
    for i in skip..trace.times.len() {
        let f = trace.mean_f[i];
        // the 5% floor keeps the small-gamma plateau (pairs inside the
        // synchronous band) out of the exponential fit
        if f > 0.05 * f0 && f > 2.0 * trace.stderr[i] {
            ts.push(trace.times[i]);
            logs.push(f.ln());
        }
    }
    if ts.len() < 3 {
        return None;
    }
    let (_, slope, _) = linear_fit(&ts, &logs);
    Some(-slope)
}

/// Largest beta for which |kappa| / (4 e^{beta|kappa|/32}(e^{beta|kappa|/32} - 1))
/// >= sup |W''|, i.e. the high-temperature regime where the coupling
/// contraction dominates the interaction. Returns +infinity when there is
/// nothing to dominate.
pub fn high_temperature_threshold(v: &CosineSeries, w: &CosineSeries) -> f64 {
    let sup_w2 = w.sup_second_deriv();
    if sup_w2 == 0.0 {
        return f64::INFINITY;
    }
    let kappa = semiconvexity_kappa(v, w);
    let ak = kappa.abs();
    if ak == 0.0 {
        // kappa -> 0 limit of the left side is 8 / beta
        return 8.0 / sup_w2;
    }
    let lhs = |beta: f64| {
        let x = beta * ak / 32.0;
        ak / (4.0 * x.exp() * (x.exp() - 1.0))
    };
    // lhs is decreasing in beta and diverges as beta -> 0
    let mut hi = 4.0;
    while lhs(hi) > sup_w2 {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = 1e-12;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lhs(mid) >= sup_w2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
