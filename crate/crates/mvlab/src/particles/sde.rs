//! Euler--Maruyama simulation of the N-particle system
//!
//!   dX_i = [-V'(X_i) - (1/N) sum_{j != i} W'(X_i - X_j)] dt + sqrt(2/beta) dB_i
//!
//! and of the McKean SDE with frozen law (interaction drift -(W*nu)'
//! evaluated spectrally). Positions live on the line (unwrapped); the
//! quotient is applied only when evaluating forces.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{MvError, Result};
use crate::numerics::origin_fit;
use crate::pde::field::DensityField;
use crate::potentials::CosineSeries;

/// N particles with line coordinates; `quotient_positions` gives the view
/// on the torus.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    pub positions: Vec<f64>,
    pub beta: f64,
    pub seed: u64,
    pub time: f64,
}

impl ParticleEnsemble {
    pub fn new(positions: Vec<f64>, beta: f64, seed: u64) -> Self {
        Self {
            positions,
            beta,
            seed,
            time: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn quotient_positions(&self) -> Vec<f64> {
        self.positions.iter().map(|&x| x.rem_euclid(1.0)).collect()
    }
}

/// Recorded unwrapped positions along a run; one row per record time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
}

/// Precomputed drift of the frozen-law McKean SDE: -V'(x) - (W*nu)'(x) on a
/// lookup grid with linear interpolation.
pub struct FrozenDrift {
    table: Vec<f64>,
    /// crude Lipschitz bound from table differences
    pub lipschitz: f64,
}

const DRIFT_TABLE: usize = 4096;

impl FrozenDrift {
    pub fn new(v: &CosineSeries, w: &CosineSeries, nu: &DensityField) -> Self {
        let m = DRIFT_TABLE;
        let conv_deriv = {
            let mut spec = nu.convolve_spectrum(w);
            let n = nu.grid_size();
            for (k, c) in spec.iter_mut().enumerate() {
                let ks = crate::fft::signed_freq(k, n);
                *c *= num_complex::Complex64::new(0.0, 2.0 * PI * ks as f64);
            }
            crate::fft::inverse_real(&crate::fft::pad_spectrum(&spec, m))
        };
        let table: Vec<f64> = (0..m)
            .map(|j| {
                let x = j as f64 / m as f64;
                -v.deriv(x) - conv_deriv[j]
            })
            .collect();
        let lipschitz = (0..m)
            .map(|j| (table[(j + 1) % m] - table[j]).abs() * m as f64)
            .fold(0.0, f64::max);
        Self { table, lipschitz }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let m = self.table.len();
        let t = x.rem_euclid(1.0) * m as f64;
        let j = t as usize % m;
        let frac = t - t.floor();
        let a = self.table[j];
        let b = self.table[(j + 1) % m];
        a + frac * (b - a)
    }
}

/// Interaction drift accumulated into `out`: -(1/N) sum_{j != i} W'(x_i - x_j).
/// Single-cosine-mode W uses the O(N) order-parameter shortcut.
fn add_interaction_drift(w: &CosineSeries, positions: &[f64], out: &mut [f64]) {
    let n = positions.len();
    if w.is_zero() {
        return;
    }
    if w.is_single_mode_cosine() {
        let w1 = w.cos_coeff(1);
        let (mut re, mut im) = (0.0, 0.0);
        for &x in positions {
            let (s, c) = (2.0 * PI * x).sin_cos();
            re += c;
            im += s;
        }
        // (1/N) sum_j W'(x_i - x_j) = -(2 pi w1 / N) Im(e^{2 pi i x_i} conj(R));
        // the j = i term contributes sin(0) = 0 so it can stay in the sum
        let scale = 2.0 * PI * w1 / n as f64;
        for (i, &x) in positions.iter().enumerate() {
            let (s, c) = (2.0 * PI * x).sin_cos();
            out[i] += scale * (s * re - c * im);
        }
    } else {
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                if j != i {
                    acc += w.deriv(positions[i] - positions[j]);
                }
            }
            out[i] -= acc / n as f64;
        }
    }
}

/// Euler--Maruyama run to time `t_final`, recording every `record_stride`
/// steps. With `mean_field` supplied the interaction drift is the frozen
/// convolution -(W*nu)'; otherwise pairwise forces are used.
pub fn simulate_sde(
    ens: &mut ParticleEnsemble,
    v: &CosineSeries,
    w: &CosineSeries,
    dt: f64,
    t_final: f64,
    mean_field: Option<&DensityField>,
    record_stride: usize,
) -> Result<Trajectory> {
    let frozen = mean_field.map(|nu| FrozenDrift::new(v, w, nu));
    let lipschitz = match &frozen {
        Some(f) => f.lipschitz,
        None => v.sup_second_deriv() + w.sup_second_deriv(),
    };
    if dt * lipschitz >= 0.1 {
        return Err(MvError::StepSize {
            dt,
            bound: 0.1 / lipschitz.max(1e-300),
        });
    }
    let n = ens.len();
    let steps = (t_final / dt).round() as usize;
    let stride = record_stride.max(1);
    let sigma = (2.0 * dt / ens.beta).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(ens.seed);
    let mut drift = vec![0.0; n];
    let mut traj = Trajectory {
        times: vec![ens.time],
        positions: vec![ens.positions.clone()],
    };
    for step in 0..steps {
        drift.iter_mut().for_each(|d| *d = 0.0);
        match &frozen {
            Some(f) => {
                for (d, &x) in drift.iter_mut().zip(&ens.positions) {
                    *d = f.eval(x);
                }
            }
            None => {
                for (d, &x) in drift.iter_mut().zip(&ens.positions) {
                    *d = -v.deriv(x);
                }
                add_interaction_drift(w, &ens.positions, &mut drift);
            }
        }
        for (x, &d) in ens.positions.iter_mut().zip(&drift) {
            let xi: f64 = rng.sample(StandardNormal);
            *x += d * dt + sigma * xi;
        }
        ens.time += dt;
        if (step + 1) % stride == 0 || step + 1 == steps {
            traj.times.push(ens.time);
            traj.positions.push(ens.positions.clone());
        }
    }
    Ok(traj)
}

/// Mean squared displacement of particle 0 over an ensemble of independent
/// replicas, each a fresh N-particle system.
#[derive(Debug, Clone)]
pub struct MsdCurve {
    pub times: Vec<f64>,
    pub msd: Vec<f64>,
    pub n_paths: usize,
    /// per-replica squared displacement at the final time (for error bars)
    pub final_sq: Vec<f64>,
}

/// Diffusivity estimate from an MSD curve.
#[derive(Debug, Clone, Copy)]
pub struct MsdFit {
    pub a_hat: f64,
    pub stderr: f64,
    pub fit_r2: f64,
}

pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    // splitmix64 of (seed, replica) so replica streams are independent of
    // thread scheduling
    let mut z = seed ^ replica.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Run `n_paths` independent replicas of an `n_particles` system and
/// accumulate the MSD of particle 0 at `n_records` evenly spaced times.
/// Initial positions are drawn from `mean_field` when given (each particle
/// independently), else uniformly on the torus.
#[allow(clippy::too_many_arguments)]
pub fn simulate_msd_ensemble(
    n_particles: usize,
    n_paths: usize,
    v: &CosineSeries,
    w: &CosineSeries,
    beta: f64,
    dt: f64,
    t_final: f64,
    mean_field: Option<&DensityField>,
    seed: u64,
    n_records: usize,
) -> Result<MsdCurve> {
    let frozen = mean_field.map(|nu| FrozenDrift::new(v, w, nu));
    let lipschitz = match &frozen {
        Some(f) => f.lipschitz,
        None => v.sup_second_deriv() + w.sup_second_deriv(),
    };
    if dt * lipschitz >= 0.1 {
        return Err(MvError::StepSize {
            dt,
            bound: 0.1 / lipschitz.max(1e-300),
        });
    }
    let init_quantiles = match mean_field {
        Some(nu) => Some(nu.quantiles(8192)?),
        None => None,
    };
    let steps = (t_final / dt).round() as usize;
    let stride = (steps / n_records).max(1);
    let sigma = (2.0 * dt / beta).sqrt();

    let per_replica: Vec<(Vec<f64>, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(seed, replica);
            let mut x: Vec<f64> = (0..n_particles)
                .map(|_| match &init_quantiles {
                    Some(q) => q[rng.gen_range(0..q.len())],
                    None => rng.gen::<f64>(),
                })
                .collect();
            let x0 = x[0];
            let mut drift = vec![0.0; n_particles];
            let mut records = Vec::with_capacity(steps / stride + 1);
            for step in 0..steps {
                match &frozen {
                    Some(f) => {
                        for (d, &xi) in drift.iter_mut().zip(x.iter()) {
                            *d = f.eval(xi);
                        }
                    }
                    None => {
                        for (d, &xi) in drift.iter_mut().zip(x.iter()) {
                            *d = -v.deriv(xi);
                        }
                        add_interaction_drift(w, &x, &mut drift);
                    }
                }
                for (xi, &d) in x.iter_mut().zip(&drift) {
                    let g: f64 = rng.sample(StandardNormal);
                    *xi += d * dt + sigma * g;
                }
                if (step + 1) % stride == 0 || step + 1 == steps {
                    let disp = x[0] - x0;
                    records.push(disp * disp);
                }
            }
            let last = *records.last().unwrap();
            (records, last)
        })
        .collect();

    let m = per_replica[0].0.len();
    let mut msd = vec![0.0; m];
    let mut final_sq = Vec::with_capacity(n_paths);
    for (rec, last) in &per_replica {
        for (acc, &r) in msd.iter_mut().zip(rec) {
            *acc += r;
        }
        final_sq.push(*last);
    }
    for acc in &mut msd {
        *acc /= n_paths as f64;
    }
    let times: Vec<f64> = (0..m)
        .map(|i| {
            let step = ((i + 1) * stride).min(steps);
            step as f64 * dt
        })
        .collect();
    Ok(MsdCurve {
        times,
        msd,
        n_paths,
        final_sq,
    })
}

/// Fit E|X_t - X_0|^2 = 2 A t through the origin over the window [T/2, T].
/// The standard error comes from the replica spread of the final-time
/// squared displacement; fit_r2 < 0.99 flags a non-diffusive regime.
pub fn msd_diffusivity(curve: &MsdCurve) -> MsdFit {
    let t_final = *curve.times.last().unwrap();
    let window: Vec<(f64, f64)> = curve
        .times
        .iter()
        .zip(&curve.msd)
        .filter(|&(&t, _)| t >= 0.5 * t_final)
        .map(|(&t, &m)| (t, m))
        .collect();
    let t: Vec<f64> = window.iter().map(|p| p.0).collect();
    let m: Vec<f64> = window.iter().map(|p| p.1).collect();
    let (slope, _, r2) = origin_fit(&t, &m);
    let a_hat = 0.5 * slope;
    // each replica's final (X_T - X_0)^2 / (2T) is an unbiased estimate of A
    let ests: Vec<f64> = curve.final_sq.iter().map(|&s| s / (2.0 * t_final)).collect();
    let (_, stderr) = crate::stats::mean_stderr(&ests);
    MsdFit {
        a_hat,
        stderr,
        fit_r2: r2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_is_bit_reproducible() {
        let run = || {
            let mut ens = ParticleEnsemble::new(vec![0.1, 0.4, 0.9], 1.0, 99);
            simulate_sde(
                &mut ens,
                &CosineSeries::confinement(0.3),
                &CosineSeries::kuramoto(),
                1e-3,
                0.5,
                None,
                100,
            )
            .unwrap();
            ens.positions
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn quotient_positions_lie_in_unit_interval() {
        let ens = ParticleEnsemble::new(vec![-0.3, 2.7, 0.5], 1.0, 0);
        for q in ens.quotient_positions() {
            assert!((0.0..1.0).contains(&q));
        }
    }

    #[test]
    fn free_diffusion_msd_matches_brownian() {
        let curve = simulate_msd_ensemble(
            1,
            4000,
            &CosineSeries::zero(),
            &CosineSeries::zero(),
            1.0,
            1e-3,
            5.0,
            None,
            7,
            50,
        )
        .unwrap();
        let fit = msd_diffusivity(&curve);
        assert!(
            (fit.a_hat - 1.0).abs() <= 3.0 * fit.stderr,
            "A = {} +- {}",
            fit.a_hat,
            fit.stderr
        );
        assert!(fit.fit_r2 > 0.99);
    }

    #[test]
    fn near_deterministic_descent_decreases_energy() {
        // beta so large the noise is negligible: EM becomes gradient descent
        // on H, which must be nonincreasing at this step size
        let beta = 1e12;
        let v = CosineSeries::zero();
        let w = CosineSeries::kuramoto();
        let mut ens = ParticleEnsemble::new(vec![0.05, 0.62], beta, 3);
        let traj = simulate_sde(&mut ens, &v, &w, 1e-3, 2.0, None, 50).unwrap();
        let ham = crate::potentials::Hamiltonian::new(v, w, 2, beta);
        let energies: Vec<f64> = traj
            .positions
            .iter()
            .map(|p| ham.energy(p).unwrap())
            .collect();
        for pair in energies.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-8, "H increased: {pair:?}");
        }
    }

    #[test]
    fn interaction_shortcut_matches_pairwise_sum() {
        let w = CosineSeries::kuramoto();
        let positions: Vec<f64> = (0..16).map(|i| (i as f64 * 0.617).rem_euclid(1.0)).collect();
        let mut fast = vec![0.0; 16];
        add_interaction_drift(&w, &positions, &mut fast);
        // pairwise oracle
        let mut slow = vec![0.0; 16];
        for i in 0..16 {
            for j in 0..16 {
                if j != i {
                    slow[i] -= w.deriv(positions[i] - positions[j]) / 16.0;
                }
            }
        }
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn frozen_drift_matches_spectral_convolution() {
        let nu = DensityField::from_amplitude(2.0, 128).unwrap();
        let v = CosineSeries::confinement(0.5);
        let w = CosineSeries::kuramoto();
        let f = FrozenDrift::new(&v, &w, &nu);
        // oracle: (W*nu)'(x) for the tilted state is -r0(a) d/dx cos = known
        let r = crate::special::r0(2.0);
        for &x in &[0.1, 0.33, 0.81] {
            let expect = -v.deriv(x) - r * 2.0 * PI * (2.0 * PI * x).sin();
            // tolerance dominated by the linear interpolation of the table
            assert!((f.eval(x) - expect).abs() < 1e-5, "x = {x}");
        }
    }

    #[test]
    fn step_size_guard_trips() {
        let mut ens = ParticleEnsemble::new(vec![0.0], 1.0, 0);
        let err = simulate_sde(
            &mut ens,
            &CosineSeries::cosine(-5.0),
            &CosineSeries::zero(),
            1.0,
            1.0,
            None,
            1,
        );
        assert!(matches!(err, Err(MvError::StepSize { .. })));
    }
}
