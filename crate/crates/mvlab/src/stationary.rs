//! Steady states of the periodic McKean--Vlasov dynamics: the
//! self-consistency map nu -> e^{-beta(V + W*nu)}/Z, its fixed points, the
//! amplitude equation a = beta(eta + r0(a)) of the cosine family, free
//! energy, dissipation and bifurcation scans.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{MvError, Result};
use crate::numerics::{bisect, grid_refine_min};
use crate::pde::field::DensityField;
use crate::potentials::CosineSeries;
use crate::special::r0;

/// Residual tolerance for accepting a fixed point.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateKind {
    Uniform,
    Minimiser,
    NonminimisingCritical,
}

/// A steady state nu = e^{-beta(V + W*nu)}/Z together with its phase
/// classification. `amplitude_a` is the a in nu ∝ e^{a cos(2 pi x)} when the
/// state belongs to the cosine family, absent for general fixed points.
#[derive(Debug, Clone)]
pub struct StationaryState {
    pub amplitude_a: Option<f64>,
    pub beta: f64,
    pub eta: f64,
    pub density: DensityField,
    pub kind: StateKind,
    pub residual: f64,
}

/// Roots of the amplitude equation F(a) = beta(eta + r0(a)) - a.
/// `a_min` parametrises the minimiser branch; `a_star` (< 0) the
/// non-minimising critical branch when it exists.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AmplitudeRoots {
    pub a_min: f64,
    pub a_star: Option<f64>,
}

/// One step of the self-consistency map T(nu) = e^{-beta(V + W*nu)}/Z.
/// The convolution is exact in Fourier space; the output has unit mass by
/// construction.
pub fn self_consistency_map(
    nu: &DensityField,
    v: &CosineSeries,
    w: &CosineSeries,
    beta: f64,
) -> Result<DensityField> {
    let n = nu.grid_size();
    let conv = nu.convolve(w);
    let mut u: Vec<f64> = (0..n)
        .map(|j| v.value(j as f64 / n as f64) + conv[j])
        .collect();
    let umin = u.iter().cloned().fold(f64::INFINITY, f64::min);
    for x in &mut u {
        *x = (-beta * (*x - umin)).exp();
    }
    DensityField::from_grid(&u)
}

/// sup-norm of nu - T(nu) on the grid.
pub fn fixed_point_residual(
    nu: &DensityField,
    v: &CosineSeries,
    w: &CosineSeries,
    beta: f64,
) -> Result<f64> {
    Ok(nu.sup_distance(&self_consistency_map(nu, v, w, beta)?))
}

/// Damped fixed-point iteration nu <- (1 - lambda) nu + lambda T(nu) until
/// the residual drops below 1e-10. The default damping is 1 for beta < 1
/// (where T is a contraction) and 0.5 otherwise.
pub fn solve_stationary(
    v: &CosineSeries,
    w: &CosineSeries,
    beta: f64,
    init: &DensityField,
    damping: Option<f64>,
    max_iter: usize,
) -> Result<StationaryState> {
    let mut lambda = damping.unwrap_or(if beta < 1.0 { 1.0 } else { 0.5 });
    assert!(lambda > 0.0 && lambda <= 1.0, "damping must lie in (0, 1]");
    let mut nu = init.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let t = self_consistency_map(&nu, v, w, beta)?;
        let r = nu.sup_distance(&t);
        if r < RESIDUAL_TOL {
            return Ok(classify(nu, r, v, w, beta));
        }
        // a growing residual means the damped map is locally expanding at
        // this lambda; back off until it contracts again
        if r > residual {
            lambda = (0.5 * lambda).max(1e-3);
        }
        residual = r;
        let a = nu.grid_values();
        let b = t.grid_values();
        let mixed: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| (1.0 - lambda) * x + lambda * y)
            .collect();
        nu = DensityField::from_grid(&mixed)?;
    }
    Err(MvError::NonConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Attach amplitude and phase classification to a converged fixed point.
fn classify(
    nu: DensityField,
    residual: f64,
    v: &CosineSeries,
    w: &CosineSeries,
    beta: f64,
) -> StationaryState {
    let canonical = v.is_single_mode_cosine() && w.is_single_mode_cosine();
    let eta = if canonical { -v.cos_coeff(1) } else { 0.0 };

    // amplitude fit: log nu should be a0 + a cos(2 pi x) for the cosine family
    let amplitude_a = estimate_amplitude(&nu);

    let kind = match amplitude_a {
        Some(a) if a.abs() < 1e-7 => StateKind::Uniform,
        _ => {
            // free-energy comparison against all known critical points
            let e_here = free_energy(&nu, v, w, beta);
            let mut best_other = free_energy(&DensityField::uniform(nu.grid_size()), v, w, beta);
            if canonical {
                let w1 = w.cos_coeff(1);
                let v1 = v.cos_coeff(1);
                for a in amplitude_equation_roots(beta, v1, w1) {
                    if let Ok(cand) = DensityField::from_amplitude(a, nu.grid_size()) {
                        best_other = best_other.min(free_energy(&cand, v, w, beta));
                    }
                }
            }
            if e_here <= best_other + 1e-9 {
                StateKind::Minimiser
            } else {
                StateKind::NonminimisingCritical
            }
        }
    };
    StationaryState {
        amplitude_a,
        beta,
        eta,
        density: nu,
        kind,
        residual,
    }
}

/// If log nu is (numerically) a pure mode-1 cosine, return its amplitude.
fn estimate_amplitude(nu: &DensityField) -> Option<f64> {
    let vals = nu.grid_values();
    if vals.iter().any(|&x| x <= 0.0) {
        return None;
    }
    let logs: Vec<f64> = vals.iter().map(|&x| x.ln()).collect();
    let spec = crate::fft::forward_real(&logs);
    let a = 2.0 * spec[1].re;
    // residual of the single-cosine fit
    let n = vals.len();
    let sup = (0..n)
        .map(|j| {
            let x = j as f64 / n as f64;
            (logs[j] - spec[0].re - a * (2.0 * PI * x).cos()).abs()
        })
        .fold(0.0, f64::max);
    if sup < 1e-7 && spec[1].im.abs() < 1e-7 {
        Some(a)
    } else {
        None
    }
}

/// All roots of F(a) = -beta (v1 + w1 r0(a)) - a, ascending. This is the
/// general single-cosine-mode amplitude equation; the canonical
/// (eta-tilted Kuramoto) case is v1 = -eta, w1 = -1.
fn amplitude_equation_roots(beta: f64, v1: f64, w1: f64) -> Vec<f64> {
    let f = |a: f64| -beta * (v1 + w1 * r0(a)) - a;
    let reach = beta * (v1.abs() + w1.abs()) + 1.0;
    let m = 20_000;
    let mut roots: Vec<f64> = Vec::new();
    let mut prev_a = -reach;
    let mut prev_f = f(prev_a);
    for i in 1..=m {
        let a = -reach + 2.0 * reach * i as f64 / m as f64;
        let fa = f(a);
        if prev_f == 0.0 {
            roots.push(prev_a);
        } else if prev_f * fa < 0.0 {
            roots.push(bisect(&f, prev_a, a, 1e-12));
        }
        prev_a = a;
        prev_f = fa;
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    roots
}

/// Roots of the tilted-Kuramoto amplitude equation a = beta(eta + r0(a)).
///
/// eta = 0: a_min = 0 for beta <= 2, the unique positive root above; the
/// mirrored negative root is a translate of the positive branch and is not
/// reported. eta > 0: a_min is the unique positive root; a_star is the most
/// negative root when one exists.
pub fn amplitude_roots(beta: f64, eta: f64) -> AmplitudeRoots {
    assert!(beta > 0.0 && (0.0..1.0).contains(&eta));
    let roots = amplitude_equation_roots(beta, -eta, -1.0);
    if eta == 0.0 {
        let a_min = roots
            .iter()
            .cloned()
            .filter(|&a| a > 1e-9)
            .fold(0.0, f64::max);
        AmplitudeRoots { a_min, a_star: None }
    } else {
        let a_min = roots
            .iter()
            .cloned()
            .find(|&a| a > 0.0)
            .expect("the amplitude equation always has a positive root for eta > 0");
        let a_star = roots.first().cloned().filter(|&a| a < 0.0);
        AmplitudeRoots { a_min, a_star }
    }
}

/// Smallest value of F(a) = beta(eta + r0(a)) - a over a < 0; the
/// non-minimising branch exists iff this dips to <= 0.
fn negative_branch_min(beta: f64, eta: f64) -> f64 {
    let f = |a: f64| beta * (eta + r0(a)) - a;
    let reach = beta * (1.0 + eta) + 1.0;
    let (_, min) = grid_refine_min(&f, -reach, -1e-9, 4000, 1e-10);
    min
}

/// Critical temperature beta_c(eta): exactly 2 at eta = 0; for eta > 0 the
/// smallest beta at which the negative root a_star appears (bisection on the
/// existence predicate to 1e-6).
pub fn critical_beta(eta: f64) -> f64 {
    assert!((0.0..1.0).contains(&eta));
    if eta == 0.0 {
        return 2.0;
    }
    // F decreases in beta at its negative-branch argmin, so the existence
    // predicate is monotone and bisection applies
    let exists = |beta: f64| negative_branch_min(beta, eta) <= 0.0;
    let mut hi = 4.0;
    while !exists(hi) {
        hi *= 2.0;
        assert!(hi < 1e6, "no phase transition found");
    }
    let g = |beta: f64| if exists(beta) { -1.0 } else { 1.0 };
    bisect(&g, 2.0, hi, 1e-6)
}

/// Mean field free energy E(nu) = beta^{-1} int nu log nu + int V dnu
/// + (1/2) int (W*nu) dnu, with 0 log 0 = 0.
pub fn free_energy(nu: &DensityField, v: &CosineSeries, w: &CosineSeries, beta: f64) -> f64 {
    let n = nu.grid_size();
    let vals = nu.grid_values();
    let conv = nu.convolve(w);
    let mut s = 0.0;
    for j in 0..n {
        let x = j as f64 / n as f64;
        let p = vals[j];
        let entropy = if p > 0.0 { p * p.ln() } else { 0.0 };
        s += entropy / beta + v.value(x) * p + 0.5 * conv[j] * p;
    }
    s / n as f64
}

/// Dissipation int |d/dx log(nu / e^{-beta(W*nu + V)})|^2 nu, evaluated by
/// spectral differentiation. Zero (<= 1e-9) exactly at steady states.
pub fn dissipation(nu: &DensityField, v: &CosineSeries, w: &CosineSeries, beta: f64) -> Result<f64> {
    let n = nu.grid_size();
    let vals = nu.grid_values();
    for (j, &p) in vals.iter().enumerate() {
        if p <= 0.0 {
            return Err(MvError::NonPositiveDensity { index: j, value: p });
        }
    }
    let dnu = nu.derivative_values();
    let dconv = {
        let mut spec = nu.convolve_spectrum(w);
        for (k, c) in spec.iter_mut().enumerate() {
            let ks = crate::fft::signed_freq(k, n);
            *c *= num_complex::Complex64::new(0.0, 2.0 * PI * ks as f64);
        }
        crate::fft::inverse_real(&spec)
    };
    let mut s = 0.0;
    for j in 0..n {
        let x = j as f64 / n as f64;
        let xi = dnu[j] / vals[j] + beta * (v.deriv(x) + dconv[j]);
        s += xi * xi * vals[j];
    }
    Ok(s / n as f64)
}

/// One row of a bifurcation scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BifurcationRow {
    pub beta: f64,
    pub a_min: f64,
    pub a_star: Option<f64>,
    /// free_energy(a_star state) - free_energy(a_min state) when both exist
    pub energy_gap: Option<f64>,
}

/// Amplitude branches of the eta-tilted Kuramoto model over a sorted beta
/// grid, with the free-energy gap between the two branches where both exist.
pub fn bifurcation_scan(beta_grid: &[f64], eta: f64) -> Vec<BifurcationRow> {
    let v = CosineSeries::confinement(eta);
    let w = CosineSeries::kuramoto();
    beta_grid
        .par_iter()
        .map(|&beta| {
            let roots = amplitude_roots(beta, eta);
            let energy_gap = roots.a_star.and_then(|a_star| {
                let min = DensityField::from_amplitude(roots.a_min, 256).ok()?;
                let star = DensityField::from_amplitude(a_star, 256).ok()?;
                Some(free_energy(&star, &v, &w, beta) - free_energy(&min, &v, &w, beta))
            });
            BifurcationRow {
                beta,
                a_min: roots.a_min,
                a_star: roots.a_star,
                energy_gap,
            }
        })
        .collect()
}

/// CSV serialisation of a scan; absent a_star / gap become empty fields.
pub fn bifurcation_csv(rows: &[BifurcationRow]) -> String {
    let mut out = String::from("beta,a_min,a_star,energy_gap\n");
    for r in rows {
        let star = r.a_star.map(|a| format!("{a:.12e}")).unwrap_or_default();
        let gap = r.energy_gap.map(|g| format!("{g:.12e}")).unwrap_or_default();
        out.push_str(&format!("{:.12e},{:.12e},{star},{gap}\n", r.beta, r.a_min));
    }
    out
}
