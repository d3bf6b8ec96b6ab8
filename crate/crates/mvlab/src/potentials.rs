//! Periodic potentials as finite trigonometric series, the N-particle
//! Hamiltonian, H-stability and the semi-convexity constant kappa.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{MvError, Result};
use crate::numerics::grid_refine_min;

const TWO_PI: f64 = 2.0 * PI;

/// A 1-periodic potential U(x) = sum_k c_k cos(2 pi k x) + sum_k s_k sin(2 pi k x).
///
/// `cos` holds c_0..c_K, `sin` holds s_1..s_K. Derivatives are exact
/// (term-by-term), so the series carries no quadrature error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineSeries {
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl CosineSeries {
    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { cos, sin }
    }

    /// The zero potential.
    pub fn zero() -> Self {
        Self { cos: vec![], sin: vec![] }
    }

    /// amplitude * cos(2 pi x)
    pub fn cosine(amplitude: f64) -> Self {
        Self { cos: vec![0.0, amplitude], sin: vec![] }
    }

    /// The Kuramoto interaction W(x) = -cos(2 pi x).
    pub fn kuramoto() -> Self {
        Self::cosine(-1.0)
    }

    /// The tilted confinement V(x) = -eta cos(2 pi x).
    pub fn confinement(eta: f64) -> Self {
        Self::cosine(-eta)
    }

    pub fn is_zero(&self) -> bool {
        self.cos.iter().chain(self.sin.iter()).all(|&c| c == 0.0)
    }

    /// Highest retained mode index.
    pub fn max_mode(&self) -> usize {
        (self.cos.len().saturating_sub(1)).max(self.sin.len())
    }

    /// Cosine coefficient of mode k (0 if absent).
    pub fn cos_coeff(&self, k: usize) -> f64 {
        self.cos.get(k).copied().unwrap_or(0.0)
    }

    /// Sine coefficient of mode k >= 1 (0 if absent).
    pub fn sin_coeff(&self, k: usize) -> f64 {
        if k == 0 { 0.0 } else { self.sin.get(k - 1).copied().unwrap_or(0.0) }
    }

    /// True if the only nonzero coefficients sit in cosine mode 1.
    pub fn is_single_mode_cosine(&self) -> bool {
        self.sin.iter().all(|&s| s == 0.0)
            && self.cos.iter().enumerate().all(|(k, &c)| k == 1 || c == 0.0)
    }

    /// U(x), U'(x) and U''(x) at x (the series is 1-periodic, so x is
    /// implicitly taken mod 1).
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let mut v = self.cos_coeff(0);
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        let kmax = self.max_mode();
        for k in 1..=kmax {
            let w = TWO_PI * k as f64;
            let (s, c) = (w * x).sin_cos();
            let ck = self.cos_coeff(k);
            let sk = self.sin_coeff(k);
            v += ck * c + sk * s;
            d1 += -ck * w * s + sk * w * c;
            d2 += -(w * w) * (ck * c + sk * s);
        }
        (v, d1, d2)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        self.eval(x).2
    }

    /// sup |U''| over the torus (grid scan plus local refinement).
    pub fn sup_second_deriv(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let (_, neg_max) = grid_refine_min(&|x| -self.second_deriv(x).abs(), 0.0, 1.0, 4096, 1e-12);
        -neg_max
    }
}

/// Classification returned by [`h_stability`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum HStability {
    HStable,
    /// Not H-stable, with the offending mode indices k >= 1.
    NotHStable { offending_modes: Vec<usize> },
}

/// H-stability of an interaction potential: W is H-stable iff its nonzero
/// Fourier coefficients are nonnegative. For a series with sine components
/// the coefficients acquire an imaginary part, so any nonzero sine mode is
/// offending as well.
pub fn h_stability(w: &CosineSeries) -> HStability {
    let mut offending = Vec::new();
    for k in 1..=w.max_mode() {
        if w.cos_coeff(k) < 0.0 || w.sin_coeff(k) != 0.0 {
            offending.push(k);
        }
    }
    if offending.is_empty() {
        HStability::HStable
    } else {
        HStability::NotHStable { offending_modes: offending }
    }
}

/// The quotiented N-particle Hamiltonian
/// H(x) = sum_i V(x_i) + (1/2N) sum_i sum_{j != i} W(x_i - x_j).
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub v: CosineSeries,
    pub w: CosineSeries,
    pub n: usize,
    pub beta: f64,
}

impl Hamiltonian {
    pub fn new(v: CosineSeries, w: CosineSeries, n: usize, beta: f64) -> Self {
        assert!(n >= 1 && beta > 0.0);
        Self { v, w, n, beta }
    }

    pub fn energy(&self, positions: &[f64]) -> Result<f64> {
        if positions.len() != self.n {
            return Err(MvError::LengthMismatch { expected: self.n, got: positions.len() });
        }
        let mut e = 0.0;
        for &x in positions {
            e += self.v.value(x.rem_euclid(1.0));
        }
        let mut inter = 0.0;
        for (i, &xi) in positions.iter().enumerate() {
            for (j, &xj) in positions.iter().enumerate() {
                if i != j {
                    inter += self.w.value((xi - xj).rem_euclid(1.0));
                }
            }
        }
        Ok(e + inter / (2.0 * self.n as f64))
    }

    /// Gradient of the Hamiltonian, d/dx_i H.
    pub fn gradient(&self, positions: &[f64], out: &mut [f64]) -> Result<()> {
        if positions.len() != self.n || out.len() != self.n {
            return Err(MvError::LengthMismatch { expected: self.n, got: positions.len() });
        }
        let inv_n = 1.0 / self.n as f64;
        for (i, &xi) in positions.iter().enumerate() {
            let mut g = self.v.deriv(xi.rem_euclid(1.0));
            for (j, &xj) in positions.iter().enumerate() {
                if i != j {
                    let u = (xi - xj).rem_euclid(1.0);
                    // general form covers interaction series with odd parts
                    g += 0.5 * inv_n * (self.w.deriv(u) - self.w.deriv((-u).rem_euclid(1.0)));
                }
            }
            out[i] = g;
        }
        Ok(())
    }
}

/// kappa = inf V'' + inf W'', clamped to <= 0.
///
/// The potentials are band-limited, so a 4096-point scan with golden-section
/// refinement resolves the minimum far below test tolerance.
pub fn semiconvexity_kappa(v: &CosineSeries, w: &CosineSeries) -> f64 {
    let inf_v = if v.is_zero() { 0.0 } else { grid_refine_min(&|x| v.second_deriv(x), 0.0, 1.0, 4096, 1e-12).1 };
    let inf_w = if w.is_zero() { 0.0 } else { grid_refine_min(&|x| w.second_deriv(x), 0.0, 1.0, 4096, 1e-12).1 };
    (inf_v + inf_w).min(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eval_kuramoto_at_zero() {
        let w = CosineSeries::kuramoto();
        let (v, d1, d2) = w.eval(0.0);
        assert_relative_eq!(v, -1.0, epsilon = 1e-15);
        assert_relative_eq!(d1, 0.0, epsilon = 1e-15);
        assert_relative_eq!(d2, TWO_PI * TWO_PI, epsilon = 1e-12);
    }

    #[test]
    fn eval_zero_series() {
        let z = CosineSeries::zero();
        assert_eq!(z.eval(0.37), (0.0, 0.0, 0.0));
    }

    #[test]
    fn eval_kuramoto_quarter_period() {
        let w = CosineSeries::kuramoto();
        let (v, d1, d2) = w.eval(0.25);
        assert_relative_eq!(v, 0.0, epsilon = 1e-14);
        assert_relative_eq!(d1, TWO_PI, epsilon = 1e-12);
        assert_relative_eq!(d2, 0.0, epsilon = 1e-11);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = CosineSeries::new(vec![0.2, -1.0, 0.3], vec![0.5, -0.1]);
        let h = 1e-5;
        for i in 0..13 {
            let x = i as f64 / 13.0;
            let (_, d1, d2) = p.eval(x);
            let fd1 = (p.value(x + h) - p.value(x - h)) / (2.0 * h);
            let fd2 = (p.value(x + h) - 2.0 * p.value(x) + p.value(x - h)) / (h * h);
            assert_relative_eq!(d1, fd1, epsilon = 1e-6, max_relative = 1e-6);
            assert!((d2 - fd2).abs() < 1e-4);
        }
    }

    #[test]
    fn periodicity_to_machine_precision() {
        let p = CosineSeries::new(vec![0.1, -0.7, 0.0, 0.2], vec![0.3]);
        for i in 0..50 {
            let x = -2.0 + 4.0 * i as f64 / 50.0;
            assert!((p.value(x) - p.value(x + 1.0)).abs() <= 1e-12);
        }
    }

    #[test]
    fn h_stability_fixture_set() {
        let fixtures: Vec<(CosineSeries, bool, Vec<usize>)> = vec![
            (CosineSeries::kuramoto(), false, vec![1]),
            (CosineSeries::cosine(1.0), true, vec![]),
            (CosineSeries::zero(), true, vec![]),
            (CosineSeries::new(vec![0.0, 0.5, -0.2], vec![]), false, vec![2]),
            (CosineSeries::new(vec![-3.0, 0.0, 0.1], vec![]), true, vec![]),
        ];
        for (w, stable, modes) in fixtures {
            match h_stability(&w) {
                HStability::HStable => assert!(stable, "{w:?} misclassified as stable"),
                HStability::NotHStable { offending_modes } => {
                    assert!(!stable, "{w:?} misclassified as unstable");
                    assert_eq!(offending_modes, modes);
                }
            }
        }
        // classification is exactly "some k >= 1 cosine coefficient negative"
        for (w, _, _) in [
            (CosineSeries::kuramoto(), false, 0usize),
            (CosineSeries::new(vec![0.0, 0.2, 0.3, -0.001], vec![]), false, 0),
        ] {
            let has_neg = (1..=w.max_mode()).any(|k| w.cos_coeff(k) < 0.0);
            assert_eq!(matches!(h_stability(&w), HStability::NotHStable { .. }), has_neg);
        }
    }

    #[test]
    fn hamiltonian_single_particle() {
        let h = Hamiltonian::new(CosineSeries::cosine(-0.5), CosineSeries::zero(), 1, 1.0);
        assert_relative_eq!(h.energy(&[0.0]).unwrap(), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn hamiltonian_two_particle_kuramoto() {
        let h = Hamiltonian::new(CosineSeries::zero(), CosineSeries::kuramoto(), 2, 1.0);
        assert_relative_eq!(h.energy(&[0.0, 0.0]).unwrap(), -0.5, epsilon = 1e-15);
        // translation invariance when V = 0
        for c in [0.3, -1.7, 12.25] {
            assert_relative_eq!(h.energy(&[c, c]).unwrap(), -0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn hamiltonian_length_mismatch() {
        let h = Hamiltonian::new(CosineSeries::zero(), CosineSeries::kuramoto(), 3, 1.0);
        assert!(h.energy(&[0.0, 0.1]).is_err());
    }

    #[test]
    fn hamiltonian_permutation_invariant_exhaustive() {
        let h = Hamiltonian::new(
            CosineSeries::cosine(-0.3),
            CosineSeries::new(vec![0.0, -1.0, 0.2], vec![]),
            4,
            1.0,
        );
        let x = [0.1, 0.35, 0.62, 0.9];
        let base = h.energy(&x).unwrap();
        let mut perm = x;
        permute_all(&mut perm, 4, &mut |p| {
            assert_relative_eq!(h.energy(p).unwrap(), base, epsilon = 1e-12);
        });
    }

    #[test]
    fn hamiltonian_permutation_invariant_random_n8() {
        use rand::prelude::*;
        let h = Hamiltonian::new(CosineSeries::cosine(-0.2), CosineSeries::kuramoto(), 8, 1.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..8).map(|_| rng.gen::<f64>()).collect();
        let base = h.energy(&x).unwrap();
        for _ in 0..100 {
            let mut p = x.clone();
            p.shuffle(&mut rng);
            assert_relative_eq!(h.energy(&p).unwrap(), base, epsilon = 1e-12);
        }
    }

    fn permute_all(arr: &mut [f64; 4], k: usize, f: &mut impl FnMut(&[f64])) {
        if k == 1 {
            f(arr);
            return;
        }
        for i in 0..k {
            permute_all(arr, k - 1, f);
            if k % 2 == 0 {
                arr.swap(i, k - 1);
            } else {
                arr.swap(0, k - 1);
            }
        }
    }

    #[test]
    fn kappa_closed_forms() {
        let four_pi2 = TWO_PI * TWO_PI;
        assert_eq!(semiconvexity_kappa(&CosineSeries::zero(), &CosineSeries::zero()), 0.0);
        let k = semiconvexity_kappa(&CosineSeries::confinement(0.5), &CosineSeries::kuramoto());
        assert_relative_eq!(k, -1.5 * four_pi2, epsilon = 1e-8, max_relative = 1e-8);
        let k = semiconvexity_kappa(&CosineSeries::zero(), &CosineSeries::kuramoto());
        assert_relative_eq!(k, -four_pi2, epsilon = 1e-8, max_relative = 1e-8);
    }

    #[test]
    fn kappa_single_mode_envelope() {
        // for U = c cos(2 pi k x), inf U'' = -(2 pi k)^2 |c|
        let four_pi2 = TWO_PI * TWO_PI;
        for (k, c) in [(1usize, -0.8), (2, 0.6), (3, -0.25)] {
            let mut cos = vec![0.0; k + 1];
            cos[k] = c;
            let p = CosineSeries::new(cos, vec![]);
            let expect = -four_pi2 * (k * k) as f64 * c.abs();
            let got = semiconvexity_kappa(&p, &CosineSeries::zero());
            assert_relative_eq!(got, expect, epsilon = 1e-8, max_relative = 1e-8);
        }
    }
}
