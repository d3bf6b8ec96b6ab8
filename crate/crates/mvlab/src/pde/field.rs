//! Probability densities on the unit circle, stored as a full FFT spectrum
//! with unit mass (the k = 0 coefficient is pinned to 1 at construction).

use crate::error::{MvError, Result};
use crate::fft;
use crate::potentials::CosineSeries;
use num_complex::Complex64;

/// How far below zero a grid value may dip before it counts as a positivity
/// violation (spectral truncation of a positive density can undershoot by
/// rounding noise, never by more than this).
pub const POSITIVITY_SLACK: f64 = 1e-8;

/// A probability density on T^1 = [0, 1) represented by its Fourier
/// coefficients c_k (standard FFT layout, c_0 = 1, conjugate symmetric).
#[derive(Debug, Clone)]
pub struct DensityField {
    spec: Vec<Complex64>,
}

impl DensityField {
    /// Uniform density on a grid of `n` points.
    pub fn uniform(n: usize) -> Self {
        check_grid(n);
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        spec[0] = Complex64::new(1.0, 0.0);
        Self { spec }
    }

    /// Build from samples on the uniform grid x_j = j/n. The samples must be
    /// (numerically) nonnegative with positive mass; mass is renormalised to
    /// one exactly.
    pub fn from_grid(values: &[f64]) -> Result<Self> {
        let n = values.len();
        check_grid(n);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return Err(MvError::NonPositiveDensity { index: 0, value: max });
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < -POSITIVITY_SLACK * max {
                return Err(MvError::NonPositiveDensity { index: i, value: v });
            }
        }
        let mut spec = fft::forward_real(values);
        let mass = spec[0].re;
        if !(mass > 0.0) {
            return Err(MvError::NonPositiveDensity { index: 0, value: mass });
        }
        let scale = 1.0 / mass;
        for c in &mut spec {
            *c *= scale;
        }
        spec[0] = Complex64::new(1.0, 0.0);
        Ok(Self { spec })
    }

    /// Build by sampling a positive function on the grid.
    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, f: F) -> Result<Self> {
        let values: Vec<f64> = (0..n).map(|j| f(j as f64 / n as f64)).collect();
        Self::from_grid(&values)
    }

    /// The tilted-cosine family exp(a cos(2 pi x)) / I0(a), the invariant
    /// shape of every stationary state of the cosine models.
    pub fn from_amplitude(a: f64, n: usize) -> Result<Self> {
        if a.abs() > crate::special::MAX_ARG {
            return Err(MvError::OverflowRange(a, crate::special::MAX_ARG));
        }
        Self::from_fn(n, |x| (a * (2.0 * std::f64::consts::PI * x).cos()).exp())
    }

    /// Adopt a raw spectrum (used by the evolver). Renormalises c_0 to 1 and
    /// enforces conjugate symmetry by averaging paired bins.
    pub fn from_spectrum(mut spec: Vec<Complex64>) -> Result<Self> {
        let n = spec.len();
        check_grid(n);
        let mass = spec[0].re;
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(MvError::NonPositiveDensity { index: 0, value: mass });
        }
        let scale = 1.0 / mass;
        for c in &mut spec {
            *c *= scale;
        }
        spec[0] = Complex64::new(1.0, 0.0);
        for k in 1..n / 2 {
            let avg = 0.5 * (spec[k] + spec[n - k].conj());
            spec[k] = avg;
            spec[n - k] = avg.conj();
        }
        let half = n / 2;
        spec[half] = Complex64::new(spec[half].re, 0.0);
        Ok(Self { spec })
    }

    pub fn grid_size(&self) -> usize {
        self.spec.len()
    }

    pub fn spectrum(&self) -> &[Complex64] {
        &self.spec
    }

    /// Fourier coefficient nu_hat(k) = int nu(x) e^{-2 pi i k x} dx for any
    /// signed k; coefficients beyond the grid cutoff are zero.
    pub fn mode(&self, k: i64) -> Complex64 {
        let n = self.spec.len() as i64;
        if k.abs() > n / 2 {
            return Complex64::new(0.0, 0.0);
        }
        let idx = k.rem_euclid(n) as usize;
        self.spec[idx]
    }

    /// Density values on the native grid x_j = j/n.
    pub fn grid_values(&self) -> Vec<f64> {
        fft::inverse_real(&self.spec)
    }

    /// Density values on a refined grid of `m >= n` points (trigonometric
    /// interpolation via zero padding).
    pub fn grid_values_refined(&self, m: usize) -> Vec<f64> {
        if m == self.spec.len() {
            return self.grid_values();
        }
        fft::inverse_real(&fft::pad_spectrum(&self.spec, m))
    }

    /// Pointwise evaluation of the trigonometric interpolant at x.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.spec.len();
        let half = n / 2;
        let mut s = self.spec[0].re;
        for k in 1..half {
            let phase = 2.0 * std::f64::consts::PI * k as f64 * x;
            let c = self.spec[k];
            s += 2.0 * (c.re * phase.cos() - c.im * phase.sin());
        }
        let phase = 2.0 * std::f64::consts::PI * half as f64 * x;
        s += self.spec[half].re * phase.cos();
        s
    }

    /// Spatial derivative values on the native grid.
    pub fn derivative_values(&self) -> Vec<f64> {
        let n = self.spec.len();
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        for k in 1..n {
            let ks = fft::signed_freq(k, n);
            if ks.unsigned_abs() as usize == n / 2 {
                continue; // derivative of the Nyquist cosine has no grid representation
            }
            d[k] = Complex64::new(0.0, 2.0 * std::f64::consts::PI * ks as f64) * self.spec[k];
        }
        fft::inverse_real(&d)
    }

    /// min and max over the native grid.
    pub fn grid_range(&self) -> (f64, f64) {
        let v = self.grid_values();
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    }

    /// Error if the density dips below the positivity slack anywhere on the grid.
    pub fn check_positive(&self, time: f64) -> Result<()> {
        let (min, max) = self.grid_range();
        if !min.is_finite() || min < -POSITIVITY_SLACK * max.max(1.0) {
            return Err(MvError::PositivityViolation { time, min_value: min });
        }
        Ok(())
    }

    /// Convolution (W * nu) evaluated on the native grid, computed mode by
    /// mode: the k-th coefficient of the convolution is W_hat(k) nu_hat(k).
    pub fn convolve(&self, w: &CosineSeries) -> Vec<f64> {
        fft::inverse_real(&self.convolve_spectrum(w))
    }

    /// Spectrum of W * nu on the native layout.
    pub fn convolve_spectrum(&self, w: &CosineSeries) -> Vec<Complex64> {
        let n = self.spec.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let ks = fft::signed_freq(k, n);
            let wh = cosine_series_mode(w, ks);
            out[k] = wh * self.spec[k];
        }
        out
    }

    /// int f(x) nu(x) dx by the spectrally accurate periodic trapezoid rule.
    pub fn integrate_against<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let n = self.spec.len();
        let vals = self.grid_values();
        vals.iter()
            .enumerate()
            .map(|(j, &v)| f(j as f64 / n as f64) * v)
            .sum::<f64>()
            / n as f64
    }

    /// L1 distance to another density (resampled to the finer of the two grids).
    pub fn l1_distance(&self, other: &DensityField) -> f64 {
        let m = self.grid_size().max(other.grid_size());
        let a = self.grid_values_refined(m);
        let b = other.grid_values_refined(m);
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / m as f64
    }

    /// Sup-norm distance on the common refined grid.
    pub fn sup_distance(&self, other: &DensityField) -> f64 {
        let m = self.grid_size().max(other.grid_size());
        let a = self.grid_values_refined(m);
        let b = other.grid_values_refined(m);
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// CDF F(x) = int_0^x nu, exact for the trigonometric interpolant.
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.spec.len();
        let half = n / 2;
        let mut s = x;
        for k in 1..=half {
            let kk = 2.0 * std::f64::consts::PI * k as f64;
            let c = if k == half {
                Complex64::new(self.spec[k].re, 0.0)
            } else {
                self.spec[k]
            };
            // 2 Re[ c_k (e^{i 2 pi k x} - 1) / (i 2 pi k) ]
            let phase = kk * x;
            let num = Complex64::new(phase.cos() - 1.0, phase.sin());
            let term = c * num / Complex64::new(0.0, kk);
            s += if k == half { term.re } else { 2.0 * term.re };
        }
        s
    }

    /// Quantile table: Q(t_i) for t_i = (i + 1/2)/m, computed by inverting
    /// the CDF on an upsampled grid with linear interpolation. Requires the
    /// density to be positive on the fine grid.
    pub fn quantiles(&self, m: usize) -> Result<Vec<f64>> {
        let fine = 4 * m.max(self.grid_size());
        let vals = self.grid_values_refined(fine);
        let h = 1.0 / fine as f64;
        // cumulative trapezoid of the periodic samples
        let mut cdf = Vec::with_capacity(fine + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for j in 0..fine {
            let a = vals[j].max(0.0);
            let b = vals[(j + 1) % fine].max(0.0);
            acc += 0.5 * (a + b) * h;
            cdf.push(acc);
        }
        let total = cdf[fine];
        if !(total > 0.0) {
            return Err(MvError::NonPositiveDensity { index: 0, value: total });
        }
        for c in &mut cdf {
            *c /= total;
        }
        let mut out = Vec::with_capacity(m);
        let mut j = 0usize;
        for i in 0..m {
            let t = (i as f64 + 0.5) / m as f64;
            while j + 1 < fine && cdf[j + 1] < t {
                j += 1;
            }
            let c0 = cdf[j];
            let c1 = cdf[j + 1];
            let frac = if c1 > c0 { (t - c0) / (c1 - c0) } else { 0.5 };
            out.push((j as f64 + frac) * h);
        }
        Ok(out)
    }
}

/// W_hat(k) of a cosine/sine series under the convention
/// g_hat(k) = int g(x) e^{-2 pi i k x} dx.
pub fn cosine_series_mode(w: &CosineSeries, k: i64) -> Complex64 {
    if k == 0 {
        return Complex64::new(w.cos_coeff(0), 0.0);
    }
    let ka = k.unsigned_abs() as usize;
    let c = 0.5 * w.cos_coeff(ka);
    let s = 0.5 * w.sin_coeff(ka);
    // cos -> c/2 at +-k ; sin -> -i s/2 at +k, +i s/2 at -k
    if k > 0 {
        Complex64::new(c, -s)
    } else {
        Complex64::new(c, s)
    }
}

fn check_grid(n: usize) {
    assert!(n >= 64 && n.is_power_of_two(), "grid size must be a power of two >= 64");
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn uniform_has_unit_mass_and_flat_grid() {
        let u = DensityField::uniform(64);
        for v in u.grid_values() {
            assert_relative_eq!(v, 1.0, epsilon = 1e-14);
        }
        assert_eq!(u.mode(0).re, 1.0);
    }

    #[test]
    fn from_grid_normalises_mass() {
        let f = DensityField::from_fn(128, |x| 3.0 + (2.0 * PI * x).cos()).unwrap();
        assert_relative_eq!(f.mode(0).re, 1.0, epsilon = 1e-15);
        let vals = f.grid_values();
        let mass: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
        assert_relative_eq!(mass, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn from_grid_rejects_negative_data() {
        let vals: Vec<f64> = (0..64).map(|j| (2.0 * PI * j as f64 / 64.0).cos()).collect();
        assert!(DensityField::from_grid(&vals).is_err());
    }

    #[test]
    fn tilted_cosine_modes_match_bessel_ratios() {
        // oracle: nu_hat(k) = I_k(a)/I0(a); check k = 1 via the r0 ratio
        let a = 1.7;
        let f = DensityField::from_amplitude(a, 128).unwrap();
        let r = crate::special::r0(a);
        assert_relative_eq!(f.mode(1).re, r, epsilon = 1e-12);
        assert_relative_eq!(f.mode(-1).re, r, epsilon = 1e-12);
        assert!(f.mode(1).im.abs() < 1e-14);
    }

    #[test]
    fn eval_matches_grid() {
        let f = DensityField::from_fn(64, |x| (0.9 * (2.0 * PI * x).cos() + 0.2 * (4.0 * PI * x).sin()).exp()).unwrap();
        let vals = f.grid_values();
        for j in [0usize, 7, 31, 63] {
            assert_relative_eq!(f.eval(j as f64 / 64.0), vals[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn convolution_matches_direct_quadrature() {
        let w = CosineSeries::new(vec![0.3, -1.0, 0.25], vec![0.0, 0.4]);
        let f = DensityField::from_fn(128, |x| (0.8 * (2.0 * PI * x).cos()).exp()).unwrap();
        let conv = f.convolve(&w);
        // direct oracle on a fine quadrature grid
        let m = 2048;
        let dense = f.grid_values_refined(m);
        for j in [0usize, 17, 64, 100] {
            let x = j as f64 / 128.0;
            let mut s = 0.0;
            for i in 0..m {
                let y = i as f64 / m as f64;
                s += w.eval(x - y).0 * dense[i];
            }
            s /= m as f64;
            assert_relative_eq!(conv[j], s, epsilon = 1e-10);
        }
    }

    #[test]
    fn cdf_endpoints_and_monotone() {
        let f = DensityField::from_amplitude(2.0, 128).unwrap();
        assert_relative_eq!(f.cdf(0.0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(f.cdf(1.0), 1.0, epsilon = 1e-12);
        let mut prev = -1e-15;
        for i in 0..=500 {
            let v = f.cdf(i as f64 / 500.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn quantiles_invert_cdf() {
        let f = DensityField::from_amplitude(-1.3, 128).unwrap();
        let q = f.quantiles(512).unwrap();
        for (i, &x) in q.iter().enumerate() {
            let t = (i as f64 + 0.5) / 512.0;
            assert!((f.cdf(x) - t).abs() < 2e-3, "quantile {i}: cdf({x}) = {} vs {t}", f.cdf(x));
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let f = DensityField::from_fn(256, |x| (1.1 * (2.0 * PI * x).cos()).exp()).unwrap();
        let d = f.derivative_values();
        let h = 1e-6;
        for j in [3usize, 50, 128, 200] {
            let x = j as f64 / 256.0;
            let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
            assert_relative_eq!(d[j], fd, epsilon = 1e-5, max_relative = 1e-5);
        }
    }
}
