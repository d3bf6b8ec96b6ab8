//! Thin wrappers around rustfft with the normalization used throughout:
//! spectra hold Fourier coefficients c_k with v_j = sum_k c_k e^{2 pi i j k / n}.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::sync::Arc;

/// Forward transform of real samples to Fourier coefficients (length n,
/// standard FFT ordering, scaled by 1/n).
pub fn forward_real(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Inverse transform of Fourier coefficients back to real samples.
pub fn inverse_real(spec: &[Complex64]) -> Vec<f64> {
    let mut buf = spec.to_vec();
    FftPlanner::new().plan_fft_inverse(spec.len()).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Signed frequency of FFT bin k for transform size n.
pub fn signed_freq(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Cached forward/inverse plans for one transform size; used in the hot
/// loops of the evolver where replanning every step would dominate.
pub struct PlanPair {
    n: usize,
    fwd: Arc<dyn rustfft::Fft<f64>>,
    inv: Arc<dyn rustfft::Fft<f64>>,
}

impl PlanPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform, scaled by 1/n.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// In-place inverse transform (no scaling).
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
    }
}

/// Zero-pad a length-n coefficient spectrum to length m > n (3/2-rule
/// dealiasing uses m = 3n/2). The Nyquist bin of the source is split
/// symmetrically to keep the padded signal real.
pub fn pad_spectrum(spec: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = spec.len();
    assert!(m >= n);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    out[..half].copy_from_slice(&spec[..half]);
    for k in half + 1..n {
        out[m - (n - k)] = spec[k];
    }
    // split the Nyquist coefficient between +n/2 and -n/2
    let nyq = spec[half];
    out[half] = 0.5 * nyq;
    out[m - half] = 0.5 * nyq;
    out
}

/// Truncate a length-m coefficient spectrum back to length n (inverse of
/// [`pad_spectrum`]; the discarded bins implement the dealiasing).
pub fn truncate_spectrum(spec: &[Complex64], n: usize) -> Vec<Complex64> {
    let m = spec.len();
    assert!(m >= n);
    let half = n / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    out[..half].copy_from_slice(&spec[..half]);
    for k in half + 1..n {
        out[k] = spec[m - (n - k)];
    }
    out[half] = spec[half] + spec[m - half];
    out
}
