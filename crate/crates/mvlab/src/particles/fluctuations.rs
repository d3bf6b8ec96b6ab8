//! Fluctuation statistics of the empirical measure around a reference
//! density: projections of G_N = sqrt(N)(mu_N - nu) onto the real Fourier
//! basis and the interaction fluctuation energy <W, G (x) G>.

use std::f64::consts::PI;

use crate::pde::field::DensityField;
use crate::potentials::CosineSeries;
use crate::stats::batch_mean_stderr;

/// Real orthonormal Fourier basis on [0,1):
/// e_0 = 1, e_k = sqrt(2) sin(2 pi k x) for k > 0,
/// e_{-k} = sqrt(2) cos(2 pi k x) for k > 0.
pub fn basis_e(k: i64, x: f64) -> f64 {
    match k.cmp(&0) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Greater => std::f64::consts::SQRT_2 * (2.0 * PI * k as f64 * x).sin(),
        std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * (2.0 * PI * (-k) as f64 * x).cos(),
    }
}

/// Projections <G_N, e_k> across samples, with the empirical variance and a
/// batch-means standard error for that variance.
#[derive(Debug, Clone)]
pub struct FluctuationSample {
    pub mode_index: i64,
    pub projections: Vec<f64>,
    pub variance: f64,
    pub stderr: f64,
}

/// Project sqrt(N)(mu_N - nu) onto e_k for each configuration and each
/// requested mode index.
pub fn fluctuation_modes(
    configs: &[Vec<f64>],
    ks: &[i64],
    reference: &DensityField,
) -> Vec<FluctuationSample> {
    ks.iter()
        .map(|&k| {
            // <nu, e_k> from the Fourier modes of the reference:
            // nu-hat(k) = int nu e^{-2 pi i k x}, so
            // int nu sqrt2 cos(2 pi k x) = sqrt2 Re nu-hat(k),
            // int nu sqrt2 sin(2 pi k x) = -sqrt2 Im nu-hat(k).
            let nu_proj = if k == 0 {
                1.0
            } else if k > 0 {
                -std::f64::consts::SQRT_2 * reference.mode(k).im
            } else {
                std::f64::consts::SQRT_2 * reference.mode(-k).re
            };
            let projections: Vec<f64> = configs
                .iter()
                .map(|c| {
                    let n = c.len() as f64;
                    let emp = c.iter().map(|&x| basis_e(k, x)).sum::<f64>() / n;
                    n.sqrt() * (emp - nu_proj)
                })
                .collect();
            let mean = projections.iter().sum::<f64>() / projections.len() as f64;
            let sq: Vec<f64> = projections.iter().map(|&p| (p - mean) * (p - mean)).collect();
            let (variance, stderr) = batch_mean_stderr(&sq);
            FluctuationSample {
                mode_index: k,
                projections,
                variance,
                stderr,
            }
        })
        .collect()
}

/// Mean of <W, G_N (x) G_N> = sum_k W-hat_k |<G_N, e_k>-pair|^2 across
/// samples, computed in the real basis: for W = sum_k c_k cos(2 pi k x)
/// the quadratic form is sum_{k>=1} (c_k/2)(<G,e_k>^2 + <G,e_{-k}>^2)
/// (the k = 0 projection of G vanishes identically).
pub fn interaction_fluctuation_energy(
    configs: &[Vec<f64>],
    w: &CosineSeries,
    reference: &DensityField,
) -> (f64, f64) {
    let kmax = w.max_mode();
    let mut per_sample = vec![0.0; configs.len()];
    for k in 1..=kmax {
        let ck = w.cos_coeff(k);
        let sk = w.sin_coeff(k);
        if ck == 0.0 && sk == 0.0 {
            continue;
        }
        let samples = fluctuation_modes(configs, &[k as i64, -(k as i64)], reference);
        for (i, acc) in per_sample.iter_mut().enumerate() {
            let gs = samples[0].projections[i]; // sin component
            let gc = samples[1].projections[i]; // cos component
            // cos(2 pi k (x-y)) = cos cos + sin sin, sin(2 pi k (x-y)) pairs
            // integrate to cos*sin - sin*cos which cancels in G (x) G
            *acc += 0.5 * ck * (gs * gs + gc * gc);
        }
    }
    batch_mean_stderr(&per_sample)
}
