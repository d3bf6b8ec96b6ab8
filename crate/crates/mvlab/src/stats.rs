//! Statistical helpers for the Monte Carlo modules: batch-means errors and
//! effective sample sizes for correlated chains, chi-squared and
//! Kolmogorov--Smirnov tests.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean and naive (i.i.d.) standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean with a batch-means standard error, valid for correlated sequences.
/// Uses ~sqrt(n) batches.
pub fn batch_mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let m = (n as f64).sqrt().floor() as usize;
    if m < 2 {
        return mean_stderr(xs);
    }
    let len = n / m;
    let means: Vec<f64> = (0..m)
        .map(|j| xs[j * len..(j + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let (mean, se_of_batch) = mean_stderr(&means);
    (mean, se_of_batch)
}

/// Effective sample size of a correlated sequence by the batch-means
/// variance ratio.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    let n = xs.len();
    let (_, se_naive) = mean_stderr(xs);
    let (_, se_batch) = batch_mean_stderr(xs);
    if se_batch <= 0.0 {
        return n as f64;
    }
    let ratio = (se_naive / se_batch).powi(2);
    (n as f64 * ratio).min(n as f64)
}

/// Variance of a correlated sequence with a batch-means standard error for
/// the variance itself (variance of per-batch variances).
pub fn variance_with_stderr(xs: &[f64]) -> (f64, f64) {
    let (mean, _) = mean_stderr(xs);
    let sq: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    batch_mean_stderr(&sq)
}

/// Chi-squared goodness-of-fit p-value for observed counts against expected
/// counts (same total). Degrees of freedom = bins - 1.
pub fn chi2_pvalue(observed: &[f64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o - e) * (o - e) / e)
        .sum();
    let df = (observed.len() - 1) as f64;
    let dist = ChiSquared::new(df).expect("df >= 1");
    1.0 - dist.cdf(stat)
}

/// Two-sample Kolmogorov--Smirnov p-value (asymptotic distribution).
pub fn ks2_pvalue(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|u, v| u.partial_cmp(v).unwrap());
    xb.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (na, nb) = (xa.len(), xb.len());
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    kolmogorov_q(lambda)
}

/// Tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 lambda^2}.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut s = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        s += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * s).clamp(0.0, 1.0)
}
