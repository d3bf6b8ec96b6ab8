//! MALA sampling of the N-particle Gibbs measure
//! M_N ∝ exp(-beta [ (1/2N) sum sum_{j != i} W(x_i - x_j) + sum V(x_i) ])
//! on the torus (T)^N, with a wrapped-normal proposal so the accept/reject
//! step is exact on the quotient.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use crate::error::{MvError, Result};
use crate::potentials::CosineSeries;

/// Thinned samples of the Gibbs chain (quotient coordinates in [0,1)).
#[derive(Debug, Clone)]
pub struct GibbsSamples {
    pub configs: Vec<Vec<f64>>,
    pub acceptance: f64,
    pub step: f64,
    pub beta: f64,
}

/// Sampling options; `step = None` lets the warmup tune it into the
/// acceptance window [0.4, 0.8].
#[derive(Debug, Clone, Copy)]
pub struct GibbsOptions {
    pub n_samples: usize,
    pub thinning: usize,
    pub burn_in: usize,
    pub step: Option<f64>,
    pub seed: u64,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            thinning: 5,
            burn_in: 2_000,
            step: None,
            seed: 0,
        }
    }
}

/// Hamiltonian value and gradient with the O(N) order-parameter shortcut
/// for single-cosine-mode interactions.
struct Target {
    v: CosineSeries,
    w: CosineSeries,
    shortcut: bool,
}

impl Target {
    fn new(v: &CosineSeries, w: &CosineSeries) -> Self {
        Self {
            v: v.clone(),
            w: w.clone(),
            shortcut: w.is_single_mode_cosine(),
        }
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let mut e: f64 = x.iter().map(|&xi| self.v.value(xi)).sum();
        if self.w.is_zero() || n < 2 {
            return e;
        }
        if self.shortcut {
            let w1 = self.w.cos_coeff(1);
            let (mut re, mut im) = (0.0, 0.0);
            for &xi in x {
                let (s, c) = (2.0 * PI * xi).sin_cos();
                re += c;
                im += s;
            }
            e += w1 / (2.0 * n as f64) * (re * re + im * im - n as f64);
        } else {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if j != i {
                        acc += self.w.value(x[i] - x[j]);
                    }
                }
            }
            e += acc / (2.0 * n as f64);
        }
        e
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for (g, &xi) in out.iter_mut().zip(x) {
            *g = self.v.deriv(xi);
        }
        if self.w.is_zero() || n < 2 {
            return;
        }
        if self.shortcut {
            let w1 = self.w.cos_coeff(1);
            let (mut re, mut im) = (0.0, 0.0);
            for &xi in x {
                let (s, c) = (2.0 * PI * xi).sin_cos();
                re += c;
                im += s;
            }
            // d/dx_i (1/2N)|sum e^{2 pi i x_j}|^2 w1 = -(2 pi w1/N) Im(e^{2 pi i x_i} conj(R))
            let scale = 2.0 * PI * w1 / n as f64;
            for (g, &xi) in out.iter_mut().zip(x) {
                let (s, c) = (2.0 * PI * xi).sin_cos();
                *g += -scale * (s * re - c * im);
            }
        } else {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    if j != i {
                        // both ordered pairs (i,j) and (j,i) contribute
                        acc += self.w.deriv(x[i] - x[j]) - self.w.deriv(x[j] - x[i]);
                    }
                }
                out[i] += acc / (2.0 * n as f64);
            }
        }
    }
}

/// log of the wrapped normal density sum_k N(y + k; mu, sigma^2) on [0,1),
/// truncated at |k| <= 2 (exact to double precision for sigma < 0.2).
fn log_wrapped_normal(y: f64, mu: f64, sigma: f64) -> f64 {
    let mut s = 0.0;
    for k in -2..=2 {
        let d = y + k as f64 - mu;
        s += (-0.5 * (d / sigma).powi(2)).exp();
    }
    s.ln() - sigma.ln() - 0.5 * (2.0 * PI).ln()
}

/// One MALA transition; returns (accepted, new energy).
#[allow(clippy::too_many_arguments)]
fn mala_step(
    target: &Target,
    beta: f64,
    tau: f64,
    x: &mut Vec<f64>,
    energy: &mut f64,
    grad: &mut Vec<f64>,
    scratch: &mut Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> bool {
    let n = x.len();
    let sigma = (2.0 * tau).sqrt();
    // proposal mean mu_i = x_i - tau beta grad_i H
    let mut y = vec![0.0; n];
    let mut logq_fwd = 0.0;
    for i in 0..n {
        let mu = x[i] - tau * beta * grad[i];
        let xi: f64 = rng.sample(StandardNormal);
        let prop = (mu + sigma * xi).rem_euclid(1.0);
        logq_fwd += log_wrapped_normal(prop, mu, sigma);
        y[i] = prop;
    }
    let e_new = target.energy(&y);
    target.gradient(&y, scratch);
    let mut logq_rev = 0.0;
    for i in 0..n {
        let mu = y[i] - tau * beta * scratch[i];
        logq_rev += log_wrapped_normal(x[i], mu, sigma);
    }
    let log_alpha = -beta * (e_new - *energy) + logq_rev - logq_fwd;
    if log_alpha >= 0.0 || rng.gen::<f64>().ln() < log_alpha {
        *x = y;
        *energy = e_new;
        std::mem::swap(grad, scratch);
        true
    } else {
        false
    }
}

/// Sample the N-particle Gibbs measure by MALA. The warmup tunes the step
/// into acceptance [0.4, 0.8]; an acceptance outside [0.1, 0.95] after
/// tuning is an error.
pub fn gibbs_sample(
    n: usize,
    v: &CosineSeries,
    w: &CosineSeries,
    beta: f64,
    opts: &GibbsOptions,
) -> Result<GibbsSamples> {
    let target = Target::new(v, w);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut energy = target.energy(&x);
    let mut grad = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    target.gradient(&x, &mut grad);

    // warmup: adapt tau in batches until the acceptance window is hit
    let mut tau = opts.step.unwrap_or(0.05 / (1.0 + beta) / (n as f64).powf(1.0 / 3.0));
    if opts.step.is_none() {
        for _ in 0..40 {
            let mut acc = 0;
            for _ in 0..100 {
                if mala_step(&target, beta, tau, &mut x, &mut energy, &mut grad, &mut scratch, &mut rng) {
                    acc += 1;
                }
            }
            let rate = acc as f64 / 100.0;
            if rate < 0.4 {
                tau *= 0.6;
            } else if rate > 0.8 {
                tau *= 1.4;
            } else {
                break;
            }
        }
    }

    // burn-in with acceptance measurement
    let mut acc = 0usize;
    let burn = opts.burn_in.max(500);
    for _ in 0..burn {
        if mala_step(&target, beta, tau, &mut x, &mut energy, &mut grad, &mut scratch, &mut rng) {
            acc += 1;
        }
    }
    let rate = acc as f64 / burn as f64;
    if !(0.1..=0.95).contains(&rate) {
        return Err(MvError::AcceptanceOutOfRange { rate });
    }

    let mut configs = Vec::with_capacity(opts.n_samples);
    let mut total = 0usize;
    let mut accepted = 0usize;
    let thin = opts.thinning.max(1);
    for _ in 0..opts.n_samples {
        for _ in 0..thin {
            total += 1;
            if mala_step(&target, beta, tau, &mut x, &mut energy, &mut grad, &mut scratch, &mut rng) {
                accepted += 1;
            }
        }
        configs.push(x.clone());
    }
    Ok(GibbsSamples {
        configs,
        acceptance: accepted as f64 / total as f64,
        step: tau,
        beta,
    })
}
