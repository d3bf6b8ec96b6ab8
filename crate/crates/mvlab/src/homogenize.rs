//! 1D periodic homogenization: the corrector problem div(nu (e + grad Psi)) = 0
//! solved in closed form (1 + Psi' = c / nu), the effective diffusivity
//! A = beta^{-1} / int nu^{-1}, homogenized heat kernels, and the
//! non-commutativity comparison between the two stationary branches.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{MvError, Result};
use crate::fft;
use crate::pde::field::DensityField;
use crate::special::bessel_i;
use crate::stationary::{amplitude_roots, critical_beta};

/// How an effective diffusivity was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiffusionSource {
    AnalyticBessel,
    Quadrature,
}

/// Effective diffusion coefficient with its ellipticity sandwich
/// beta^{-1}/(Z Z^-) <= A <= beta^{-1}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EffectiveDiffusion {
    pub value: f64,
    pub beta: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub source: DiffusionSource,
}

impl EffectiveDiffusion {
    /// Closed form for the tilted-cosine state nu ∝ e^{a cos(2 pi x)}:
    /// A = beta^{-1} / I0(a)^2, with Z = Z^- = I0(a).
    pub fn analytic_bessel(a: f64, beta: f64) -> Result<Self> {
        let i0 = bessel_i(0, a)?;
        let value = 1.0 / (beta * i0 * i0);
        Ok(Self {
            value,
            beta,
            lower_bound: value,
            upper_bound: 1.0 / beta,
            source: DiffusionSource::AnalyticBessel,
        })
    }

    pub fn in_sandwich(&self, slack: f64) -> bool {
        self.lower_bound - slack <= self.value && self.value <= self.upper_bound + slack
    }
}

/// The 1D corrector Psi on the grid of the input density, normalised to
/// int Psi nu = 0, together with Psi'.
#[derive(Debug, Clone)]
pub struct CorrectorProfile {
    pub psi: Vec<f64>,
    pub psi_prime: Vec<f64>,
}

/// Solve the corrector problem for a strictly positive periodic density.
/// In 1D the first integral gives nu (1 + Psi') = c with c = 1/int nu^{-1},
/// hence A = beta^{-1} c (the harmonic mean of nu over the period, divided
/// by beta).
pub fn corrector_1d(nu_star: &DensityField, beta: f64) -> Result<(CorrectorProfile, EffectiveDiffusion)> {
    let n = nu_star.grid_size();
    let vals = nu_star.grid_values();
    for (j, &p) in vals.iter().enumerate() {
        if p <= 0.0 {
            return Err(MvError::NonPositiveDensity { index: j, value: p });
        }
    }
    let inv_mean = vals.iter().map(|&p| 1.0 / p).sum::<f64>() / n as f64;
    let c = 1.0 / inv_mean;
    let value = c / beta;

    let psi_prime: Vec<f64> = vals.iter().map(|&p| c / p - 1.0).collect();
    // spectral antiderivative: Psi' has zero mean by construction of c
    let mut spec = fft::forward_real(&psi_prime);
    spec[0] = Complex64::new(0.0, 0.0);
    for k in 1..n {
        let ks = fft::signed_freq(k, n);
        if ks.unsigned_abs() as usize == n / 2 {
            spec[k] = Complex64::new(0.0, 0.0);
            continue;
        }
        spec[k] /= Complex64::new(0.0, 2.0 * PI * ks as f64);
    }
    let mut psi = fft::inverse_real(&spec);
    // mean-zero against nu
    let offset = psi.iter().zip(&vals).map(|(&s, &p)| s * p).sum::<f64>() / n as f64;
    for s in &mut psi {
        *s -= offset;
    }

    // ellipticity bounds from U = -beta^{-1} log nu: then Z = int e^{-beta U}
    // is the mass (= 1) and Z^- = int e^{beta U} = int nu^{-1}
    let diffusion = EffectiveDiffusion {
        value,
        beta,
        lower_bound: 1.0 / (beta * inv_mean),
        upper_bound: 1.0 / beta,
        source: DiffusionSource::Quadrature,
    };
    Ok((CorrectorProfile { psi, psi_prime }, diffusion))
}

/// Homogenized heat kernel: the Gaussian with variance 2 A t, i.e. the
/// fundamental solution of d rho / dt = A d^2 rho / dx^2 from a point mass.
pub fn heat_kernel(a: &EffectiveDiffusion, t: f64, x: f64) -> f64 {
    assert!(t > 0.0);
    let var = 2.0 * a.value * t;
    (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Outcome of the two-limit comparison at given (eta, beta).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum NonCommutativityReport {
    /// beta <= beta_c(eta): unique stationary state, the limits commute.
    Commuting { eta: f64, beta: f64, beta_c: f64, a_min: f64 },
    /// eta = 0 above beta_c: the minimiser family is translation-degenerate,
    /// so no single minimiser-side kernel is selected.
    DegenerateTranslates { eta: f64, beta: f64, beta_c: f64, a_min: f64 },
    /// eta > 0 above beta_c(eta): both branches exist and their homogenized
    /// diffusivities differ.
    NonCommuting {
        eta: f64,
        beta: f64,
        a_min: f64,
        a_star: f64,
        #[serde(rename = "A_min")]
        a_eff_min: f64,
        #[serde(rename = "A_star")]
        a_eff_star: f64,
        relative_gap: f64,
        kernel_gap_t1: f64,
    },
}

/// Compare the diffusive limits taken around the two stationary branches.
/// Above beta_c(eta) with eta > 0 the order of the mean-field and diffusive
/// limits selects different branches, hence different heat kernels.
pub fn non_commutativity_report(eta: f64, beta: f64) -> Result<NonCommutativityReport> {
    let bc = critical_beta(eta);
    let roots = amplitude_roots(beta, eta);
    if eta == 0.0 && beta > bc {
        return Ok(NonCommutativityReport::DegenerateTranslates {
            eta,
            beta,
            beta_c: bc,
            a_min: roots.a_min,
        });
    }
    let a_star = match roots.a_star {
        Some(a) => a,
        None => {
            return Ok(NonCommutativityReport::Commuting {
                eta,
                beta,
                beta_c: bc,
                a_min: roots.a_min,
            })
        }
    };
    let nu_min = DensityField::from_amplitude(roots.a_min, 256)?;
    let nu_star = DensityField::from_amplitude(a_star, 256)?;
    let (_, eff_min) = corrector_1d(&nu_min, beta)?;
    let (_, eff_star) = corrector_1d(&nu_star, beta)?;
    let relative_gap = (eff_min.value - eff_star.value).abs() / eff_min.value;

    // sup_x difference of the two kernels at t = 1 on a dense symmetric grid
    let sigma = (2.0 * eff_min.value.max(eff_star.value)).sqrt();
    let kernel_gap_t1 = (0..=4000)
        .map(|i| {
            let x = -5.0 * sigma + 10.0 * sigma * i as f64 / 4000.0;
            (heat_kernel(&eff_min, 1.0, x) - heat_kernel(&eff_star, 1.0, x)).abs()
        })
        .fold(0.0, f64::max);

    Ok(NonCommutativityReport::NonCommuting {
        eta,
        beta,
        a_min: roots.a_min,
        a_star,
        a_eff_min: eff_min.value,
        a_eff_star: eff_star.value,
        relative_gap,
        kernel_gap_t1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_density_has_trivial_corrector() {
        let u = DensityField::uniform(128);
        for &beta in &[0.5, 1.0, 4.0] {
            let (prof, eff) = corrector_1d(&u, beta).unwrap();
            assert_relative_eq!(eff.value, 1.0 / beta, epsilon = 1e-14);
            assert!(prof.psi.iter().all(|&s| s.abs() < 1e-12));
        }
    }

    #[test]
    fn tilted_state_matches_bessel_formula() {
        for &a in &[0.5, 1.0, 2.0, 3.9898] {
            let beta = 4.0;
            let nu = DensityField::from_amplitude(a, 256).unwrap();
            let (_, eff) = corrector_1d(&nu, beta).unwrap();
            let i0 = bessel_i(0, a).unwrap();
            assert!(
                (eff.value - 1.0 / (beta * i0 * i0)).abs() < 1e-10,
                "a = {a}: {} vs {}",
                eff.value,
                1.0 / (beta * i0 * i0)
            );
            // cross-check int nu^{-1} = I0(a)^2 by independent quadrature
            let m = 1 << 14;
            let mut q = 0.0;
            for j in 0..m {
                let x = j as f64 / m as f64;
                q += (-a * (2.0 * PI * x).cos()).exp();
            }
            q = q / m as f64 * i0;
            assert_relative_eq!(q, i0 * i0, max_relative = 1e-12);
            assert!(eff.in_sandwich(1e-12));
        }
    }

    #[test]
    fn random_trig_density_matches_quadrature_oracle() {
        let nu = DensityField::from_fn(256, |x| {
            (0.7 * (2.0 * PI * x).cos() - 0.3 * (4.0 * PI * x).sin() + 0.1 * (6.0 * PI * x).cos()).exp()
        })
        .unwrap();
        let beta = 2.0;
        let (_, eff) = corrector_1d(&nu, beta).unwrap();
        // direct quadrature of the harmonic mean at 4x resolution
        let m = 1024;
        let fine = nu.grid_values_refined(m);
        let inv: f64 = fine.iter().map(|&p| 1.0 / p).sum::<f64>() / m as f64;
        assert!((eff.value - 1.0 / (beta * inv)).abs() < 1e-10);
        assert!(eff.in_sandwich(1e-12));
    }

    #[test]
    fn corrector_first_integral_and_weak_form() {
        let nu = DensityField::from_amplitude(1.7, 256).unwrap();
        let (prof, eff) = corrector_1d(&nu, 1.0).unwrap();
        let vals = nu.grid_values();
        let c = eff.value * 1.0; // beta = 1
        // nu (1 + Psi') constant to 1e-10
        for (j, &p) in vals.iter().enumerate() {
            assert!((p * (1.0 + prof.psi_prime[j]) - c).abs() < 1e-10);
        }
        // int Psi nu = 0
        let n = vals.len();
        let mz: f64 = prof.psi.iter().zip(&vals).map(|(&s, &p)| s * p).sum::<f64>() / n as f64;
        assert!(mz.abs() < 1e-12);
        // weak form: int nu (1 + Psi') phi' = 0 against 64 trig test functions
        for k in 1..=32 {
            let (mut sc, mut ss) = (0.0, 0.0);
            for j in 0..n {
                let x = j as f64 / n as f64;
                let w = 2.0 * PI * k as f64;
                let flux = vals[j] * (1.0 + prof.psi_prime[j]);
                sc += flux * (-w * (w * x).sin());
                ss += flux * (w * (w * x).cos());
            }
            assert!((sc / n as f64).abs() < 1e-8, "cos test function k = {k}");
            assert!((ss / n as f64).abs() < 1e-8, "sin test function k = {k}");
        }
    }

    #[test]
    fn heat_kernel_normalisation_and_variance() {
        let a = EffectiveDiffusion::analytic_bessel(0.0, 1.0).unwrap();
        assert_relative_eq!(heat_kernel(&a, 1.0, 0.0), 1.0 / (4.0 * PI).sqrt(), epsilon = 1e-14);
        let eff = EffectiveDiffusion::analytic_bessel(2.0, 4.0).unwrap();
        // quadrature of mass and second moment
        let (mut mass, mut second) = (0.0, 0.0);
        let m = 200_000;
        let span = 20.0 * (2.0 * eff.value).sqrt();
        for i in 0..m {
            let x = -span / 2.0 + span * (i as f64 + 0.5) / m as f64;
            let k = heat_kernel(&eff, 1.0, x);
            mass += k;
            second += x * x * k;
        }
        mass *= span / m as f64;
        second *= span / m as f64;
        assert_relative_eq!(mass, 1.0, epsilon = 1e-10);
        assert_relative_eq!(second, 2.0 * eff.value, epsilon = 1e-10);
    }

    #[test]
    fn diffusivity_even_and_decreasing_in_amplitude() {
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let a = 10.0 * i as f64 / 20.0;
            let plus = EffectiveDiffusion::analytic_bessel(a, 1.0).unwrap().value;
            let minus = EffectiveDiffusion::analytic_bessel(-a, 1.0).unwrap().value;
            assert!((plus - minus).abs() < 1e-12);
            if i > 0 {
                assert!(plus < prev, "A not decreasing at a = {a}");
            }
            prev = plus;
        }
    }

    #[test]
    fn report_regimes() {
        match non_commutativity_report(0.5, 1.0).unwrap() {
            NonCommutativityReport::Commuting { beta_c, .. } => assert!(beta_c > 2.0),
            other => panic!("expected commuting regime, got {other:?}"),
        }
        match non_commutativity_report(0.0, 4.0).unwrap() {
            NonCommutativityReport::DegenerateTranslates { a_min, .. } => assert!(a_min > 0.0),
            other => panic!("expected degenerate translates, got {other:?}"),
        }
        let bc = critical_beta(0.5);
        match non_commutativity_report(0.5, bc + 1.0).unwrap() {
            NonCommutativityReport::NonCommuting {
                a_min,
                a_star,
                relative_gap,
                kernel_gap_t1,
                ..
            } => {
                assert!(a_min > 0.0 && a_star < 0.0);
                assert!((a_star + a_min).abs() > 0.01);
                assert!(relative_gap > 0.01, "gap {relative_gap}");
                assert!(kernel_gap_t1 > 0.0);
            }
            other => panic!("expected non-commuting regime, got {other:?}"),
        }
    }
}
