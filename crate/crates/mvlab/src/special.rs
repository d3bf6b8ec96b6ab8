//! Modified Bessel functions I0, I1 under the torus-integral convention
//! I_n(y) = int_T cos(2 pi n x) exp(y cos(2 pi x)) dx, and the ratio
//! r0 = I1/I0 driving the self-consistency equation.

use crate::error::{MvError, Result};

/// Hard overflow guard: I0(700) is still below f64::MAX, I0(720) is not.
pub const MAX_ARG: f64 = 700.0;

/// Which evaluation route produced a [`BesselEval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselMethod {
    Series,
    Quadrature,
}

/// A tagged Bessel evaluation, mostly useful for cross-validation reports.
#[derive(Debug, Clone, Copy)]
pub struct BesselEval {
    pub order: u8,
    pub argument: f64,
    pub value: f64,
    pub method: BesselMethod,
}

/// I_n(y) for n in {0, 1} by the ascending power series
/// sum_m (y/2)^(2m+n) / (m! (m+n)!), truncated once a term drops below
/// 1e-17 of the partial sum.
pub fn bessel_i(n: u8, y: f64) -> Result<f64> {
    assert!(n <= 1, "only orders 0 and 1 are supported");
    if y.abs() > MAX_ARG {
        return Err(MvError::OverflowRange(y, MAX_ARG));
    }
    Ok(if n == 0 { i0_series(y) } else { i1_series(y) })
}

fn i0_series(y: f64) -> f64 {
    let q = 0.25 * y * y;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 1.0f64;
    loop {
        term *= q / (m * m);
        sum += term;
        if term < 1e-17 * sum {
            return sum;
        }
        m += 1.0;
    }
}

fn i1_series(y: f64) -> f64 {
    let q = 0.25 * y * y;
    let half = 0.5 * y;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 1.0f64;
    loop {
        term *= q / (m * (m + 1.0));
        sum += term;
        if term < 1e-17 * sum {
            return half * sum;
        }
        m += 1.0;
    }
}

/// r0(a) = I1(a)/I0(a). Odd, strictly increasing, range (-1, 1).
///
/// For |a| <= 30 the two series are used directly. Beyond that the ratio is
/// evaluated by the Gauss continued fraction (Lentz's algorithm), which never
/// forms the exponentially large I_n themselves, so the evaluation is safe
/// for any finite argument.
pub fn r0(a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if a.abs() <= 30.0 {
        i1_series(a) / i0_series(a)
    } else {
        a.signum() * ratio_continued_fraction(a.abs())
    }
}

/// I1(x)/I0(x) for x > 0 via the continued fraction
/// I_{v+1}/I_v = 1 / (2(v+1)/x + 1 / (2(v+2)/x + ...)).
fn ratio_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    let mut v = 1.0f64;
    loop {
        let b = 2.0 * v / x;
        // continued fraction terms: b_v + 1/(...)
        d = b + d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + 1.0 / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            return f;
        }
        v += 1.0;
        if v > 10_000.0 {
            return f;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent oracle: trapezoidal quadrature of the torus integral
    /// I_n(y) = int_0^1 cos(2 pi n x) exp(y cos(2 pi x)) dx.
    fn bessel_quadrature(n: u8, y: f64, points: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..points {
            let x = i as f64 / points as f64;
            let c = (2.0 * std::f64::consts::PI * x).cos();
            let cn = (2.0 * std::f64::consts::PI * n as f64 * x).cos();
            s += cn * (y * c).exp();
        }
        s / points as f64
    }

    #[test]
    fn i0_at_zero_is_one() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn i1_at_zero_is_zero() {
        assert_eq!(bessel_i(1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn series_agrees_with_quadrature_oracle() {
        // dual-oracle agreement at 1e-12 relative for |y| <= 30
        for &y in &[0.1, 1.0, 2.5, 5.0, 10.0, 17.3, 30.0, -1.0, -12.0, -30.0] {
            for n in [0u8, 1u8] {
                let s = bessel_i(n, y).unwrap();
                let q = bessel_quadrature(n, y, 2048);
                let scale = bessel_quadrature(0, y, 2048);
                assert!(
                    (s - q).abs() <= 1e-12 * scale.abs().max(1.0),
                    "I_{n}({y}): series {s} vs quadrature {q}"
                );
            }
        }
    }

    #[test]
    fn i0_even_and_at_least_one_i1_odd() {
        for &y in &[0.3, 2.0, 9.5, 25.0] {
            assert_relative_eq!(bessel_i(0, y).unwrap(), bessel_i(0, -y).unwrap(), max_relative = 1e-14);
            assert_relative_eq!(bessel_i(1, y).unwrap(), -bessel_i(1, -y).unwrap(), max_relative = 1e-14);
            assert!(bessel_i(0, y).unwrap() >= 1.0);
        }
    }

    #[test]
    fn overflow_guard() {
        assert!(bessel_i(0, 701.0).is_err());
        assert!(bessel_i(1, -701.0).is_err());
    }

    #[test]
    fn r0_fixed_values() {
        assert_eq!(r0(0.0), 0.0);
        let v = r0(50.0);
        assert!(v > 0.98 && v < 1.0, "r0(50) = {v}");
        let expect = bessel_i(1, 1.0).unwrap() / bessel_i(0, 1.0).unwrap();
        assert_relative_eq!(r0(1.0), expect, max_relative = 1e-14);
    }

    #[test]
    fn r0_continued_fraction_matches_series_at_crossover() {
        for &a in &[25.0, 29.0, 30.0] {
            let cf = super::ratio_continued_fraction(a);
            let series = i1_series(a) / i0_series(a);
            assert_relative_eq!(cf, series, max_relative = 1e-13);
        }
    }

    #[test]
    fn r0_odd_random() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = rng.gen_range(-30.0..30.0);
            assert!((r0(-a) + r0(a)).abs() <= 1e-12);
        }
    }

    #[test]
    fn r0_strictly_increasing() {
        let mut prev = r0(-30.0);
        for i in 1..1000 {
            let a = -30.0 + 60.0 * i as f64 / 999.0;
            let v = r0(a);
            assert!(v > prev, "r0 not increasing at a = {a}");
            prev = v;
        }
    }

    #[test]
    fn r0_concave_on_positive_axis() {
        // second finite differences negative on (0, 30)
        let h = 1e-3;
        for i in 1..=500 {
            let a = 30.0 * i as f64 / 501.0;
            let d2 = r0(a + h) - 2.0 * r0(a) + r0(a - h);
            assert!(d2 < 0.0, "r0'' >= 0 at a = {a}");
        }
    }

    #[test]
    fn i0_derivative_is_i1() {
        let h = 1e-6;
        for i in 0..50 {
            let y = -12.0 + 24.0 * i as f64 / 49.0;
            let fd = (bessel_i(0, y + h).unwrap() - bessel_i(0, y - h).unwrap()) / (2.0 * h);
            let i1 = bessel_i(1, y).unwrap();
            assert!(
                (fd - i1).abs() <= 1e-8 * i1.abs().max(1.0),
                "dI0/dy != I1 at y = {y}: {fd} vs {i1}"
            );
        }
    }
}
