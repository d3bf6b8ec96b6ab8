//! Small numerical kernels: quadrature, root bracketing, 1-D minimisation,
//! monotone interpolation and least-squares fits.

/// Mean of periodic samples times the period length (= trapezoid rule on a
/// uniform periodic grid, which is spectrally accurate for smooth integrands).
pub fn periodic_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Adaptive Simpson quadrature on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_recurse(f, a, b, fa, fb, fc, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        left + right + err / 15.0
    } else {
        simpson_recurse(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
            + simpson_recurse(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
    }
}

/// Bisection for a root of `f` in [lo, hi]; requires a sign change.
/// Refines until the bracket width falls below `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    debug_assert!(flo * f(hi) <= 0.0, "bisect called without a sign change");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if flo * fmid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimisation of a unimodal function on [lo, hi].
pub fn golden_min<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Minimise a smooth function on a dense grid over [lo, hi] and refine the
/// best cell by golden section. Returns (argmin, min).
pub fn grid_refine_min<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize, tol: f64) -> (f64, f64) {
    let h = (hi - lo) / n as f64;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let v = f(lo + i as f64 * h);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let a = lo + (best_i.saturating_sub(1)) as f64 * h;
    let b = lo + ((best_i + 1).min(n)) as f64 * h;
    let x = golden_min(f, a, b, tol);
    (x, f(x).min(best))
}

/// Monotone cubic (Fritsch--Carlson) interpolant over a uniform grid.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x0: f64, h: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        assert!(n >= 2);
        let d: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut m = vec![0.0; n];
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            if d[i - 1] * d[i] <= 0.0 {
                m[i] = 0.0;
            } else {
                m[i] = 0.5 * (d[i - 1] + d[i]);
            }
        }
        // limit tangents to keep monotonicity
        for i in 0..n - 1 {
            if d[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
            } else {
                let a = m[i] / d[i];
                let b = m[i + 1] / d[i];
                let s = a * a + b * b;
                if s > 9.0 {
                    let t = 3.0 / s.sqrt();
                    m[i] = t * a * d[i];
                    m[i + 1] = t * b * d[i];
                }
            }
        }
        Self { x0, h, y, m }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let t = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        let s = t - i as f64;
        let (h00, h10, h01, h11) = hermite_basis(s);
        h00 * self.y[i] + h10 * self.h * self.m[i] + h01 * self.y[i + 1] + h11 * self.h * self.m[i + 1]
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        let n = self.y.len();
        let t = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        let s = t - i as f64;
        let dh00 = 6.0 * s * s - 6.0 * s;
        let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
        let dh01 = -6.0 * s * s + 6.0 * s;
        let dh11 = 3.0 * s * s - 2.0 * s;
        (dh00 * self.y[i] + dh01 * self.y[i + 1]) / self.h + dh10 * self.m[i] + dh11 * self.m[i + 1]
    }
}

fn hermite_basis(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    )
}

/// Ordinary least squares y = a + b x. Returns (intercept, slope, r_squared).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&u, &v)| (u - mx) * (v - my)).sum();
    let syy: f64 = y.iter().map(|&v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (intercept, slope, r2)
}

/// Least squares through the origin y = b x. Returns (slope, stderr_of_slope, r_squared).
pub fn origin_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let sxx: f64 = x.iter().map(|&v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&u, &v)| u * v).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = x.iter().zip(y).map(|(&u, &v)| (v - slope * u) * (v - slope * u)).sum();
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|&v| (v - my) * (v - my)).sum();
    let dof = (x.len().max(2) - 1) as f64;
    let stderr = (ss_res / dof / sxx).sqrt();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (slope, stderr, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_integrates_polynomial() {
        let v = adaptive_simpson(&|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert_relative_eq!(v, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(&|x: f64| x * x - 2.0, 0.0, 2.0, 1e-13);
        assert_relative_eq!(r, std::f64::consts::SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn golden_min_quadratic() {
        let x = golden_min(&|x: f64| (x - 0.3).powi(2), -1.0, 1.0, 1e-10);
        assert_relative_eq!(x, 0.3, epsilon = 1e-8);
    }

    #[test]
    fn monotone_cubic_interpolates_nodes() {
        let y = vec![0.0, 0.5, 0.8, 0.9];
        let c = MonotoneCubic::new(0.0, 0.1, y.clone());
        for (i, &v) in y.iter().enumerate() {
            assert_relative_eq!(c.eval(0.1 * i as f64), v, epsilon = 1e-14);
        }
        // monotone data stays monotone between nodes
        let mut prev = -1.0;
        for i in 0..=300 {
            let v = c.eval(0.3 * i as f64 / 300.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn origin_fit_recovers_slope() {
        let x: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| 3.5 * v).collect();
        let (b, se, r2) = origin_fit(&x, &y);
        assert_relative_eq!(b, 3.5, epsilon = 1e-12);
        assert!(se < 1e-12);
        assert_relative_eq!(r2, 1.0, epsilon = 1e-12);
    }
}
