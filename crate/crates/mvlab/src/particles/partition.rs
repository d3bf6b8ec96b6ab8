//! Exact (quadrature) partition functions for very small particle numbers:
//! Z_N = int_{T^N} exp(-beta H_N) dx, H_N = (1/2N) sum_{i != j} W(x_i - x_j)
//! + sum_i V(x_i), evaluated by tensor-product trapezoid rule with a
//! difference lookup table.

use crate::error::{MvError, Result};
use crate::potentials::CosineSeries;

const QUAD_POINTS: usize = 256;

/// Partition function Z_N for N <= 3 by direct quadrature. The periodic
/// trapezoid rule converges spectrally for these smooth integrands.
pub fn partition_function_small_n(
    n: usize,
    v: &CosineSeries,
    w: &CosineSeries,
    beta: f64,
) -> Result<f64> {
    if n == 0 || n > 3 {
        return Err(MvError::InvalidParameter(format!(
            "partition function quadrature supports 1 <= N <= 3, got {n}"
        )));
    }
    let m = QUAD_POINTS;
    let h = 1.0 / m as f64;
    let vv: Vec<f64> = (0..m).map(|i| v.value(i as f64 * h)).collect();
    // lookup for W((i - j) mod m / m)
    let wd: Vec<f64> = (0..m).map(|i| w.value(i as f64 * h)).collect();
    let scale = 1.0 / (2.0 * n as f64);
    let mut z = 0.0;
    match n {
        1 => {
            for i in 0..m {
                z += (-beta * vv[i]).exp();
            }
            z *= h;
        }
        2 => {
            for i in 0..m {
                for j in 0..m {
                    let pair = wd[(i + m - j) % m] + wd[(j + m - i) % m];
                    let ham = vv[i] + vv[j] + scale * pair;
                    z += (-beta * ham).exp();
                }
            }
            z *= h * h;
        }
        3 => {
            for i in 0..m {
                for j in 0..m {
                    let pij = wd[(i + m - j) % m] + wd[(j + m - i) % m];
                    for k in 0..m {
                        let pik = wd[(i + m - k) % m] + wd[(k + m - i) % m];
                        let pjk = wd[(j + m - k) % m] + wd[(k + m - j) % m];
                        let ham = vv[i] + vv[j] + vv[k] + scale * (pij + pik + pjk);
                        z += (-beta * ham).exp();
                    }
                }
            }
            z *= h * h * h;
        }
        _ => unreachable!(),
    }
    Ok(z)
}
