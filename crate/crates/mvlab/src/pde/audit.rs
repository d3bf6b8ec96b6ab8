//! Convergence audit of an evolution trace: the energy-dissipation
//! identity dE/dt = -beta^{-2} D, and decay-rate fits of d2(t) against the
//! exponential and algebraic hypotheses.

use crate::numerics::linear_fit;
use crate::pde::evolve::EvolutionTrace;

/// Report produced by [`convergence_audit`].
#[derive(Debug, Clone)]
pub struct AuditReport {
    /// free energy nonincreasing within 1e-9 (1 + |E|) between records
    pub monotone: bool,
    /// slope of log d2 vs t (negative for exponential decay)
    pub fitted_rate: f64,
    /// p in d2 ~ t^{-p} (slope of -log d2 vs log t)
    pub algebraic_exponent: f64,
    /// relative mismatch of the discrete energy drop against the trapezoid
    /// of beta^{-2} * dissipation over the run
    pub energy_dissipation_error: f64,
}

/// Audit a trace recorded with a target. Checks the energy-dissipation
/// identity over the whole run and fits both decay hypotheses to d2(t).
pub fn convergence_audit(trace: &EvolutionTrace) -> AuditReport {
    assert!(!trace.times.is_empty(), "audit needs a nonempty trace");
    assert!(
        trace.d2_to_target.len() == trace.times.len(),
        "audit needs a trace recorded with a target"
    );

    let monotone = trace
        .free_energy
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs()));

    // energy drop vs trapezoid of the dissipation; the trace stores the
    // dissipation functional D, whose energy-production rate is beta^{-2} D
    let m = trace.times.len();
    let mut integral = 0.0;
    for i in 1..m {
        let dt = trace.times[i] - trace.times[i - 1];
        integral += 0.5 * dt * (trace.dissipation[i] + trace.dissipation[i - 1]);
    }
    integral /= trace.beta * trace.beta;
    let drop = trace.free_energy[0] - trace.free_energy[m - 1];
    let energy_dissipation_error = if integral.abs() < 1e-14 && drop.abs() < 1e-14 {
        0.0
    } else {
        (drop - integral).abs() / integral.abs().max(drop.abs())
    };

    // fits use only records where d2 is resolvable above rounding noise
    let pts: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&trace.d2_to_target)
        .filter(|&(_, &d)| d > 1e-12)
        .map(|(&t, &d)| (t, d))
        .collect();
    let (fitted_rate, algebraic_exponent) = if pts.len() >= 3 {
        let t: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let logd: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let (_, rate, _) = linear_fit(&t, &logd);
        let positive: Vec<(f64, f64)> = pts.iter().filter(|p| p.0 > 0.0).cloned().collect();
        let exponent = if positive.len() >= 3 {
            let logt: Vec<f64> = positive.iter().map(|p| p.0.ln()).collect();
            let logd: Vec<f64> = positive.iter().map(|p| p.1.ln()).collect();
            let (_, slope, _) = linear_fit(&logt, &logd);
            -slope
        } else {
            0.0
        };
        (rate, exponent)
    } else {
        (0.0, 0.0)
    };

    AuditReport {
        monotone,
        fitted_rate,
        algebraic_exponent,
        energy_dissipation_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::evolve::evolve_mv;
    use crate::pde::field::DensityField;
    use crate::potentials::CosineSeries;
    use std::f64::consts::PI;

    #[test]
    fn synthetic_power_law_is_recovered() {
        let times: Vec<f64> = (1..=50).map(|i| 0.2 * i as f64).collect();
        let d2: Vec<f64> = times.iter().map(|&t| t.powi(-2)).collect();
        let m = times.len();
        let trace = EvolutionTrace {
            beta: 1.0,
            times,
            free_energy: vec![0.0; m],
            dissipation: vec![0.0; m],
            d2_to_target: d2,
            l1_to_target: vec![0.0; m],
        };
        let rep = convergence_audit(&trace);
        assert!((rep.algebraic_exponent - 2.0).abs() < 0.05);
    }

    #[test]
    fn subcritical_kuramoto_audit() {
        let n = 64;
        let nu0 = DensityField::from_fn(n, |x| 1.0 + 0.2 * (2.0 * PI * x).cos()).unwrap();
        let dt = 0.25 / (n * n) as f64;
        let target = DensityField::uniform(n);
        let (_, trace) = evolve_mv(
            &nu0,
            &CosineSeries::zero(),
            &CosineSeries::kuramoto(),
            1.0,
            dt,
            1.0,
            64,
            Some(&target),
        )
        .unwrap();
        let rep = convergence_audit(&trace);
        assert!(rep.monotone);
        assert!(rep.fitted_rate < -1.0, "rate {}", rep.fitted_rate);
        assert!(
            rep.energy_dissipation_error <= 0.05,
            "energy-dissipation mismatch {}",
            rep.energy_dissipation_error
        );
    }

    #[test]
    fn stationary_trace_has_vanishing_dissipation() {
        let n = 64;
        let beta = 4.0;
        let a = crate::stationary::amplitude_roots(beta, 0.0).a_min;
        let m = DensityField::from_amplitude(a, n).unwrap();
        let dt = 0.25 / (n * n) as f64 * beta;
        let (_, trace) = evolve_mv(
            &m,
            &CosineSeries::zero(),
            &CosineSeries::kuramoto(),
            beta,
            dt,
            1.0,
            500,
            Some(&m),
        )
        .unwrap();
        assert!(trace.dissipation.iter().all(|&d| d <= 1e-9), "max D = {:?}", trace.dissipation.iter().cloned().fold(0.0, f64::max));
    }
}
