use std::f64::consts::PI;

use super::fourier::TrigSeries;
use crate::error::{Error, Result};

/// Symbol `μ_k = (2πk/L)² + cδ²(2πk/L)⁴` of `−∂² + cδ²∂⁴`.
pub fn biharmonic_multiplier(k: usize, c: f64, delta: f64, period: f64) -> f64 {
    let w = 2.0 * PI * k as f64 / period;
    w * w + c * delta * delta * w.powi(4)
}

/// Spectral solve of `−u″ + cδ² u⁗ = f` with periodic boundary conditions.
pub fn biharmonic_solve(c: f64, delta: f64, f: &TrigSeries) -> Result<TrigSeries> {
    if f.terms.iter().any(|&(k, a, b)| k == 0 && (a != 0.0 || b != 0.0)) {
        return Err(Error::Solvability("forcing has a nonzero constant mode".into()));
    }
    if c < 0.0 {
        return Err(Error::arg(format!(
            "biharmonic coefficient must be nonnegative, got {c}"
        )));
    }
    Ok(f.scaled(|k| {
        if k == 0 {
            0.0
        } else {
            1.0 / biharmonic_multiplier(k, c, delta, f.period)
        }
    }))
}

/// Test forcing whose exact solution on the unit period is `sin(2πx)`.
pub fn biharmonic_test_forcing(c: f64, delta: f64) -> TrigSeries {
    let amp = 4.0 * PI * PI + 16.0 * c * delta * delta * PI.powi(4);
    TrigSeries {
        period: 1.0,
        terms: vec![(1, 0.0, amp)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_limit() {
        let f = TrigSeries {
            period: 1.0,
            terms: vec![(1, 4.0 * PI * PI, 0.0)],
        };
        let u = biharmonic_solve(0.0, 0.5, &f).unwrap();
        assert!((u.terms[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn test_case_recovers_sine() {
        for c in [1e-4, 3e-4, 1e-3] {
            let u = biharmonic_solve(c, 0.5, &biharmonic_test_forcing(c, 0.5)).unwrap();
            assert!((u.terms[0].2 - 1.0).abs() < 1e-12);
            assert_eq!(u.terms[0].1, 0.0);
        }
    }

    #[test]
    fn multiplier_positive_and_constant_mode_rejected() {
        for c in [1e-4, 0.1] {
            for delta in [0.125, 0.99] {
                assert!((1..200).all(|k| biharmonic_multiplier(k, c, delta, 1.0) > 0.0));
            }
        }
        let f = TrigSeries {
            period: 1.0,
            terms: vec![(0, 1.0, 0.0)],
        };
        assert!(matches!(biharmonic_solve(1e-3, 0.5, &f), Err(Error::Solvability(_))));
    }
}
