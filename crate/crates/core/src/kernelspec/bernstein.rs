use crate::error::{Error, Result};

/// Largest degree for which the floating-point binomial recurrence is exact.
pub const MAX_ORDER: usize = 60;

/// Binomial coefficient by the multiplicative recurrence, exact in integers and
/// rounded once to `f64`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // Each partial product is itself a binomial coefficient, so the division is exact.
        acc = acc * (n - k + i) as u128 / i as u128;
    }
    acc as f64
}

/// `B_{m,M}(t) = binom(M, m) t^m (1 - t)^(M - m)`.
pub fn bernstein_eval(m: usize, order: usize, t: f64) -> Result<f64> {
    if order > MAX_ORDER {
        return Err(Error::arg(format!(
            "basis order {order} exceeds supported maximum {MAX_ORDER}"
        )));
    }
    if m > order {
        return Err(Error::arg(format!("basis index {m} out of range for order {order}")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::arg(format!("Bernstein argument {t} outside [0, 1]")));
    }
    Ok(bernstein_unchecked(m, order, t))
}

#[inline]
pub(crate) fn bernstein_unchecked(m: usize, order: usize, t: f64) -> f64 {
    binomial(order, m) * t.powi(m as i32) * (1.0 - t).powi((order - m) as i32)
}

/// Fills `out[m] = B_{m,M}(t)` for every `m`; `out.len()` must be `M + 1`.
pub fn bernstein_all(order: usize, t: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), order + 1);
    for (m, slot) in out.iter_mut().enumerate() {
        *slot = bernstein_unchecked(m, order, t);
    }
}

/// `∫₀¹ B_{m,M}(t) dt`, which is `1 / (M + 1)` for every `m`.
pub fn bernstein_moment(m: usize, order: usize) -> Result<f64> {
    if m > order {
        return Err(Error::arg(format!("basis index {m} out of range for order {order}")));
    }
    Ok(1.0 / (order as f64 + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoint_and_midpoint_values() {
        assert_eq!(bernstein_eval(0, 1, 0.0).unwrap(), 1.0);
        assert_eq!(bernstein_eval(1, 2, 0.5).unwrap(), 0.5);
        assert_eq!(bernstein_eval(7, 7, 1.0).unwrap(), 1.0);
        assert_eq!(bernstein_eval(0, 7, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn partition_of_unity_order_twenty() {
        for &t in &[0.0, 0.3, 1.0] {
            let total: f64 = (0..=20).map(|m| bernstein_eval(m, 20, t).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-14, "t={t}: {total}");
        }
    }

    #[test]
    fn out_of_range_arguments() {
        assert!(bernstein_eval(3, 2, 0.5).is_err());
        assert!(bernstein_eval(0, 2, -0.1).is_err());
        assert!(bernstein_eval(0, 2, 1.5).is_err());
        assert!(bernstein_moment(4, 3).is_err());
    }

    #[test]
    fn moments() {
        assert_eq!(bernstein_moment(0, 0).unwrap(), 1.0);
        assert_eq!(bernstein_moment(3, 7).unwrap(), 0.125);
        let total: f64 = (0..=5).map(|m| bernstein_moment(m, 5).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn binomials_match_pascal() {
        let mut row = vec![1u128];
        for n in 1..=MAX_ORDER {
            let mut next = vec![1u128; n + 1];
            for k in 1..n {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
            for (k, &expected) in row.iter().enumerate() {
                assert_eq!(binomial(n, k), expected as f64, "C({n},{k})");
            }
        }
    }

    #[test]
    fn trapezoid_moment_agrees_with_closed_form() {
        let panels = 4096;
        for order in [0usize, 3, 11] {
            for m in 0..=order {
                let mut acc = 0.0;
                for i in 0..=panels {
                    let t = i as f64 / panels as f64;
                    let w = if i == 0 || i == panels { 0.5 } else { 1.0 };
                    acc += w * bernstein_eval(m, order, t).unwrap();
                }
                acc /= panels as f64;
                assert!((acc - bernstein_moment(m, order).unwrap()).abs() < 1e-6);
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(order in 0usize..=30, t in 0.0f64..=1.0) {
            let total: f64 = (0..=order).map(|m| bernstein_eval(m, order, t).unwrap()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn nonnegative(order in 0usize..=30, m_frac in 0.0f64..1.0, t in 0.0f64..=1.0) {
            let m = ((order + 1) as f64 * m_frac) as usize;
            prop_assert!(bernstein_eval(m.min(order), order, t).unwrap() >= 0.0);
        }
    }
}
