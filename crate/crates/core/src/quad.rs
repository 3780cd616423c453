//! Small quadrature helpers.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `∫_lo^hi f` by the composite trapezoid rule with `panels` panels.
pub fn trapezoid(lo: f64, hi: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (hi - lo) / panels as f64;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for i in 1..panels {
        acc += f(lo + i as f64 * h);
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 40] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for p in 0..2 * n {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let want = if p % 2 == 1 { 0.0 } else { 2.0 / (p + 1) as f64 };
                assert!((got - want).abs() < 1e-13, "n={n} p={p}: {got}");
            }
        }
    }

    #[test]
    fn trapezoid_exact_for_linear() {
        assert!((trapezoid(0.0, 2.0, 3, |x| 3.0 * x + 1.0) - 8.0).abs() < 1e-14);
    }
}
