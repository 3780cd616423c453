//! Green's function of the fractional Laplacian on `(−1, 1)` with zero exterior data.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

const GL_POINTS: usize = 48;

/// Closed-form Green's function of `(−Δ)^s` on the unit ball in one dimension.
#[derive(Debug, Clone)]
pub struct FractionalGreen {
    s: f64,
    k: f64,
    gl: (Vec<f64>, Vec<f64>),
    i_one: f64,
}

impl FractionalGreen {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::arg(format!("fractional order s = {s} outside (0, 1)")));
        }
        let k = gamma(0.5) / (4f64.powf(s) * PI.sqrt() * gamma(s).powi(2));
        let mut g = FractionalGreen {
            s,
            k,
            gl: gauss_legendre(GL_POINTS),
            i_one: 0.0,
        };
        g.i_one = g.i_small(1.0);
        Ok(g)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `∫_lo^hi φ` by Gauss–Legendre.
    fn gl_integral(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (x, w) = &self.gl;
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        x.iter().zip(w).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
    }

    /// `I(r) = ∫_0^r t^{s−1}(1+t)^{−1/2} dt` for `r ≤ 1`, via `t = r v^{1/s}`.
    fn i_small(&self, r: f64) -> f64 {
        let s = self.s;
        r.powf(s) / s * self.gl_integral(0.0, 1.0, |v| (1.0 + r * v.powf(1.0 / s)).powf(-0.5))
    }

    /// `I(r)` for any `r ≥ 0`; beyond 1 the tail is mapped to `w = 1/t`.
    pub fn incomplete(&self, r: f64) -> f64 {
        if r <= 1.0 {
            return self.i_small(r);
        }
        let p = 0.5 + self.s;
        let power_part = if (p - 1.0).abs() < 1e-14 {
            r.ln()
        } else {
            (1.0 - r.powf(p - 1.0)) / (1.0 - p)
        };
        // (1+w)^{−1/2} − 1 = w·φ(w), and w = v^{1/(2−p)} removes the endpoint singularity.
        let phi = |w: f64| {
            let sq = (1.0 + w).sqrt();
            -1.0 / (sq * (1.0 + sq))
        };
        let e = 1.0 / (2.0 - p);
        let v0 = (1.0 / r).powf(2.0 - p);
        let smooth_part = e * self.gl_integral(v0, 1.0, |v| phi(v.powf(e)));
        self.i_one + power_part + smooth_part
    }

    /// `G(x, y)` for `x ≠ y` inside `(−1, 1)`; zero if either point is outside.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (a, b) = (1.0 - x * x, 1.0 - y * y);
        if a <= 0.0 || b <= 0.0 {
            return 0.0;
        }
        let z = (x - y).abs();
        let r0 = a * b / (z * z);
        self.k * z.powf(2.0 * self.s - 1.0) * self.incomplete(r0)
    }

    /// Integral of `G(x, ·)` over `[x − h/2, x + h/2]`, replacing the diagonal trapezoid term.
    fn diagonal_weight(&self, x: f64, h: f64) -> f64 {
        let s = self.s;
        let a = 1.0 - x * x;
        if s > 0.5 {
            h * self.k * a.powf(2.0 * s - 1.0) / (s - 0.5)
        } else if (s - 0.5).abs() < 1e-12 {
            // G ≈ (1/π) ln(2(1−x²)/|x−y|).
            h / PI * ((2.0 * a).ln() - (0.5 * h).ln() + 1.0)
        } else {
            // G ≈ k B(s, ½−s) |x−y|^{2s−1}.
            let beta = gamma(s) * gamma(0.5 - s) / gamma(0.5);
            self.k * beta * (0.5 * h).powf(2.0 * s) / s
        }
    }

    /// Trapezoid weights `W` with `u_i = Σ_j W_ij f_j` at the interior nodes of an
    /// `n`-interval grid on `[−1, 1]`; `f` is sampled at all `n + 1` nodes.
    pub fn quadrature_matrix(&self, n: usize) -> Vec<Vec<f64>> {
        let h = 2.0 / n as f64;
        let x = |j: usize| -1.0 + j as f64 * h;
        (1..n)
            .map(|i| {
                (0..=n)
                    .map(|j| {
                        if j == i {
                            self.diagonal_weight(x(i), h)
                        } else if j == 0 || j == n {
                            0.5 * h * self.eval(x(i), x(j))
                        } else {
                            h * self.eval(x(i), x(j))
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Solution of `(−Δ)^s u = 1` on `(−1, 1)` with zero exterior data.
pub fn fractional_analytic_unit(s: f64, x: f64) -> f64 {
    let a = 1.0 - x * x;
    if a <= 0.0 {
        return 0.0;
    }
    gamma(0.5) / (4f64.powf(s) * gamma(0.5 + s) * gamma(1.0 + s)) * a.powf(s)
}

/// `u` at the interior nodes from `f` sampled at all `n + 1` nodes of `[−1, 1]`.
pub fn fractional_solve(f: &[f64], s: f64) -> Result<Vec<f64>> {
    if f.len() < 3 {
        return Err(Error::Shape("forcing needs at least three nodes".into()));
    }
    let green = FractionalGreen::new(s)?;
    let w = green.quadrature_matrix(f.len() - 1);
    Ok(w.iter()
        .map(|row| row.iter().zip(f).map(|(a, b)| a * b).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incomplete_integral_against_trapezoid() {
        let g = FractionalGreen::new(0.75).unwrap();
        for r in [0.01f64, 0.5, 1.0, 3.0, 40.0] {
            // Substitution t = u^4 makes the integrand smooth at the origin.
            let panels = 200_000;
            let top = r.powf(0.25);
            let f = |u: f64| 4.0 * u.powi(3) * (u.powi(4)).powf(-0.25) * (1.0 + u.powi(4)).powf(-0.5);
            let want = crate::quad::trapezoid(0.0, top, panels, |u| if u == 0.0 { 0.0 } else { f(u) });
            let got = g.incomplete(r);
            assert!((got - want).abs() < 1e-8 * want, "r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn half_order_matches_logarithmic_form() {
        let g = FractionalGreen::new(0.5).unwrap();
        for (x, y) in [(0.1f64, 0.3f64), (-0.7, 0.6), (0.0, 0.95)] {
            let want = (1.0 / PI) * ((1.0 - x * y + ((1.0 - x * x) * (1.0 - y * y)).sqrt()) / (x - y).abs()).ln();
            assert!((g.eval(x, y) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn unit_forcing_matches_closed_form() {
        let n = 100;
        let u = fractional_solve(&vec![1.0; n + 1], 0.75).unwrap();
        let num: f64 = (1..n)
            .map(|i| {
                let x = -1.0 + i as f64 * 0.02;
                (u[i - 1] - fractional_analytic_unit(0.75, x)).powi(2)
            })
            .sum();
        let den: f64 = (1..n)
            .map(|i| fractional_analytic_unit(0.75, -1.0 + i as f64 * 0.02).powi(2))
            .sum();
        assert!((num / den).sqrt() < 5e-3);
    }

    #[test]
    fn symmetry_and_order_check() {
        let g = FractionalGreen::new(0.3).unwrap();
        assert!((g.eval(0.2, -0.5) - g.eval(-0.5, 0.2)).abs() < 1e-14);
        assert!((g.eval(0.2, -0.5) - g.eval(-0.2, 0.5)).abs() < 1e-14);
        assert_eq!(g.eval(1.0, 0.3), 0.0);
        assert!(FractionalGreen::new(1.0).is_err());
        assert!(fractional_solve(&[1.0; 11], 0.0).is_err());
    }
}
