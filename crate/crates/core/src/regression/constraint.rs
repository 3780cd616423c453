use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::kernelspec::{bernstein_all, MAX_ORDER};
use crate::nlops::{horizon_steps, Boundary, Grid1D};

/// Trapezoid panels for the `L¹` part of the bound.
pub const L1_PANELS: usize = 2048;

/// `N(D) = ‖h‖_{L¹} + ‖H‖_{L^∞(Ω̂)}` for the correction `2h(r) = Σ D_m B_m(r/δ)/δ³`
/// and `H(x) = ∫_{Ω̂} h(|y − x|) dy` under the training quadrature.
#[derive(Debug, Clone)]
pub struct ConstraintFunctional {
    order: usize,
    /// Sample weights and basis values of the trapezoid rule for `‖h‖_{L¹}`.
    trapezoid: Vec<(f64, Vec<f64>)>,
    /// The same norm as a sum over lattice offsets of the training grid.
    lattice: Vec<(f64, Vec<f64>)>,
    /// Distinct rows of `½ W_m(x)/δ³` over the nodes of `Ω̂`.
    sup_rows: Vec<Vec<f64>>,
}

fn basis_row(order: usize, t: f64) -> Vec<f64> {
    let mut row = vec![0.0; order + 1];
    bernstein_all(order, t, &mut row);
    row
}

impl ConstraintFunctional {
    pub fn new(order: usize, delta: f64, grid: &Grid1D) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::arg(format!("basis order {order} too large")));
        }
        if !(delta > 0.0) {
            return Err(Error::arg(format!("horizon must be positive, got {delta}")));
        }
        let grid = grid.with_horizon(delta)?;
        let h = grid.h();
        let inv_d2 = 1.0 / (delta * delta);
        let trapezoid = (0..=L1_PANELS)
            .map(|k| {
                let t = k as f64 / L1_PANELS as f64;
                let w = if k == 0 || k == L1_PANELS { 0.5 } else { 1.0 };
                (w * inv_d2 / L1_PANELS as f64, basis_row(order, t))
            })
            .collect();
        let steps = horizon_steps(delta, h);
        let offsets: Vec<Vec<f64>> = (1..=steps)
            .map(|d| basis_row(order, (d as f64 * h / delta).min(1.0)))
            .collect();
        let lattice = offsets.iter().map(|row| (inv_d2 * h / delta, row.clone())).collect();

        // Neighbour counts (left, right) distinguish the W rows of Ω̂ nodes.
        let mut shapes = BTreeSet::new();
        match grid.bc {
            Boundary::Periodic => {
                shapes.insert((steps, steps));
            }
            Boundary::DirichletVolume { .. } => {
                let j = grid.collar() as i64;
                let (lo, hi) = (-j, grid.n as i64 + j);
                for i in lo..=hi {
                    let left = (i - lo).min(steps as i64) as usize;
                    let right = (hi - i).min(steps as i64) as usize;
                    shapes.insert((left, right));
                }
            }
        }
        let scale = 0.5 * h / delta.powi(3);
        let sup_rows = shapes
            .into_iter()
            .map(|(left, right)| {
                let mut row = vec![0.0; order + 1];
                for (d, b) in offsets.iter().enumerate() {
                    let count = (d < left) as usize + (d < right) as usize;
                    for (r, v) in row.iter_mut().zip(b) {
                        *r += scale * count as f64 * v;
                    }
                }
                row
            })
            .collect();
        Ok(ConstraintFunctional {
            order,
            trapezoid,
            lattice,
            sup_rows,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn eval(&self, d: &[f64]) -> f64 {
        self.eval_grad(d, None)
    }

    /// Value and (sub)gradient; the gradient is added to `grad` if given.
    pub fn eval_grad(&self, d: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let abs_sum = |samples: &[(f64, Vec<f64>)], grad: Option<&mut [f64]>| {
            let mut total = 0.0;
            let mut g = vec![0.0; d.len()];
            for (w, row) in samples {
                let p: f64 = row.iter().zip(d).map(|(b, c)| b * c).sum();
                total += w * p.abs();
                if grad.is_some() {
                    let sgn = w * p.signum() * (p != 0.0) as u8 as f64;
                    g.iter_mut().zip(row).for_each(|(gm, b)| *gm += sgn * b);
                }
            }
            if let Some(out) = grad {
                out.iter_mut().zip(&g).for_each(|(o, v)| *o += v);
            }
            total
        };
        let trap = abs_sum(&self.trapezoid, None);
        let latt = abs_sum(&self.lattice, None);
        let l1 = if trap >= latt {
            abs_sum(&self.trapezoid, grad.as_deref_mut())
        } else {
            abs_sum(&self.lattice, grad.as_deref_mut())
        };

        let mut best = (0.0, 0usize, 0.0);
        for (k, row) in self.sup_rows.iter().enumerate() {
            let v: f64 = row.iter().zip(d).map(|(w, c)| w * c).sum();
            if v.abs() > best.0 {
                best = (v.abs(), k, v.signum());
            }
        }
        if let Some(out) = grad {
            if best.0 > 0.0 {
                let row = &self.sup_rows[best.1];
                out.iter_mut().zip(row).for_each(|(o, w)| *o += best.2 * w);
            }
        }
        l1 + best.0
    }
}

/// `H(D, θ) = 1/(2κ) − N(D) − θ²`.
pub fn constraint_h(n_value: f64, theta: f64, kappa: f64) -> f64 {
    1.0 / (2.0 * kappa) - n_value - theta * theta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_correction() {
        let g = Grid1D::periodic(0.0, 1.0, 100).unwrap();
        let n = ConstraintFunctional::new(4, 0.5, &g).unwrap();
        assert_eq!(n.eval(&[0.0; 5]), 0.0);
    }

    #[test]
    fn constant_correction_closed_form() {
        let g = Grid1D::periodic(0.0, 1.0, 100).unwrap();
        let delta = 0.5;
        let n = ConstraintFunctional::new(0, delta, &g).unwrap();
        // Both the L¹ and the sup term equal d₀/δ².
        let d0 = 0.3;
        assert!((n.eval(&[d0]) - 2.0 * d0 / (delta * delta)).abs() < 1e-12);
    }

    #[test]
    fn interior_sup_term_matches_moment_formula() {
        let g = Grid1D::periodic(0.0, 1.0, 1000).unwrap();
        let delta = 0.5;
        let n = ConstraintFunctional::new(5, delta, &g).unwrap();
        let d = [0.4, 0.1, 0.3, 0.2, 0.5, 0.6];
        let closed = d.iter().sum::<f64>() / 6.0 / (delta * delta);
        let row = &n.sup_rows[0];
        let sup: f64 = row.iter().zip(&d).map(|(w, c)| w * c).sum();
        assert!((sup - closed).abs() < 1e-2 * closed);
    }

    #[test]
    fn homogeneous_and_convex() {
        let g = Grid1D::dirichlet(-1.0, 1.0, 50, 0.3).unwrap();
        let n = ConstraintFunctional::new(3, 0.3, &g).unwrap();
        let a = [0.5, -1.0, 0.25, 2.0];
        let b = [-0.3, 0.7, 1.5, -2.0];
        for c in [-2.0, 0.5] {
            let scaled: Vec<f64> = a.iter().map(|v| c * v).collect();
            assert!((n.eval(&scaled) - c.abs() * n.eval(&a)).abs() < 1e-12);
        }
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        assert!(n.eval(&mid) <= 0.5 * (n.eval(&a) + n.eval(&b)) + 1e-14);
    }

    #[test]
    fn h_examples() {
        let kappa = 0.02;
        assert!(constraint_h(0.0, (1.0f64 / (2.0 * kappa)).sqrt(), kappa).abs() < 1e-12);
        assert_eq!(constraint_h(0.0, 0.0, kappa), 25.0);
        assert!(constraint_h(30.0, 0.0, kappa) < 0.0);
    }
}
