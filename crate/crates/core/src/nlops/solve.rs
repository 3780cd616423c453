use nalgebra::{Cholesky, DVector, Dyn};

use super::grid::{Boundary, Grid1D};
use super::operator::{OperatorMatrix, Stencil};
use crate::error::{Error, Result};
use crate::kernelspec::RadialKernel;

/// Relative residual accepted after the direct solve (and refinement).
const RESIDUAL_TOL: f64 = 1e-10;
/// Relative mean above which a periodic right-hand side is flagged.
const MEAN_TOL: f64 = 1e-8;
/// Smallest admissible eigenvalue still treated as coercive.
const DEGENERATE_EIG: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalSolution {
    pub u: Vec<f64>,
    /// Set when a periodic right-hand side had a non-negligible mean that was removed.
    pub mean_projected: bool,
}

/// Cholesky factorization of the admissible operator, reusable across right-hand sides.
pub struct FactoredOperator {
    op: OperatorMatrix,
    chol: Cholesky<f64, Dyn>,
}

impl OperatorMatrix {
    pub fn factor(&self) -> Result<FactoredOperator> {
        match Cholesky::new(self.admissible_matrix()) {
            Some(chol) => Ok(FactoredOperator { op: self.clone(), chol }),
            None => Err(Error::NotInvertible {
                lambda_min: self.lambda_min(),
            }),
        }
    }
}

impl FactoredOperator {
    pub fn operator(&self) -> &OperatorMatrix {
        &self.op
    }

    /// Solves `A u = rhs`; periodic right-hand sides are projected to zero mean first.
    pub fn solve(&self, rhs: &[f64]) -> Result<NonlocalSolution> {
        let n = self.op.dim();
        if rhs.len() != n {
            return Err(Error::Shape(format!(
                "right-hand side has {} entries, expected {n}",
                rhs.len()
            )));
        }
        let mut b = rhs.to_vec();
        let mut mean_projected = false;
        if let Boundary::Periodic = self.op.boundary() {
            let mean = b.iter().sum::<f64>() / n as f64;
            let rms = (b.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
            mean_projected = mean.abs() > MEAN_TOL * rms.max(f64::MIN_POSITIVE);
            b.iter_mut().for_each(|v| *v -= mean);
        }
        let bnorm = norm(&b);
        let bvec = DVector::from_vec(b.clone());
        let mut u = self.chol.solve(&bvec);
        for _ in 0..3 {
            let resid: Vec<f64> = self
                .op
                .mul(u.as_slice())
                .iter()
                .zip(&b)
                .map(|(au, bi)| bi - au)
                .collect();
            if norm(&resid) <= RESIDUAL_TOL * bnorm {
                return Ok(NonlocalSolution {
                    u: u.as_slice().to_vec(),
                    mean_projected,
                });
            }
            let mut corr = self.chol.solve(&DVector::from_vec(resid));
            if let Boundary::Periodic = self.op.boundary() {
                let m = corr.mean();
                corr.iter_mut().for_each(|v| *v -= m);
            }
            u += corr;
        }
        Err(Error::NotInvertible {
            lambda_min: self.op.lambda_min(),
        })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn apply_nonlocal<K: RadialKernel + ?Sized>(
    kernel: &K,
    grid: &Grid1D,
    u: &[f64],
    q: Option<&[f64]>,
) -> Result<Vec<f64>> {
    Stencil::new(kernel, grid.h()).apply(grid, u, q)
}

pub fn assemble_matrix<K: RadialKernel + ?Sized>(kernel: &K, grid: &Grid1D) -> Result<OperatorMatrix> {
    Stencil::new(kernel, grid.h()).assemble(grid)
}

/// Solves the nonlocal problem with forcing `f` and exterior data `q`.
pub fn solve_nonlocal<K: RadialKernel + ?Sized>(
    kernel: &K,
    grid: &Grid1D,
    f: &[f64],
    q: Option<&[f64]>,
) -> Result<NonlocalSolution> {
    let stencil = Stencil::new(kernel, grid.h());
    let op = stencil.assemble(grid)?;
    let rhs = match grid.bc {
        Boundary::Periodic => f.to_vec(),
        Boundary::DirichletVolume { .. } => {
            let q = q.ok_or_else(|| Error::arg("exterior data q is required for volume constraints"))?;
            if f.len() != grid.n_free() {
                return Err(Error::Shape(format!(
                    "f has {} entries, grid has {} free nodes",
                    f.len(),
                    grid.n_free()
                )));
            }
            let coupling = stencil.exterior_coupling(grid, q)?;
            f.iter().zip(&coupling).map(|(a, b)| a - b).collect()
        }
    };
    op.factor()?.solve(&rhs)
}

/// Coercivity constant `κ = 1/λ_min` of the lumped generalized eigenproblem.
pub fn coercivity_kappa(op: &OperatorMatrix) -> Result<f64> {
    let lambda_min = op.lambda_min();
    if !(lambda_min > DEGENERATE_EIG) {
        return Err(Error::DegenerateKernel { lambda_min });
    }
    Ok(1.0 / lambda_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelspec::ManufacturedKernel;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    #[test]
    fn identity_has_unit_kappa() {
        let bc = Boundary::DirichletVolume { delta: 1.0 };
        let op = OperatorMatrix::from_dense(DMatrix::identity(7, 7), 1.0, bc).unwrap();
        assert!((coercivity_kappa(&op).unwrap() - 1.0).abs() < 1e-14);
        let scaled = OperatorMatrix::from_dense(DMatrix::identity(7, 7) * 4.0, 1.0, bc).unwrap();
        assert!((coercivity_kappa(&scaled).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn degenerate_kernel_detected() {
        let g = Grid1D::periodic(0.0, 1.0, 20).unwrap();
        let zero = Stencil::from_weights(g.h(), 0.2, vec![0.0; 4]);
        let op = zero.assemble(&g).unwrap();
        assert!(matches!(coercivity_kappa(&op), Err(Error::DegenerateKernel { .. })));
        assert!(matches!(op.factor(), Err(Error::NotInvertible { .. })));
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let g = Grid1D::dirichlet(0.0, 1.0, 50, 0.1).unwrap();
        let k = ManufacturedKernel::linear_ramp(0.1).unwrap();
        let sol = solve_nonlocal(&k, &g, &vec![0.0; 49], Some(&[0.0; 10])).unwrap();
        assert!(sol.u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cosine_is_an_eigenfunction() {
        let g = Grid1D::periodic(0.0, 1.0, 100).unwrap();
        let k = ManufacturedKernel::linear_ramp(0.3).unwrap();
        let st = Stencil::new(&k, g.h());
        let m1: f64 = st
            .weights()
            .iter()
            .enumerate()
            .map(|(j, w)| 2.0 * w * (1.0 - (2.0 * PI * (j + 1) as f64 * g.h()).cos()))
            .sum();
        let x = g.free_coords();
        let u: Vec<f64> = x.iter().map(|x| (2.0 * PI * x).cos()).collect();
        let f: Vec<f64> = u.iter().map(|v| m1 * v).collect();
        let sol = solve_nonlocal(&k, &g, &f, None).unwrap();
        assert!(!sol.mean_projected);
        let err = sol.u.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn nonzero_mean_is_flagged() {
        let g = Grid1D::periodic(0.0, 1.0, 40).unwrap();
        let k = ManufacturedKernel::linear_ramp(0.2).unwrap();
        let sol = solve_nonlocal(&k, &g, &vec![1.0; 40], None).unwrap();
        assert!(sol.mean_projected);
        assert!(sol.u.iter().all(|v| v.abs() < 1e-12));
    }
}
