//! One-point quadrature discretization of the nonlocal operator, its dense
//! assembly, linear solves and the coercivity constant.

pub mod eigen;
mod grid;
mod operator;
mod points;
mod solve;

pub use grid::{horizon_steps, Boundary, Grid1D};
pub use operator::{OperatorMatrix, Stencil};
pub use points::{EvalPoints, Interp, XSpec};
pub use solve::{
    apply_nonlocal, assemble_matrix, coercivity_kappa, solve_nonlocal, FactoredOperator, NonlocalSolution,
};
