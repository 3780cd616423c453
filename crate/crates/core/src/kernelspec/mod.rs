//! Bernstein bases, the learnable kernel and the manufactured reference kernels.

mod bernstein;
mod manufactured;
mod model;

pub(crate) use bernstein::bernstein_unchecked;
pub use bernstein::{bernstein_all, bernstein_eval, bernstein_moment, binomial, MAX_ORDER};
pub use manufactured::{fractional_constant, ManufacturedKernel, ManufacturedKind, COSINE_AMPLITUDE};
pub use model::{KernelModel, KernelVariant};

/// A radially symmetric kernel with compact support, as consumed by the discretization.
pub trait RadialKernel: Sync {
    fn horizon(&self) -> f64;

    /// Kernel value at distance `r > 0`; zero beyond the horizon.
    fn radial(&self, r: f64) -> f64;
}
