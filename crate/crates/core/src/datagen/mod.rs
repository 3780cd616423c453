//! Training and test corpora from manufactured kernels and high-fidelity solvers.

mod biharmonic;
mod darcy;
mod dataset;
mod fourier;
mod fractional;
mod generate;

pub use biharmonic::{biharmonic_multiplier, biharmonic_solve, biharmonic_test_forcing};
pub use darcy::{coarsen, darcy_fem_solve, darcy_forcing, element_fluxes, FemSolution, Microstructure};
pub use dataset::{Dataset, FORMAT_VERSION};
pub use fourier::{row_rng, spectral_multiplier, FourierSpec, TrigSeries};
pub use fractional::{fractional_analytic_unit, fractional_solve, FractionalGreen};
pub use generate::{generate, Corpus, GeneratorSpec, ReferenceKernel, Synthesis, MULTIPLIER_PANELS};
