//! Learning well-posed, possibly sign-changing, nonlocal diffusion kernels.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod experiments;
pub mod kernelspec;
pub mod nlops;
pub mod quad;
pub mod regression;
pub mod textio;

pub use error::{Error, Result};
pub use kernelspec::{KernelModel, KernelVariant, ManufacturedKernel, ManufacturedKind, RadialKernel};
