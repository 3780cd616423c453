//! Desk-scale versions of the four experiment families, with pass/fail checks.

mod biharmonic;
mod darcy;
mod fractional;
mod manufactured;
mod reproduce;

use std::path::Path;

use serde::Serialize;

pub use biharmonic::{biharmonic_experiment, BiharmonicResult, BiharmonicRow, BIHARMONIC_C};
pub use darcy::{darcy_experiment, darcy_homogenized_check, DarcyResult, DarcyRow};
pub use fractional::{fractional_baseline, fractional_experiment, FractionalResult};
pub use manufactured::{known_kernel_recovery, sign_changing_recovery, RecoveryResult, SignChangingResult};
pub use reproduce::{reproduce, Experiment, ReproduceSummary};

use crate::error::{Error, Result};
use crate::kernelspec::{KernelModel, RadialKernel};
use crate::nlops::{assemble_matrix, Grid1D};
use crate::textio::Table;

/// Corpus-size and epoch multiplier plus the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunScale {
    pub scale: f64,
    pub seed: u64,
}

impl RunScale {
    pub fn new(scale: f64, seed: u64) -> Result<Self> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::arg(format!("scale must lie in (0, 1], got {scale}")));
        }
        Ok(RunScale { scale, seed })
    }

    pub fn full(seed: u64) -> Self {
        RunScale { scale: 1.0, seed }
    }

    pub fn samples(&self, n: usize) -> usize {
        ((n as f64 * self.scale).round() as usize).max(10)
    }

    pub fn epochs(&self, n: usize) -> usize {
        ((n as f64 * self.scale).round() as usize).max(5)
    }
}

/// Minibatch size giving 500 optimizer steps per epoch, the step count of a
/// 50,000-sample corpus with batches of 100.
pub fn step_parity_batch(n_samples: usize) -> usize {
    (n_samples / 500).clamp(1, 100)
}

/// One thresholded acceptance check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            passed: ok,
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// Smallest eigenvalue of the assembled operator from a dense symmetric eigendecomposition.
pub fn dense_lambda_min(model: &KernelModel, grid: &Grid1D) -> Result<f64> {
    let grid = grid.with_horizon(model.delta())?;
    let op = assemble_matrix(model, &grid)?;
    let eig = op.admissible_matrix().symmetric_eigen();
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Kernel profile `r/δ ↦ K(r)` sampled at `samples + 1` points of `(0, 1]`.
pub fn kernel_profile(models: &[(&str, &dyn RadialKernel)], samples: usize) -> Table {
    let mut header = vec!["r_over_delta".to_string()];
    header.extend(models.iter().map(|(n, _)| n.to_string()));
    let mut t = Table::new(header);
    for k in 1..=samples {
        let t_r = k as f64 / samples as f64;
        let mut row = vec![t_r.into()];
        for (_, m) in models {
            row.push(m.radial(t_r * m.horizon()).into());
        }
        t.push(row);
    }
    t
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
