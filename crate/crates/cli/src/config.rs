use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use nlkernel::datagen::GeneratorSpec;
use nlkernel::nlops::Grid1D;

use crate::CliError;

/// `generate` configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub generator: GeneratorSpec,
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Forcing of a `solve` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Forcing {
    Values {
        values: Vec<f64>,
    },
    Constant {
        value: f64,
    },
    /// `Σ a_k cos(2πkx/period) + b_k sin(2πkx/period)` from `[k, a_k, b_k]` triples.
    Fourier {
        period: f64,
        terms: Vec<(usize, f64, f64)>,
    },
    /// Higher-order test forcing whose exact solution is `sin(2πx)`.
    BiharmonicTest {
        c: f64,
        delta: f64,
    },
    /// `f = 1` on `(-1, 1)` with the analytic fractional solution as reference.
    FractionalUnit {
        s: f64,
    },
}

/// `solve` configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub grid: Grid1D,
    pub forcing: Forcing,
    /// Exterior values for volume-constrained grids (zero when absent).
    #[serde(default)]
    pub exterior: Option<Vec<f64>>,
    /// Reference solution at the free nodes, overriding any implied by the forcing.
    #[serde(default)]
    pub reference: Option<Vec<f64>>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(nlkernel::Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))
}
