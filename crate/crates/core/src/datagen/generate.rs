use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::biharmonic::biharmonic_solve;
use super::darcy::{coarsen, darcy_fem_solve, darcy_forcing, Microstructure};
use super::dataset::Dataset;
use super::fourier::{row_rng, spectral_multiplier, FourierSpec, TrigSeries};
use super::fractional::FractionalGreen;
use crate::error::{Error, Result};
use crate::kernelspec::{KernelModel, ManufacturedKernel, RadialKernel};
use crate::nlops::{Grid1D, Interp, Stencil, XSpec};

/// Panel count for spectral multipliers.
pub const MULTIPLIER_PANELS: usize = 2048;
const LOW_KMAX: usize = 100;
const FORCING_KMAX: usize = 99;

fn default_intervals() -> usize {
    100
}

fn default_fractional_period() -> f64 {
    4.0
}

/// Kernel that generates manufactured data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceKernel {
    LinearRamp,
    CosineSignChanging,
    /// Nonnegative Bernstein kernel with coefficients `C` and `D = 0`.
    Bernstein {
        coefficients: Vec<f64>,
    },
}

impl ReferenceKernel {
    pub fn build(&self, delta: f64) -> Result<Box<dyn RadialKernel>> {
        Ok(match self {
            ReferenceKernel::LinearRamp => Box::new(ManufacturedKernel::linear_ramp(delta)?),
            ReferenceKernel::CosineSignChanging => Box::new(ManufacturedKernel::cosine(delta)?),
            ReferenceKernel::Bernstein { coefficients } => {
                Box::new(KernelModel::nonnegative(delta, coefficients.clone())?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corpus {
    LowFreq,
    HighFreq,
    /// Alternating low- and high-frequency rows.
    Mixed,
}

/// How forcings of manufactured pairs are computed from the solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Synthesis {
    /// Continuous Fourier multiplier of the kernel.
    #[default]
    Spectral,
    /// The discrete operator on the same grid (exactly self-consistent data).
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Manufactured {
        kernel: ReferenceKernel,
        delta: f64,
        corpus: Corpus,
        #[serde(default)]
        synthesis: Synthesis,
        #[serde(default = "default_intervals")]
        intervals: usize,
    },
    Darcy {
        #[serde(default)]
        microstructure: Microstructure,
        lambda_min: f64,
    },
    Biharmonic {
        c: f64,
        delta: f64,
        #[serde(default = "default_intervals")]
        intervals: usize,
    },
    Fractional {
        s: f64,
        /// Period of the cosine forcings sampled on `[−1, 1]`.
        #[serde(default = "default_fractional_period")]
        period: f64,
        #[serde(default = "default_intervals")]
        intervals: usize,
    },
}

impl GeneratorSpec {
    /// Grid and residual point set of the generated data.
    pub fn layout(&self) -> Result<(Grid1D, XSpec)> {
        let closed_unit = |n: usize| -> Result<(Grid1D, XSpec)> {
            Ok((
                Grid1D::periodic(0.0, 1.0, n)?,
                XSpec::Uniform {
                    lo: 0.0,
                    hi: 1.0,
                    count: n + 1,
                    interp: Interp::Linear,
                },
            ))
        };
        match self {
            GeneratorSpec::Manufactured { intervals, .. } | GeneratorSpec::Biharmonic { intervals, .. } => {
                closed_unit(*intervals)
            }
            GeneratorSpec::Darcy { microstructure: ms, .. } => {
                ms.validate()?;
                let cells = ms.periods()?;
                let count = 10 * cells;
                Ok((
                    Grid1D::periodic(ms.l, ms.l + ms.omega, cells)?,
                    XSpec::Uniform {
                        lo: 0.0,
                        hi: ms.omega * (1.0 - 1.0 / count as f64),
                        count,
                        interp: Interp::Constant,
                    },
                ))
            }
            GeneratorSpec::Fractional { intervals, .. } => {
                let n = *intervals;
                Ok((
                    Grid1D::dirichlet(-1.0, 1.0, n, 2.0 / n as f64)?,
                    XSpec::Uniform {
                        lo: -0.8,
                        hi: 0.8,
                        count: 161,
                        interp: Interp::Linear,
                    },
                ))
            }
        }
    }
}

/// Generates `n_samples` pairs; row `i` depends only on `(seed, i)`.
pub fn generate(spec: &GeneratorSpec, n_samples: usize, seed: u64) -> Result<Dataset> {
    let (grid, xspec) = spec.layout()?;
    let x = grid.free_coords();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = match spec {
        GeneratorSpec::Manufactured {
            kernel,
            delta,
            corpus,
            synthesis,
            ..
        } => {
            let kernel = kernel.build(*delta)?;
            let low = FourierSpec::low(LOW_KMAX, 1.0);
            let high = FourierSpec::high(1.0);
            let pick = |i: usize| match corpus {
                Corpus::LowFreq => low,
                Corpus::HighFreq => high,
                Corpus::Mixed if i.is_multiple_of(2) => low,
                Corpus::Mixed => high,
            };
            match synthesis {
                Synthesis::Spectral => {
                    let mult: Vec<f64> = (0..=LOW_KMAX.max(15))
                        .map(|k| spectral_multiplier(kernel.as_ref(), k, 1.0, MULTIPLIER_PANELS))
                        .collect();
                    par_rows(n_samples, |i| {
                        let u = pick(i).sample(&mut row_rng(seed, i));
                        let f = u.scaled(|k| mult[k]);
                        Ok((u.eval_all(&x), f.eval_all(&x)))
                    })?
                }
                Synthesis::Grid => {
                    let stencil = Stencil::new(kernel.as_ref(), grid.h());
                    par_rows(n_samples, |i| {
                        let u = pick(i).sample(&mut row_rng(seed, i)).eval_all(&x);
                        let f = stencil.apply(&grid, &u, None)?;
                        Ok((u, f))
                    })?
                }
            }
        }
        GeneratorSpec::Darcy {
            microstructure: ms,
            lambda_min,
        } => {
            if !(*lambda_min > 0.0) {
                return Err(Error::arg(format!("lambda_min must be positive, got {lambda_min}")));
            }
            let nmax = (ms.omega / lambda_min + 1e-9).floor() as usize;
            if nmax < 1 {
                return Err(Error::arg(format!(
                    "lambda_min {lambda_min} exceeds the domain length {}",
                    ms.omega
                )));
            }
            let he = ms.element_width();
            let fine_x: Vec<f64> = (0..ms.elements()).map(|j| j as f64 * he).collect();
            let cell = 2.0 * ms.l;
            par_rows(n_samples, |i| {
                use rand::Rng;
                let n = row_rng(seed, i).random_range(1..=nmax);
                let sol = darcy_fem_solve(ms, n)?;
                let force = darcy_forcing(ms, n);
                let f_fine: Vec<f64> = fine_x.iter().map(|&x| force(x)).collect();
                Ok((coarsen(&sol.u, ms.omega, cell)?, coarsen(&f_fine, ms.omega, cell)?))
            })?
        }
        GeneratorSpec::Biharmonic { c, delta, .. } => {
            let fspec = FourierSpec::LowFreq {
                kmax: FORCING_KMAX,
                alpha: 0.1,
                period: 1.0,
                k_start: 1,
            };
            par_rows(n_samples, |i| {
                let f = fspec.sample(&mut row_rng(seed, i));
                let u = biharmonic_solve(*c, *delta, &f)?;
                Ok((u.eval_all(&x), f.eval_all(&x)))
            })?
        }
        GeneratorSpec::Fractional { s, period, intervals } => {
            let green = FractionalGreen::new(*s)?;
            let w = green.quadrature_matrix(*intervals);
            let all_x: Vec<f64> = (0..=*intervals)
                .map(|j| -1.0 + 2.0 * j as f64 / *intervals as f64)
                .collect();
            let fspec = FourierSpec::LowFreq {
                kmax: FORCING_KMAX,
                alpha: 0.1,
                period: *period,
                k_start: 1,
            };
            par_rows(n_samples, |i| {
                let f: TrigSeries = fspec.sample(&mut row_rng(seed, i));
                let f_all = f.eval_all(&all_x);
                let u = w
                    .iter()
                    .map(|row| row.iter().zip(&f_all).map(|(a, b)| a * b).sum())
                    .collect();
                Ok((u, f_all[1..*intervals].to_vec()))
            })?
        }
    };
    let (u, f): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Dataset::new(grid, xspec, spec.clone(), seed, u, f)
}

fn par_rows(
    n: usize,
    row: impl Fn(usize) -> Result<(Vec<f64>, Vec<f64>)> + Sync + Send,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    (0..n).into_par_iter().map(row).collect()
}
