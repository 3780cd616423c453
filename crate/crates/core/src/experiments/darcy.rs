use std::f64::consts::PI;

use serde::Serialize;

use super::{dense_lambda_min, Check, RunScale};
use crate::datagen::{coarsen, darcy_fem_solve, darcy_forcing, generate, Dataset, GeneratorSpec, Microstructure};
use crate::error::Result;
use crate::kernelspec::KernelModel;
use crate::regression::{relative_solution_errors, train, TrainConfig};

/// Forcing indices `n` of `sin(2πn x/|Ω|)` used for testing; on `|Ω| = 10`
/// index 5 is `sin(πx)` and index 40 is `sin(8πx)`.
pub const DARCY_TEST_MODES: [usize; 6] = [1, 2, 5, 10, 20, 40];
pub const DARCY_LOW_MODE: usize = 5;
pub const DARCY_HIGH_MODE: usize = 40;
pub const DARCY_ORDER: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct DarcyRow {
    pub delta: f64,
    pub model: KernelModel,
    pub training_loss: f64,
    pub lambda_min: f64,
    pub feasible: bool,
    /// `(mode, relative solution error)`.
    pub errors: Vec<(usize, f64)>,
}

impl DarcyRow {
    pub fn error(&self, mode: usize) -> Option<f64> {
        self.errors.iter().find(|(m, _)| *m == mode).map(|(_, e)| *e)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DarcyResult {
    pub rows: Vec<DarcyRow>,
    pub kappa_eff_estimate: f64,
    pub kappa_eff: f64,
    pub checks: Vec<Check>,
}

/// Homogenized coefficient read off the fine solution for the longest mode.
pub fn darcy_homogenized_check(ms: &Microstructure) -> Result<f64> {
    let sol = darcy_fem_solve(ms, 1)?;
    let ne = ms.elements();
    let he = ms.element_width();
    let w = 2.0 * PI / ms.omega;
    let amp = 2.0 / ne as f64 * (0..ne).map(|j| sol.u[j] * (w * j as f64 * he).sin()).sum::<f64>();
    Ok(1.0 / (amp * w * w))
}

fn test_case(template: &Dataset, ms: &Microstructure, mode: usize) -> Result<Dataset> {
    let sol = darcy_fem_solve(ms, mode)?;
    let force = darcy_forcing(ms, mode);
    let he = ms.element_width();
    let f_fine: Vec<f64> = (0..ms.elements()).map(|j| force(j as f64 * he)).collect();
    let cell = 2.0 * ms.l;
    Dataset::new(
        template.grid,
        template.xspec,
        template.generator.clone(),
        0,
        vec![coarsen(&sol.u, ms.omega, cell)?],
        vec![coarsen(&f_fine, ms.omega, cell)?],
    )
}

/// Coarse-grained layered-medium data; horizons are multiples of the layer width `L`.
pub fn darcy_experiment(scale: &RunScale, horizon_multiples: &[f64]) -> Result<DarcyResult> {
    let ms = Microstructure::default();
    let spec = GeneratorSpec::Darcy {
        microstructure: ms,
        lambda_min: 1.0,
    };
    let data = generate(&spec, scale.samples(500), scale.seed)?;
    let tests = DARCY_TEST_MODES
        .iter()
        .map(|&m| Ok((m, test_case(&data, &ms, m)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &mult in horizon_multiples {
        let delta = mult * ms.l;
        let mut cfg = TrainConfig::new(DARCY_ORDER, delta);
        cfg.seed = scale.seed;
        cfg.lr = 1e-2;
        cfg.stage1_max_epochs = scale.epochs(500);
        cfg.stagnation_tol = 1e-6;
        let out = train(&data, &cfg, true)?;
        let errors = tests
            .iter()
            .map(|(m, t)| Ok((*m, relative_solution_errors(&out.model, t)?[0])))
            .collect::<Result<Vec<_>>>()?;
        let s2 = out.report.stage2.as_ref();
        rows.push(DarcyRow {
            delta,
            training_loss: s2.map(|s| s.final_misfit).unwrap_or(out.report.stage1.final_loss),
            lambda_min: dense_lambda_min(&out.model, &data.grid)?,
            feasible: s2.map(|s| s.feasible).unwrap_or(true),
            model: out.model,
            errors,
        });
    }
    let kappa_eff_estimate = darcy_homogenized_check(&ms)?;
    let mut checks = vec![Check::at_most(
        "kappa_eff_relative_error",
        (kappa_eff_estimate - ms.kappa_eff()).abs() / ms.kappa_eff(),
        0.02,
    )];
    if let Some(row) = rows.iter().find(|r| (r.delta - 4.0 * ms.l).abs() < 1e-12) {
        let low = row.error(DARCY_LOW_MODE).unwrap_or(f64::NAN);
        let high = row.error(DARCY_HIGH_MODE).unwrap_or(f64::NAN);
        checks.push(Check::at_most("low_frequency_error", low, 0.10));
        checks.push(Check::at_least("high_over_low_error", high / low, 3.0));
    }
    for row in &rows {
        if row.feasible {
            checks.push(Check::flag(
                format!("lambda_min_positive_delta_{}", row.delta),
                row.lambda_min > 0.0,
            ));
        }
    }
    Ok(DarcyResult {
        rows,
        kappa_eff_estimate,
        kappa_eff: ms.kappa_eff(),
        checks,
    })
}
