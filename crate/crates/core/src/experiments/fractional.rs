use serde::Serialize;

use super::{dense_lambda_min, Check, RunScale};
use crate::datagen::{fractional_analytic_unit, generate, Dataset, GeneratorSpec};
use crate::error::Result;
use crate::kernelspec::{KernelModel, KernelVariant, ManufacturedKernel, RadialKernel};
use crate::regression::{relative_solution_errors, train, TrainConfig};

pub const FRACTIONAL_S: f64 = 0.75;
pub const FRACTIONAL_DELTA: f64 = 2.0;

#[derive(Debug, Clone, Serialize)]
pub struct FractionalResult {
    pub s: f64,
    pub delta: f64,
    pub model: KernelModel,
    pub learned_error: f64,
    pub baseline_error: f64,
    pub lambda_min: f64,
    pub checks: Vec<Check>,
}

/// Single-row dataset holding the analytic solution for `f = 1`.
fn unit_case(template: &Dataset, s: f64) -> Result<Dataset> {
    let x = template.grid.free_coords();
    let u = x.iter().map(|&x| fractional_analytic_unit(s, x)).collect();
    Dataset::new(
        template.grid,
        template.xspec,
        template.generator.clone(),
        0,
        vec![u],
        vec![vec![1.0; x.len()]],
    )
}

fn unit_error<K: RadialKernel + ?Sized>(kernel: &K, template: &Dataset, s: f64) -> Result<f64> {
    Ok(relative_solution_errors(kernel, &unit_case(template, s)?)?[0])
}

/// Relative difference of the truncated fractional kernel's solution for `f = 1`.
pub fn fractional_baseline(s: f64, delta: f64, intervals: usize) -> Result<f64> {
    let spec = GeneratorSpec::Fractional {
        s,
        period: 4.0,
        intervals,
    };
    let template = generate(&spec, 1, 0)?;
    unit_error(&ManufacturedKernel::truncated_fractional(s, delta)?, &template, s)
}

pub fn fractional_config(scale: &RunScale) -> TrainConfig {
    let mut cfg = TrainConfig::new(0, FRACTIONAL_DELTA);
    cfg.variant = KernelVariant::FractionalScaled;
    cfg.seed = scale.seed;
    cfg.lr = 1e-2;
    cfg.stage1_max_epochs = scale.epochs(500);
    cfg
}

/// Order-0 fractional-scaled surrogate learned from Green's-function data.
pub fn fractional_experiment(scale: &RunScale) -> Result<FractionalResult> {
    let s = FRACTIONAL_S;
    let spec = GeneratorSpec::Fractional {
        s,
        period: 4.0,
        intervals: 100,
    };
    let data = generate(&spec, scale.samples(2000), scale.seed)?;
    let out = train(&data, &fractional_config(scale), false)?;
    let learned_error = unit_error(&out.model, &data, s)?;
    let baseline_error = unit_error(
        &ManufacturedKernel::truncated_fractional(s, FRACTIONAL_DELTA)?,
        &data,
        s,
    )?;
    let lambda_min = dense_lambda_min(&out.model, &data.grid)?;
    let checks = vec![
        Check::at_most("learned_relative_difference", learned_error, 0.05),
        Check::at_most(
            "baseline_deviation_from_23_percent",
            (baseline_error - 0.23).abs(),
            0.03,
        ),
        Check::at_least("baseline_over_learned", baseline_error / learned_error, 4.0),
        Check::flag("lambda_min_positive", lambda_min > 0.0),
    ];
    Ok(FractionalResult {
        s,
        delta: FRACTIONAL_DELTA,
        model: out.model,
        learned_error,
        baseline_error,
        lambda_min,
        checks,
    })
}
