use std::f64::consts::PI;

use serde::Serialize;

use super::{dense_lambda_min, step_parity_batch, Check, RunScale};
use crate::datagen::{biharmonic_test_forcing, generate, Dataset, GeneratorSpec};
use crate::error::Result;
use crate::kernelspec::KernelModel;
use crate::regression::{relative_solution_errors, train, TrainConfig};

pub const BIHARMONIC_C: [f64; 3] = [1e-4, 3e-4, 1e-3];
pub const BIHARMONIC_DELTA: f64 = 0.5;
pub const BIHARMONIC_ORDER: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct BiharmonicRow {
    pub c: f64,
    pub stage1_model: KernelModel,
    pub model: KernelModel,
    pub loss_c: f64,
    pub loss_cd: f64,
    pub error_c: f64,
    pub error_cd: f64,
    pub lambda_min: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BiharmonicResult {
    pub rows: Vec<BiharmonicRow>,
    pub checks: Vec<Check>,
}

fn test_case(template: &Dataset, c: f64) -> Result<Dataset> {
    let x = template.grid.free_coords();
    let f = biharmonic_test_forcing(c, BIHARMONIC_DELTA).eval_all(&x);
    let u = x.iter().map(|x| (2.0 * PI * x).sin()).collect();
    Dataset::new(
        template.grid,
        template.xspec,
        template.generator.clone(),
        0,
        vec![u],
        vec![f],
    )
}

/// Higher-order local operator approximated with and without the signed correction.
pub fn biharmonic_experiment(scale: &RunScale, cs: &[f64]) -> Result<BiharmonicResult> {
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &c in cs {
        let spec = GeneratorSpec::Biharmonic {
            c,
            delta: BIHARMONIC_DELTA,
            intervals: 100,
        };
        let data = generate(&spec, scale.samples(5000), scale.seed)?;
        let mut cfg = TrainConfig::new(BIHARMONIC_ORDER, BIHARMONIC_DELTA);
        cfg.seed = scale.seed;
        cfg.stage1_max_epochs = scale.epochs(500);
        cfg.batch_size = step_parity_batch(data.len());
        let out = train(&data, &cfg, true)?;
        let stage1_model = out.model.nonnegative_part();
        let test = test_case(&data, c)?;
        let error_c = relative_solution_errors(&stage1_model, &test)?[0];
        let error_cd = relative_solution_errors(&out.model, &test)?[0];
        let feasible = out.report.stage2.as_ref().map(|s| s.feasible).unwrap_or(true);
        let lambda_min = dense_lambda_min(&out.model, &data.grid)?;
        checks.push(Check::at_most(format!("error_ratio_c_{c:e}"), error_cd / error_c, 0.5));
        if feasible {
            checks.push(Check::flag(format!("lambda_min_positive_c_{c:e}"), lambda_min > 0.0));
        }
        rows.push(BiharmonicRow {
            c,
            stage1_model,
            model: out.model,
            loss_c: out.report.stage1.final_loss,
            loss_cd: out.report.stage2.as_ref().map(|s| s.final_misfit).unwrap_or(f64::NAN),
            error_c,
            error_cd,
            lambda_min,
            feasible,
        });
    }
    Ok(BiharmonicResult { rows, checks })
}
