use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use super::darcy::DARCY_TEST_MODES;
use super::{
    all_passed, biharmonic_experiment, darcy_experiment, fractional_experiment, kernel_profile, known_kernel_recovery,
    sign_changing_recovery, write_json, Check, RunScale, BIHARMONIC_C,
};
use crate::error::{Error, Result};
use crate::kernelspec::{KernelModel, ManufacturedKernel, RadialKernel};
use crate::regression::TrainReport;
use crate::textio::Table;

const PROFILE_SAMPLES: usize = 200;
const ORDER_SWEEP: [usize; 7] = [1, 2, 4, 8, 12, 16, 20];
const DARCY_HORIZONS: [f64; 3] = [4.0, 8.0, 16.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Manufactured,
    Darcy,
    Biharmonic,
    Fractional,
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "manufactured" => Ok(Experiment::Manufactured),
            "darcy" => Ok(Experiment::Darcy),
            "biharmonic" => Ok(Experiment::Biharmonic),
            "fractional" => Ok(Experiment::Fractional),
            other => Err(Error::arg(format!(
                "unknown experiment '{other}' (expected manufactured, darcy, biharmonic or fractional)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceSummary {
    pub experiment: Experiment,
    pub scale: f64,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub wall_time_s: f64,
}

fn write_model(dir: &Path, name: &str, model: &KernelModel) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, model.to_json()?).map_err(|e| Error::io(path, e))
}

fn write_report(dir: &Path, stem: &str, report: &TrainReport) -> Result<()> {
    let path = dir.join(format!("{stem}_report.json"));
    std::fs::write(&path, report.to_json()?).map_err(|e| Error::io(path, e))?;
    report.loss_table().write(&dir.join(format!("{stem}_loss.csv")))
}

/// Runs one experiment family and writes its tables, plot data and summary into `out`.
pub fn reproduce(experiment: Experiment, scale: &RunScale, out: &Path) -> Result<ReproduceSummary> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_json(&out.join("config.json"), &(experiment, scale))?;
    let start = Instant::now();
    let checks = match experiment {
        Experiment::Manufactured => manufactured(scale, out)?,
        Experiment::Darcy => darcy(scale, out)?,
        Experiment::Biharmonic => biharmonic(scale, out)?,
        Experiment::Fractional => fractional(scale, out)?,
    };
    let summary = ReproduceSummary {
        experiment,
        scale: scale.scale,
        seed: scale.seed,
        passed: all_passed(&checks),
        checks,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn manufactured(scale: &RunScale, out: &Path) -> Result<Vec<Check>> {
    let rec = known_kernel_recovery(scale)?;
    write_model(out, "recovery_model.json", &rec.model)?;
    write_report(out, "recovery", &rec.report)?;

    let sc = sign_changing_recovery(scale, &ORDER_SWEEP)?;
    write_model(out, "posneg_stage1_model.json", &sc.stage1_model)?;
    write_model(out, "posneg_model.json", &sc.model)?;
    write_report(out, "posneg", &sc.report)?;
    let truth = ManufacturedKernel::cosine(sc.model.delta())?;
    let kernels: [(&str, &dyn RadialKernel); 3] = [
        ("reference", &truth),
        ("nonnegative_part", &sc.stage1_model),
        ("full", &sc.model),
    ];
    kernel_profile(&kernels, PROFILE_SAMPLES).write(&out.join("posneg_kernel_profiles.csv"))?;
    let mut sweep = Table::new(["order", "stage1_training_loss"]);
    for (m, l) in &sc.order_sweep {
        sweep.push(vec![(*m).into(), (*l).into()]);
    }
    sweep.write(&out.join("loss_vs_order.csv"))?;

    let mut checks: Vec<Check> = rec.checks.into_iter().map(|c| prefixed("recovery", c)).collect();
    checks.extend(sc.checks.into_iter().map(|c| prefixed("posneg", c)));
    Ok(checks)
}

fn darcy(scale: &RunScale, out: &Path) -> Result<Vec<Check>> {
    let res = darcy_experiment(scale, &DARCY_HORIZONS)?;
    let mut header = vec!["delta".to_string()];
    header.extend(DARCY_TEST_MODES.iter().map(|m| format!("error_mode_{m}")));
    let mut errors = Table::new(header);
    for row in &res.rows {
        let mut cells = vec![row.delta.into()];
        cells.extend(row.errors.iter().map(|(_, e)| (*e).into()));
        errors.push(cells);
        write_model(out, &format!("darcy_model_delta_{}.json", row.delta), &row.model)?;
    }
    errors.write(&out.join("error_vs_frequency.csv"))?;
    let names: Vec<String> = res.rows.iter().map(|r| format!("delta_{}", r.delta)).collect();
    let kernels: Vec<(&str, &dyn RadialKernel)> = names
        .iter()
        .zip(&res.rows)
        .map(|(n, r)| (n.as_str(), &r.model as &dyn RadialKernel))
        .collect();
    kernel_profile(&kernels, PROFILE_SAMPLES).write(&out.join("darcy_kernel_profiles.csv"))?;
    Ok(res.checks)
}

fn biharmonic(scale: &RunScale, out: &Path) -> Result<Vec<Check>> {
    let res = biharmonic_experiment(scale, &BIHARMONIC_C)?;
    let mut losses = Table::new(["c", "C_m", "C_m+D_m"]);
    let mut errors = Table::new(["c", "C_m", "C_m+D_m"]);
    for row in &res.rows {
        losses.push(vec![row.c.into(), row.loss_c.into(), row.loss_cd.into()]);
        errors.push(vec![row.c.into(), row.error_c.into(), row.error_cd.into()]);
        write_model(out, &format!("biharmonic_model_c_{:e}.json", row.c), &row.model)?;
        let kernels: [(&str, &dyn RadialKernel); 2] = [("nonnegative_part", &row.stage1_model), ("full", &row.model)];
        kernel_profile(&kernels, PROFILE_SAMPLES)
            .write(&out.join(format!("biharmonic_kernel_profiles_c_{:e}.csv", row.c)))?;
    }
    losses.write(&out.join("table_training_loss.csv"))?;
    errors.write(&out.join("table_solution_error.csv"))?;
    Ok(res.checks)
}

fn fractional(scale: &RunScale, out: &Path) -> Result<Vec<Check>> {
    let res = fractional_experiment(scale)?;
    write_model(out, "fractional_model.json", &res.model)?;
    let mut table = Table::new(["delta", "order", "alpha", "learned", "truncated_kernel"]);
    table.push(vec![
        res.delta.into(),
        res.model.order().into(),
        res.model.alpha().unwrap_or(0.0).into(),
        res.learned_error.into(),
        res.baseline_error.into(),
    ]);
    table.write(&out.join("table_fractional.csv"))?;
    Ok(res.checks)
}

fn prefixed(prefix: &str, mut c: Check) -> Check {
    c.name = format!("{prefix}.{}", c.name);
    c
}
