use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;

use nlkernel::datagen::{biharmonic_test_forcing, fractional_analytic_unit, generate, Dataset, TrigSeries};
use nlkernel::experiments::{reproduce, Experiment, ReproduceSummary, RunScale};
use nlkernel::kernelspec::KernelModel;
use nlkernel::nlops::{assemble_matrix, solve_nonlocal, Boundary};
use nlkernel::regression::{evaluate, train, train_stage2_from, xnorm, EvalReport, TrainConfig, TrainReport};
use nlkernel::textio::Table;

use crate::config::{ensure_dir, read_json, write_json, write_text, Forcing, GenerateConfig, SolveConfig};
use crate::{CliError, Stage};

pub fn cmd_generate(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg: GenerateConfig = read_json(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if cfg.n_samples == 0 {
        return Err(CliError::Config(format!(
            "{}: n_samples must be positive",
            config.display()
        )));
    }
    let data = generate(&cfg.generator, cfg.n_samples, cfg.seed)?;
    data.write(out)?;
    write_json(&out.join("resolved_config.json"), &cfg)?;
    eprintln!("wrote {} samples to {}", data.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    status: &'static str,
    warnings: Vec<String>,
    report: &'a TrainReport,
}

pub fn cmd_train(
    config: &Path,
    dataset: &Path,
    out: &Path,
    stage: Stage,
    model: Option<&Path>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let mut cfg: TrainConfig = read_json(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()
        .map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
    let data = Dataset::read(dataset)?;
    let outcome = match (stage, model) {
        (Stage::One, _) => train(&data, &cfg, false)?,
        (Stage::Two, Some(path)) => train_stage2_from(&data, &load_model(path)?, &cfg)?,
        (Stage::Two, None) | (Stage::Both, _) => train(&data, &cfg, true)?,
    };
    ensure_dir(out)?;
    let mut warnings = Vec::new();
    if let Some(s2) = &outcome.report.stage2 {
        if !s2.feasible {
            warnings.push(format!(
                "stage two exited infeasible: N(D) = {:e} exceeds 1/(2κ) = {:e}",
                s2.n_d, s2.bound
            ));
        }
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    write_text(&out.join("model.json"), &outcome.model.to_json()?)?;
    write_json(
        &out.join("train_report.json"),
        &TrainOutput {
            status: if warnings.is_empty() { "ok" } else { "warning" },
            warnings,
            report: &outcome.report,
        },
    )?;
    outcome.report.loss_table().write(&out.join("loss.csv"))?;
    write_json(&out.join("resolved_config.json"), &cfg)?;
    Ok(())
}

fn load_model(path: &Path) -> Result<KernelModel, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    KernelModel::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Writes `x, u_pred[, u_ref]`; periodic grids repeat the first node at the right end.
fn solution_table(x: &[f64], pred: &[f64], reference: Option<&[f64]>, closing: Option<f64>) -> Table {
    let mut header = vec!["x", "u_pred"];
    if reference.is_some() {
        header.push("u_ref");
    }
    let mut t = Table::new(header);
    let mut push = |i: usize, xi: f64| {
        let mut row = vec![xi.into(), pred[i].into()];
        if let Some(r) = reference {
            row.push(r[i].into());
        }
        t.push(row);
    };
    for (i, &xi) in x.iter().enumerate() {
        push(i, xi);
    }
    if let Some(b) = closing {
        push(0, b);
    }
    t
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    model: PathBuf,
    dataset: PathBuf,
    metrics: &'a EvalReport,
}

pub fn cmd_eval(model: &Path, dataset: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let m = load_model(model)?;
    let data = Dataset::read(dataset)?;
    let report = evaluate(&m, &data)?;
    let doc = EvalOutput {
        model: model.to_path_buf(),
        dataset: dataset.to_path_buf(),
        metrics: &report,
    };
    match out {
        Some(dir) => {
            ensure_dir(dir)?;
            write_json(&dir.join("eval.json"), &doc)?;
            let grid = data.grid.with_horizon(m.delta())?;
            let q = (!grid.is_periodic()).then(|| vec![0.0; 2 * grid.collar()]);
            let sol = solve_nonlocal(&m, &grid, data.f(0), q.as_deref())?;
            let mut reference = data.u(0).to_vec();
            if grid.is_periodic() {
                let mean = reference.iter().sum::<f64>() / reference.len() as f64;
                reference.iter_mut().for_each(|v| *v -= mean);
            }
            let closing = grid.is_periodic().then_some(grid.b);
            solution_table(&grid.free_coords(), &sol.u, Some(&reference), closing)
                .write(&dir.join("eval_solution.csv"))?;
        }
        None => println!("{}", serde_json::to_string_pretty(&doc).map_err(nlkernel::Error::from)?),
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput {
    mean_projected: bool,
    lambda_min: f64,
    relative_error: Option<f64>,
    notes: Vec<String>,
}

pub fn cmd_solve(model: &Path, config: &Path, out: &Path) -> Result<(), CliError> {
    let m = load_model(model)?;
    let cfg: SolveConfig = read_json(config)?;
    cfg.grid
        .validate()
        .map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
    let grid = cfg.grid.with_horizon(m.delta())?;
    let x = grid.free_coords();
    let (f, implied_ref): (Vec<f64>, Option<Vec<f64>>) = match &cfg.forcing {
        Forcing::Values { values } => (values.clone(), None),
        Forcing::Constant { value } => (vec![*value; x.len()], None),
        Forcing::Fourier { period, terms } => (
            TrigSeries {
                period: *period,
                terms: terms.clone(),
            }
            .eval_all(&x),
            None,
        ),
        Forcing::BiharmonicTest { c, delta } => (
            biharmonic_test_forcing(*c, *delta).eval_all(&x),
            Some(x.iter().map(|x| (2.0 * PI * x).sin()).collect()),
        ),
        Forcing::FractionalUnit { s } => (
            vec![1.0; x.len()],
            Some(x.iter().map(|&x| fractional_analytic_unit(*s, x)).collect()),
        ),
    };
    if f.len() != x.len() {
        return Err(CliError::Config(format!(
            "{}: forcing has {} values, grid has {} free nodes",
            config.display(),
            f.len(),
            x.len()
        )));
    }
    let reference = cfg.reference.clone().or(implied_ref);
    let q = match (&cfg.exterior, grid.bc) {
        (_, Boundary::Periodic) => None,
        (Some(q), _) => Some(q.clone()),
        (None, _) => Some(vec![0.0; 2 * grid.collar()]),
    };
    let sol = solve_nonlocal(&m, &grid, &f, q.as_deref())?;
    let lambda_min = assemble_matrix(&m, &grid)?.lambda_min();
    let mut notes = Vec::new();
    if sol.mean_projected {
        let note = "forcing had a nonzero mean on a periodic grid; it was projected to mean zero".to_string();
        eprintln!("warning: {note}");
        notes.push(note);
    }
    let relative_error = match &reference {
        Some(r) if r.len() == x.len() => {
            let mut r = r.clone();
            if grid.is_periodic() {
                let mean = r.iter().sum::<f64>() / r.len() as f64;
                r.iter_mut().for_each(|v| *v -= mean);
            }
            let diff: Vec<f64> = sol.u.iter().zip(&r).map(|(a, b)| a - b).collect();
            Some(xnorm(&diff)? / xnorm(&r)?)
        }
        Some(r) => {
            return Err(CliError::Config(format!(
                "{}: reference has {} values, grid has {} free nodes",
                config.display(),
                r.len(),
                x.len()
            )))
        }
        None => None,
    };
    ensure_dir(out)?;
    let closing = grid.is_periodic().then_some(grid.b);
    solution_table(&x, &sol.u, reference.as_deref(), closing).write(&out.join("solution.csv"))?;
    write_json(
        &out.join("solve_report.json"),
        &SolveOutput {
            mean_projected: sol.mean_projected,
            lambda_min,
            relative_error,
            notes,
        },
    )?;
    write_json(&out.join("resolved_config.json"), &cfg)?;
    Ok(())
}

pub fn cmd_reproduce(experiment: &str, scale: f64, seed: u64, out: &Path) -> Result<ReproduceSummary, CliError> {
    let experiment: Experiment = experiment
        .parse()
        .map_err(|e: nlkernel::Error| CliError::Config(e.to_string()))?;
    let scale = RunScale::new(scale, seed).map_err(|e| CliError::Config(e.to_string()))?;
    let summary = reproduce(experiment, &scale, out)?;
    for c in &summary.checks {
        println!(
            "{} {} (value {:e}, threshold {:e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
    Ok(summary)
}
