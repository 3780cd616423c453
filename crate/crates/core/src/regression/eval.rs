use rayon::prelude::*;
use serde::Serialize;

use super::loss::{model_misfit, xnorm, zero_exterior};
use crate::datagen::Dataset;
use crate::error::Result;
use crate::kernelspec::{KernelModel, RadialKernel};
use crate::nlops::{EvalPoints, Stencil};

/// Held-out quality of a trained model.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub n_samples: usize,
    /// Mean squared X-norm residual of the forward map.
    pub validation_loss: f64,
    /// `sqrt(Σ‖L u − f‖² / Σ‖f‖²)` over all samples.
    pub forward_relative_error: f64,
    pub mean_relative_solution_error: f64,
    pub max_relative_solution_error: f64,
    pub kappa: Option<f64>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Relative X-norm error of the solution the model predicts for each sample's forcing.
///
/// Periodic solutions are compared after removing the grid mean of both fields.
pub fn relative_solution_errors<K: RadialKernel + ?Sized>(model: &K, data: &Dataset) -> Result<Vec<f64>> {
    let grid = data.grid.with_horizon(model.horizon())?;
    let points = EvalPoints::build(&data.xspec, &grid)?;
    let stencil = Stencil::new(model, grid.h());
    let op = stencil.assemble(&grid)?;
    let factored = op.factor()?;
    let q = zero_exterior(&grid);
    let coupling = match &q {
        Some(q) => Some(stencil.exterior_coupling(&grid, q)?),
        None => None,
    };
    (0..data.len())
        .into_par_iter()
        .map(|i| {
            let rhs: Vec<f64> = match &coupling {
                Some(c) => data.f(i).iter().zip(c).map(|(a, b)| a - b).collect(),
                None => data.f(i).to_vec(),
            };
            let pred = factored.solve(&rhs)?.u;
            let mut truth = data.u(i).to_vec();
            if grid.is_periodic() {
                let m = truth.iter().sum::<f64>() / truth.len() as f64;
                truth.iter_mut().for_each(|v| *v -= m);
            }
            let diff: Vec<f64> = pred.iter().zip(&truth).map(|(a, b)| a - b).collect();
            let den = xnorm(&points.sample(&truth))?;
            Ok(xnorm(&points.sample(&diff))? / den.max(f64::MIN_POSITIVE))
        })
        .collect()
}

pub fn evaluate(model: &KernelModel, data: &Dataset) -> Result<EvalReport> {
    let grid = data.grid.with_horizon(model.delta())?;
    let points = EvalPoints::build(&data.xspec, &grid)?;
    let validation_loss = model_misfit(model, data)?;
    let f_energy: f64 = (0..data.len())
        .map(|i| xnorm(&points.sample(data.f(i))).map(|v| v * v))
        .sum::<Result<f64>>()?
        / data.len().max(1) as f64;
    let errs = relative_solution_errors(model, data)?;
    let kappa = super::train::model_kappa(model, &data.grid).ok();
    Ok(EvalReport {
        n_samples: data.len(),
        validation_loss,
        forward_relative_error: (validation_loss / f_energy.max(f64::MIN_POSITIVE)).sqrt(),
        mean_relative_solution_error: errs.iter().sum::<f64>() / errs.len().max(1) as f64,
        max_relative_solution_error: errs.iter().cloned().fold(0.0, f64::max),
        kappa,
    })
}
