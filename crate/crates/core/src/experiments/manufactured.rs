use serde::Serialize;

use super::{dense_lambda_min, step_parity_batch, Check, RunScale};
use crate::datagen::{generate, Corpus, Dataset, GeneratorSpec, ReferenceKernel, Synthesis};
use crate::error::Result;
use crate::kernelspec::{KernelModel, RadialKernel};
use crate::regression::{evaluate, model_misfit, train, EvalReport, TrainConfig, TrainReport};

/// Reference coefficients of the nonnegative kernel used for recovery.
pub const RECOVERY_COEFFICIENTS: [f64; 3] = [1.0, 0.5, 2.0];
pub const MANUFACTURED_DELTA: f64 = 0.5;
const HOLDOUT_SEED_OFFSET: u64 = 1_000_003;

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryResult {
    pub model: KernelModel,
    pub report: TrainReport,
    pub holdout: EvalReport,
    /// Final training loss divided by the mean squared forcing norm.
    pub relative_training_loss: f64,
    pub checks: Vec<Check>,
}

fn manufactured_spec(kernel: ReferenceKernel, corpus: Corpus, synthesis: Synthesis) -> GeneratorSpec {
    GeneratorSpec::Manufactured {
        kernel,
        delta: MANUFACTURED_DELTA,
        corpus,
        synthesis,
        intervals: 100,
    }
}

fn split(spec: &GeneratorSpec, n_train: usize, n_test: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    Ok((
        generate(spec, n_train, seed)?,
        generate(spec, n_test, seed.wrapping_add(HOLDOUT_SEED_OFFSET))?,
    ))
}

fn mean_forcing_energy(data: &Dataset) -> Result<f64> {
    let zero = KernelModel::nonnegative(MANUFACTURED_DELTA, vec![0.0])?;
    model_misfit(&zero, data)
}

/// Stage-one configuration used by the recovery experiments.
pub fn recovery_config(order: usize, scale: &RunScale) -> TrainConfig {
    let mut cfg = TrainConfig::new(order, MANUFACTURED_DELTA);
    cfg.seed = scale.seed;
    cfg.lr = 2e-2;
    cfg.stage1_max_epochs = scale.epochs(500);
    cfg.stagnation_tol = 1e-6;
    cfg
}

/// Nonnegative order-2 kernel recovered from its own grid-consistent data.
pub fn known_kernel_recovery(scale: &RunScale) -> Result<RecoveryResult> {
    let spec = manufactured_spec(
        ReferenceKernel::Bernstein {
            coefficients: RECOVERY_COEFFICIENTS.to_vec(),
        },
        Corpus::Mixed,
        Synthesis::Grid,
    );
    let (train_set, test_set) = split(&spec, scale.samples(2000), scale.samples(500), scale.seed)?;
    let cfg = recovery_config(2, scale);
    let out = train(&train_set, &cfg, false)?;
    let holdout = evaluate(&out.model, &test_set)?;
    let relative_training_loss = out.report.stage1.final_loss / mean_forcing_energy(&train_set)?;
    let checks = vec![
        Check::at_most("holdout_forward_relative_error", holdout.forward_relative_error, 0.02),
        Check::flag("coefficients_nonnegative", out.model.c().iter().all(|&c| c >= 0.0)),
        Check::flag("kappa_positive", out.report.stage1.kappa > 0.0),
    ];
    Ok(RecoveryResult {
        model: out.model,
        report: out.report,
        holdout,
        relative_training_loss,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SignChangingResult {
    pub stage1_model: KernelModel,
    pub model: KernelModel,
    pub report: TrainReport,
    pub stage1_validation_loss: f64,
    pub stage2_validation_loss: f64,
    /// Minimum of the learned kernel over `r/δ ∈ (0.8, 1]`.
    pub tail_minimum: f64,
    pub lambda_min: f64,
    /// Stage-one training loss for each basis order in the sweep.
    pub order_sweep: Vec<(usize, f64)>,
    pub checks: Vec<Check>,
}

/// Signed cosine kernel learned with both stages on a mixed-frequency corpus.
pub fn sign_changing_recovery(scale: &RunScale, order_sweep: &[usize]) -> Result<SignChangingResult> {
    let spec = manufactured_spec(ReferenceKernel::CosineSignChanging, Corpus::Mixed, Synthesis::Spectral);
    let (train_set, test_set) = split(&spec, scale.samples(5000), scale.samples(1000), scale.seed)?;
    let mut cfg = recovery_config(20, scale);
    cfg.lr = 5e-3;
    cfg.stagnation_tol = 1e-4;
    cfg.batch_size = step_parity_batch(train_set.len());
    let out = train(&train_set, &cfg, true)?;
    let stage1_model = out.model.nonnegative_part();
    let stage1_validation_loss = model_misfit(&stage1_model, &test_set)?;
    let stage2_validation_loss = model_misfit(&out.model, &test_set)?;
    let tail_minimum = (1..=200)
        .map(|k| out.model.radial(MANUFACTURED_DELTA * (0.8 + 0.2 * k as f64 / 200.0)))
        .fold(f64::INFINITY, f64::min);
    let lambda_min = dense_lambda_min(&out.model, &train_set.grid)?;
    let mut sweep = Vec::with_capacity(order_sweep.len());
    for &m in order_sweep {
        let c = recovery_config(m, scale);
        sweep.push((m, crate::regression::stage1_fit(&train_set, &c)?.final_loss));
    }
    let checks = vec![
        Check::at_most(
            "stage2_over_stage1_validation_loss",
            stage2_validation_loss / stage1_validation_loss,
            0.8,
        ),
        Check::flag("negative_tail", tail_minimum < 0.0),
        Check::flag("lambda_min_positive", lambda_min > 0.0),
    ];
    Ok(SignChangingResult {
        stage1_model,
        model: out.model,
        report: out.report,
        stage1_validation_loss,
        stage2_validation_loss,
        tail_minimum,
        lambda_min,
        order_sweep: sweep,
        checks,
    })
}
