use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_minimize, Adam, AdamConfig, MinibatchObjective, StopRule};
use super::constraint::{constraint_h, ConstraintFunctional};
use super::loss::{zero_exterior, GramSet, ResponseSet};
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::kernelspec::{bernstein_unchecked, KernelModel, KernelVariant};
use crate::nlops::{coercivity_kappa, horizon_steps, EvalPoints, Grid1D, Stencil};
use crate::textio::Table;

/// Upper clamp for the singularity exponent (exclusive bound `d + 2 = 3`).
pub const ALPHA_MAX: f64 = 3.0 - 1e-6;

const STREAM_C_INIT: u64 = 0;
const STREAM_STAGE1: u64 = 1;
const STREAM_D_INIT: u64 = 2;
const STREAM_STAGE2: u64 = 3;

fn d_order() -> usize {
    20
}
fn d_batch() -> usize {
    100
}
fn d_lr() -> f64 {
    5e-3
}
fn d_beta1() -> f64 {
    0.9
}
fn d_beta2() -> f64 {
    0.999
}
fn d_eps() -> f64 {
    1e-8
}
fn d_stage1_epochs() -> usize {
    500
}
fn d_window() -> usize {
    10
}
fn d_tol() -> f64 {
    1e-4
}
fn d_epochs_per_al() -> usize {
    10
}
fn d_step_max() -> usize {
    100
}
fn d_mu0() -> f64 {
    1.0
}
fn d_rho() -> f64 {
    10.0
}
fn d_c() -> f64 {
    0.25
}
fn d_al_eps() -> f64 {
    1e-8
}
fn d_mu_cap() -> f64 {
    1e20
}
fn d_inner() -> Option<usize> {
    Some(200)
}
fn d_true() -> bool {
    true
}

/// Hyperparameters of the two-stage regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "d_order")]
    pub order: usize,
    pub delta: f64,
    #[serde(default = "default_variant")]
    pub variant: KernelVariant,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_lr")]
    pub lr: f64,
    #[serde(default = "d_beta1")]
    pub beta1: f64,
    #[serde(default = "d_beta2")]
    pub beta2: f64,
    #[serde(default = "d_eps")]
    pub adam_eps: f64,
    #[serde(default = "d_stage1_epochs")]
    pub stage1_max_epochs: usize,
    #[serde(default = "d_window")]
    pub stagnation_window: usize,
    #[serde(default = "d_tol")]
    pub stagnation_tol: f64,
    #[serde(default = "d_epochs_per_al")]
    pub epochs_per_al: usize,
    #[serde(default = "d_step_max")]
    pub step_max: usize,
    #[serde(default)]
    pub lambda0: f64,
    #[serde(default = "d_mu0")]
    pub mu0: f64,
    #[serde(default = "d_rho")]
    pub rho: f64,
    #[serde(default = "d_c")]
    pub c: f64,
    #[serde(default = "d_al_eps")]
    pub al_eps: f64,
    #[serde(default = "d_mu_cap")]
    pub mu_cap: f64,
    /// Rescale an infeasible correction onto the constraint boundary.
    #[serde(default = "d_true")]
    pub restore_feasibility: bool,
    /// Return the feasible iterate (including `D = 0`) with the smallest misfit.
    #[serde(default = "d_true")]
    pub select_best: bool,
    /// Stage-two learning rate; the stage-one rate when absent.
    #[serde(default)]
    pub stage2_lr: Option<f64>,
    /// Stage-two minibatch size; the stage-one size when absent.
    #[serde(default)]
    pub stage2_batch_size: Option<usize>,
    #[serde(default)]
    pub theta_init: ThetaInit,
    /// When set, each inner solve runs until the stagnation rule fires
    /// (window `epochs_per_al`) or this many epochs pass; `null` runs exactly `epochs_per_al`.
    #[serde(default = "d_inner")]
    pub inner_max_epochs: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

/// Initial slack variable of the augmented Lagrangian loop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaInit {
    /// `θ = 1`.
    #[default]
    One,
    /// `θ = sqrt(max(1/(2κ) − N(D₀), 0))`, so the constraint residual starts at zero when feasible.
    Balanced,
}

fn default_variant() -> KernelVariant {
    KernelVariant::Standard
}

impl TrainConfig {
    pub fn new(order: usize, delta: f64) -> Self {
        TrainConfig {
            order,
            delta,
            variant: KernelVariant::Standard,
            batch_size: d_batch(),
            lr: d_lr(),
            beta1: d_beta1(),
            beta2: d_beta2(),
            adam_eps: d_eps(),
            stage1_max_epochs: d_stage1_epochs(),
            stagnation_window: d_window(),
            stagnation_tol: d_tol(),
            epochs_per_al: d_epochs_per_al(),
            step_max: d_step_max(),
            lambda0: 0.0,
            mu0: d_mu0(),
            rho: d_rho(),
            c: d_c(),
            al_eps: d_al_eps(),
            mu_cap: d_mu_cap(),
            restore_feasibility: true,
            select_best: true,
            stage2_lr: None,
            stage2_batch_size: None,
            theta_init: ThetaInit::One,
            inner_max_epochs: d_inner(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta", self.delta),
            ("lr", self.lr),
            ("adam_eps", self.adam_eps),
            ("al_eps", self.al_eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::arg(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(lr) = self.stage2_lr {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::arg(format!("stage2_lr must be positive, got {lr}")));
            }
        }
        if self.batch_size == 0
            || self.stage2_batch_size == Some(0)
            || self.stage1_max_epochs == 0
            || self.epochs_per_al == 0
        {
            return Err(Error::arg("batch size and epoch counts must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::arg("Adam betas must lie in [0, 1)"));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::arg(format!("c must lie in (0, 1), got {}", self.c)));
        }
        if !(self.rho > 1.0) {
            return Err(Error::arg(format!("rho must exceed 1, got {}", self.rho)));
        }
        if !(self.mu0 >= 1.0) || !(self.mu_cap > self.mu0) {
            return Err(Error::arg("need 1 <= mu0 < mu_cap"));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
            batch_size: self.batch_size,
        }
    }

    fn adam_stage2(&self) -> AdamConfig {
        AdamConfig {
            lr: self.stage2_lr.unwrap_or(self.lr),
            batch_size: self.stage2_batch_size.unwrap_or(self.batch_size),
            ..self.adam()
        }
    }

    fn inner_stop(&self) -> StopRule {
        match self.inner_max_epochs {
            Some(cap) => StopRule {
                max_epochs: cap.max(self.epochs_per_al + 1),
                window: self.epochs_per_al,
                tol: self.stagnation_tol,
            },
            None => StopRule::fixed(self.epochs_per_al),
        }
    }

    fn stage1_stop(&self) -> StopRule {
        StopRule {
            max_epochs: self.stage1_max_epochs,
            window: self.stagnation_window,
            tol: self.stagnation_tol,
        }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Stagnated,
    MaxEpochs,
    Converged,
    PenaltyCap,
    StepMax,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stage1Report {
    pub losses: Vec<f64>,
    pub final_loss: f64,
    pub c: Vec<f64>,
    pub alpha: Option<f64>,
    pub kappa: f64,
    pub termination: Termination,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlRecord {
    pub iteration: usize,
    /// Adam epochs spent in this iteration's inner solve.
    pub epochs: usize,
    pub misfit: f64,
    pub h: f64,
    pub n_d: f64,
    pub theta: f64,
    pub mu: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stage2Report {
    pub epoch_losses: Vec<f64>,
    pub al_log: Vec<AlRecord>,
    pub termination: Termination,
    pub bound: f64,
    /// Raw last iterate of the augmented Lagrangian loop.
    pub last_d: Vec<f64>,
    pub last_n_d: f64,
    pub d: Vec<f64>,
    pub n_d: f64,
    pub final_misfit: f64,
    /// AL iteration that produced `d` (0 means the feasible start `D = 0`).
    pub selected_iteration: usize,
    pub restored: bool,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub stage1: Stage1Report,
    pub stage2: Option<Stage2Report>,
    pub wall_time_s: f64,
}

impl TrainReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Loss trace as a table: stage, epoch, loss, H, mu, lambda.
    pub fn loss_table(&self) -> Table {
        let mut t = Table::new(["stage", "epoch", "loss", "H", "mu", "lambda"]);
        for (e, l) in self.stage1.losses.iter().enumerate() {
            t.push(vec![
                1usize.into(),
                (e + 1).into(),
                (*l).into(),
                0.0.into(),
                0.0.into(),
                0.0.into(),
            ]);
        }
        if let Some(s2) = &self.stage2 {
            let mut losses = s2.epoch_losses.iter().enumerate();
            for rec in &s2.al_log {
                for (e, l) in losses.by_ref().take(rec.epochs) {
                    t.push(vec![
                        2usize.into(),
                        (e + 1).into(),
                        (*l).into(),
                        rec.h.into(),
                        rec.mu.into(),
                        rec.lambda.into(),
                    ]);
                }
            }
        }
        t
    }
}

struct Stage1Objective<'a> {
    gram: &'a GramSet,
}

impl MinibatchObjective for Stage1Objective<'_> {
    fn n_params(&self) -> usize {
        self.gram.n_basis
    }

    fn n_samples(&self) -> usize {
        self.gram.len()
    }

    fn batch_loss_grad(&self, c: &[f64], batch: &[usize], grad: &mut [f64]) -> f64 {
        let theta: Vec<f64> = c.iter().map(|v| v.max(0.0)).collect();
        let loss = self.gram.batch_loss_grad(&theta, batch, grad);
        // ReLU'(0) is taken as 1 so that coefficients projected to zero can recover.
        for (g, v) in grad.iter_mut().zip(c) {
            if *v < 0.0 {
                *g = 0.0;
            }
        }
        loss
    }

    fn full_loss(&self, c: &[f64]) -> f64 {
        let theta: Vec<f64> = c.iter().map(|v| v.max(0.0)).collect();
        self.gram.loss(&theta)
    }
}

struct Stage2Objective<'a> {
    gram: &'a GramSet,
    c_star: &'a [f64],
    cons: &'a ConstraintFunctional,
    kappa: f64,
    lambda: f64,
    mu: f64,
}

impl Stage2Objective<'_> {
    fn split<'p>(&self, params: &'p [f64]) -> (&'p [f64], f64) {
        let nb = self.c_star.len();
        (&params[..nb], params[nb])
    }

    fn penalty(&self, d: &[f64], theta: f64, grad: Option<&mut [f64]>) -> f64 {
        let nb = self.c_star.len();
        match grad {
            None => {
                let h = constraint_h(self.cons.eval(d), theta, self.kappa);
                self.lambda * h + 0.5 * self.mu * h * h
            }
            Some(grad) => {
                let mut g_n = vec![0.0; nb];
                let n = self.cons.eval_grad(d, Some(&mut g_n));
                let h = constraint_h(n, theta, self.kappa);
                let coef = self.lambda + self.mu * h;
                for (g, gn) in grad[..nb].iter_mut().zip(&g_n) {
                    *g -= coef * gn;
                }
                grad[nb] += coef * (-2.0 * theta);
                self.lambda * h + 0.5 * self.mu * h * h
            }
        }
    }
}

impl MinibatchObjective for Stage2Objective<'_> {
    fn n_params(&self) -> usize {
        self.c_star.len() + 1
    }

    fn n_samples(&self) -> usize {
        self.gram.len()
    }

    fn batch_loss_grad(&self, params: &[f64], batch: &[usize], grad: &mut [f64]) -> f64 {
        let (d, theta) = self.split(params);
        let full: Vec<f64> = self.c_star.iter().zip(d).map(|(c, d)| c + d).collect();
        let misfit = self.gram.batch_loss_grad(&full, batch, grad);
        misfit + self.penalty(d, theta, Some(grad))
    }

    fn full_loss(&self, params: &[f64]) -> f64 {
        let (d, theta) = self.split(params);
        let full: Vec<f64> = self.c_star.iter().zip(d).map(|(c, d)| c + d).collect();
        self.gram.loss(&full) + self.penalty(d, theta, None)
    }
}

/// Gradient of the stage-two objective over every sample (for verification).
pub fn stage2_objective_grad(
    gram: &GramSet,
    c_star: &[f64],
    cons: &ConstraintFunctional,
    kappa: f64,
    lambda: f64,
    mu: f64,
    params: &[f64],
) -> (f64, Vec<f64>) {
    let obj = Stage2Objective {
        gram,
        c_star,
        cons,
        kappa,
        lambda,
        mu,
    };
    let all: Vec<usize> = (0..gram.len()).collect();
    let mut grad = vec![0.0; params.len()];
    let loss = obj.batch_loss_grad(params, &all, &mut grad);
    (loss, grad)
}

/// Gradient of the stage-one objective in `C` over every sample (for verification).
pub fn stage1_objective_grad(gram: &GramSet, c: &[f64]) -> (f64, Vec<f64>) {
    let obj = Stage1Objective { gram };
    let all: Vec<usize> = (0..gram.len()).collect();
    let mut grad = vec![0.0; c.len()];
    let loss = obj.batch_loss_grad(c, &all, &mut grad);
    (loss, grad)
}

/// Stage one: nonnegative coefficients `C*` and the coercivity constant of their operator.
pub fn stage1_fit(data: &Dataset, cfg: &TrainConfig) -> Result<Stage1Report> {
    cfg.validate()?;
    if cfg.variant == KernelVariant::FractionalScaled {
        return fit_fractional(data, cfg);
    }
    let set = ResponseSet::build(data, cfg.order, cfg.delta)?;
    stage1_from_responses(data, &set, cfg)
}

fn stage1_from_responses(data: &Dataset, set: &ResponseSet, cfg: &TrainConfig) -> Result<Stage1Report> {
    let gram = set.gram();
    let mut init = cfg.rng(STREAM_C_INIT);
    let mut c: Vec<f64> = (0..=cfg.order).map(|_| init.random::<f64>()).collect();
    let mut opt = Adam::new(cfg.adam(), c.len());
    let trace = adam_minimize(
        &Stage1Objective { gram: &gram },
        &mut c,
        &mut opt,
        cfg.stage1_stop(),
        &mut cfg.rng(STREAM_STAGE1),
        |p| p.iter_mut().for_each(|v| *v = v.max(0.0)),
    )?;
    let model = KernelModel::nonnegative(cfg.delta, c.clone())?;
    let kappa = model_kappa(&model, &data.grid)?;
    Ok(Stage1Report {
        final_loss: set.misfit(&c),
        losses: trace.losses,
        c,
        alpha: None,
        kappa,
        termination: if trace.stagnated {
            Termination::Stagnated
        } else {
            Termination::MaxEpochs
        },
    })
}

/// Coercivity constant of a model's operator on the training grid.
pub fn model_kappa(model: &KernelModel, grid: &Grid1D) -> Result<f64> {
    let grid = grid.with_horizon(model.delta())?;
    coercivity_kappa(&Stencil::new(model, grid.h()).assemble(&grid)?)
}

fn rescale_feasible(d: &[f64], n_d: f64, bound: f64) -> (Vec<f64>, bool) {
    if n_d <= bound {
        return (d.to_vec(), false);
    }
    let s = bound / n_d * (1.0 - 1e-9);
    (d.iter().map(|v| v * s).collect(), true)
}

/// Stage two: the augmented Lagrangian loop for the signed correction `D`.
pub fn stage2_fit(data: &Dataset, stage1: &Stage1Report, cfg: &TrainConfig) -> Result<Stage2Report> {
    cfg.validate()?;
    let set = ResponseSet::build(data, cfg.order, cfg.delta)?;
    stage2_from_responses(data, &set, stage1, cfg)
}

fn stage2_from_responses(
    data: &Dataset,
    set: &ResponseSet,
    stage1: &Stage1Report,
    cfg: &TrainConfig,
) -> Result<Stage2Report> {
    if stage1.c.len() != cfg.order + 1 {
        return Err(Error::Shape(format!(
            "stage-one model has {} coefficients, config order needs {}",
            stage1.c.len(),
            cfg.order + 1
        )));
    }
    if !(stage1.kappa > 0.0) {
        return Err(Error::DegenerateKernel {
            lambda_min: 1.0 / stage1.kappa,
        });
    }
    let gram = set.gram();
    let cons = ConstraintFunctional::new(cfg.order, cfg.delta, &data.grid)?;
    let kappa = stage1.kappa;
    let bound = 1.0 / (2.0 * kappa);
    let c_star = &stage1.c;
    let nb = c_star.len();
    let full = |d: &[f64]| -> Vec<f64> { c_star.iter().zip(d).map(|(c, d)| c + d).collect() };

    let mut init = cfg.rng(STREAM_D_INIT);
    let half = 1.0 / (nb as f64).sqrt();
    let mut params: Vec<f64> = (0..nb).map(|_| init.random_range(-half..half)).collect();
    params.push(match cfg.theta_init {
        ThetaInit::One => 1.0,
        ThetaInit::Balanced => (bound - cons.eval(&params)).max(0.0).sqrt(),
    });
    let mut rng = cfg.rng(STREAM_STAGE2);
    let mut opt = Adam::new(cfg.adam_stage2(), nb + 1);

    let (mut lambda, mut mu) = (cfg.lambda0, cfg.mu0);
    let mut h_prev = constraint_h(cons.eval(&params[..nb]), params[nb], kappa);
    let mut best = (set.misfit(c_star), vec![0.0; nb], 0usize, false);
    let mut epoch_losses = Vec::new();
    let mut al_log = Vec::new();
    let mut termination = Termination::StepMax;

    for s in 1..=cfg.step_max {
        let obj = Stage2Objective {
            gram: &gram,
            c_star,
            cons: &cons,
            kappa,
            lambda,
            mu,
        };
        let trace = adam_minimize(&obj, &mut params, &mut opt, cfg.inner_stop(), &mut rng, |_| {})?;
        let epochs = trace.losses.len();
        epoch_losses.extend(trace.losses);
        let d = &params[..nb];
        let theta = params[nb];
        let n_d = cons.eval(d);
        let h = constraint_h(n_d, theta, kappa);
        al_log.push(AlRecord {
            iteration: s,
            epochs,
            misfit: set.misfit(&full(d)),
            h,
            n_d,
            theta,
            mu,
            lambda,
        });

        if cfg.select_best {
            let candidate = if cfg.restore_feasibility {
                Some(rescale_feasible(d, n_d, bound))
            } else {
                (n_d <= bound).then(|| (d.to_vec(), false))
            };
            if let Some((cd, restored)) = candidate {
                let m = set.misfit(&full(&cd));
                if m < best.0 {
                    best = (m, cd, s, restored);
                }
            }
        }

        if h.abs() <= cfg.al_eps {
            termination = Termination::Converged;
            break;
        }
        if h.abs() >= cfg.c * h_prev.abs() {
            mu *= cfg.rho;
            if mu >= cfg.mu_cap {
                termination = Termination::PenaltyCap;
                break;
            }
        } else {
            lambda += mu * h;
        }
        h_prev = h;
    }

    let last_d = params[..nb].to_vec();
    let last_n_d = cons.eval(&last_d);
    let (d, selected_iteration, restored) = if cfg.select_best {
        (best.1, best.2, best.3)
    } else if cfg.restore_feasibility {
        let (d, r) = rescale_feasible(&last_d, last_n_d, bound);
        (d, al_log.len(), r)
    } else {
        (last_d.clone(), al_log.len(), false)
    };
    let n_d = cons.eval(&d);
    Ok(Stage2Report {
        epoch_losses,
        al_log,
        termination,
        bound,
        final_misfit: set.misfit(&full(&d)),
        feasible: n_d <= bound + 1e-6,
        last_n_d,
        last_d,
        d,
        n_d,
        selected_iteration,
        restored,
    })
}

/// Trained model plus its report.
pub struct TrainOutcome {
    pub model: KernelModel,
    pub report: TrainReport,
}

/// Runs stage one and, if `with_stage2`, stage two.
pub fn train(data: &Dataset, cfg: &TrainConfig, with_stage2: bool) -> Result<TrainOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    if cfg.variant == KernelVariant::FractionalScaled {
        let stage1 = fit_fractional(data, cfg)?;
        let model = KernelModel::fractional(cfg.delta, stage1.c.clone(), stage1.alpha.unwrap_or(0.0))?;
        return Ok(TrainOutcome {
            model,
            report: TrainReport {
                config: cfg.clone(),
                stage1,
                stage2: None,
                wall_time_s: start.elapsed().as_secs_f64(),
            },
        });
    }
    let set = ResponseSet::build(data, cfg.order, cfg.delta)?;
    let stage1 = stage1_from_responses(data, &set, cfg)?;
    let stage2 = if with_stage2 {
        Some(stage2_from_responses(data, &set, &stage1, cfg)?)
    } else {
        None
    };
    let d = stage2
        .as_ref()
        .map(|s| s.d.clone())
        .unwrap_or_else(|| vec![0.0; stage1.c.len()]);
    let model = KernelModel::standard(cfg.delta, stage1.c.clone(), d)?;
    Ok(TrainOutcome {
        model,
        report: TrainReport {
            config: cfg.clone(),
            stage1,
            stage2,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    })
}

/// Runs stage two from an existing nonnegative model.
pub fn train_stage2_from(data: &Dataset, base: &KernelModel, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if base.variant() != KernelVariant::Standard || base.c().len() != cfg.order + 1 {
        return Err(Error::arg("stage two needs a standard model of the configured order"));
    }
    let start = Instant::now();
    let set = ResponseSet::build(data, cfg.order, cfg.delta)?;
    let c = base.c().to_vec();
    let stage1 = Stage1Report {
        losses: Vec::new(),
        final_loss: set.misfit(&c),
        kappa: model_kappa(&base.nonnegative_part(), &data.grid)?,
        c,
        alpha: None,
        termination: Termination::MaxEpochs,
    };
    let stage2 = stage2_from_responses(data, &set, &stage1, cfg)?;
    let model = KernelModel::standard(cfg.delta, stage1.c.clone(), stage2.d.clone())?;
    Ok(TrainOutcome {
        model,
        report: TrainReport {
            config: cfg.clone(),
            stage1,
            stage2: Some(stage2),
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    })
}

type SampleTerms = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>);

/// Joint fit of `C ≥ 0` and the singularity exponent `α` for the fractional-scaled kernel.
pub struct FractionalObjective<'a> {
    data: &'a Dataset,
    grid: Grid1D,
    points: EvalPoints,
    q: Option<Vec<f64>>,
    order: usize,
    delta: f64,
    log_r: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl<'a> FractionalObjective<'a> {
    pub fn new(data: &'a Dataset, order: usize, delta: f64) -> Result<Self> {
        let grid = data.grid.with_horizon(delta)?;
        let points = EvalPoints::build(&data.xspec, &grid)?;
        let h = grid.h();
        let steps = horizon_steps(delta, h);
        let r: Vec<f64> = (1..=steps).map(|d| (d as f64 * h).min(delta)).collect();
        let basis = (0..=order)
            .map(|m| r.iter().map(|&r| bernstein_unchecked(m, order, r / delta)).collect())
            .collect();
        Ok(FractionalObjective {
            data,
            q: zero_exterior(&grid),
            grid,
            points,
            order,
            delta,
            log_r: r.iter().map(|r| r.ln()).collect(),
            basis,
        })
    }

    /// Basis responses, their α-derivatives and the sampled forcing for sample `i`.
    fn sample_terms(&self, i: usize, alpha: f64) -> Result<SampleTerms> {
        let h = self.grid.h();
        let mut resp = Vec::with_capacity(self.order + 1);
        let mut dresp = Vec::with_capacity(self.order + 1);
        for b in &self.basis {
            let w: Vec<f64> = b
                .iter()
                .zip(&self.log_r)
                .map(|(b, lr)| b * (-alpha * lr).exp() * h)
                .collect();
            let dw: Vec<f64> = w.iter().zip(&self.log_r).map(|(w, lr)| -lr * w).collect();
            let st = Stencil::from_weights(h, self.delta, w);
            let dst = Stencil::from_weights(h, self.delta, dw);
            let u = self.data.u(i);
            resp.push(self.points.sample(&st.apply(&self.grid, u, self.q.as_deref())?));
            dresp.push(self.points.sample(&dst.apply(&self.grid, u, self.q.as_deref())?));
        }
        Ok((resp, dresp, self.points.sample(self.data.f(i))))
    }

    fn loss_grad(&self, params: &[f64], batch: &[usize], grad: Option<&mut [f64]>) -> Result<f64> {
        let nb = self.order + 1;
        let alpha = params[nb];
        let c: Vec<f64> = params[..nb].iter().map(|v| v.max(0.0)).collect();
        let np = self.points.len() as f64;
        let per: Vec<(f64, Vec<f64>)> = batch
            .par_iter()
            .map(|&i| {
                let (resp, dresp, f) = self.sample_terms(i, alpha)?;
                let mut r: Vec<f64> = f.iter().map(|v| -v).collect();
                for (cm, a) in c.iter().zip(&resp) {
                    r.iter_mut().zip(a).for_each(|(x, y)| *x += cm * y);
                }
                let mut g = vec![0.0; nb + 1];
                for m in 0..nb {
                    g[m] = 2.0 / np * r.iter().zip(&resp[m]).map(|(x, y)| x * y).sum::<f64>();
                    g[nb] += c[m] * 2.0 / np * r.iter().zip(&dresp[m]).map(|(x, y)| x * y).sum::<f64>();
                }
                Ok((r.iter().map(|v| v * v).sum::<f64>() / np, g))
            })
            .collect::<Result<_>>()?;
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let mut total = vec![0.0; nb + 1];
        for (l, g) in per {
            loss += l;
            total.iter_mut().zip(&g).for_each(|(t, v)| *t += v);
        }
        if let Some(grad) = grad {
            for (k, (gk, t)) in grad.iter_mut().zip(&total).enumerate() {
                *gk = t * scale;
                if k < nb && params[k] < 0.0 {
                    *gk = 0.0;
                }
            }
        }
        Ok(loss * scale)
    }

    /// Loss and gradient over every sample (for verification).
    pub fn full_loss_grad(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let all: Vec<usize> = (0..self.data.len()).collect();
        let mut g = vec![0.0; params.len()];
        let l = self.loss_grad(params, &all, Some(&mut g))?;
        Ok((l, g))
    }
}

impl MinibatchObjective for FractionalObjective<'_> {
    fn n_params(&self) -> usize {
        self.order + 2
    }

    fn n_samples(&self) -> usize {
        self.data.len()
    }

    fn batch_loss_grad(&self, params: &[f64], batch: &[usize], grad: &mut [f64]) -> f64 {
        self.loss_grad(params, batch, Some(grad)).unwrap_or(f64::NAN)
    }

    fn full_loss(&self, params: &[f64]) -> f64 {
        let all: Vec<usize> = (0..self.data.len()).collect();
        self.loss_grad(params, &all, None).unwrap_or(f64::NAN)
    }
}

/// Stage one only, for the fractional-scaled kernel: `α` starts at 0.
pub fn fit_fractional(data: &Dataset, cfg: &TrainConfig) -> Result<Stage1Report> {
    cfg.validate()?;
    let obj = FractionalObjective::new(data, cfg.order, cfg.delta)?;
    let mut init = cfg.rng(STREAM_C_INIT);
    let mut params: Vec<f64> = (0..=cfg.order).map(|_| init.random::<f64>()).collect();
    params.push(0.0);
    let nb = cfg.order + 1;
    let mut opt = Adam::new(cfg.adam(), nb + 1);
    let trace = adam_minimize(
        &obj,
        &mut params,
        &mut opt,
        cfg.stage1_stop(),
        &mut cfg.rng(STREAM_STAGE1),
        |p| {
            for v in &mut p[..nb] {
                *v = v.max(0.0);
            }
            p[nb] = p[nb].clamp(0.0, ALPHA_MAX);
        },
    )?;
    let alpha = params[nb];
    let c = params[..nb].to_vec();
    let model = KernelModel::fractional(cfg.delta, c.clone(), alpha)?;
    let kappa = model_kappa(&model, &data.grid)?;
    Ok(Stage1Report {
        final_loss: *trace.losses.last().unwrap_or(&f64::NAN),
        losses: trace.losses,
        c,
        alpha: Some(alpha),
        kappa,
        termination: if trace.stagnated {
            Termination::Stagnated
        } else {
            Termination::MaxEpochs
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, Corpus, GeneratorSpec, ReferenceKernel, Synthesis};

    fn manufactured(coefficients: Vec<f64>, n: usize) -> Dataset {
        let spec = GeneratorSpec::Manufactured {
            kernel: ReferenceKernel::Bernstein { coefficients },
            delta: 0.5,
            corpus: Corpus::Mixed,
            synthesis: Synthesis::Grid,
            intervals: 40,
        };
        generate(&spec, n, 7).unwrap()
    }

    fn fd_check(f: impl Fn(&[f64]) -> f64, x: &[f64], g: &[f64], tol: f64) {
        for k in 0..x.len() {
            let step = 1e-6 * x[k].abs().max(1.0);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += step;
            xm[k] -= step;
            let fd = (f(&xp) - f(&xm)) / (2.0 * step);
            let scale = fd.abs().max(g[k].abs()).max(1e-8);
            assert!(
                (fd - g[k]).abs() / scale < tol,
                "param {k}: fd {fd} vs analytic {}",
                g[k]
            );
        }
    }

    #[test]
    fn stage1_gradient_matches_finite_differences() {
        let data = manufactured(vec![1.0, 0.5, 2.0], 12);
        let gram = ResponseSet::build(&data, 3, 0.5).unwrap().gram();
        let c = [0.3, 1.2, 0.7, 0.1];
        let (_, g) = stage1_objective_grad(&gram, &c);
        fd_check(|c| stage1_objective_grad(&gram, c).0, &c, &g, 1e-5);
    }

    #[test]
    fn stage2_gradient_matches_finite_differences() {
        let data = manufactured(vec![1.0, 0.5, 2.0], 12);
        let gram = ResponseSet::build(&data, 2, 0.5).unwrap().gram();
        let cons = ConstraintFunctional::new(2, 0.5, &data.grid).unwrap();
        let c_star = [0.8, 0.4, 1.5];
        // Keep every constraint term away from its kinks.
        let params = [0.31, -0.27, 0.45, 0.9];
        let obj = |p: &[f64]| stage2_objective_grad(&gram, &c_star, &cons, 0.05, 0.7, 3.0, p).0;
        let (_, g) = stage2_objective_grad(&gram, &c_star, &cons, 0.05, 0.7, 3.0, &params);
        fd_check(obj, &params, &g, 1e-4);
    }

    #[test]
    fn fractional_gradient_matches_finite_differences() {
        let spec = GeneratorSpec::Fractional {
            s: 0.5,
            period: 4.0,
            intervals: 40,
        };
        let data = generate(&spec, 4, 3).unwrap();
        let obj = FractionalObjective::new(&data, 1, 0.4).unwrap();
        let params = [0.6, 0.3, 1.1];
        let (_, g) = obj.full_loss_grad(&params).unwrap();
        fd_check(|p| obj.full_loss_grad(p).unwrap().0, &params, &g, 1e-5);
    }

    #[test]
    fn stage1_recovers_nonnegative_reference() {
        let truth = [1.0, 0.5, 2.0];
        let data = manufactured(truth.to_vec(), 60);
        let mut cfg = TrainConfig::new(2, 0.5);
        cfg.lr = 5e-2;
        cfg.batch_size = 20;
        cfg.stage1_max_epochs = 2000;
        cfg.stagnation_tol = 1e-6;
        let rep = stage1_fit(&data, &cfg).unwrap();
        for (c, t) in rep.c.iter().zip(truth) {
            assert!((c - t).abs() < 2e-2 * t.max(1.0), "{:?}", rep.c);
        }
        assert!(rep.kappa > 0.0);
    }

    #[test]
    fn stage2_result_is_coercive() {
        let data = manufactured(vec![2.0, -1.0, 2.0], 40);
        let mut cfg = TrainConfig::new(2, 0.5);
        cfg.lr = 2e-2;
        cfg.batch_size = 20;
        cfg.stage1_max_epochs = 200;
        cfg.step_max = 10;
        let out = train(&data, &cfg, true).unwrap();
        let s2 = out.report.stage2.as_ref().unwrap();
        assert!(s2.feasible);
        assert!(s2.final_misfit <= out.report.stage1.final_loss * (1.0 + 1e-12));
        assert!(model_kappa(&out.model, &data.grid).is_ok());
        let table = out.report.loss_table();
        assert_eq!(table.rows.len(), out.report.stage1.losses.len() + s2.epoch_losses.len());
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg: TrainConfig = serde_json::from_str(r#"{"delta": 0.5}"#).unwrap();
        assert_eq!(cfg, TrainConfig::new(20, 0.5));
        assert!(serde_json::from_str::<TrainConfig>(r#"{"delta": 0.5, "bogus": 1}"#).is_err());
        let mut bad = cfg.clone();
        bad.c = 1.5;
        assert!(bad.validate().is_err());
    }
}
