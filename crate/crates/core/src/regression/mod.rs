//! Two-stage regression of kernel coefficients from solution/forcing pairs.

mod adam;
mod constraint;
mod eval;
mod loss;
mod train;

pub use adam::{adam_minimize, Adam, AdamConfig, AdamTrace, MinibatchObjective, StopRule};
pub use constraint::{constraint_h, ConstraintFunctional, L1_PANELS};
pub use eval::{evaluate, relative_solution_errors, EvalReport};
pub use loss::{loss_l1, model_misfit, xnorm, GramSet, ResponseSet};
pub use train::{
    fit_fractional, model_kappa, stage1_fit, stage1_objective_grad, stage2_fit, stage2_objective_grad, train,
    train_stage2_from, AlRecord, FractionalObjective, Stage1Report, Stage2Report, Termination, ThetaInit, TrainConfig,
    TrainOutcome, TrainReport, ALPHA_MAX,
};
