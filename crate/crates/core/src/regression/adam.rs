use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 5e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 100,
        }
    }
}

/// Adam state for a fixed-size parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(cfg: AdamConfig, n: usize) -> Self {
        Adam {
            cfg,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let AdamConfig {
            lr, beta1, beta2, eps, ..
        } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = beta1 * self.m[k] + (1.0 - beta1) * grad[k];
            self.v[k] = beta2 * self.v[k] + (1.0 - beta2) * grad[k] * grad[k];
            params[k] -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + eps);
        }
    }
}

/// A loss that is an average over samples.
pub trait MinibatchObjective {
    fn n_params(&self) -> usize;

    fn n_samples(&self) -> usize;

    /// Mean loss over `batch`; writes the mean gradient into `grad` (overwritten).
    fn batch_loss_grad(&self, params: &[f64], batch: &[usize], grad: &mut [f64]) -> f64;

    /// Loss over every sample, used for the epoch trace.
    fn full_loss(&self, params: &[f64]) -> f64;
}

/// When to stop an Adam run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    pub max_epochs: usize,
    /// Stop once the loss improves by less than `tol` (relative) over `window` epochs.
    pub window: usize,
    pub tol: f64,
}

impl StopRule {
    pub fn fixed(epochs: usize) -> Self {
        StopRule {
            max_epochs: epochs,
            window: 0,
            tol: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamTrace {
    pub losses: Vec<f64>,
    pub stagnated: bool,
}

/// Minibatch Adam with a projection applied after every step.
pub fn adam_minimize<O: MinibatchObjective + ?Sized>(
    obj: &O,
    params: &mut [f64],
    opt: &mut Adam,
    stop: StopRule,
    rng: &mut impl Rng,
    mut project: impl FnMut(&mut [f64]),
) -> Result<AdamTrace> {
    let n = obj.n_samples();
    if n == 0 {
        return Err(Error::arg("cannot train on an empty dataset"));
    }
    let bs = opt.cfg.batch_size.clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = vec![0.0; obj.n_params()];
    let mut losses = Vec::new();
    for epoch in 0..stop.max_epochs {
        order.shuffle(rng);
        for batch in order.chunks(bs) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = obj.batch_loss_grad(params, batch, &mut grad);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    detail: format!("non-finite minibatch loss {loss} at parameters {params:?}"),
                });
            }
            opt.step(params, &grad);
            project(params);
        }
        let loss = obj.full_loss(params);
        if !loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: format!("non-finite epoch loss at parameters {params:?}"),
            });
        }
        losses.push(loss);
        let e = losses.len() - 1;
        if stop.window > 0 && e >= stop.window {
            let old = losses[e - stop.window];
            if old - loss < stop.tol * old.abs() {
                return Ok(AdamTrace {
                    losses,
                    stagnated: true,
                });
            }
        }
    }
    Ok(AdamTrace {
        losses,
        stagnated: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    struct Shifted;

    impl MinibatchObjective for Shifted {
        fn n_params(&self) -> usize {
            1
        }
        fn n_samples(&self) -> usize {
            1
        }
        fn batch_loss_grad(&self, p: &[f64], _: &[usize], g: &mut [f64]) -> f64 {
            g[0] = 2.0 * (p[0] - 3.0);
            (p[0] - 3.0).powi(2)
        }
        fn full_loss(&self, p: &[f64]) -> f64 {
            (p[0] - 3.0).powi(2)
        }
    }

    #[test]
    fn converges_on_scalar_quadratic() {
        let mut x = [0.0];
        let mut opt = Adam::new(AdamConfig::default(), 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        adam_minimize(&Shifted, &mut x, &mut opt, StopRule::fixed(5000), &mut rng, |_| {}).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-3, "{}", x[0]);
    }

    #[test]
    fn projection_is_applied_every_step() {
        let mut x = [0.5];
        let mut opt = Adam::new(
            AdamConfig {
                lr: 0.1,
                ..Default::default()
            },
            1,
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut seen = Vec::new();
        adam_minimize(&Shifted, &mut x, &mut opt, StopRule::fixed(50), &mut rng, |p| {
            p[0] = p[0].min(1.0);
            seen.push(p[0]);
        })
        .unwrap();
        assert!(seen.iter().all(|v| *v <= 1.0));
        assert_eq!(x[0], 1.0);
    }

    #[test]
    fn nan_loss_is_divergence() {
        struct Bad;
        impl MinibatchObjective for Bad {
            fn n_params(&self) -> usize {
                1
            }
            fn n_samples(&self) -> usize {
                1
            }
            fn batch_loss_grad(&self, _: &[f64], _: &[usize], _: &mut [f64]) -> f64 {
                f64::NAN
            }
            fn full_loss(&self, _: &[f64]) -> f64 {
                f64::NAN
            }
        }
        let mut x = [0.0];
        let mut opt = Adam::new(AdamConfig::default(), 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let err = adam_minimize(&Bad, &mut x, &mut opt, StopRule::fixed(3), &mut rng, |_| {});
        assert!(matches!(err, Err(Error::Divergence { epoch: 0, .. })));
    }
}
