use rayon::prelude::*;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::kernelspec::{bernstein_unchecked, KernelModel};
use crate::nlops::{EvalPoints, Grid1D, Stencil};

/// Root-mean-square of `values`.
pub fn xnorm(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::arg("X-norm of an empty point set"));
    }
    Ok((values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt())
}

/// Zero exterior data sized for `grid`.
pub(crate) fn zero_exterior(grid: &Grid1D) -> Option<Vec<f64>> {
    (!grid.is_periodic()).then(|| vec![0.0; 2 * grid.collar()])
}

/// Stencil of basis function `m` of a standard model (unit coefficient).
pub(crate) fn basis_stencil(m: usize, order: usize, delta: f64, h: f64) -> Stencil {
    let scale = delta.powi(3);
    Stencil::from_fn(h, delta, |r| bernstein_unchecked(m, order, r / delta) / scale)
}

/// Per-sample basis responses sampled on the point set, plus sampled forcings.
///
/// The residual of sample `i` at coefficients `θ` is `Σ_m θ_m r_{i,m} − F_i`.
#[derive(Debug, Clone)]
pub struct ResponseSet {
    pub n_basis: usize,
    pub n_points: usize,
    /// `responses[i][m * n_points + k]`.
    pub responses: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl ResponseSet {
    pub fn build(data: &Dataset, order: usize, delta: f64) -> Result<Self> {
        let grid = data.grid.with_horizon(delta)?;
        let points = EvalPoints::build(&data.xspec, &grid)?;
        let stencils: Vec<Stencil> = (0..=order).map(|m| basis_stencil(m, order, delta, grid.h())).collect();
        let q = zero_exterior(&grid);
        let n_points = points.len();
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..data.len())
            .into_par_iter()
            .map(|i| {
                let mut resp = Vec::with_capacity((order + 1) * n_points);
                for st in &stencils {
                    let au = st.apply(&grid, data.u(i), q.as_deref())?;
                    resp.extend(points.sample(&au));
                }
                Ok((resp, points.sample(data.f(i))))
            })
            .collect::<Result<_>>()?;
        let (responses, targets) = rows.into_iter().unzip();
        Ok(ResponseSet {
            n_basis: order + 1,
            n_points,
            responses,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn residual(&self, i: usize, theta: &[f64]) -> Vec<f64> {
        let p = self.n_points;
        let mut r: Vec<f64> = self.targets[i].iter().map(|f| -f).collect();
        for (m, &t) in theta.iter().enumerate() {
            if t != 0.0 {
                let resp = &self.responses[i][m * p..(m + 1) * p];
                r.iter_mut().zip(resp).for_each(|(a, b)| *a += t * b);
            }
        }
        r
    }

    /// `(1/N) Σ_i ‖residual_i‖²_X`, evaluated from residuals directly.
    pub fn misfit(&self, theta: &[f64]) -> f64 {
        let total: f64 = (0..self.len())
            .map(|i| {
                let r = self.residual(i, theta);
                r.iter().map(|v| v * v).sum::<f64>() / self.n_points as f64
            })
            .sum();
        total / self.len().max(1) as f64
    }

    pub fn gram(&self) -> GramSet {
        let nb = self.n_basis;
        let p = self.n_points;
        let inv = 1.0 / p as f64;
        let per: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let resp = &self.responses[i];
                let f = &self.targets[i];
                let mut q = vec![0.0; nb * nb];
                let mut b = vec![0.0; nb];
                for m in 0..nb {
                    let rm = &resp[m * p..(m + 1) * p];
                    b[m] = inv * rm.iter().zip(f).map(|(x, y)| x * y).sum::<f64>();
                    for l in m..nb {
                        let rl = &resp[l * p..(l + 1) * p];
                        let v = inv * rm.iter().zip(rl).map(|(x, y)| x * y).sum::<f64>();
                        q[m * nb + l] = v;
                        q[l * nb + m] = v;
                    }
                }
                (q, b, inv * f.iter().map(|v| v * v).sum::<f64>())
            })
            .collect();
        let mut gram = GramSet {
            n_basis: nb,
            q: Vec::with_capacity(per.len()),
            b: Vec::with_capacity(per.len()),
            s: Vec::with_capacity(per.len()),
        };
        for (q, b, s) in per {
            gram.q.push(q);
            gram.b.push(b);
            gram.s.push(s);
        }
        gram
    }
}

/// Per-sample quadratic forms: `loss_i(θ) = θᵀQ_iθ − 2b_iᵀθ + s_i`.
#[derive(Debug, Clone)]
pub struct GramSet {
    pub n_basis: usize,
    pub q: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub s: Vec<f64>,
}

impl GramSet {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Average loss over `batch`; adds the average gradient in θ to `grad`.
    pub fn batch_loss_grad(&self, theta: &[f64], batch: &[usize], grad: &mut [f64]) -> f64 {
        let nb = self.n_basis;
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for &i in batch {
            let q = &self.q[i];
            let b = &self.b[i];
            let mut quad = 0.0;
            for m in 0..nb {
                let qt: f64 = (0..nb).map(|l| q[m * nb + l] * theta[l]).sum();
                quad += theta[m] * qt;
                grad[m] += scale * 2.0 * (qt - b[m]);
            }
            let lin: f64 = b.iter().zip(theta).map(|(x, y)| x * y).sum();
            loss += quad - 2.0 * lin + self.s[i];
        }
        loss * scale
    }

    pub fn loss(&self, theta: &[f64]) -> f64 {
        let all: Vec<usize> = (0..self.len()).collect();
        let mut scratch = vec![0.0; self.n_basis];
        self.batch_loss_grad(theta, &all, &mut scratch).max(0.0)
    }
}

/// Stage-one loss `(1/N) Σ ‖L_{ReLU(C)} u_i − f_i‖²_X` with `D = 0`.
pub fn loss_l1(c: &[f64], delta: f64, data: &Dataset) -> Result<f64> {
    if c.is_empty() {
        return Err(Error::Shape("coefficient vector is empty".into()));
    }
    let theta: Vec<f64> = c.iter().map(|v| v.max(0.0)).collect();
    let set = ResponseSet::build(data, c.len() - 1, delta)?;
    Ok(set.misfit(&theta))
}

/// Data misfit of a full model on a dataset.
pub fn model_misfit(model: &KernelModel, data: &Dataset) -> Result<f64> {
    let grid = data.grid.with_horizon(model.delta())?;
    let points = EvalPoints::build(&data.xspec, &grid)?;
    let stencil = Stencil::new(model, grid.h());
    let q = zero_exterior(&grid);
    let per: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let au = stencil.apply(&grid, data.u(i), q.as_deref())?;
            let r: Vec<f64> = points
                .sample(&au)
                .iter()
                .zip(points.sample(data.f(i)))
                .map(|(a, b)| a - b)
                .collect();
            Ok(xnorm(&r)?.powi(2))
        })
        .collect::<Result<_>>()?;
    Ok(per.iter().sum::<f64>() / data.len().max(1) as f64)
}
