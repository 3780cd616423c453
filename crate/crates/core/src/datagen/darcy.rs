use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic two-phase layered medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Microstructure {
    pub omega: f64,
    /// Width of one homogeneous layer; a full period is `2L`.
    pub l: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub elems_per_sub: usize,
}

impl Default for Microstructure {
    fn default() -> Self {
        Microstructure {
            omega: 10.0,
            l: 0.1,
            kappa1: 1.0,
            kappa2: 4.0,
            elems_per_sub: 16,
        }
    }
}

impl Microstructure {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa1 > 0.0 && self.kappa2 > 0.0) {
            return Err(Error::arg("diffusivities must be positive"));
        }
        if !(self.l > 0.0 && self.omega > 0.0) || self.elems_per_sub == 0 {
            return Err(Error::arg("invalid microstructure geometry"));
        }
        self.periods()?;
        Ok(())
    }

    /// Number of `2L` periods in the domain.
    pub fn periods(&self) -> Result<usize> {
        let p = self.omega / (2.0 * self.l);
        let r = p.round();
        if r < 1.0 || (p - r).abs() > 1e-9 * p {
            return Err(Error::arg(format!(
                "domain length {} is not a multiple of 2L = {}",
                self.omega,
                2.0 * self.l
            )));
        }
        Ok(r as usize)
    }

    pub fn elements(&self) -> usize {
        2 * self.periods().unwrap_or(0) * self.elems_per_sub
    }

    pub fn element_width(&self) -> f64 {
        self.omega / self.elements() as f64
    }

    pub fn element_kappa(&self, e: usize) -> f64 {
        if (e / self.elems_per_sub).is_multiple_of(2) {
            self.kappa1
        } else {
            self.kappa2
        }
    }

    /// Harmonic mean, the homogenized coefficient of a layered 1D medium.
    pub fn kappa_eff(&self) -> f64 {
        2.0 * self.kappa1 * self.kappa2 / (self.kappa1 + self.kappa2)
    }
}

#[derive(Debug, Clone)]
pub struct FemSolution {
    /// Nodal values at `x_j = j·h_e`, `j < elements`.
    pub u: Vec<f64>,
    /// Consistent load vector.
    pub load: Vec<f64>,
    /// `‖K u − F‖ / ‖F‖` over the full periodic system.
    pub residual: f64,
}

/// Forcing `sin(2πn x/|Ω|)`.
pub fn darcy_forcing(ms: &Microstructure, n: usize) -> impl Fn(f64) -> f64 {
    let w = 2.0 * PI * n as f64 / ms.omega;
    move |x| (w * x).sin()
}

/// P1 solve of `−(κ u′)′ = sin(2πn x/|Ω|)` on the periodic domain, zero-mean solution.
pub fn darcy_fem_solve(ms: &Microstructure, n: usize) -> Result<FemSolution> {
    if n == 0 {
        return Err(Error::Solvability(
            "constant forcing has nonzero mean on a periodic domain".into(),
        ));
    }
    ms.validate()?;
    fem_solve(ms, darcy_forcing(ms, n))
}

fn fem_solve(ms: &Microstructure, f: impl Fn(f64) -> f64) -> Result<FemSolution> {
    let ne = ms.elements();
    let he = ms.element_width();
    let load = load_vector(ne, he, &f);
    let stiff: Vec<f64> = (0..ne).map(|e| ms.element_kappa(e) / he).collect();

    // Pin u_0 = 0; the reduced system on nodes 1..ne is tridiagonal.
    let m = ne - 1;
    let mut diag = vec![0.0; m];
    let mut lower = vec![0.0; m];
    let mut upper = vec![0.0; m];
    for j in 1..ne {
        let r = j - 1;
        diag[r] = stiff[j - 1] + stiff[j];
        if j > 1 {
            lower[r] = -stiff[j - 1];
        }
        if j + 1 < ne {
            upper[r] = -stiff[j];
        }
    }
    let rhs: Vec<f64> = load[1..].to_vec();
    let x = thomas(&lower, &diag, &upper, &rhs);
    let mut u = vec![0.0; ne];
    u[1..].copy_from_slice(&x);
    let mean = u.iter().sum::<f64>() / ne as f64;
    u.iter_mut().for_each(|v| *v -= mean);

    let mut res2 = 0.0;
    for j in 0..ne {
        let prev = (j + ne - 1) % ne;
        let next = (j + 1) % ne;
        let ku = stiff[prev] * (u[j] - u[prev]) + stiff[j] * (u[j] - u[next]);
        res2 += (ku - load[j]).powi(2);
    }
    let fnorm = load.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(FemSolution {
        u,
        residual: res2.sqrt() / fnorm.max(f64::MIN_POSITIVE),
        load,
    })
}

/// `F_j = ∫ f φ_j` with 3-point Gauss quadrature per element.
fn load_vector(ne: usize, he: f64, f: &impl Fn(f64) -> f64) -> Vec<f64> {
    let g = (0.6f64).sqrt();
    let pts = [(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)];
    let mut load = vec![0.0; ne];
    for e in 0..ne {
        let x0 = e as f64 * he;
        for &(xi, w) in &pts {
            let t = 0.5 * (xi + 1.0);
            let fx = f(x0 + t * he) * w * 0.5 * he;
            load[e] += fx * (1.0 - t);
            load[(e + 1) % ne] += fx * t;
        }
    }
    load
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Discrete element fluxes `κ_e (u_{e+1} − u_e)/h_e`.
pub fn element_fluxes(ms: &Microstructure, u: &[f64]) -> Vec<f64> {
    let ne = u.len();
    let he = ms.element_width();
    (0..ne)
        .map(|e| ms.element_kappa(e) * (u[(e + 1) % ne] - u[e]) / he)
        .collect()
}

/// Cell averages of the periodic P1 interpolant of nodal values `u_fine`.
pub fn coarsen(u_fine: &[f64], omega: f64, cell_width: f64) -> Result<Vec<f64>> {
    let ne = u_fine.len();
    let cells_f = omega / cell_width;
    let cells = cells_f.round();
    if cells < 1.0 || (cells_f - cells).abs() > 1e-9 * cells_f {
        return Err(Error::arg(format!(
            "cell width {cell_width} does not tile domain {omega}"
        )));
    }
    let cells = cells as usize;
    if !ne.is_multiple_of(cells) {
        return Err(Error::arg(format!("{ne} fine nodes do not align with {cells} cells")));
    }
    let per = ne / cells;
    Ok((0..cells)
        .map(|c| {
            let s = c * per;
            let mut acc = 0.5 * (u_fine[s] + u_fine[(s + per) % ne]);
            acc += u_fine[s + 1..s + per].iter().sum::<f64>();
            acc / per as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficient_matches_spectral_solution() {
        let ms = Microstructure {
            kappa2: 1.0,
            ..Default::default()
        };
        let sol = darcy_fem_solve(&ms, 1).unwrap();
        let w = 2.0 * PI / 10.0;
        let he = ms.element_width();
        let err = sol
            .u
            .iter()
            .enumerate()
            .map(|(j, u)| (u - (w * j as f64 * he).sin() / (w * w)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3 * (1.0 / (w * w)), "{err}");
        assert!(sol.residual < 1e-10);
    }

    #[test]
    fn discrete_flux_balances_load() {
        let ms = Microstructure::default();
        let sol = darcy_fem_solve(&ms, 3).unwrap();
        let flux = element_fluxes(&ms, &sol.u);
        let ne = flux.len();
        let scale = flux.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for j in (0..ne).filter(|j| j % ms.elems_per_sub == 0) {
            let jump = flux[j] - flux[(j + ne - 1) % ne];
            assert!((jump + sol.load[j]).abs() < 1e-8 * scale, "node {j}");
        }
    }

    #[test]
    fn zero_mode_is_rejected() {
        assert!(matches!(
            darcy_fem_solve(&Microstructure::default(), 0),
            Err(Error::Solvability(_))
        ));
    }

    #[test]
    fn coarsening_examples() {
        assert_eq!(coarsen(&[2.0; 64], 0.4, 0.2).unwrap(), vec![2.0, 2.0]);
        let u: Vec<f64> = (0..64).map(|j| j as f64 * 0.4 / 64.0).collect();
        assert!((coarsen(&u, 0.4, 0.2).unwrap()[0] - 0.1).abs() < 1e-15);
        assert!(coarsen(&u, 0.4, 0.3).is_err());
        assert!(coarsen(&u[..63], 0.4, 0.2).is_err());
    }

    #[test]
    fn coarsening_preserves_mean() {
        let u: Vec<f64> = (0..320).map(|j| ((j * 37 % 101) as f64).sin()).collect();
        let c = coarsen(&u, 2.0, 0.2).unwrap();
        let fine = u.iter().sum::<f64>() / u.len() as f64;
        let coarse = c.iter().sum::<f64>() / c.len() as f64;
        assert!((fine - coarse).abs() < 1e-12);
    }
}
