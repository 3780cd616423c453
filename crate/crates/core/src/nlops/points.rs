use serde::{Deserialize, Serialize};

use super::grid::Grid1D;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interp {
    Linear,
    /// Value of the cell (node) containing the point.
    Constant,
}

/// Description of the point set on which residual norms are measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum XSpec {
    /// The free nodes themselves.
    Nodes,
    /// `count` equispaced points from `lo` to `hi` inclusive.
    Uniform {
        lo: f64,
        hi: f64,
        count: usize,
        interp: Interp,
    },
}

/// Points expressed as interpolation stencils over free-node values.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoints {
    coords: Vec<f64>,
    stencils: Vec<(usize, usize, f64)>,
}

impl EvalPoints {
    pub fn build(spec: &XSpec, grid: &Grid1D) -> Result<Self> {
        match *spec {
            XSpec::Nodes => {
                let coords = grid.free_coords();
                let stencils = (0..coords.len()).map(|i| (i, i, 0.0)).collect();
                Ok(EvalPoints { coords, stencils })
            }
            XSpec::Uniform { lo, hi, count, interp } => {
                if count == 0 {
                    return Err(Error::arg("point set must be nonempty"));
                }
                if !(hi >= lo) {
                    return Err(Error::arg(format!("invalid point range [{lo}, {hi}]")));
                }
                let step = if count > 1 { (hi - lo) / (count - 1) as f64 } else { 0.0 };
                let coords: Vec<f64> = (0..count).map(|k| lo + k as f64 * step).collect();
                let stencils = coords.iter().map(|&x| locate(grid, x, interp)).collect::<Result<_>>()?;
                Ok(EvalPoints { coords, stencils })
            }
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn stencils(&self) -> &[(usize, usize, f64)] {
        &self.stencils
    }

    /// Values of the interpolant of free-node data `u` at the points.
    pub fn sample(&self, u: &[f64]) -> Vec<f64> {
        self.stencils
            .iter()
            .map(|&(i0, i1, t)| (1.0 - t) * u[i0] + t * u[i1])
            .collect()
    }
}

fn locate(grid: &Grid1D, x: f64, interp: Interp) -> Result<(usize, usize, f64)> {
    let h = grid.h();
    let mut p = (x - grid.a) / h;
    if interp == Interp::Constant {
        // Node j owns the cell [x_j − h/2, x_j + h/2).
        p = (p + 0.5 + 1e-9).floor();
    }
    let base = p.floor();
    let mut t = p - base;
    if t < 1e-12 {
        t = 0.0;
    }
    let base = base as i64;
    if grid.is_periodic() {
        let n = grid.n as i64;
        let i0 = base.rem_euclid(n) as usize;
        let i1 = (base + 1).rem_euclid(n) as usize;
        return Ok((i0, i1, t));
    }
    // Dirichlet: free node k sits at lattice index k + 1.
    let last = grid.n as i64 - 1;
    let inside = |j: i64| (1..=last).contains(&j);
    if !inside(base) || (t > 0.0 && !inside(base + 1)) {
        return Err(Error::arg(format!(
            "evaluation point {x} lies outside the free nodes of [{}, {}]",
            grid.a, grid.b
        )));
    }
    let i0 = (base - 1) as usize;
    let i1 = if t > 0.0 { i0 + 1 } else { i0 };
    Ok((i0, i1, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_closed_set_wraps() {
        let g = Grid1D::periodic(0.0, 1.0, 100).unwrap();
        let spec = XSpec::Uniform {
            lo: 0.0,
            hi: 1.0,
            count: 101,
            interp: Interp::Linear,
        };
        let x = EvalPoints::build(&spec, &g).unwrap();
        assert_eq!(x.len(), 101);
        let u: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let s = x.sample(&u);
        assert_eq!(s[0], 0.0);
        assert!((s[37] - 37.0).abs() < 1e-9);
        assert_eq!(s[100], 0.0);
    }

    #[test]
    fn piecewise_constant_cells() {
        let g = Grid1D::periodic(0.1, 10.1, 50).unwrap();
        let spec = XSpec::Uniform {
            lo: 0.0,
            hi: 9.98,
            count: 500,
            interp: Interp::Constant,
        };
        let x = EvalPoints::build(&spec, &g).unwrap();
        let u: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let s = x.sample(&u);
        for (k, v) in s.iter().enumerate() {
            assert_eq!(*v, (k / 10) as f64, "point {k}");
        }
    }

    #[test]
    fn dirichlet_linear_interpolation() {
        let g = Grid1D::dirichlet(-1.0, 1.0, 100, 2.0).unwrap();
        let spec = XSpec::Uniform {
            lo: -0.8,
            hi: 0.8,
            count: 161,
            interp: Interp::Linear,
        };
        let x = EvalPoints::build(&spec, &g).unwrap();
        let coords = g.free_coords();
        let s = x.sample(&coords);
        for (a, b) in s.iter().zip(x.coords()) {
            assert!((a - b).abs() < 1e-12);
        }
        let outside = XSpec::Uniform {
            lo: -0.99,
            hi: 0.0,
            count: 3,
            interp: Interp::Linear,
        };
        assert!(EvalPoints::build(&outside, &g).is_err());
    }
}
