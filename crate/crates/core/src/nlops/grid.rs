use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Guards `floor(δ/h)` against round-off when δ is an exact multiple of h.
const HORIZON_SLACK: f64 = 1e-9;

/// Number of lattice offsets `d ≥ 1` with `d·h ≤ δ`.
pub fn horizon_steps(delta: f64, h: f64) -> usize {
    (delta / h + HORIZON_SLACK).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Boundary {
    Periodic,
    /// Values are prescribed on a collar of width `delta` on both sides.
    DirichletVolume {
        delta: f64,
    },
}

/// Uniform 1D grid on `[a, b]` with `n` intervals.
///
/// Periodic grids own the `n` nodes `a + j·h`, `j < n`. Dirichlet grids own the
/// `n − 1` interior nodes; the endpoints and the collar beyond them are exterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub bc: Boundary,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, n: usize, bc: Boundary) -> Result<Self> {
        let grid = Grid1D { a, b, n, bc };
        grid.validate()?;
        Ok(grid)
    }

    pub fn periodic(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(a, b, n, Boundary::Periodic)
    }

    pub fn dirichlet(a: f64, b: f64, n: usize, delta: f64) -> Result<Self> {
        Self::new(a, b, n, Boundary::DirichletVolume { delta })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.b > self.a) {
            return Err(Error::arg(format!("invalid domain [{}, {}]", self.a, self.b)));
        }
        if self.n < 2 {
            return Err(Error::arg(format!("grid needs at least 2 intervals, got {}", self.n)));
        }
        if let Boundary::DirichletVolume { delta } = self.bc {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(Error::arg(format!("collar width must be positive, got {delta}")));
            }
            if horizon_steps(delta, self.h()) == 0 {
                return Err(Error::arg("collar narrower than one grid spacing"));
            }
        }
        Ok(())
    }

    /// The same geometry with the exterior collar resized to `delta` (periodic grids are unchanged).
    pub fn with_horizon(&self, delta: f64) -> Result<Grid1D> {
        match self.bc {
            Boundary::Periodic => Ok(*self),
            Boundary::DirichletVolume { .. } => Grid1D::dirichlet(self.a, self.b, self.n, delta),
        }
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn period(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.bc, Boundary::Periodic)
    }

    /// Number of unknowns.
    pub fn n_free(&self) -> usize {
        match self.bc {
            Boundary::Periodic => self.n,
            Boundary::DirichletVolume { .. } => self.n - 1,
        }
    }

    /// Lattice index (in units of h from `a`) of free node `i`.
    pub fn lattice_index(&self, i: usize) -> i64 {
        match self.bc {
            Boundary::Periodic => i as i64,
            Boundary::DirichletVolume { .. } => i as i64 + 1,
        }
    }

    pub fn free_coords(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n_free())
            .map(|i| self.a + self.lattice_index(i) as f64 * h)
            .collect()
    }

    /// Exterior nodes on each side (0 for periodic grids).
    pub fn collar(&self) -> usize {
        match self.bc {
            Boundary::Periodic => 0,
            Boundary::DirichletVolume { delta } => horizon_steps(delta, self.h()),
        }
    }

    /// Exterior node coordinates: the left collar ascending, then the right collar ascending.
    pub fn exterior_coords(&self) -> Vec<f64> {
        let h = self.h();
        let j = self.collar() as i64;
        let left = (1 - j..=0).map(|k| self.a + k as f64 * h);
        let right = (self.n as i64..self.n as i64 + j).map(|k| self.a + k as f64 * h);
        left.chain(right).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_nodes() {
        let g = Grid1D::periodic(0.0, 1.0, 100).unwrap();
        assert_eq!(g.n_free(), 100);
        assert!((g.h() - 0.01).abs() < 1e-15);
        assert_eq!(g.free_coords()[0], 0.0);
        assert_eq!(g.collar(), 0);
    }

    #[test]
    fn dirichlet_layout() {
        let g = Grid1D::dirichlet(-1.0, 1.0, 100, 0.1).unwrap();
        assert_eq!(g.n_free(), 99);
        assert_eq!(g.collar(), 5);
        let x = g.free_coords();
        assert!((x[0] + 0.98).abs() < 1e-12 && (x[98] - 0.98).abs() < 1e-12);
        let ext = g.exterior_coords();
        assert_eq!(ext.len(), 10);
        assert!((ext[0] + 1.08).abs() < 1e-12);
        assert!((ext[4] + 1.0).abs() < 1e-12);
        assert!((ext[5] - 1.0).abs() < 1e-12);
        assert!((ext[9] - 1.08).abs() < 1e-12);
    }

    #[test]
    fn horizon_steps_tolerates_roundoff() {
        assert_eq!(horizon_steps(0.3, 0.1), 3);
        assert_eq!(horizon_steps(2.0, 0.02), 100);
        assert_eq!(horizon_steps(0.125, 0.02), 6);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid1D::periodic(1.0, 0.0, 10).is_err());
        assert!(Grid1D::periodic(0.0, 1.0, 1).is_err());
        assert!(Grid1D::dirichlet(0.0, 1.0, 10, 0.05).is_err());
    }
}
