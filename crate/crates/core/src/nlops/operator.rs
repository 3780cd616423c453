use nalgebra::DMatrix;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::grid::{horizon_steps, Boundary, Grid1D};
use crate::error::{Error, Result};
use crate::kernelspec::RadialKernel;

/// One-point quadrature weights `w_d = K(d·h)·h` for lattice offsets `d = 1..=J`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    h: f64,
    delta: f64,
    weights: Vec<f64>,
}

impl Stencil {
    pub fn new<K: RadialKernel + ?Sized>(kernel: &K, h: f64) -> Self {
        Self::from_fn(h, kernel.horizon(), |r| kernel.radial(r))
    }

    /// Builds weights from a radial profile; `f` is only called on `(0, δ]`.
    pub fn from_fn(h: f64, delta: f64, f: impl Fn(f64) -> f64) -> Self {
        let steps = horizon_steps(delta, h);
        let weights = (1..=steps).map(|d| f((d as f64 * h).min(delta)) * h).collect();
        Stencil { h, delta, weights }
    }

    pub fn from_weights(h: f64, delta: f64, weights: Vec<f64>) -> Self {
        Stencil { h, delta, weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn steps(&self) -> usize {
        self.weights.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Checks that the stencil fits the grid and returns the exterior length.
    fn check(&self, grid: &Grid1D) -> Result<usize> {
        grid.validate()?;
        if (self.h - grid.h()).abs() > 1e-12 * grid.h() {
            return Err(Error::Shape(format!(
                "stencil spacing {} does not match grid spacing {}",
                self.h,
                grid.h()
            )));
        }
        match grid.bc {
            Boundary::Periodic => {
                if self.delta >= grid.period() {
                    return Err(Error::HorizonTooLarge {
                        delta: self.delta,
                        period: grid.period(),
                    });
                }
                Ok(0)
            }
            Boundary::DirichletVolume { delta } => {
                if self.steps() > grid.collar() {
                    return Err(Error::arg(format!(
                        "kernel horizon {} exceeds the collar width {delta}",
                        self.delta
                    )));
                }
                Ok(2 * grid.collar())
            }
        }
    }

    /// `(Au)_i = Σ_d w_d (2u_i − u_{i+d} − u_{i−d})` with exterior values from `q`.
    pub fn apply(&self, grid: &Grid1D, u: &[f64], q: Option<&[f64]>) -> Result<Vec<f64>> {
        let n_ext = self.check(grid)?;
        let nf = grid.n_free();
        if u.len() != nf {
            return Err(Error::Shape(format!(
                "u has {} entries, grid has {nf} free nodes",
                u.len()
            )));
        }
        let q = if grid.is_periodic() {
            &[][..]
        } else {
            match q {
                Some(q) if q.len() == n_ext => q,
                Some(q) => {
                    return Err(Error::Shape(format!(
                        "exterior data has {} entries, expected {n_ext}",
                        q.len()
                    )))
                }
                None => return Err(Error::arg("exterior data q is required for volume constraints")),
            }
        };
        let mut out = vec![0.0; nf];
        out.par_iter_mut()
            .enumerate()
            .for_each(|(i, slot)| *slot = self.row_apply(grid, i, u, q));
        Ok(out)
    }

    fn row_apply(&self, grid: &Grid1D, i: usize, u: &[f64], q: &[f64]) -> f64 {
        let ui = u[i];
        let mut acc = 0.0;
        match grid.bc {
            Boundary::Periodic => {
                let n = grid.n;
                for (k, &w) in self.weights.iter().enumerate() {
                    let d = (k + 1) % n;
                    let right = u[(i + d) % n];
                    let left = u[(i + n - d) % n];
                    acc += w * (2.0 * ui - right - left);
                }
            }
            Boundary::DirichletVolume { .. } => {
                let value = |j: i64| dirichlet_value(grid, j, u, q);
                let li = grid.lattice_index(i);
                for (k, &w) in self.weights.iter().enumerate() {
                    let d = k as i64 + 1;
                    acc += w * (2.0 * ui - value(li + d) - value(li - d));
                }
            }
        }
        acc
    }

    /// Contribution of exterior data to `A u` with `u = 0` on free nodes.
    pub fn exterior_coupling(&self, grid: &Grid1D, q: &[f64]) -> Result<Vec<f64>> {
        let zero = vec![0.0; grid.n_free()];
        if grid.is_periodic() {
            return Ok(zero);
        }
        self.apply(grid, &zero, Some(q))
    }

    /// Dense matrix of the operator on free nodes, homogeneous exterior.
    pub fn assemble(&self, grid: &Grid1D) -> Result<OperatorMatrix> {
        self.check(grid)?;
        let nf = grid.n_free();
        let mut rows = vec![0.0; nf * nf];
        rows.par_chunks_mut(nf).enumerate().for_each(|(i, row)| match grid.bc {
            Boundary::Periodic => {
                let n = grid.n;
                for (k, &w) in self.weights.iter().enumerate() {
                    let d = (k + 1) % n;
                    row[i] += 2.0 * w;
                    row[(i + d) % n] -= w;
                    row[(i + n - d) % n] -= w;
                }
            }
            Boundary::DirichletVolume { .. } => {
                let li = grid.lattice_index(i);
                for (k, &w) in self.weights.iter().enumerate() {
                    let d = k as i64 + 1;
                    row[i] += 2.0 * w;
                    for j in [li + d, li - d] {
                        if let Some(col) = free_slot(grid, j) {
                            row[col] -= w;
                        }
                    }
                }
            }
        });
        let matrix = DMatrix::from_row_slice(nf, nf, &rows);
        Ok(OperatorMatrix {
            matrix,
            h: grid.h(),
            bc: grid.bc,
            fingerprint: self.fingerprint(grid),
        })
    }

    fn fingerprint(&self, grid: &Grid1D) -> String {
        let mut hasher = Sha256::new();
        for v in [grid.a, grid.b, self.h, self.delta] {
            hasher.update(v.to_le_bytes());
        }
        hasher.update((grid.n as u64).to_le_bytes());
        hasher.update([grid.is_periodic() as u8]);
        for w in &self.weights {
            hasher.update(w.to_le_bytes());
        }
        hex::encode(&hasher.finalize()[..8])
    }
}

/// Free-node slot of lattice index `j`, if it is a free node.
fn free_slot(grid: &Grid1D, j: i64) -> Option<usize> {
    (1..grid.n as i64).contains(&j).then(|| (j - 1) as usize)
}

fn dirichlet_value(grid: &Grid1D, j: i64, u: &[f64], q: &[f64]) -> f64 {
    if let Some(slot) = free_slot(grid, j) {
        return u[slot];
    }
    let collar = grid.collar() as i64;
    if j <= 0 {
        q[(j + collar - 1) as usize]
    } else {
        q[(collar + j - grid.n as i64) as usize]
    }
}

/// Dense operator on free nodes together with its lumped mass `h`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    matrix: DMatrix<f64>,
    h: f64,
    bc: Boundary,
    fingerprint: String,
}

impl OperatorMatrix {
    /// Wraps an arbitrary symmetric matrix (used for synthetic checks).
    pub fn from_dense(matrix: DMatrix<f64>, h: f64, bc: Boundary) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape("operator matrix must be square".into()));
        }
        Ok(OperatorMatrix {
            matrix,
            h,
            bc,
            fingerprint: "dense".into(),
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn mass(&self) -> f64 {
        self.h
    }

    pub fn boundary(&self) -> Boundary {
        self.bc
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn mul(&self, u: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * u[j]).sum())
            .collect()
    }

    /// Largest absolute row sum, an upper bound on every eigenvalue magnitude.
    pub fn gershgorin_bound(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Matrix on which solves and eigen-solves act: periodic operators get the
    /// constant mode shifted above the rest of the spectrum.
    pub fn admissible_matrix(&self) -> DMatrix<f64> {
        match self.bc {
            Boundary::Periodic => {
                let n = self.dim();
                let sigma = 2.0 * self.gershgorin_bound().max(f64::MIN_POSITIVE) + 1.0;
                self.matrix.map(|v| v + sigma / n as f64)
            }
            Boundary::DirichletVolume { .. } => self.matrix.clone(),
        }
    }

    /// Smallest eigenvalue over the admissible subspace.
    pub fn lambda_min(&self) -> f64 {
        super::eigen::smallest_eigenvalue(&self.admissible_matrix())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelspec::ManufacturedKernel;

    #[test]
    fn constants_are_annihilated_periodic() {
        let g = Grid1D::periodic(0.0, 1.0, 100).unwrap();
        let k = ManufacturedKernel::cosine(0.5).unwrap();
        let st = Stencil::new(&k, g.h());
        let out = st.apply(&g, &vec![1.0; 100], None).unwrap();
        let scale: f64 = st.weights().iter().map(|w| w.abs()).sum();
        assert!(out.iter().all(|v| v.abs() < 1e-12 * scale));
    }

    #[test]
    fn missing_exterior_data_is_an_error() {
        let g = Grid1D::dirichlet(0.0, 1.0, 10, 0.2).unwrap();
        let k = ManufacturedKernel::linear_ramp(0.2).unwrap();
        let st = Stencil::new(&k, g.h());
        assert!(st.apply(&g, &[0.0; 9], None).is_err());
        assert!(st.apply(&g, &[0.0; 9], Some(&[0.0; 3])).is_err());
        assert!(st.apply(&g, &[0.0; 9], Some(&[0.0; 4])).is_ok());
    }

    #[test]
    fn horizon_larger_than_period_is_rejected() {
        let g = Grid1D::periodic(0.0, 1.0, 10).unwrap();
        let k = ManufacturedKernel::linear_ramp(1.0).unwrap();
        let st = Stencil::new(&k, g.h());
        assert!(matches!(
            st.apply(&g, &[0.0; 10], None),
            Err(Error::HorizonTooLarge { .. })
        ));
    }

    #[test]
    fn stencil_spans_exact_horizon() {
        let k = ManufacturedKernel::linear_ramp(0.3).unwrap();
        let st = Stencil::new(&k, 0.1);
        assert_eq!(st.steps(), 3);
        // Full weight at distance exactly δ.
        assert!((st.weights()[2] - 4.0 / 0.027 * 0.1).abs() < 1e-9);
    }
}
