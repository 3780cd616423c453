use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::RadialKernel;
use crate::error::{Error, Result};

/// Amplitude of the sign-changing cosine reference kernel.
pub const COSINE_AMPLITUDE: f64 = 21.4615;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManufacturedKind {
    LinearRamp,
    CosineSignChanging,
    TruncatedFractional { s: f64 },
}

/// Reference kernels used to synthesize training data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedKernel {
    kind: ManufacturedKind,
    delta: f64,
    // Normalization of the truncated fractional kernel, cached.
    frac_const: f64,
}

/// Normalization constant `C_{1,s}` of the one-dimensional fractional Laplacian.
pub fn fractional_constant(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::arg(format!("fractional order s = {s} outside (0, 1)")));
    }
    Ok(4f64.powf(s) * s * gamma(s + 0.5) / (PI.sqrt() * gamma(1.0 - s)))
}

impl ManufacturedKernel {
    pub fn new(kind: ManufacturedKind, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::arg(format!("horizon must be positive, got {delta}")));
        }
        let frac_const = match kind {
            ManufacturedKind::TruncatedFractional { s } => fractional_constant(s)?,
            _ => 0.0,
        };
        Ok(ManufacturedKernel {
            kind,
            delta,
            frac_const,
        })
    }

    pub fn linear_ramp(delta: f64) -> Result<Self> {
        Self::new(ManufacturedKind::LinearRamp, delta)
    }

    pub fn cosine(delta: f64) -> Result<Self> {
        Self::new(ManufacturedKind::CosineSignChanging, delta)
    }

    pub fn truncated_fractional(s: f64, delta: f64) -> Result<Self> {
        Self::new(ManufacturedKind::TruncatedFractional { s }, delta)
    }

    pub fn kind(&self) -> ManufacturedKind {
        self.kind
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::arg(format!("negative distance {r}")));
        }
        if r == 0.0 {
            if let ManufacturedKind::TruncatedFractional { .. } = self.kind {
                return Err(Error::SingularPoint);
            }
        }
        Ok(self.radial(r))
    }
}

impl RadialKernel for ManufacturedKernel {
    fn horizon(&self) -> f64 {
        self.delta
    }

    fn radial(&self, r: f64) -> f64 {
        if r > self.delta {
            return 0.0;
        }
        let d3 = self.delta.powi(3);
        match self.kind {
            ManufacturedKind::LinearRamp => 4.0 / d3 * (r / self.delta),
            ManufacturedKind::CosineSignChanging => COSINE_AMPLITUDE / d3 * (3.0 * PI * r / (5.0 * self.delta)).cos(),
            ManufacturedKind::TruncatedFractional { s } => self.frac_const / r.powf(1.0 + 2.0 * s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_values() {
        let k = ManufacturedKernel::cosine(1.0).unwrap();
        assert_eq!(k.eval(0.0).unwrap(), 21.4615);
        let tail = k.eval(1.0).unwrap();
        assert!(tail < 0.0);
        assert!((tail - 21.4615 * (0.6 * PI).cos()).abs() < 1e-12);
        let k = ManufacturedKernel::cosine(0.5).unwrap();
        assert!((k.eval(0.5).unwrap() - 21.4615 / 0.125 * (0.6 * PI).cos()).abs() < 1e-9);
        assert_eq!(k.eval(0.51).unwrap(), 0.0);
    }

    #[test]
    fn linear_ramp_values() {
        let k = ManufacturedKernel::linear_ramp(1.0).unwrap();
        assert_eq!(k.eval(1.0).unwrap(), 4.0);
        assert_eq!(k.eval(0.0).unwrap(), 0.0);
        assert_eq!(k.eval(1.0 + 1e-12).unwrap(), 0.0);
        // Second moment ∫_{-δ}^{δ} K z² dz = 2 for every δ.
        let delta: f64 = 0.3;
        let moment = 2.0 * 4.0 / delta.powi(4) * delta.powi(4) / 4.0;
        assert!((moment - 2.0).abs() < 1e-14);
    }

    #[test]
    fn fractional_constant_reference_values() {
        // s = 1/2 gives 1/π.
        assert!((fractional_constant(0.5).unwrap() - 1.0 / PI).abs() < 1e-14);
        assert!((fractional_constant(0.75).unwrap() - 0.299_206_9).abs() < 1e-6);
        assert!(fractional_constant(1.0).is_err());
    }

    #[test]
    fn truncated_fractional_singular_at_origin() {
        let k = ManufacturedKernel::truncated_fractional(0.75, 2.0).unwrap();
        assert!(matches!(k.eval(0.0), Err(Error::SingularPoint)));
        let c = fractional_constant(0.75).unwrap();
        assert!((k.eval(0.5).unwrap() - c / 0.5f64.powf(2.5)).abs() < 1e-12);
        assert_eq!(k.eval(2.5).unwrap(), 0.0);
        assert!(k.eval(-1.0).is_err());
    }
}
