use serde::{Deserialize, Serialize};

use super::bernstein::{bernstein_unchecked, MAX_ORDER};
use super::RadialKernel;
use crate::error::{Error, Result};
use crate::textio::{fmt17, json_array17};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    /// `Σ (C_m + D_m) / δ^(d+2) · B_{m,M}(r/δ)`.
    Standard,
    /// `Σ C_m · B_{m,M}(r/δ) / r^α`, with no signed correction.
    FractionalScaled,
}

/// Learnable radial kernel expanded in the Bernstein basis on `[0, δ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    dim: usize,
    delta: f64,
    order: usize,
    c: Vec<f64>,
    d: Vec<f64>,
    alpha: Option<f64>,
    variant: KernelVariant,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    variant: KernelVariant,
    d: usize,
    delta: f64,
    order: usize,
    #[serde(rename = "C")]
    c: Vec<f64>,
    #[serde(rename = "D")]
    d_coef: Vec<f64>,
    alpha: Option<f64>,
}

impl KernelModel {
    pub fn standard(delta: f64, c: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        let model = KernelModel {
            dim: 1,
            delta,
            order: c.len().saturating_sub(1),
            c,
            d,
            alpha: None,
            variant: KernelVariant::Standard,
        };
        model.validate()?;
        Ok(model)
    }

    /// Nonnegative kernel with `D = 0`.
    pub fn nonnegative(delta: f64, c: Vec<f64>) -> Result<Self> {
        let d = vec![0.0; c.len()];
        Self::standard(delta, c, d)
    }

    pub fn fractional(delta: f64, c: Vec<f64>, alpha: f64) -> Result<Self> {
        let model = KernelModel {
            dim: 1,
            delta,
            order: c.len().saturating_sub(1),
            d: vec![0.0; c.len()],
            c,
            alpha: Some(alpha),
            variant: KernelVariant::FractionalScaled,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.dim != 1 {
            return Err(Error::arg(format!(
                "only one-dimensional kernels are supported (d = {})",
                self.dim
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::arg(format!("horizon must be positive, got {}", self.delta)));
        }
        if self.c.is_empty() {
            return Err(Error::arg("coefficient vector C is empty"));
        }
        if self.order > MAX_ORDER {
            return Err(Error::arg(format!("basis order {} too large", self.order)));
        }
        if self.c.len() != self.d.len() {
            return Err(Error::Shape(format!(
                "C has {} entries but D has {}",
                self.c.len(),
                self.d.len()
            )));
        }
        if self.c.iter().chain(&self.d).any(|v| !v.is_finite()) {
            return Err(Error::arg("kernel coefficients must be finite"));
        }
        if let KernelVariant::FractionalScaled = self.variant {
            let alpha = self.alpha.unwrap_or(f64::NAN);
            if !(0.0..self.dim as f64 + 2.0).contains(&alpha) {
                return Err(Error::arg(format!("singularity exponent {alpha} outside [0, d+2)")));
            }
            if self.d.iter().any(|&v| v != 0.0) {
                return Err(Error::arg("fractional-scaled kernels carry no correction D"));
            }
            if self.c.iter().any(|&v| v < 0.0) {
                return Err(Error::arg("fractional-scaled kernels need C >= 0"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn variant(&self) -> KernelVariant {
        self.variant
    }

    /// The same model with the signed correction dropped.
    pub fn nonnegative_part(&self) -> KernelModel {
        KernelModel {
            d: vec![0.0; self.d.len()],
            ..self.clone()
        }
    }

    /// Combined coefficients `C + D` multiplying each basis function.
    pub fn combined(&self) -> Vec<f64> {
        self.c.iter().zip(&self.d).map(|(c, d)| c + d).collect()
    }

    /// Kernel value at distance `r >= 0`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::arg(format!("negative distance {r}")));
        }
        if r > self.delta {
            return Ok(0.0);
        }
        if r == 0.0 {
            if let KernelVariant::FractionalScaled = self.variant {
                // α = 0 limit; the self node never enters the quadrature.
                return Ok(self.profile_sum(&self.c, 0.0));
            }
        }
        Ok(self.value_inside(r))
    }

    fn profile_sum(&self, coef: &[f64], t: f64) -> f64 {
        coef.iter()
            .enumerate()
            .map(|(m, &cm)| cm * bernstein_unchecked(m, self.order, t))
            .sum()
    }

    fn value_inside(&self, r: f64) -> f64 {
        let t = r / self.delta;
        match self.variant {
            KernelVariant::Standard => {
                let coef = self.combined();
                self.profile_sum(&coef, t) / self.delta.powi(self.dim as i32 + 2)
            }
            KernelVariant::FractionalScaled => self.profile_sum(&self.c, t) / r.powf(self.alpha.unwrap_or(0.0)),
        }
    }

    /// Value of basis function `m` alone (unit coefficient) at `0 < r <= δ`.
    pub fn basis_value(&self, m: usize, r: f64) -> f64 {
        let b = bernstein_unchecked(m, self.order, (r / self.delta).min(1.0));
        match self.variant {
            KernelVariant::Standard => b / self.delta.powi(self.dim as i32 + 2),
            KernelVariant::FractionalScaled => b / r.powf(self.alpha.unwrap_or(0.0)),
        }
    }

    /// Serializes to the model-file JSON document (17 significant digits).
    pub fn to_json(&self) -> Result<String> {
        let alpha = match self.alpha {
            Some(a) => fmt17(a),
            None => "null".to_string(),
        };
        let variant = serde_json::to_string(&self.variant)?;
        Ok(format!(
            "{{\n  \"variant\": {variant},\n  \"d\": {},\n  \"delta\": {},\n  \"order\": {},\n  \"C\": {},\n  \"D\": {},\n  \"alpha\": {alpha}\n}}\n",
            self.dim,
            fmt17(self.delta),
            self.order,
            json_array17(&self.c)?,
            json_array17(&self.d)?,
        ))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        if doc.c.len() != doc.order + 1 {
            return Err(Error::Shape(format!(
                "order {} needs {} coefficients, found {}",
                doc.order,
                doc.order + 1,
                doc.c.len()
            )));
        }
        let model = KernelModel {
            dim: doc.d,
            delta: doc.delta,
            order: doc.order,
            c: doc.c,
            d: doc.d_coef,
            alpha: doc.alpha,
            variant: doc.variant,
        };
        if model.variant == KernelVariant::Standard && model.alpha.is_some() {
            return Err(Error::arg("standard kernels carry no alpha"));
        }
        model.validate()?;
        Ok(model)
    }
}

impl Serialize for KernelModel {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ModelDoc {
            variant: self.variant,
            d: self.dim,
            delta: self.delta,
            order: self.order,
            c: self.c.clone(),
            d_coef: self.d.clone(),
            alpha: self.alpha,
        }
        .serialize(ser)
    }
}

impl RadialKernel for KernelModel {
    fn horizon(&self) -> f64 {
        self.delta
    }

    fn radial(&self, r: f64) -> f64 {
        if r > self.delta {
            0.0
        } else {
            self.value_inside(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_basis_is_flat() {
        let delta = 0.7;
        let k = KernelModel::standard(delta, vec![2.5], vec![0.0]).unwrap();
        for r in [0.0, 0.1, 0.35, delta] {
            assert!((k.eval(r).unwrap() - 2.5 / delta.powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn compact_support() {
        let k = KernelModel::standard(0.4, vec![1.0, 2.0], vec![0.5, -0.5]).unwrap();
        assert_eq!(k.eval(1.5 * 0.4).unwrap(), 0.0);
        let f = KernelModel::fractional(0.4, vec![1.0, 2.0], 1.2).unwrap();
        assert_eq!(f.eval(0.41).unwrap(), 0.0);
    }

    #[test]
    fn linear_ramp_representation() {
        // C = [0, 4] reproduces (4/δ³)(r/δ).
        let delta = 0.5;
        let k = KernelModel::nonnegative(delta, vec![0.0, 4.0]).unwrap();
        let r = delta / 2.0;
        assert!((k.eval(r).unwrap() - 2.0 / delta.powi(3)).abs() < 1e-12);
        let direct = 4.0 / delta.powi(3) * (r / delta);
        assert!((k.eval(r).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn fractional_origin_uses_alpha_zero_limit() {
        let k = KernelModel::fractional(2.0, vec![0.3, 0.1], 2.4).unwrap();
        assert_eq!(k.eval(0.0).unwrap(), 0.3);
        let r: f64 = 0.5;
        let expected = (0.3 * 0.75 + 0.1 * 0.25) / r.powf(2.4);
        assert!((k.eval(r).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(KernelModel::standard(0.0, vec![1.0], vec![0.0]).is_err());
        assert!(KernelModel::standard(1.0, vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(KernelModel::fractional(1.0, vec![1.0], 3.0).is_err());
        assert!(KernelModel::fractional(1.0, vec![1.0], -0.1).is_err());
        let k = KernelModel::nonnegative(1.0, vec![1.0]).unwrap();
        assert!(k.eval(-1e-3).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let k = KernelModel::standard(0.5, vec![0.1, 1.0 / 3.0, 7.0], vec![-1e-17, 0.0, 2.0]).unwrap();
        let text = k.to_json().unwrap();
        let back = KernelModel::from_json(&text).unwrap();
        assert_eq!(back, k);
        assert_eq!(back.to_json().unwrap(), text);
        let f = KernelModel::fractional(2.0, vec![0.33], 2.45).unwrap();
        assert_eq!(KernelModel::from_json(&f.to_json().unwrap()).unwrap(), f);
    }

    #[test]
    fn json_rejects_unknown_fields_and_bad_shapes() {
        let bad = r#"{"variant":"standard","d":1,"delta":1,"order":1,"C":[1],"D":[0],"alpha":null}"#;
        assert!(KernelModel::from_json(bad).is_err());
        let extra = r#"{"variant":"standard","d":1,"delta":1,"order":0,"C":[1],"D":[0],"alpha":null,"x":1}"#;
        assert!(KernelModel::from_json(extra).is_err());
    }

    proptest! {
        #[test]
        fn nonnegative_coefficients_give_nonnegative_kernel(
            c in proptest::collection::vec(0.0f64..10.0, 1..8),
            t in 0.0f64..=1.2,
        ) {
            let k = KernelModel::nonnegative(0.3, c).unwrap();
            prop_assert!(k.eval(t * 0.3).unwrap() >= 0.0);
        }

        #[test]
        fn linear_in_coefficients(
            c in proptest::collection::vec(0.0f64..10.0, 4),
            d in proptest::collection::vec(-3.0f64..3.0, 4),
            scale in 0.01f64..50.0,
            t in 0.0f64..=1.0,
        ) {
            let k = KernelModel::standard(0.8, c.clone(), d.clone()).unwrap();
            let ks = KernelModel::standard(
                0.8,
                c.iter().map(|v| v * scale).collect(),
                d.iter().map(|v| v * scale).collect(),
            ).unwrap();
            let (a, b) = (k.eval(t * 0.8).unwrap(), ks.eval(t * 0.8).unwrap());
            prop_assert!((b - scale * a).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}
