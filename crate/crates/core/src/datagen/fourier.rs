use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernelspec::RadialKernel;
use crate::quad::trapezoid;

/// Independent generator for row `row` of a corpus seeded with `seed`.
pub fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    rng
}

/// Finite trigonometric series `Σ a_k cos(2πkx/L) + b_k sin(2πkx/L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    pub period: f64,
    /// `(k, a_k, b_k)`.
    pub terms: Vec<(usize, f64, f64)>,
}

impl TrigSeries {
    pub fn eval(&self, x: f64) -> f64 {
        let w = 2.0 * PI * x / self.period;
        self.terms
            .iter()
            .map(|&(k, a, b)| {
                let t = w * k as f64;
                a * t.cos() + b * t.sin()
            })
            .sum()
    }

    pub fn eval_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// Multiplies every mode `k` by `mult(k)`.
    pub fn scaled(&self, mult: impl Fn(usize) -> f64) -> TrigSeries {
        TrigSeries {
            period: self.period,
            terms: self
                .terms
                .iter()
                .map(|&(k, a, b)| {
                    let m = mult(k);
                    (k, m * a, m * b)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FourierSpec {
    /// `Σ_{k=k_start}^{kmax} exp(−α k²) ξ_k cos(2πkx/L)`, `ξ_k ~ U[0, 1]`.
    LowFreq {
        kmax: usize,
        alpha: f64,
        period: f64,
        k_start: usize,
    },
    /// `ξ₁ sin(2πk₁x/L) + ξ₂ cos(2πk₂x/L)` with `k₁, k₂` uniform in `[k_lo, k_hi]`.
    HighFreq { k_lo: usize, k_hi: usize, period: f64 },
}

impl FourierSpec {
    pub fn low(kmax: usize, period: f64) -> Self {
        FourierSpec::LowFreq {
            kmax,
            alpha: 0.1,
            period,
            k_start: 0,
        }
    }

    pub fn high(period: f64) -> Self {
        FourierSpec::HighFreq {
            k_lo: 5,
            k_hi: 15,
            period,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FourierSpec::LowFreq {
                kmax,
                alpha,
                period,
                k_start,
            } => {
                if !(alpha > 0.0) || kmax < 1 || k_start > kmax || !(period > 0.0) {
                    return Err(Error::arg("invalid low-frequency Fourier spec"));
                }
            }
            FourierSpec::HighFreq { k_lo, k_hi, period } => {
                if k_lo < 1 || k_hi < k_lo || !(period > 0.0) {
                    return Err(Error::arg("invalid high-frequency Fourier spec"));
                }
            }
        }
        Ok(())
    }

    /// Draws one random function.
    pub fn sample(&self, rng: &mut impl Rng) -> TrigSeries {
        match *self {
            FourierSpec::LowFreq {
                kmax,
                alpha,
                period,
                k_start,
            } => TrigSeries {
                period,
                terms: (k_start..=kmax)
                    .map(|k| {
                        let xi: f64 = rng.random();
                        (k, (-alpha * (k * k) as f64).exp() * xi, 0.0)
                    })
                    .collect(),
            },
            FourierSpec::HighFreq { k_lo, k_hi, period } => {
                let k1 = rng.random_range(k_lo..=k_hi);
                let k2 = rng.random_range(k_lo..=k_hi);
                let xi1: f64 = rng.random();
                let xi2: f64 = rng.random();
                TrigSeries {
                    period,
                    terms: vec![(k1, 0.0, xi1), (k2, xi2, 0.0)],
                }
            }
        }
    }
}

/// `m_k = ∫_{−δ}^{δ} K(|z|)(1 − cos(2πkz/L)) dz` by the trapezoid rule.
pub fn spectral_multiplier<K: RadialKernel + ?Sized>(kernel: &K, k: usize, period: f64, quad_n: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let delta = kernel.horizon();
    let w = 2.0 * PI * k as f64 / period;
    trapezoid(-delta, delta, quad_n.max(2), |z| {
        let r = z.abs();
        if r == 0.0 {
            0.0
        } else {
            kernel.radial(r) * (1.0 - (w * z).cos())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelspec::ManufacturedKernel;

    #[test]
    fn low_frequency_bound_and_determinism() {
        let spec = FourierSpec::low(100, 1.0);
        let a = spec.sample(&mut row_rng(3, 5));
        let b = spec.sample(&mut row_rng(3, 5));
        assert_eq!(a, b);
        for &(k, c, s) in &a.terms {
            assert!(c >= 0.0 && c <= (-0.1 * (k * k) as f64).exp());
            assert_eq!(s, 0.0);
        }
        assert_ne!(a, spec.sample(&mut row_rng(3, 6)));
    }

    #[test]
    fn mean_of_fifth_coefficient() {
        let spec = FourierSpec::LowFreq {
            kmax: 5,
            alpha: 0.1,
            period: 1.0,
            k_start: 5,
        };
        let draws = 100_000;
        let mut rng = row_rng(99, 0);
        let mean: f64 = (0..draws).map(|_| spec.sample(&mut rng).terms[0].1).sum::<f64>() / draws as f64;
        let scale = (-2.5f64).exp();
        let sem = scale * (1.0f64 / 12.0).sqrt() / (draws as f64).sqrt();
        assert!((mean - scale / 2.0).abs() < 3.0 * sem, "{mean}");
    }

    #[test]
    fn high_frequency_range() {
        let spec = FourierSpec::high(1.0);
        let mut rng = row_rng(1, 0);
        for _ in 0..200 {
            let s = spec.sample(&mut rng);
            assert!(s.terms.iter().all(|t| (5..=15).contains(&t.0)));
        }
    }

    #[test]
    fn multiplier_zero_mode_and_local_limit() {
        let k = ManufacturedKernel::cosine(0.3).unwrap();
        assert_eq!(spectral_multiplier(&k, 0, 1.0, 2048), 0.0);
        let ramp = ManufacturedKernel::linear_ramp(1e-3).unwrap();
        for mode in [1usize, 3] {
            let want = (2.0 * PI * mode as f64).powi(2);
            let got = spectral_multiplier(&ramp, mode, 1.0, 2048);
            assert!((got - want).abs() < 1e-4 * want, "{got} vs {want}");
        }
    }
}
