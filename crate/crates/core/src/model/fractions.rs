use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// Per-client data fractions `p_k = D_k / Σ D_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DataFractions(Vec<f64>);

impl DataFractions {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::invalid("data fractions need at least one client"));
        }
        if let Some(k) = p.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(format!("p[{k}] = {} is not a valid fraction", p[k])));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("data fractions sum to {sum}, expected 1")));
        }
        Ok(DataFractions(p))
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("weights must not all be zero"));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let w: Vec<f64> = sizes.iter().map(|&d| d as f64).collect();
        Self::from_weights(&w)
    }

    /// Draws `k` variates from the density `a·x^(a−1)` on (0, 1] by inverse
    /// CDF (`u^(1/a)`), then normalizes them.
    pub fn power_law<R: Rng + ?Sized>(k: usize, a: f64, rng: &mut R) -> Result<Self> {
        let raw = power_law_variates(k, a, rng)?;
        Self::from_weights(&raw)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }
}

/// Samples from `P(x; a) = a·x^(a−1)`, `0 < x ≤ 1`.
pub(crate) fn power_law_variates<R: Rng + ?Sized>(k: usize, a: f64, rng: &mut R) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::invalid("client count must be at least 1"));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid(format!("power-law exponent must be positive, got {a}")));
    }
    Ok((0..k)
        .map(|_| {
            // 1 - U lies in (0, 1], keeping every variate strictly positive.
            let u: f64 = 1.0 - rng.random::<f64>();
            u.powf(1.0 / a)
        })
        .collect())
}

impl TryFrom<Vec<f64>> for DataFractions {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        DataFractions::new(v)
    }
}

impl From<DataFractions> for Vec<f64> {
    fn from(p: DataFractions) -> Self {
        p.0
    }
}
