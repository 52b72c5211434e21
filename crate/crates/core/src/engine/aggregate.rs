use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DataFractions, ParamVector};

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// `(1/m) Σ_{k∈S} w_k`.
    #[default]
    SimpleMean,
    /// Coefficients `q_k = p_k K / m`, renormalized over the selected set so
    /// they sum to one.
    Weighted,
}

/// Per-slot aggregation weights for a selected list (duplicates count once
/// per occurrence).
pub fn selection_weights(mode: Aggregation, p: &DataFractions, selected: &[usize]) -> Result<Vec<f64>> {
    let m = selected.len();
    if m == 0 {
        return Err(Error::invalid("no clients selected"));
    }
    match mode {
        Aggregation::SimpleMean => Ok(vec![1.0 / m as f64; m]),
        Aggregation::Weighted => {
            let scale = p.len() as f64 / m as f64;
            let q: Vec<f64> = selected.iter().map(|&k| p.get(k) * scale).collect();
            let total: f64 = q.iter().sum();
            if total <= 0.0 {
                return Err(Error::invalid("selected clients carry no data weight"));
            }
            Ok(q.into_iter().map(|v| v / total).collect())
        }
    }
}

/// (Weighted) average of `models`. With `weights = None` every model counts
/// equally; otherwise the weights must be nonnegative and sum to one.
///
/// Accumulates as a running mean, so identical inputs reproduce the input
/// bit for bit.
pub fn aggregate(models: &[ParamVector], weights: Option<&[f64]>) -> Result<ParamVector> {
    let first = models.first().ok_or_else(|| Error::invalid("nothing to aggregate"))?;
    let dim = first.dim();
    for m in models {
        m.check_dim(dim)?;
    }
    if let Some(q) = weights {
        if q.len() != models.len() {
            return Err(Error::invalid("one weight per model required"));
        }
        if q.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("aggregation weights must be finite and nonnegative"));
        }
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::WeightSum(sum));
        }
    }

    let mut acc = ParamVector::zeros(dim);
    let mut seen = 0.0;
    for (i, model) in models.iter().enumerate() {
        let wi = weights.map_or(1.0, |q| q[i]);
        if wi == 0.0 {
            continue;
        }
        seen += wi;
        let frac = wi / seen;
        for (a, x) in acc.as_mut_slice().iter_mut().zip(model.iter()) {
            *a += frac * (x - *a);
        }
    }
    Ok(acc)
}
