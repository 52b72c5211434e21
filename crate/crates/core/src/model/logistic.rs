//! Multinomial logistic regression (softmax + cross-entropy) over a
//! [`SyntheticDataset`].
//!
//! Parameters are laid out as the row-major `10×60` weight matrix followed by
//! the 10 biases.

use std::sync::Arc;

use rand::seq::index;

use super::{DataFractions, ParamVector, SyntheticDataset};
use crate::error::{Error, Result};
use crate::rng::SimRng;

pub const NUM_FEATURES: usize = 60;
pub const NUM_CLASSES: usize = 10;
const WEIGHTS: usize = NUM_CLASSES * NUM_FEATURES;

#[derive(Debug, Clone)]
pub struct LogisticTask {
    data: Arc<SyntheticDataset>,
    l2: f64,
}

impl LogisticTask {
    pub fn new(data: Arc<SyntheticDataset>) -> Self {
        LogisticTask { data, l2: 0.0 }
    }

    /// Adds `(λ/2)‖w‖²` to every client objective.
    pub fn with_l2(mut self, l2: f64) -> Result<Self> {
        if !(l2.is_finite() && l2 >= 0.0) {
            return Err(Error::invalid("l2 coefficient must be finite and nonnegative"));
        }
        self.l2 = l2;
        Ok(self)
    }

    pub const fn param_dim() -> usize {
        WEIGHTS + NUM_CLASSES
    }

    pub fn dataset(&self) -> &SyntheticDataset {
        &self.data
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn num_clients(&self) -> usize {
        self.data.num_clients()
    }

    pub fn fractions(&self) -> &DataFractions {
        self.data.fractions()
    }

    fn check(&self, k: usize, w: &ParamVector) -> Result<()> {
        if k >= self.num_clients() {
            return Err(Error::ClientOutOfRange {
                index: k,
                clients: self.num_clients(),
            });
        }
        if self.data.client(k).is_empty() {
            return Err(Error::EmptyClient(k));
        }
        w.check_dim(Self::param_dim())
    }

    fn penalty(&self, w: &[f64]) -> f64 {
        if self.l2 == 0.0 {
            0.0
        } else {
            0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>()
        }
    }

    /// Mean cross-entropy over client `k`'s full dataset.
    pub fn loss(&self, k: usize, w: &ParamVector) -> Result<f64> {
        self.check(k, w)?;
        let c = self.data.client(k);
        let total: f64 = (0..c.len())
            .map(|i| sample_loss(w.as_slice(), c.feature(i), c.labels[i]))
            .sum();
        Ok(total * (1.0 / c.len() as f64) + self.penalty(w.as_slice()))
    }

    pub fn gradient(&self, k: usize, w: &ParamVector) -> Result<ParamVector> {
        self.check(k, w)?;
        let n = self.data.client(k).len();
        Ok(self.batch_gradient(k, w.as_slice(), 0..n).0)
    }

    /// Mini-batch gradient and mean batch loss; the batch is drawn uniformly
    /// without replacement. A batch of at least `D_k` uses every sample in
    /// index order, reproducing the full gradient exactly.
    pub fn stochastic_gradient(
        &self,
        k: usize,
        w: &ParamVector,
        batch: usize,
        rng: &mut SimRng,
    ) -> Result<(ParamVector, f64)> {
        self.check(k, w)?;
        if batch == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        let n = self.data.client(k).len();
        if batch >= n {
            return Ok(self.batch_gradient(k, w.as_slice(), 0..n));
        }
        let idx = index::sample(rng, n, batch);
        Ok(self.batch_gradient(k, w.as_slice(), idx.into_iter()))
    }

    /// Mean loss over a uniformly drawn mini-batch (`b` clamped to `D_k`).
    pub fn minibatch_loss(&self, k: usize, w: &ParamVector, batch: usize, rng: &mut SimRng) -> Result<f64> {
        self.check(k, w)?;
        let c = self.data.client(k);
        let n = c.len();
        if batch == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        if batch >= n {
            return self.loss(k, w);
        }
        let idx = index::sample(rng, n, batch);
        let total: f64 = idx
            .iter()
            .map(|i| sample_loss(w.as_slice(), c.feature(i), c.labels[i]))
            .sum();
        Ok(total * (1.0 / batch as f64) + self.penalty(w.as_slice()))
    }

    fn batch_gradient(&self, k: usize, w: &[f64], samples: impl Iterator<Item = usize>) -> (ParamVector, f64) {
        let c = self.data.client(k);
        let mut grad = vec![0.0; Self::param_dim()];
        let mut loss = 0.0;
        let mut count = 0usize;
        let mut probs = [0.0; NUM_CLASSES];
        for i in samples {
            let x = c.feature(i);
            let y = c.labels[i] as usize;
            loss += softmax_into(w, x, &mut probs, y);
            probs[y] -= 1.0;
            for (cls, &r) in probs.iter().enumerate() {
                let row = &mut grad[cls * NUM_FEATURES..(cls + 1) * NUM_FEATURES];
                for (g, xi) in row.iter_mut().zip(x) {
                    *g += r * xi;
                }
                grad[WEIGHTS + cls] += r;
            }
            count += 1;
        }
        let inv = 1.0 / count as f64;
        for (g, wi) in grad.iter_mut().zip(w) {
            *g = *g * inv + self.l2 * wi;
        }
        (ParamVector::from_vec_unchecked(grad), loss * inv + self.penalty(w))
    }
}

fn logits(w: &[f64], x: &[f64], out: &mut [f64; NUM_CLASSES]) {
    for (c, o) in out.iter_mut().enumerate() {
        let row = &w[c * NUM_FEATURES..(c + 1) * NUM_FEATURES];
        *o = w[WEIGHTS + c] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Fills `probs` with the softmax and returns the cross-entropy for `label`.
fn softmax_into(w: &[f64], x: &[f64], probs: &mut [f64; NUM_CLASSES], label: usize) -> f64 {
    logits(w, x, probs);
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z_label = probs[label];
    let mut sum = 0.0;
    for p in probs.iter_mut() {
        *p = (*p - max).exp();
        sum += *p;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    max + sum.ln() - z_label
}

fn sample_loss(w: &[f64], x: &[f64], label: u8) -> f64 {
    let mut z = [0.0; NUM_CLASSES];
    logits(w, x, &mut z);
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    lse - z[label as usize]
}
