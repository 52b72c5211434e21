use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DataFractions, ParamVector};
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

/// Client objectives `F_k(w) = ½ wᵀH_k w − e_kᵀw + ½ e_kᵀH_k⁻¹e_k` with
/// `H_k = h_k·I`.
///
/// Generated tasks draw `h_k ~ U[1, 20]` and `e_k = h_k·u` with `u ~ U[0,1]^v`,
/// so every local optimum `w_k* = e_k / h_k` lies in the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticTask {
    dim: usize,
    h: Vec<f64>,
    e: Vec<ParamVector>,
    p: DataFractions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticOptima {
    pub global: ParamVector,
    pub local: Vec<ParamVector>,
    /// `F* = F(w*)`.
    pub global_loss: f64,
}

pub const CURVATURE_RANGE: (f64, f64) = (1.0, 20.0);

impl QuadraticTask {
    pub fn new(h: Vec<f64>, e: Vec<ParamVector>, p: DataFractions) -> Result<Self> {
        let k = h.len();
        if k == 0 {
            return Err(Error::invalid("quadratic task needs at least one client"));
        }
        if e.len() != k || p.len() != k {
            return Err(Error::invalid(format!(
                "client count mismatch: {} curvatures, {} linear terms, {} fractions",
                k,
                e.len(),
                p.len()
            )));
        }
        if let Some(i) = h.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid(format!("h[{i}] = {} must be positive", h[i])));
        }
        let dim = e[0].dim();
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        for ek in &e {
            ek.check_dim(dim)?;
            if !ek.is_finite() {
                return Err(Error::invalid("linear terms must be finite"));
            }
        }
        Ok(QuadraticTask { dim, h, e, p })
    }

    pub fn generate(clients: usize, dim: usize, power_law_a: f64, seed: u64) -> Result<Self> {
        if clients == 0 {
            return Err(Error::invalid("client count must be at least 1"));
        }
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(power_law_a.is_finite() && power_law_a > 0.0) {
            return Err(Error::invalid(format!(
                "power-law exponent must be positive, got {power_law_a}"
            )));
        }
        let mut rng = stream(seed, Domain::Task, &[0]);
        let (lo, hi) = CURVATURE_RANGE;
        let h: Vec<f64> = (0..clients).map(|_| rng.random_range(lo..=hi)).collect();
        let e = h
            .iter()
            .map(|&hk| {
                ParamVector::from_vec_unchecked((0..dim).map(|_| hk * rng.random::<f64>()).collect())
            })
            .collect();
        let p = DataFractions::power_law(clients, power_law_a, &mut rng)?;
        Self::new(h, e, p)
    }

    pub fn num_clients(&self) -> usize {
        self.h.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn curvatures(&self) -> &[f64] {
        &self.h
    }

    pub fn linear_terms(&self) -> &[ParamVector] {
        &self.e
    }

    pub fn fractions(&self) -> &DataFractions {
        &self.p
    }

    fn check(&self, k: usize, w: &ParamVector) -> Result<()> {
        if k >= self.num_clients() {
            return Err(Error::ClientOutOfRange {
                index: k,
                clients: self.num_clients(),
            });
        }
        w.check_dim(self.dim)
    }

    /// Evaluated in the completed-square form `½ h_k ‖w − e_k/h_k‖²`, which is
    /// algebraically identical and never negative.
    pub fn loss(&self, k: usize, w: &ParamVector) -> Result<f64> {
        self.check(k, w)?;
        Ok(self.loss_unchecked(k, w.as_slice()))
    }

    pub(crate) fn loss_unchecked(&self, k: usize, w: &[f64]) -> f64 {
        let hk = self.h[k];
        let dist_sq: f64 = w
            .iter()
            .zip(self.e[k].iter())
            .map(|(wi, ei)| {
                let d = wi - ei / hk;
                d * d
            })
            .sum();
        0.5 * hk * dist_sq
    }

    /// `H_k w − e_k`.
    pub fn gradient(&self, k: usize, w: &ParamVector) -> Result<ParamVector> {
        self.check(k, w)?;
        let hk = self.h[k];
        Ok(ParamVector::from_vec_unchecked(
            w.iter().zip(self.e[k].iter()).map(|(wi, ei)| hk * wi - ei).collect(),
        ))
    }

    pub fn global_loss(&self, w: &ParamVector) -> Result<f64> {
        w.check_dim(self.dim)?;
        Ok((0..self.num_clients())
            .map(|k| self.p.get(k) * self.loss_unchecked(k, w.as_slice()))
            .sum())
    }

    pub fn local_optimum(&self, k: usize) -> ParamVector {
        let hk = self.h[k];
        ParamVector::from_vec_unchecked(self.e[k].iter().map(|ei| ei / hk).collect())
    }

    /// `w_k* = H_k⁻¹e_k` and `w* = (Σ p_k H_k)⁻¹ (Σ p_k e_k)`.
    pub fn optima(&self) -> QuadraticOptima {
        let local: Vec<ParamVector> = (0..self.num_clients()).map(|k| self.local_optimum(k)).collect();
        let h_bar: f64 = self.h.iter().zip(self.p.as_slice()).map(|(h, p)| h * p).sum();
        let mut e_bar = ParamVector::zeros(self.dim);
        for (ek, &pk) in self.e.iter().zip(self.p.as_slice()) {
            e_bar.axpy(pk, ek);
        }
        e_bar.scale(1.0 / h_bar);
        let global_loss = self.global_loss(&e_bar).expect("dimension checked");
        QuadraticOptima {
            global: e_bar,
            local,
            global_loss,
        }
    }

    /// Replaces the data fractions, keeping the objectives.
    pub fn with_fractions(mut self, p: DataFractions) -> Result<Self> {
        if p.len() != self.num_clients() {
            return Err(Error::invalid("fraction count does not match client count"));
        }
        self.p = p;
        Ok(self)
    }
}
