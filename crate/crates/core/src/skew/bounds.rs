use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TheoryParams;

/// Everything the two error bounds depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub theory: TheoryParams,
    /// Local-global objective gap `Γ`.
    pub gamma_gap: f64,
    pub rho_bar: f64,
    pub rho_tilde: f64,
    /// `‖w̄⁽⁰⁾ − w*‖²`.
    pub init_dist_sq: f64,
    /// `F(w̄⁽⁰⁾) − F*`; needed by the fixed-rate bound only.
    pub init_excess: Option<f64>,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        self.theory.validate()?;
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and nonnegative, got {v}")))
            }
        };
        nonneg("Gamma", self.gamma_gap)?;
        nonneg("initial distance", self.init_dist_sq)?;
        if let Some(e) = self.init_excess {
            nonneg("initial excess loss", e)?;
        }
        if !(self.rho_bar.is_finite() && self.rho_bar > 0.0) {
            return Err(Error::invalid(format!("rho_bar must be positive, got {}", self.rho_bar)));
        }
        if !(self.rho_tilde.is_finite() && self.rho_tilde >= self.rho_bar) {
            return Err(Error::invalid(format!(
                "rho_tilde = {} must be finite and at least rho_bar = {}",
                self.rho_tilde, self.rho_bar
            )));
        }
        Ok(())
    }

    /// `32τ²G² + σ²/m`.
    fn gradient_term(&self) -> f64 {
        let t = &self.theory;
        let tau = t.tau as f64;
        32.0 * tau * tau * t.g * t.g + t.sigma * t.sigma / t.m as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    pub vanishing: f64,
    pub bias: f64,
    pub total: f64,
}

impl BoundTerms {
    fn new(vanishing: f64, bias: f64) -> Self {
        BoundTerms {
            vanishing,
            bias,
            total: vanishing + bias,
        }
    }
}

/// Bound on `E[F(w̄⁽ᵀ⁾)] − F*` after `T` iterations with the decaying rate
/// `η_t = 1/(μ(t + γ))`, `γ = 4L/μ`.
pub fn theorem1_bound(inputs: &BoundInputs, t: u64) -> Result<BoundTerms> {
    inputs.validate()?;
    let BoundInputs {
        theory: th,
        gamma_gap,
        rho_bar,
        rho_tilde,
        init_dist_sq,
        ..
    } = *inputs;
    let (l, mu) = (th.l, th.mu);
    let gamma = 4.0 * l / mu;
    let inner = 4.0 * l * inputs.gradient_term() / (3.0 * mu * mu * rho_bar)
        + 8.0 * l * l * gamma_gap / (mu * mu)
        + l * gamma * init_dist_sq / 2.0;
    let vanishing = inner / (t as f64 + gamma);
    let bias = 8.0 * l * gamma_gap / (3.0 * mu) * (rho_tilde / rho_bar - 1.0);
    Ok(BoundTerms::new(vanishing, bias))
}

/// Largest fixed rate the fixed-rate bound admits,
/// `min{1/(2μB), 1/(4L)}` with `B = 1 + 3ρ̄/8`.
pub fn theorem2_rate_cap(inputs: &BoundInputs) -> f64 {
    let b = 1.0 + 3.0 * inputs.rho_bar / 8.0;
    (1.0 / (2.0 * inputs.theory.mu * b)).min(1.0 / (4.0 * inputs.theory.l))
}

/// Bound on `E[F(w̄⁽ᵀ⁾)] − F*` after `T` iterations with fixed rate `η`.
pub fn theorem2_bound(inputs: &BoundInputs, eta: f64, t: u64) -> Result<BoundTerms> {
    inputs.validate()?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    let cap = theorem2_rate_cap(inputs);
    if eta > cap {
        return Err(Error::LearningRateCap { eta, cap });
    }
    let init_excess = inputs
        .init_excess
        .ok_or_else(|| Error::invalid("the fixed-rate bound needs the initial excess loss"))?;
    let (l, mu) = (inputs.theory.l, inputs.theory.mu);
    let (rb, rt, gap) = (inputs.rho_bar, inputs.rho_tilde, inputs.gamma_gap);
    let c = inputs.gradient_term() + 6.0 * rb * l * gap;
    let d = 2.0 * gap * (rt - rb);
    let denom = 8.0 + 3.0 * rb;
    let factor = 1.0 - eta * mu * (1.0 + 3.0 * rb / 8.0);
    let vanishing = l / mu * factor.powf(t as f64) * (init_excess - 4.0 * (eta * c + d) / denom);
    let bias = 4.0 * l * eta * c / (mu * denom) + 8.0 * l * gap * (rt - rb) / (mu * denom);
    Ok(BoundTerms::new(vanishing, bias))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Decaying learning rate.
    Decaying,
    /// Fixed learning rate `η`.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub theorem: Theorem,
    pub t: u64,
    pub terms: BoundTerms,
}

/// Evaluates the decaying-rate bound, and the fixed-rate one when `eta` is
/// given, at every horizon.
pub fn bound_table(inputs: &BoundInputs, horizons: &[u64], eta: Option<f64>) -> Result<Vec<BoundRow>> {
    let mut rows = Vec::new();
    for &t in horizons {
        rows.push(BoundRow {
            theorem: Theorem::Decaying,
            t,
            terms: theorem1_bound(inputs, t)?,
        });
    }
    if let Some(eta) = eta {
        for &t in horizons {
            rows.push(BoundRow {
                theorem: Theorem::Fixed,
                t,
                terms: theorem2_bound(inputs, eta, t)?,
            });
        }
    }
    Ok(rows)
}

/// CSV with columns `theorem,T,vanishing,bias,total`.
pub fn write_bound_table<W: Write>(out: W, rows: &[BoundRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let fmt = |e: csv::Error| Error::format("bound table", e);
    w.write_record(["theorem", "T", "vanishing", "bias", "total"]).map_err(fmt)?;
    for r in rows {
        let name = match r.theorem {
            Theorem::Decaying => "decaying",
            Theorem::Fixed => "fixed",
        };
        w.write_record([
            name.to_string(),
            r.t.to_string(),
            r.terms.vanishing.to_string(),
            r.terms.bias.to_string(),
            r.terms.total.to_string(),
        ])
        .map_err(fmt)?;
    }
    w.flush().map_err(|e| Error::format("bound table", e))?;
    Ok(())
}
