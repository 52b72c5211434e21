//! Heterogeneous synthetic classification data, `Synthetic(α, β)`.
//!
//! Client `k` draws `u_k ~ N(0, α²)` and `B_k ~ N(0, β²)`. Its ground-truth
//! softmax classifier has `W_k ∈ R^{10×60}` and `b_k ∈ R^{10}` with entries
//! `~ N(u_k, 1)`; its feature mean `v_k ∈ R^60` has entries `~ N(B_k, 1)`.
//! Features are `x ~ N(v_k, Σ)` with diagonal `Σ_jj = j^(−1.2)` and labels
//! are `argmax(W_k x + b_k)`. Dataset sizes follow the power-law density
//! `a·x^(a−1)` scaled to `max_samples`, floored at [`MIN_CLIENT_SAMPLES`].

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::fractions::power_law_variates;
use super::logistic::{NUM_CLASSES, NUM_FEATURES};
use super::DataFractions;
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

/// One full mini-batch of the default batch size always fits.
pub const MIN_CLIENT_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub alpha: f64,
    pub beta: f64,
    pub clients: usize,
    pub power_law_a: f64,
    pub max_samples: usize,
    pub seed: u64,
}

impl SyntheticParams {
    pub fn new(alpha: f64, beta: f64, clients: usize, power_law_a: f64, seed: u64) -> Self {
        SyntheticParams {
            alpha,
            beta,
            clients,
            power_law_a,
            max_samples: 1000,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.clients == 0 {
            return Err(Error::invalid("client count must be at least 1"));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0 && self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::invalid("alpha and beta must be finite and nonnegative"));
        }
        if !(self.power_law_a.is_finite() && self.power_law_a > 0.0) {
            return Err(Error::invalid("power-law exponent must be positive"));
        }
        if self.max_samples < MIN_CLIENT_SAMPLES {
            return Err(Error::invalid(format!(
                "max_samples must be at least {MIN_CLIENT_SAMPLES}"
            )));
        }
        Ok(())
    }
}

/// Samples of one client, features stored row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClientSamples {
    pub features: Vec<f64>,
    pub labels: Vec<u8>,
}

impl ClientSamples {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * NUM_FEATURES..(i + 1) * NUM_FEATURES]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    clients: Vec<ClientSamples>,
    p: DataFractions,
    params: Option<SyntheticParams>,
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    client: usize,
    label: u8,
    x: Vec<f64>,
}

impl SyntheticDataset {
    pub fn generate(params: SyntheticParams) -> Result<Self> {
        params.validate()?;
        let k = params.clients;

        let mut size_rng = stream(params.seed, Domain::Task, &[1]);
        let sizes: Vec<usize> = power_law_variates(k, params.power_law_a, &mut size_rng)?
            .into_iter()
            .map(|x| ((x * params.max_samples as f64).round() as usize).max(MIN_CLIENT_SAMPLES))
            .collect();

        let cov_std: Vec<f64> = (1..=NUM_FEATURES).map(|j| (j as f64).powf(-0.6)).collect();
        let clients = sizes
            .iter()
            .enumerate()
            .map(|(client, &n)| {
                let mut rng = stream(params.seed, Domain::Task, &[2, client as u64]);
                generate_client(&params, n, &cov_std, &mut rng)
            })
            .collect();

        Self::from_clients(clients, Some(params))
    }

    pub fn from_clients(clients: Vec<ClientSamples>, params: Option<SyntheticParams>) -> Result<Self> {
        if clients.is_empty() {
            return Err(Error::invalid("dataset needs at least one client"));
        }
        for (k, c) in clients.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::EmptyClient(k));
            }
            if c.features.len() != c.len() * NUM_FEATURES {
                return Err(Error::invalid(format!("client {k}: feature buffer has wrong length")));
            }
            if c.labels.iter().any(|&y| y as usize >= NUM_CLASSES) {
                return Err(Error::invalid(format!("client {k}: label out of range")));
            }
            if c.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("client {k}: non-finite feature")));
            }
        }
        let sizes: Vec<usize> = clients.iter().map(ClientSamples::len).collect();
        let p = DataFractions::from_sizes(&sizes)?;
        Ok(SyntheticDataset { clients, p, params })
    }

    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn client(&self, k: usize) -> &ClientSamples {
        &self.clients[k]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clients.iter().map(ClientSamples::len).collect()
    }

    pub fn fractions(&self) -> &DataFractions {
        &self.p
    }

    pub fn params(&self) -> Option<&SyntheticParams> {
        self.params.as_ref()
    }

    /// One JSON record per line: `{"client":k,"label":y,"x":[...]}`.
    /// Floats are written in shortest round-trip form, so a re-import is
    /// bit-exact.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (k, c) in self.clients.iter().enumerate() {
            for i in 0..c.len() {
                let rec = SampleRecord {
                    client: k,
                    label: c.labels[i],
                    x: c.feature(i).to_vec(),
                };
                serde_json::to_writer(&mut out, &rec)?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut clients: Vec<ClientSamples> = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::format("dataset", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SampleRecord = serde_json::from_str(&line)
                .map_err(|e| Error::format("dataset", format!("line {}: {e}", lineno + 1)))?;
            if rec.x.len() != NUM_FEATURES {
                return Err(Error::format(
                    "dataset",
                    format!("line {}: expected {NUM_FEATURES} features", lineno + 1),
                ));
            }
            if rec.client >= clients.len() {
                clients.resize_with(rec.client + 1, ClientSamples::default);
            }
            let c = &mut clients[rec.client];
            c.labels.push(rec.label);
            c.features.extend_from_slice(&rec.x);
        }
        Self::from_clients(clients, None)
    }
}

fn generate_client<R: Rng>(
    params: &SyntheticParams,
    n: usize,
    cov_std: &[f64],
    rng: &mut R,
) -> ClientSamples {
    let normal = |rng: &mut R, mean: f64, std: f64| -> f64 {
        Normal::new(mean, std).expect("finite std").sample(rng)
    };
    let model_mean = normal(rng, 0.0, params.alpha);
    let feature_shift = normal(rng, 0.0, params.beta);

    let weights: Vec<f64> = (0..NUM_CLASSES * NUM_FEATURES)
        .map(|_| normal(rng, model_mean, 1.0))
        .collect();
    let bias: Vec<f64> = (0..NUM_CLASSES).map(|_| normal(rng, model_mean, 1.0)).collect();
    let feature_mean: Vec<f64> = (0..NUM_FEATURES).map(|_| normal(rng, feature_shift, 1.0)).collect();

    let mut features = Vec::with_capacity(n * NUM_FEATURES);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let start = features.len();
        for j in 0..NUM_FEATURES {
            let z: f64 = StandardNormal.sample(rng);
            features.push(feature_mean[j] + cov_std[j] * z);
        }
        let x = &features[start..];
        let mut best = (0usize, f64::NEG_INFINITY);
        for c in 0..NUM_CLASSES {
            let row = &weights[c * NUM_FEATURES..(c + 1) * NUM_FEATURES];
            let logit = bias[c] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            if logit > best.1 {
                best = (c, logit);
            }
        }
        labels.push(best.0 as u8);
    }
    ClientSamples { features, labels }
}
