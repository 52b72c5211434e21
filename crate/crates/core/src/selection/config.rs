use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionKind {
    /// Sampling proportional to data fractions.
    Rand,
    PowD,
    CpowD,
    RpowD,
}

fn default_replacement() -> bool {
    true
}

fn default_estimate_batch() -> usize {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    pub kind: SelectionKind,
    /// Clients selected per round.
    pub m: usize,
    /// Candidate set size; ignored by `rand`.
    #[serde(default)]
    pub d: usize,
    /// `rand` only: sample with replacement.
    #[serde(default = "default_replacement")]
    pub replacement: bool,
    /// `cpow-d` only: mini-batch size of each candidate's loss estimate.
    #[serde(default = "default_estimate_batch")]
    pub estimate_batch: usize,
}

impl SelectionConfig {
    pub fn rand(m: usize, replacement: bool) -> Self {
        SelectionConfig {
            kind: SelectionKind::Rand,
            m,
            d: 0,
            replacement,
            estimate_batch: default_estimate_batch(),
        }
    }

    pub fn pow_d(m: usize, d: usize) -> Self {
        SelectionConfig {
            kind: SelectionKind::PowD,
            m,
            d,
            replacement: false,
            estimate_batch: default_estimate_batch(),
        }
    }

    pub fn cpow_d(m: usize, d: usize, estimate_batch: usize) -> Self {
        SelectionConfig {
            kind: SelectionKind::CpowD,
            estimate_batch,
            ..Self::pow_d(m, d)
        }
    }

    pub fn rpow_d(m: usize, d: usize) -> Self {
        SelectionConfig {
            kind: SelectionKind::RpowD,
            ..Self::pow_d(m, d)
        }
    }

    /// Whether a client can occupy several slots in one round.
    pub fn allows_duplicates(&self) -> bool {
        self.kind == SelectionKind::Rand && self.replacement
    }

    pub fn validate(&self, clients: usize) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        if clients == 0 {
            return Err(Error::invalid("no clients"));
        }
        if !self.allows_duplicates() && self.m > clients {
            return Err(Error::invalid(format!("m = {} exceeds the {clients} clients", self.m)));
        }
        match self.kind {
            SelectionKind::Rand => {}
            SelectionKind::PowD | SelectionKind::CpowD | SelectionKind::RpowD => {
                if self.d < self.m {
                    return Err(Error::invalid(format!("d = {} is smaller than m = {}", self.d, self.m)));
                }
                if self.d > clients {
                    return Err(Error::invalid(format!("d = {} exceeds the {clients} clients", self.d)));
                }
            }
        }
        if self.kind == SelectionKind::CpowD && self.estimate_batch == 0 {
            return Err(Error::invalid("estimate_batch must be positive"));
        }
        Ok(())
    }

    /// Short name used in output file names and tables.
    pub fn label(&self) -> String {
        match self.kind {
            SelectionKind::Rand if self.replacement => "rand".into(),
            SelectionKind::Rand => "rand-wor".into(),
            SelectionKind::PowD => format!("pow-d{}", self.d),
            SelectionKind::CpowD => format!("cpow-d{}", self.d),
            SelectionKind::RpowD => format!("rpow-d{}", self.d),
        }
    }
}
