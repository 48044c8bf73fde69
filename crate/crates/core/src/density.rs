//! The four BI-RADS breast density categories and probability
//! distributions over them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// BI-RADS breast density category: A (fatty) through D (extremely dense).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Density {
    A,
    B,
    C,
    D,
}

pub const DENSITY_CLASSES: [Density; 4] = [Density::A, Density::B, Density::C, Density::D];

#[derive(Debug, Error, PartialEq)]
pub enum DensityError {
    #[error("unknown density code {0:?}")]
    UnknownCode(String),
    #[error("distribution entries must be finite and non-negative, got {0}")]
    BadEntry(f64),
    #[error("distribution must sum to 1, got {0}")]
    BadSum(f64),
}

impl Density {
    /// Ordinal encoding A=0 .. D=3.
    pub fn index(self) -> usize {
        match self {
            Density::A => 0,
            Density::B => 1,
            Density::C => 2,
            Density::D => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Density> {
        DENSITY_CLASSES.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Density::A => "A",
            Density::B => "B",
            Density::C => "C",
            Density::D => "D",
        }
    }

    /// Dense (C or D) vs non-dense (A or B) dichotomy.
    pub fn is_dense(self) -> bool {
        matches!(self, Density::C | Density::D)
    }
}

impl std::str::FromStr for Density {
    type Err = DensityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Density::A),
            "B" | "b" => Ok(Density::B),
            "C" | "c" => Ok(Density::C),
            "D" | "d" => Ok(Density::D),
            other => Err(DensityError::UnknownCode(other.to_string())),
        }
    }
}

impl std::fmt::Display for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Probability vector over the four density classes, ordered (A, B, C, D).
///
/// Entries are non-negative and sum to 1 within 1e-9; construction enforces
/// this.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityDistribution([f64; 4]);

impl DensityDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(p: [f64; 4]) -> Result<Self, DensityError> {
        for &v in &p {
            if !v.is_finite() || !(0.0..=1.0 + Self::SUM_TOLERANCE).contains(&v) {
                return Err(DensityError::BadEntry(v));
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(DensityError::BadSum(sum));
        }
        Ok(DensityDistribution(p))
    }

    /// Point mass on a single class.
    pub fn one_hot(class: Density) -> Self {
        let mut p = [0.0; 4];
        p[class.index()] = 1.0;
        DensityDistribution(p)
    }

    pub fn uniform() -> Self {
        DensityDistribution([0.25; 4])
    }

    pub fn probabilities(&self) -> [f64; 4] {
        self.0
    }

    pub fn prob(&self, class: Density) -> f64 {
        self.0[class.index()]
    }

    /// Most probable class; ties break toward the lower class index.
    pub fn argmax(&self) -> Density {
        let mut best = 0;
        for k in 1..4 {
            if self.0[k] > self.0[best] {
                best = k;
            }
        }
        Density::from_index(best).unwrap()
    }

    /// Probability of dense tissue, p(C) + p(D).
    pub fn dense_score(&self) -> f64 {
        self.0[2] + self.0[3]
    }
}
