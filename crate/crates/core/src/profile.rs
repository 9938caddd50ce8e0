//! Node-indexed real vectors: ideal points, actions and perturbations.

use std::ops::Deref;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|Σ z_i|` (scaled by `max(1, ‖z‖₁)`) for mean-zero checks.
pub const MEAN_ZERO_TOL: f64 = 1e-9;

/// A finite real value per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Profile(DVector<f64>);

impl Profile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "profile entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self(DVector::from_vec(values)))
    }

    /// Wraps a vector without the finiteness check. Used on values produced by
    /// arithmetic on already-validated profiles.
    pub fn from_vector(v: DVector<f64>) -> Self {
        Self(v)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(n))
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(DVector::from_element(n, c))
    }

    /// Standard basis vector `e_k` (0-based).
    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        Self(v)
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.0.sum() / self.0.len() as f64
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_mean_zero(&self) -> bool {
        self.0.sum().abs() <= MEAN_ZERO_TOL * self.0.lp_norm(1).max(1.0)
    }

    /// Returns an error unless the entries sum to zero within [`MEAN_ZERO_TOL`].
    pub fn require_mean_zero(&self) -> Result<()> {
        if self.is_mean_zero() {
            Ok(())
        } else {
            Err(Error::NotMeanZero { sum: self.0.sum() })
        }
    }

    /// The profile minus its mean.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        Self(self.0.map(|v| v - m))
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.0.len() == n {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: n,
                got: self.0.len(),
            })
        }
    }
}

impl Deref for Profile {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl From<DVector<f64>> for Profile {
    fn from(v: DVector<f64>) -> Self {
        Self(v)
    }
}

impl TryFrom<Vec<f64>> for Profile {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Profile> for Vec<f64> {
    fn from(p: Profile) -> Vec<f64> {
        p.0.iter().copied().collect()
    }
}

/// Which way the planner pushes welfare.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Maximizes welfare (γ = +1).
    Benevolent,
    /// Minimizes welfare (γ = −1).
    Malevolent,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Benevolent => 1.0,
            Direction::Malevolent => -1.0,
        }
    }

    pub fn from_sign(gamma: i32) -> Result<Self> {
        match gamma {
            1 => Ok(Direction::Benevolent),
            -1 => Ok(Direction::Malevolent),
            other => Err(Error::InvalidParameter(format!(
                "gamma must be +1 or -1, got {other}"
            ))),
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "benevolent" | "+1" | "1" => Ok(Direction::Benevolent),
            "malevolent" | "-1" => Ok(Direction::Malevolent),
            other => Err(Error::InvalidParameter(format!(
                "unknown planner direction {other:?} (expected benevolent or malevolent)"
            ))),
        }
    }
}

/// Coordination weight β and planner direction γ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    beta: f64,
    gamma: Direction,
}

impl GameParams {
    pub fn new(beta: f64, gamma: Direction) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in [0, 1), got {beta}"
            )));
        }
        Ok(Self { beta, gamma })
    }

    /// Parameters for computations that never consult the planner direction.
    pub fn with_beta(beta: f64) -> Result<Self> {
        Self::new(beta, Direction::Malevolent)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> Direction {
        self.gamma
    }

    pub fn with_direction(mut self, gamma: Direction) -> Self {
        self.gamma = gamma;
        self
    }
}
