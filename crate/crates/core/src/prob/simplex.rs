use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum tolerance for accepting a vector as a probability distribution.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A probability distribution over `0..K`: entries are non-negative and sum
/// to 1 within [`SIMPLEX_TOL`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexVector {
    weights: Vec<f64>,
}

impl SimplexVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("simplex vector must have dimension >= 1"));
        }
        let mut sum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(format!(
                    "simplex entry {i} is {w}, must be finite and non-negative"
                )));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!(
                "simplex entries sum to {sum}, not 1"
            )));
        }
        Ok(SimplexVector { weights })
    }

    /// Normalizes a non-negative vector with positive total mass.
    pub fn from_unnormalized(mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !sum.is_finite() || sum <= 0.0 {
            return Err(Error::invalid(format!(
                "cannot normalize weights with total {sum}"
            )));
        }
        for w in &mut weights {
            *w /= sum;
        }
        SimplexVector::new(weights)
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0);
        SimplexVector {
            weights: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(k: usize, at: usize) -> Self {
        assert!(at < k);
        let mut weights = vec![0.0; k];
        weights[at] = 1.0;
        SimplexVector { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// Shannon entropy in nats, with `0 ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for &p in &self.weights {
            if p > 0.0 {
                h -= p * libm::log(p);
            }
        }
        h
    }

    /// L1 distance to another distribution of the same dimension (range
    /// `[0, 2]`).
    pub fn l1_distance(&self, other: &SimplexVector) -> f64 {
        assert_eq!(self.len(), other.len(), "dimension mismatch in l1_distance");
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

impl std::ops::Index<usize> for SimplexVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.weights[i]
    }
}

impl TryFrom<Vec<f64>> for SimplexVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexVector::new(v)
    }
}

impl From<SimplexVector> for Vec<f64> {
    fn from(s: SimplexVector) -> Vec<f64> {
        s.weights
    }
}
