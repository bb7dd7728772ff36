//! Discrepancy functions comparing replicated and observed validation responses.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geodata::cholesky_with_jitter;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum DiscrepancyKind {
    Mse,
    Mahalanobis,
}

impl fmt::Display for DiscrepancyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiscrepancyKind::Mse => write!(f, "mse"),
            DiscrepancyKind::Mahalanobis => write!(f, "mahalanobis"),
        }
    }
}

impl FromStr for DiscrepancyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(DiscrepancyKind::Mse),
            "mahalanobis" => Ok(DiscrepancyKind::Mahalanobis),
            other => Err(Error::Domain(format!("unknown discrepancy '{other}'"))),
        }
    }
}

/// Mean squared prediction error over the validation sites.
pub fn mse<T: Scalar>(y_rep: &DVector<T>, y_obs: &DVector<T>) -> Result<T> {
    if y_rep.len() != y_obs.len() || y_rep.is_empty() {
        return Err(Error::Shape(format!(
            "mse needs equal nonempty lengths, got {} and {}",
            y_rep.len(),
            y_obs.len()
        )));
    }
    let diff = y_rep - y_obs;
    Ok(diff.norm_squared() / T::of(y_rep.len() as f64))
}

/// Mahalanobis distance sqrt(d' Sigma^{-1} d) over the validation sites,
/// computed through a Cholesky solve.
pub fn mahalanobis<T: Scalar>(
    y_rep: &DVector<T>,
    y_obs: &DVector<T>,
    sigma: &DMatrix<T>,
) -> Result<T> {
    if y_rep.len() != y_obs.len() || y_rep.is_empty() {
        return Err(Error::Shape(format!(
            "mahalanobis needs equal nonempty lengths, got {} and {}",
            y_rep.len(),
            y_obs.len()
        )));
    }
    if sigma.nrows() != y_rep.len() || sigma.ncols() != y_rep.len() {
        return Err(Error::Shape(format!(
            "covariance is {}x{} but vectors have length {}",
            sigma.nrows(),
            sigma.ncols(),
            y_rep.len()
        )));
    }
    let chol = cholesky_with_jitter(sigma)?;
    let diff = y_rep - y_obs;
    let solved = chol.solve(&diff);
    Ok(Float::sqrt(diff.dot(&solved)))
}
