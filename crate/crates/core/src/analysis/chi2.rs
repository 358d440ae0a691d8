use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The model a set of expected counts came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelTag {
    Qm,
    Ebcm { alpha: f64 },
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelTag::Qm => f.write_str("qm"),
            ModelTag::Ebcm { alpha } => write!(f, "ebcm(alpha={alpha})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareReport {
    pub chi2: f64,
    pub dof: usize,
    pub reduced_chi2: f64,
    pub model: ModelTag,
    pub n_free: usize,
    /// `(O - E) / sigma` per point.
    pub per_point_residuals: Vec<f64>,
}

/// Pearson chi-square of `observed` against `expected` with
/// `sigma = sqrt(max(E, 1))`.
pub fn chi2_reduced(
    observed: &[f64],
    expected: &[f64],
    n_free: usize,
    model: ModelTag,
) -> Result<ChiSquareReport> {
    if observed.len() != expected.len() {
        return Err(Error::Domain {
            name: "expected.len",
            value: expected.len() as f64,
            expected: "one expected count per observed point",
        });
    }
    if observed.len() <= n_free {
        return Err(Error::Domain {
            name: "dof",
            value: observed.len() as f64 - n_free as f64,
            expected: "> 0",
        });
    }
    let per_point_residuals: Vec<f64> = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) / e.max(1.0).sqrt())
        .collect();
    let chi2: f64 = per_point_residuals.iter().map(|r| r * r).sum();
    let dof = observed.len() - n_free;
    Ok(ChiSquareReport {
        chi2,
        dof,
        reduced_chi2: chi2 / dof as f64,
        model,
        n_free,
        per_point_residuals,
    })
}
