//! Estimators for the reflected Weibull parameters.

pub mod lspfe;
pub mod mle;
pub mod mme;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::RwParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lspfe,
    Mle,
    Mme,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Lspfe, Method::Mle, Method::Mme];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Lspfe => "lspfe",
            Method::Mle => "mle",
            Method::Mme => "mme",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lspfe" | "lspf" => Ok(Method::Lspfe),
            "mle" | "ml" => Ok(Method::Mle),
            "mme" | "mm" => Ok(Method::Mme),
            other => Err(format!("unknown method `{other}` (expected lspfe, mle or mme)")),
        }
    }
}

/// Fitted parameters with the diagnostics every estimator reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub method: Method,
    pub params: RwParams,
    /// Maximized log-likelihood: the full-sample likelihood for MLE, the
    /// W-statistic likelihood for LSPFE, absent for MME.
    pub log_likelihood: Option<f64>,
    pub converged: bool,
    pub boundary_hit: bool,
    pub iterations: usize,
    pub notes: String,
}
