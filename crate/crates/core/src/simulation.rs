//! Monte Carlo comparison of the estimators.
//!
//! Each cell `(method, delta, n)` draws `replications` samples from the model
//! with the configured true scale and location, fits them and summarizes the
//! errors by bias and RMSE per parameter. Replication seeds depend on
//! `(base_seed, delta, n, r)` but not on the method, so all methods in a cell
//! see the same samples, and any cell can be rerun on its own.

use std::fmt::Write as _;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::estimate::mle::{fit_mle, MleOptions};
use crate::estimate::{lspfe, mme, Method};
use crate::model::{sample, RwParams};
use crate::numerics::QuadratureSpec;

pub const SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_SEED: u64 = 20_240_101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub schema_version: u32,
    pub delta_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub beta_true: f64,
    pub gamma_true: f64,
    pub methods: Vec<Method>,
    pub base_seed: u64,
    pub quadrature: QuadratureSpec,
    pub mle: MleOptions,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            delta_values: vec![0.5, 1.0, 2.0, 3.0, 4.0, 5.0],
            n_values: vec![20, 50, 100],
            replications: 100,
            beta_true: 10.0,
            gamma_true: 0.0,
            methods: Method::ALL.to_vec(),
            base_seed: DEFAULT_SEED,
            quadrature: QuadratureSpec::default(),
            mle: MleOptions::default(),
        }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.to_string(),
        message: message.into(),
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.delta_values.is_empty() {
            return Err(invalid("delta_values", "at least one shape value required"));
        }
        if let Some(d) = self.delta_values.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(invalid("delta_values", format!("shape values must be > 0, got {d}")));
        }
        if self.n_values.is_empty() {
            return Err(invalid("n_values", "at least one sample size required"));
        }
        if let Some(n) = self.n_values.iter().find(|n| **n < 3) {
            return Err(invalid("n_values", format!("sample sizes must be >= 3, got {n}")));
        }
        if self.replications == 0 {
            return Err(invalid("replications", "must be >= 1"));
        }
        if !(self.beta_true.is_finite() && self.beta_true > 0.0) {
            return Err(invalid("beta_true", format!("must be > 0, got {}", self.beta_true)));
        }
        if !self.gamma_true.is_finite() {
            return Err(invalid("gamma_true", "must be finite"));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods", "at least one method required"));
        }
        self.quadrature
            .validate()
            .map_err(|e| invalid("quadrature", e.to_string()))?;
        self.mle.validate().map_err(|e| invalid("mle", e.to_string()))?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn cell_count(&self) -> usize {
        self.delta_values.len() * self.n_values.len() * self.methods.len()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `r` in the cell `(delta, n)`.
pub fn replication_seed(base_seed: u64, delta: f64, n: usize, r: usize) -> u64 {
    [delta.to_bits(), n as u64, r as u64]
        .into_iter()
        .fold(splitmix64(base_seed), |h, v| splitmix64(h ^ v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamMetrics {
    pub bias: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub location: ParamMetrics,
    pub shape: ParamMetrics,
    pub scale: ParamMetrics,
    pub joint_bias: f64,
    pub joint_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub method: Method,
    pub delta: f64,
    pub n: usize,
    /// Absent when every replication failed.
    pub metrics: Option<CellMetrics>,
    pub successes: usize,
    pub failure_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub cells: Vec<CellReport>,
}

/// Mean of the three biases and Euclidean norm of the three RMSEs.
pub fn joint_metrics(biases: [f64; 3], rmses: [f64; 3]) -> (f64, f64) {
    let bias = biases.iter().sum::<f64>() / 3.0;
    let rmse = rmses.iter().map(|r| r * r).sum::<f64>().sqrt();
    (bias, rmse)
}

/// Point estimate of `method` as used by the harness. A boundary MLE still
/// counts as an estimate.
pub fn fit_params(method: Method, s: &Sample, config: &SimConfig) -> Result<RwParams> {
    match method {
        Method::Lspfe => lspfe::fit_lspfe(s, &config.quadrature).map(|f| f.result.params),
        Method::Mle => fit_mle(s, &config.mle).map(|f| f.params),
        Method::Mme => mme::fit_mme(s).map(|f| f.params),
    }
}

/// One cell with an arbitrary estimator standing in for `method`.
pub fn run_cell_with<F>(method: Method, delta: f64, n: usize, config: &SimConfig, fit: F) -> Result<CellReport>
where
    F: Fn(&Sample) -> Result<RwParams> + Sync,
{
    let truth = RwParams::new(delta, config.beta_true, config.gamma_true)?;
    let errors: Vec<Option<[f64; 3]>> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let s = sample(n, &truth, replication_seed(config.base_seed, delta, n, r));
            match fit(&s) {
                Ok(p) => Some([p.gamma - truth.gamma, p.delta - truth.delta, p.beta - truth.beta]),
                Err(e) => {
                    log::debug!("{method} delta={delta} n={n} replication {r}: {e}");
                    None
                }
            }
        })
        .collect();
    let mut sum = [0.0; 3];
    let mut sum_sq = [0.0; 3];
    let mut successes = 0;
    for e in errors.iter().flatten() {
        successes += 1;
        for k in 0..3 {
            sum[k] += e[k];
            sum_sq[k] += e[k] * e[k];
        }
    }
    let failure_count = config.replications - successes;
    let metrics = (successes > 0).then(|| {
        let m = successes as f64;
        let pm = |k: usize| ParamMetrics {
            bias: sum[k] / m,
            rmse: (sum_sq[k] / m).sqrt(),
        };
        let (location, shape, scale) = (pm(0), pm(1), pm(2));
        let (joint_bias, joint_rmse) = joint_metrics(
            [location.bias, shape.bias, scale.bias],
            [location.rmse, shape.rmse, scale.rmse],
        );
        CellMetrics {
            location,
            shape,
            scale,
            joint_bias,
            joint_rmse,
        }
    });
    if metrics.is_none() {
        log::warn!("{method} delta={delta} n={n}: all {} replications failed", config.replications);
    }
    Ok(CellReport {
        method,
        delta,
        n,
        metrics,
        successes,
        failure_count,
    })
}

pub fn run_cell(method: Method, delta: f64, n: usize, config: &SimConfig) -> Result<CellReport> {
    run_cell_with(method, delta, n, config, |s| fit_params(method, s, config))
}

/// Every cell of the grid, ordered by shape, then sample size, then method.
pub fn run(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let mut cells = Vec::with_capacity(config.cell_count());
    for &delta in &config.delta_values {
        for &n in &config.n_values {
            for &method in &config.methods {
                log::info!("cell {method} delta={delta} n={n}");
                cells.push(run_cell(method, delta, n, config)?);
            }
        }
    }
    Ok(SimReport {
        config: config.clone(),
        cells,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    method: Method,
    delta: f64,
    n: usize,
    location_bias: Option<f64>,
    location_rmse: Option<f64>,
    shape_bias: Option<f64>,
    shape_rmse: Option<f64>,
    scale_bias: Option<f64>,
    scale_rmse: Option<f64>,
    joint_bias: Option<f64>,
    joint_rmse: Option<f64>,
    successes: usize,
    failures: usize,
}

impl From<&CellReport> for CsvRow {
    fn from(c: &CellReport) -> Self {
        let m = c.metrics.as_ref();
        Self {
            method: c.method,
            delta: c.delta,
            n: c.n,
            location_bias: m.map(|m| m.location.bias),
            location_rmse: m.map(|m| m.location.rmse),
            shape_bias: m.map(|m| m.shape.bias),
            shape_rmse: m.map(|m| m.shape.rmse),
            scale_bias: m.map(|m| m.scale.bias),
            scale_rmse: m.map(|m| m.scale.rmse),
            joint_bias: m.map(|m| m.joint_bias),
            joint_rmse: m.map(|m| m.joint_rmse),
            successes: c.successes,
            failures: c.failure_count,
        }
    }
}

impl CsvRow {
    fn into_cell(self) -> CellReport {
        let metrics = (|| {
            Some(CellMetrics {
                location: ParamMetrics {
                    bias: self.location_bias?,
                    rmse: self.location_rmse?,
                },
                shape: ParamMetrics {
                    bias: self.shape_bias?,
                    rmse: self.shape_rmse?,
                },
                scale: ParamMetrics {
                    bias: self.scale_bias?,
                    rmse: self.scale_rmse?,
                },
                joint_bias: self.joint_bias?,
                joint_rmse: self.joint_rmse?,
            })
        })();
        CellReport {
            method: self.method,
            delta: self.delta,
            n: self.n,
            metrics,
            successes: self.successes,
            failure_count: self.failures,
        }
    }
}

/// One CSV row per cell; metric columns are empty for unavailable cells.
pub fn write_csv<W: Write>(cells: &[CellReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for c in cells {
        w.serialize(CsvRow::from(c))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<CellReport>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize::<CsvRow>()
        .map(|row| Ok(row?.into_cell()))
        .collect()
}

/// Fixed-width table in the layout of the published comparison tables.
pub fn render_text(cells: &[CellReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6} {:>5} {:<6} | {:^17} | {:^17} | {:^17} | {:^17} | {:>5}",
        "delta", "n", "method", "location", "shape", "scale", "joint", "fail"
    );
    let _ = writeln!(
        out,
        "{:>6} {:>5} {:<6} | {:>8} {:>8} | {:>8} {:>8} | {:>8} {:>8} | {:>8} {:>8} | {:>5}",
        "", "", "", "bias", "rmse", "bias", "rmse", "bias", "rmse", "bias", "rmse", ""
    );
    for c in cells {
        let _ = write!(out, "{:>6} {:>5} {:<6} |", c.delta, c.n, c.method.as_str().to_uppercase());
        match &c.metrics {
            Some(m) => {
                for p in [m.location, m.shape, m.scale] {
                    let _ = write!(out, " {:>8.4} {:>8.4} |", p.bias, p.rmse);
                }
                let _ = write!(out, " {:>8.4} {:>8.4} |", m.joint_bias, m.joint_rmse);
            }
            None => {
                for _ in 0..4 {
                    let _ = write!(out, " {:>8} {:>8} |", "n/a", "n/a");
                }
            }
        }
        let _ = writeln!(out, " {:>5}", c.failure_count);
    }
    out
}
