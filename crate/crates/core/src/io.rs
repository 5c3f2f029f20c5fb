//! Data files, fit reports and plot data.
//!
//! Raw data: one numeric column, optionally headed `value`. Grouped data:
//! header `lower,upper,frequency`, one class per row. Reports are JSON with a
//! `schema_version` field.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{GroupClass, GroupedSample, Sample};
use crate::error::{Error, Result};
use crate::estimate::lspfe::{fit_lspfe, LspfeDiagnostics};
use crate::estimate::mle::{fit_mle, MleOptions};
use crate::estimate::{mme, EstimationResult, Method};
use crate::gof::ks_statistic;
use crate::model::{cdf, pdf};
use crate::numerics::QuadratureSpec;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const PLOT_POINTS: usize = 200;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn csv_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

pub fn read_raw_csv(path: &Path) -> Result<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = csv_line(&record);
        let field = record.get(0).unwrap_or("");
        if record.len() == 1 && field.is_empty() {
            continue;
        }
        if i == 0 && field.eq_ignore_ascii_case("value") {
            continue;
        }
        if record.len() != 1 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected one column, found {}", record.len()),
            });
        }
        let x: f64 = field.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("`{field}` is not a number"),
        })?;
        if !x.is_finite() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("`{field}` is not finite"),
            });
        }
        values.push(x);
    }
    if values.is_empty() {
        return Err(Error::Input {
            path: path.to_path_buf(),
            message: "no observations".into(),
        });
    }
    Sample::new(values)
}

pub fn read_grouped_csv(path: &Path) -> Result<GroupedSample> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let headers = reader.headers()?.clone();
    let expected = ["lower", "upper", "frequency"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| !h.eq_ignore_ascii_case(e)) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("header must be `lower,upper,frequency`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut classes = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = csv_line(&record);
        let class: GroupClass = record.deserialize(Some(&headers)).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        classes.push(class);
    }
    GroupedSample::new(classes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Raw,
    Grouped,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitInput {
    Raw(Sample),
    Grouped(GroupedSample),
}

impl FitInput {
    pub fn read(path: &Path, format: InputFormat) -> Result<Self> {
        Ok(match format {
            InputFormat::Raw => FitInput::Raw(read_raw_csv(path)?),
            InputFormat::Grouped => FitInput::Grouped(read_grouped_csv(path)?),
        })
    }

    pub fn format(&self) -> InputFormat {
        match self {
            FitInput::Raw(_) => InputFormat::Raw,
            FitInput::Grouped(_) => InputFormat::Grouped,
        }
    }

    pub fn negated(&self) -> Self {
        match self {
            FitInput::Raw(s) => FitInput::Raw(s.negated()),
            FitInput::Grouped(g) => FitInput::Grouped(g.negated()),
        }
    }

    /// Observations as seen by the likelihood methods: grouped data become
    /// class midpoints.
    pub fn sample(&self) -> Sample {
        match self {
            FitInput::Raw(s) => s.clone(),
            FitInput::Grouped(g) => g.expand(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDescriptor {
    pub path: PathBuf,
    pub format: InputFormat,
    pub negated: bool,
    pub n: usize,
    pub min: f64,
    pub max: f64,
}

/// Outcome of one method: the estimate with its diagnostics, or the error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodFit {
    pub method: Method,
    pub result: Option<EstimationResult>,
    pub lspfe: Option<LspfeDiagnostics>,
    /// Kolmogorov-Smirnov distance between the data and the fitted model.
    pub ks_statistic: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub timestamp: String,
    pub input: InputDescriptor,
    pub fits: Vec<MethodFit>,
}

impl FitReport {
    pub fn all_succeeded(&self) -> bool {
        self.fits.iter().all(|f| f.result.is_some())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FitSettings {
    pub quadrature: QuadratureSpec,
    pub mle: MleOptions,
}

pub fn fit_method(method: Method, input: &FitInput, settings: &FitSettings) -> MethodFit {
    let s = input.sample();
    let outcome = match (method, input) {
        (Method::Mme, FitInput::Grouped(g)) => mme::fit_mme_grouped(g).map(|r| (r, None)),
        (Method::Mme, FitInput::Raw(_)) => mme::fit_mme(&s).map(|r| (r, None)),
        (Method::Mle, _) => fit_mle(&s, &settings.mle).map(|r| (r, None)),
        (Method::Lspfe, _) => fit_lspfe(&s, &settings.quadrature).map(|f| (f.result, Some(f.diagnostics))),
    };
    match outcome {
        Ok((result, lspfe)) => MethodFit {
            method,
            ks_statistic: Some(ks_statistic(&s, |x| cdf(x, &result.params))),
            result: Some(result),
            lspfe,
            error: None,
        },
        Err(e) => MethodFit {
            method,
            result: None,
            lspfe: None,
            ks_statistic: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn fit_report(
    path: &Path,
    input: &FitInput,
    negated: bool,
    methods: &[Method],
    settings: &FitSettings,
    timestamp: String,
) -> FitReport {
    let s = input.sample();
    FitReport {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp,
        input: InputDescriptor {
            path: path.to_path_buf(),
            format: input.format(),
            negated,
            n: s.n(),
            min: if s.is_empty() { f64::NAN } else { s.min() },
            max: if s.is_empty() { f64::NAN } else { s.max() },
        },
        fits: methods.iter().map(|&m| fit_method(m, input, settings)).collect(),
    }
}

/// Empirical and fitted curves on `PLOT_POINTS` points from
/// `min - 0.05 * spread` to the largest fitted location.
pub fn write_plot_data<W: Write>(s: &Sample, fits: &[&EstimationResult], writer: W) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("plot data needs observations".into()));
    }
    let lo = s.min() - 0.05 * s.spread();
    let hi = fits.iter().map(|f| f.params.gamma).fold(s.max(), f64::max);
    let hi = if hi > lo { hi } else { lo + 1.0 };
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["x".to_string(), "empirical_cdf".to_string()];
    header.extend(fits.iter().map(|f| format!("fitted_cdf_{}", f.method)));
    header.extend(fits.iter().map(|f| format!("fitted_pdf_{}", f.method)));
    w.write_record(&header)?;
    let n = s.n() as f64;
    let values = s.values();
    for i in 0..PLOT_POINTS {
        let x = if i + 1 == PLOT_POINTS {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (PLOT_POINTS - 1) as f64
        };
        let below = values.partition_point(|&v| v <= x);
        let mut row = vec![x, below as f64 / n];
        row.extend(fits.iter().map(|f| cdf(x, &f.params)));
        row.extend(fits.iter().map(|f| pdf(x, &f.params)));
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
