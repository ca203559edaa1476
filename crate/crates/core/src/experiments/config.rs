//! Declarative comparison-run configuration: a TOML file with one
//! `[experiment]` section, one `[source]` section, and one `[[method]]`
//! table per calibrator.
//!
//! ```toml
//! [experiment]
//! seed = 7
//! repetitions = 100
//! bins = 10
//! calibration_sizes = [500, 1000]
//! test_n = 5000
//!
//! [source]
//! kind = "synthetic"
//! score = "beta"
//! beta_alpha = 2.0
//! beta_beta = 5.0
//! eta = "logistic-warp"
//! slope = 4.0
//! center = 0.5
//!
//! [[method]]
//! calibrator = "umd"
//!
//! [[method]]
//! calibrator = "ums"
//! split_fraction = 0.5
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::calibrators::{CalibratorKind, DEFAULT_DELTA, DEFAULT_SPLIT_FRACTION};
use crate::data::{RegressionFn, ScoreDistribution, SyntheticSpec};
use crate::error::{Error, Result};
use crate::experiments::{ComparisonConfig, ComparisonSource, MethodSpec};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSchema {
    experiment: ExperimentSection,
    source: SourceSection,
    #[serde(default)]
    method: Vec<MethodSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    #[serde(default)]
    seed: u64,
    repetitions: usize,
    bins: usize,
    calibration_sizes: Vec<usize>,
    test_n: usize,
    #[serde(default = "default_grid_points")]
    grid_points: usize,
    #[serde(default = "default_delta")]
    delta: f64,
}

fn default_grid_points() -> usize {
    1001
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceSection {
    kind: String,
    // synthetic fields
    score: Option<String>,
    beta_alpha: Option<f64>,
    beta_beta: Option<f64>,
    eta: Option<String>,
    exponent: Option<f64>,
    slope: Option<f64>,
    center: Option<f64>,
    breaks: Option<Vec<f64>>,
    values: Option<Vec<f64>>,
    // csv fields
    path: Option<String>,
    label_column: Option<String>,
    train: Option<usize>,
    scaler: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MethodSection {
    calibrator: String,
    label: Option<String>,
    split_fraction: Option<f64>,
    delta: Option<f64>,
}

/// Parses a comparison configuration file.
pub fn load_comparison_config(path: impl AsRef<Path>) -> Result<ComparisonConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_comparison_config(&text)
}

pub fn parse_comparison_config(text: &str) -> Result<ComparisonConfig> {
    let file: FileSchema =
        toml::from_str(text).map_err(|e| Error::data(format!("config: {e}")))?;

    let source = match file.source.kind.as_str() {
        "synthetic" => {
            let spec = synthetic_from(&file.source, file.experiment.seed)?;
            ComparisonSource::Synthetic(spec)
        }
        "csv" => ComparisonSource::Csv {
            path: file
                .source
                .path
                .as_deref()
                .ok_or_else(|| Error::data("config: csv source needs `path`"))?
                .into(),
            label_column: file
                .source
                .label_column
                .clone()
                .unwrap_or_else(|| "label".to_string()),
            train: file
                .source
                .train
                .ok_or_else(|| Error::data("config: csv source needs `train`"))?,
            scaler: file
                .source
                .scaler
                .ok_or_else(|| Error::data("config: csv source needs `scaler`"))?,
        },
        other => {
            return Err(Error::data(format!(
                "config: unknown source kind {other:?}; expected synthetic | csv"
            )))
        }
    };

    if file.method.is_empty() {
        return Err(Error::data("config: at least one [[method]] required"));
    }
    let methods = file
        .method
        .iter()
        .map(|m| {
            let kind: CalibratorKind = m.calibrator.parse()?;
            Ok(MethodSpec {
                kind,
                label: m.label.clone().unwrap_or_else(|| kind.name().to_string()),
                split_fraction: m.split_fraction.unwrap_or(DEFAULT_SPLIT_FRACTION),
                delta: m.delta.unwrap_or(file.experiment.delta),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ComparisonConfig {
        source,
        methods,
        calibration_sizes: file.experiment.calibration_sizes.clone(),
        bins: file.experiment.bins,
        repetitions: file.experiment.repetitions,
        test_n: file.experiment.test_n,
        grid_points: file.experiment.grid_points,
        delta: file.experiment.delta,
        seed: file.experiment.seed,
    })
}

/// Parses the synthetic-source flags shared by the config file and the
/// coverage command line.
#[allow(clippy::too_many_arguments)]
pub fn synthetic_source(
    score: &str,
    beta_alpha: Option<f64>,
    beta_beta: Option<f64>,
    eta: &str,
    exponent: Option<f64>,
    slope: Option<f64>,
    center: Option<f64>,
    breaks: Option<Vec<f64>>,
    values: Option<Vec<f64>>,
    seed: u64,
) -> Result<SyntheticSpec> {
    let distribution = match score {
        "uniform" => ScoreDistribution::Uniform,
        "beta" => ScoreDistribution::Beta {
            alpha: beta_alpha
                .ok_or_else(|| Error::data("beta score density needs `beta_alpha`"))?,
            beta: beta_beta.ok_or_else(|| Error::data("beta score density needs `beta_beta`"))?,
        },
        other => {
            return Err(Error::data(format!(
                "unknown score distribution {other:?}; expected uniform | beta"
            )))
        }
    };
    let regression = match eta {
        "identity" => RegressionFn::Identity,
        "power" => RegressionFn::Power {
            exponent: exponent.ok_or_else(|| Error::data("power regression needs `exponent`"))?,
        },
        "logistic-warp" => RegressionFn::LogisticWarp {
            slope: slope.ok_or_else(|| Error::data("logistic-warp needs `slope`"))?,
            center: center.ok_or_else(|| Error::data("logistic-warp needs `center`"))?,
        },
        "piecewise" => RegressionFn::PiecewiseConstant {
            breaks: breaks.ok_or_else(|| Error::data("piecewise regression needs `breaks`"))?,
            values: values.ok_or_else(|| Error::data("piecewise regression needs `values`"))?,
        },
        other => {
            return Err(Error::data(format!(
                "unknown regression {other:?}; expected identity | power | logistic-warp | piecewise"
            )))
        }
    };
    SyntheticSpec::new(distribution, regression, seed)
}

fn synthetic_from(source: &SourceSection, seed: u64) -> Result<SyntheticSpec> {
    synthetic_source(
        source
            .score
            .as_deref()
            .ok_or_else(|| Error::data("config: synthetic source needs `score`"))?,
        source.beta_alpha,
        source.beta_beta,
        source
            .eta
            .as_deref()
            .ok_or_else(|| Error::data("config: synthetic source needs `eta`"))?,
        source.exponent,
        source.slope,
        source.center,
        source.breaks.clone(),
        source.values.clone(),
        seed,
    )
}
