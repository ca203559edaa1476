//! Monte-Carlo verification of the calibration guarantees and the
//! multi-method comparison harness.
//!
//! Coverage runs draw fresh calibration sets from a synthetic spec, fit
//! one of the uniform-mass variants, and compare every bin's estimated
//! bias against the *exact* conditional mean of the fitted bin interval,
//! computed by quadrature. Ground truth is conditional on the fitted
//! edges, so no second empirical sample (and none of the plugin
//! estimator's bias) enters the verification path.
//!
//! Trials and repetitions run in parallel with per-trial derived
//! streams; results are collected by index and reduced sequentially with
//! compensated sums, so reports are identical for any thread count.

pub mod config;

use rayon::prelude::*;

use crate::assessment::{
    aggregate_curves, grid_of_size, plugin_ece, validity_conditional, validity_marginal,
    AggregatedCurve, DiscretePredictorDistribution, ValidityCurve,
};
use crate::calibrators::{
    fit_fixed_width, fit_isotonic, fit_randomized_umd, fit_scaling_binning, fit_umd,
    fit_umd_original, fit_ums, perturb_scores, CalibratorKind, RandomizationParams,
};
use crate::data::{
    bin_mass, load_csv, split_and_subsample, standardize, synthesize_with, true_bin_mean,
    SplitPlan, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::guarantees::{
    ece_expectation_bound, eps_randomized, eps_umd, eps_umd_original, theoretical_validity_at,
    CalibrationMode,
};
use crate::model::{Dataset, ScoredSample, SeededRng};
use crate::scalers::{fit_logistic, fit_platt, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::stats;

/// The calibrators with a coverage theory to verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageVariant {
    Umd,
    UmdOriginal,
    UmdRandomized,
}

impl CoverageVariant {
    pub fn name(self) -> &'static str {
        match self {
            CoverageVariant::Umd => "umd",
            CoverageVariant::UmdOriginal => "umd-original",
            CoverageVariant::UmdRandomized => "umd-randomized",
        }
    }
}

impl std::fmt::Display for CoverageVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CoverageVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "umd" => Ok(CoverageVariant::Umd),
            "umd-original" => Ok(CoverageVariant::UmdOriginal),
            "umd-randomized" => Ok(CoverageVariant::UmdRandomized),
            other => Err(Error::invalid_input(format!(
                "unknown coverage variant {other:?}; expected umd | umd-original | umd-randomized"
            ))),
        }
    }
}

/// Outcome of a coverage run. `max_deviations`, `failed_mass`, and
/// `oracle_l2_ece` hold one entry per trial, in trial order.
#[derive(Debug, Clone)]
pub struct CoverageReport {
    pub variant: CoverageVariant,
    pub trials: usize,
    pub n: usize,
    pub bins: usize,
    pub alpha: f64,
    pub delta: f64,
    /// The variant's conditional deviation bound; a trial fails when its
    /// worst bin exceeds this.
    pub epsilon_conditional: f64,
    /// The marginal deviation bound used for the failed-mass statistic.
    pub epsilon_marginal: f64,
    pub max_deviations: Vec<f64>,
    pub failure_count: usize,
    /// Per trial: probability mass of the bins whose deviation exceeds
    /// the marginal bound.
    pub failed_mass: Vec<f64>,
    /// Per trial: exact l2 expected calibration error of the fitted
    /// model, from oracle bin means and masses.
    pub oracle_l2_ece: Vec<f64>,
}

impl CoverageReport {
    pub fn failure_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failure_count as f64 / self.trials as f64
        }
    }

    /// Exact binomial upper confidence bound on the failure rate.
    pub fn failure_rate_upper(&self, confidence: f64) -> f64 {
        stats::clopper_pearson_upper(self.failure_count, self.trials, confidence)
    }

    pub fn mean_max_deviation(&self) -> f64 {
        stats::mean(&self.max_deviations)
    }

    pub fn mean_failed_mass(&self) -> f64 {
        stats::mean(&self.failed_mass)
    }

    pub fn mean_oracle_l2_ece(&self) -> f64 {
        stats::mean(&self.oracle_l2_ece)
    }

    /// Per-trial rows: `trial,max_deviation,failed_mass,oracle_l2_ece,failure`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,max_deviation,failed_mass,oracle_l2_ece,failure\n");
        for t in 0..self.trials {
            out.push_str(&format!(
                "{t},{},{},{},{}\n",
                self.max_deviations[t],
                self.failed_mass[t],
                self.oracle_l2_ece[t],
                u8::from(self.max_deviations[t] > self.epsilon_conditional)
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "variant={}\ntrials={}\nn={}\nbins={}\nalpha={}\ndelta={}\n\
             epsilon_conditional={}\nepsilon_marginal={}\nfailure_count={}\n\
             failure_rate={}\nfailure_rate_upper99={}\nmean_max_deviation={}\n\
             mean_failed_mass={}\nmean_oracle_l2_ece={}\nece_expectation_bound={}\n",
            self.variant,
            self.trials,
            self.n,
            self.bins,
            self.alpha,
            self.delta,
            self.epsilon_conditional,
            self.epsilon_marginal,
            self.failure_count,
            self.failure_rate(),
            if self.trials == 0 {
                1.0
            } else {
                self.failure_rate_upper(0.99)
            },
            self.mean_max_deviation(),
            self.mean_failed_mass(),
            self.mean_oracle_l2_ece(),
            ece_expectation_bound(self.n, self.bins, self.delta).unwrap_or(f64::NAN),
        )
    }
}

struct TrialOutcome {
    max_deviation: f64,
    failed_mass: f64,
    oracle_l2_ece: f64,
}

/// Monte-Carlo coverage verification: per trial, synthesize `n` points,
/// fit the variant, compute each fitted bin's exact conditional mean and
/// mass by quadrature, and record the worst deviation. A trial fails
/// when the worst deviation exceeds the variant's conditional bound.
#[allow(clippy::too_many_arguments)]
pub fn run_coverage(
    spec: &SyntheticSpec,
    variant: CoverageVariant,
    n: usize,
    bins: usize,
    alpha: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<CoverageReport> {
    let epsilon_conditional = match variant {
        CoverageVariant::Umd => eps_umd(n, bins, alpha)?,
        CoverageVariant::UmdOriginal => eps_umd_original(n, bins, alpha)?,
        CoverageVariant::UmdRandomized => {
            eps_randomized(n, bins, alpha, delta, CalibrationMode::Conditional)?
        }
    };
    let marginal_delta = match variant {
        CoverageVariant::UmdRandomized => delta,
        _ => 0.0,
    };
    let epsilon_marginal =
        eps_randomized(n, bins, alpha, marginal_delta, CalibrationMode::Marginal)?;

    let master = SeededRng::new(seed);
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let base = master.derive(trial as u64 + 1);
            let mut data_rng = base.derive(0);
            let data = synthesize_with(spec, n, &mut data_rng)?;
            let model = match variant {
                CoverageVariant::Umd => fit_umd(&data, bins)?,
                CoverageVariant::UmdOriginal => fit_umd_original(&data, bins)?,
                CoverageVariant::UmdRandomized => {
                    let mut params = RandomizationParams::new(delta, base.derive(1))?;
                    fit_randomized_umd(&data, bins, &mut params)?
                }
            };

            let edges = model.edges();
            let biases = model.biases();
            let mut max_deviation = 0.0f64;
            let mut failed_mass = 0.0f64;
            let mut atoms: Vec<(f64, f64, f64)> = Vec::with_capacity(bins);
            for b in 0..bins {
                let truth = true_bin_mean(spec, edges[b], edges[b + 1])?;
                let mass = bin_mass(spec, edges[b], edges[b + 1])?;
                let deviation = (biases[b] - truth).abs();
                max_deviation = max_deviation.max(deviation);
                if deviation > epsilon_marginal {
                    failed_mass += mass;
                }
                atoms.push((biases[b], mass, truth));
            }

            Ok(TrialOutcome {
                max_deviation,
                failed_mass,
                oracle_l2_ece: oracle_l2_ece(&atoms)?,
            })
        })
        .collect::<Result<_>>()?;

    let failure_count = outcomes
        .iter()
        .filter(|o| o.max_deviation > epsilon_conditional)
        .count();
    Ok(CoverageReport {
        variant,
        trials,
        n,
        bins,
        alpha,
        delta,
        epsilon_conditional,
        epsilon_marginal,
        max_deviations: outcomes.iter().map(|o| o.max_deviation).collect(),
        failure_count,
        failed_mass: outcomes.iter().map(|o| o.failed_mass).collect(),
        oracle_l2_ece: outcomes.iter().map(|o| o.oracle_l2_ece).collect(),
    })
}

/// Exact l2 expected calibration error of a binned predictor from
/// `(prediction, mass, true conditional mean)` triples. Bins sharing a
/// prediction value pool mass-weighted; masses are normalized so the
/// quadrature's rounding cannot break the unit-mass invariant.
fn oracle_l2_ece(bins: &[(f64, f64, f64)]) -> Result<f64> {
    let mut sorted: Vec<(f64, f64, f64)> = bins.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut atoms: Vec<(f64, f64, f64)> = Vec::with_capacity(sorted.len());
    for (r, mass, mean) in sorted {
        match atoms.last_mut() {
            Some(last) if last.0 == r => {
                let pooled_mass = last.1 + mass;
                last.2 = if pooled_mass > 0.0 {
                    (last.1 * last.2 + mass * mean) / pooled_mass
                } else {
                    last.2
                };
                last.1 = pooled_mass;
            }
            _ => atoms.push((r, mass, mean)),
        }
    }
    let total: f64 = stats::kahan_sum(atoms.iter().map(|a| a.1));
    if total.is_nan() || total <= 0.0 {
        return Err(Error::invalid_input("bins carry no mass"));
    }
    for a in &mut atoms {
        a.1 /= total;
    }
    let correction = 1.0 - stats::kahan_sum(atoms.iter().map(|a| a.1));
    atoms[0].1 += correction;
    let dist = DiscretePredictorDistribution::new(atoms)?;
    crate::assessment::ece_discrete(&dist, 2.0)
}

/// One calibrator entry in a comparison run.
#[derive(Debug, Clone)]
pub struct MethodSpec {
    pub kind: CalibratorKind,
    pub label: String,
    /// Edge/bias split for the sample-splitting method.
    pub split_fraction: f64,
    /// Randomization magnitude for tie-breaking and the randomized fit.
    pub delta: f64,
}

impl MethodSpec {
    pub fn new(kind: CalibratorKind) -> Self {
        MethodSpec {
            kind,
            label: kind.name().to_string(),
            split_fraction: crate::calibrators::DEFAULT_SPLIT_FRACTION,
            delta: crate::calibrators::DEFAULT_DELTA,
        }
    }
}

/// Where the comparison harness gets its scored samples.
#[derive(Debug, Clone)]
pub enum ComparisonSource {
    /// Synthetic draws: fresh calibration and test sets per repetition.
    Synthetic(SyntheticSpec),
    /// A feature CSV run through the score pipeline: standardize, train a
    /// logistic scorer on the first split, rescale it on the second, then
    /// subsample calibration/test sets from the remaining pool.
    Csv {
        path: std::path::PathBuf,
        label_column: String,
        train: usize,
        scaler: usize,
    },
}

#[derive(Debug, Clone)]
pub struct ComparisonConfig {
    pub source: ComparisonSource,
    pub methods: Vec<MethodSpec>,
    pub calibration_sizes: Vec<usize>,
    pub bins: usize,
    pub repetitions: usize,
    pub test_n: usize,
    pub grid_points: usize,
    /// Randomization magnitude used by the theoretical overlay.
    pub delta: f64,
    pub seed: u64,
}

/// Aggregated assessment of one method at one calibration size.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub label: String,
    pub kind: CalibratorKind,
    pub calibration_n: usize,
    pub marginal: AggregatedCurve,
    pub conditional: AggregatedCurve,
    pub ece_mean: f64,
    pub ece_stderr: f64,
}

/// The guarantee-derived validity floor overlaid per calibration size.
#[derive(Debug, Clone)]
pub struct TheoryCurve {
    pub calibration_n: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MethodFailure {
    pub label: String,
    pub calibration_n: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub grid: Vec<f64>,
    pub bins: usize,
    pub outcomes: Vec<MethodOutcome>,
    pub theory: Vec<TheoryCurve>,
    pub failures: Vec<MethodFailure>,
}

impl ComparisonReport {
    pub fn outcome(&self, label: &str, calibration_n: usize) -> Option<&MethodOutcome> {
        self.outcomes
            .iter()
            .find(|o| o.label == label && o.calibration_n == calibration_n)
    }

    /// Summary rows `method,n,ece_mean,ece_stderr`.
    pub fn ece_csv(&self) -> String {
        let mut out = String::from("method,n,ece_mean,ece_stderr\n");
        for o in &self.outcomes {
            out.push_str(&format!(
                "{},{},{},{}\n",
                o.label, o.calibration_n, o.ece_mean, o.ece_stderr
            ));
        }
        out
    }
}

/// Scored pool prepared once per comparison run.
enum SampleSource {
    Synthetic(SyntheticSpec),
    Pool { samples: Vec<ScoredSample> },
}

/// Runs the full comparison protocol: per calibration size and
/// repetition, draw calibration/test sets, fit every method, assess
/// marginal and conditional validity plus the plugin l1 error, and
/// aggregate across repetitions. A method that fails at some size is
/// reported in `failures` without aborting the others.
pub fn run_comparison(config: &ComparisonConfig) -> Result<ComparisonReport> {
    if config.methods.is_empty() {
        return Err(Error::invalid_config("no methods requested"));
    }
    if config.calibration_sizes.is_empty() {
        return Err(Error::invalid_config("no calibration sizes requested"));
    }
    if config.repetitions == 0 {
        return Err(Error::invalid_config("need at least one repetition"));
    }
    if config.grid_points < 2 {
        return Err(Error::invalid_config("grid needs at least two points"));
    }
    if config.bins == 0 {
        return Err(Error::invalid_config("bin count must be at least 1"));
    }
    let grid = grid_of_size(config.grid_points);
    let master = SeededRng::new(config.seed);

    // Stage the source: for CSV input the scorer pipeline runs once.
    let source = match &config.source {
        ComparisonSource::Synthetic(spec) => SampleSource::Synthetic(spec.clone()),
        ComparisonSource::Csv {
            path,
            label_column,
            train,
            scaler,
        } => {
            let raw = load_csv(path, label_column)?;
            let (standardized, _) = standardize(&raw)?;
            let pool = raw
                .rows()
                .checked_sub(train + scaler)
                .filter(|&p| p > 0)
                .ok_or_else(|| {
                    Error::invalid_config(format!(
                        "train ({train}) + scaler ({scaler}) leave no pool of {} rows",
                        raw.rows()
                    ))
                })?;
            let plan = SplitPlan {
                train: *train,
                scaler: *scaler,
                pool,
                calibration_n: 1,
                test_n: 1,
                repetitions: 0,
                seed: config.seed,
            };
            let (splits, _) = split_and_subsample(&standardized, &plan)?;

            let train_set = standardized.subset(&splits.train)?;
            let logistic = fit_logistic(&train_set, DEFAULT_MAX_ITERS, DEFAULT_TOL)?;
            let scaler_set = standardized.subset(&splits.scaler)?;
            let scaler_scores: Vec<f64> = (0..scaler_set.rows())
                .map(|i| logistic.scorer.apply(scaler_set.row(i)))
                .collect();
            let platt = fit_platt(&scaler_scores, scaler_set.labels())?;

            let samples = splits
                .pool
                .iter()
                .map(|&row| ScoredSample {
                    score: platt
                        .scaler
                        .apply(logistic.scorer.apply(standardized.row(row))),
                    label: standardized.labels()[row],
                })
                .collect();
            SampleSource::Pool { samples }
        }
    };

    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    let mut theory = Vec::new();

    for (n_idx, &cal_n) in config.calibration_sizes.iter().enumerate() {
        theory.push(TheoryCurve {
            calibration_n: cal_n,
            values: grid
                .iter()
                .map(|&eps| {
                    theoretical_validity_at(cal_n, config.bins, config.delta, eps)
                        .unwrap_or(f64::NAN)
                })
                .collect(),
        });

        // Draw the repetition data once per size; methods share it.
        let draws: Result<Vec<(Dataset, Dataset)>> = (0..config.repetitions)
            .into_par_iter()
            .map(|rep| {
                let pair = master.derive(pair_stream(n_idx, rep));
                draw_pair(&source, cal_n, config.test_n, &pair)
            })
            .collect();
        let draws = match draws {
            Ok(d) => d,
            Err(e) => {
                for method in &config.methods {
                    failures.push(MethodFailure {
                        label: method.label.clone(),
                        calibration_n: cal_n,
                        message: e.to_string(),
                    });
                }
                continue;
            }
        };

        for (m_idx, method) in config.methods.iter().enumerate() {
            let per_rep: Result<Vec<(ValidityCurve, ValidityCurve, f64)>> = draws
                .par_iter()
                .enumerate()
                .map(|(rep, (cal, test))| {
                    let pair = master.derive(pair_stream(n_idx, rep));
                    let fit_rng = pair.derive(10 + m_idx as u64);
                    let query_rng = pair.derive(1_000_000 + m_idx as u64);
                    assess_method(method, cal, test, config.bins, &grid, fit_rng, query_rng)
                })
                .collect();
            match per_rep {
                Ok(results) => {
                    let marginals: Vec<ValidityCurve> =
                        results.iter().map(|r| r.0.clone()).collect();
                    let conditionals: Vec<ValidityCurve> =
                        results.iter().map(|r| r.1.clone()).collect();
                    let eces: Vec<f64> = results.iter().map(|r| r.2).collect();
                    let (ece_mean, ece_stderr) = stats::mean_and_stderr(&eces);
                    outcomes.push(MethodOutcome {
                        label: method.label.clone(),
                        kind: method.kind,
                        calibration_n: cal_n,
                        marginal: aggregate_curves(&marginals)?,
                        conditional: aggregate_curves(&conditionals)?,
                        ece_mean,
                        ece_stderr,
                    });
                }
                Err(e) => failures.push(MethodFailure {
                    label: method.label.clone(),
                    calibration_n: cal_n,
                    message: e.to_string(),
                }),
            }
        }
    }

    Ok(ComparisonReport {
        grid,
        bins: config.bins,
        outcomes,
        theory,
        failures,
    })
}

fn pair_stream(n_idx: usize, rep: usize) -> u64 {
    1 + ((n_idx as u64) << 32) + rep as u64
}

fn draw_pair(
    source: &SampleSource,
    cal_n: usize,
    test_n: usize,
    pair: &SeededRng,
) -> Result<(Dataset, Dataset)> {
    match source {
        SampleSource::Synthetic(spec) => {
            let mut cal_rng = pair.derive(0);
            let mut test_rng = pair.derive(1);
            Ok((
                synthesize_with(spec, cal_n, &mut cal_rng)?,
                synthesize_with(spec, test_n, &mut test_rng)?,
            ))
        }
        SampleSource::Pool { samples, .. } => {
            if cal_n + test_n > samples.len() {
                return Err(Error::invalid_config(format!(
                    "calibration ({cal_n}) + test ({test_n}) exceed the pool ({})",
                    samples.len()
                )));
            }
            let mut rng = pair.derive(0);
            let mut order: Vec<usize> = (0..samples.len()).collect();
            // Partial Fisher-Yates: only the first cal_n + test_n slots.
            for i in 0..(cal_n + test_n).min(samples.len() - 1) {
                let j = rand::Rng::gen_range(&mut rng, i..samples.len());
                order.swap(i, j);
            }
            let cal = Dataset::new(order[..cal_n].iter().map(|&i| samples[i]).collect())?;
            let test = Dataset::new(
                order[cal_n..cal_n + test_n]
                    .iter()
                    .map(|&i| samples[i])
                    .collect(),
            )?;
            Ok((cal, test))
        }
    }
}

/// Fits one method on the calibration set and assesses it on the test
/// set. Methods built on the tie-sensitive uniform-mass core get their
/// scores perturbed first; the randomized method additionally perturbs
/// every test score with a fresh draw, matching its prediction rule.
fn assess_method(
    method: &MethodSpec,
    cal: &Dataset,
    test: &Dataset,
    bins: usize,
    grid: &[f64],
    fit_rng: SeededRng,
    query_rng: SeededRng,
) -> Result<(ValidityCurve, ValidityCurve, f64)> {
    let model = match method.kind {
        CalibratorKind::Umd => {
            let mut params = RandomizationParams::new(method.delta, fit_rng)?;
            fit_umd(&perturb_scores(cal, &mut params), bins)?
        }
        CalibratorKind::UmdOriginal => {
            let mut params = RandomizationParams::new(method.delta, fit_rng)?;
            fit_umd_original(&perturb_scores(cal, &mut params), bins)?
        }
        CalibratorKind::UmdRandomized => {
            let mut params = RandomizationParams::new(method.delta, fit_rng)?;
            fit_randomized_umd(cal, bins, &mut params)?
        }
        CalibratorKind::Ums => {
            let mut rng = fit_rng;
            fit_ums(cal, bins, method.split_fraction, &mut rng)?
        }
        CalibratorKind::FixedWidth => fit_fixed_width(cal, bins)?,
        CalibratorKind::Isotonic => fit_isotonic(cal)?,
        CalibratorKind::ScalingBinning => {
            let scaled: Vec<f64> = cal.scores().collect();
            let mut params = RandomizationParams::new(method.delta, fit_rng)?;
            fit_scaling_binning(&perturb_scores(cal, &mut params), &scaled, bins)?
        }
    };

    let assessed: Dataset;
    let test_ref = if method.kind == CalibratorKind::UmdRandomized {
        let mut params = RandomizationParams::new(method.delta, query_rng)?;
        assessed = perturb_scores(test, &mut params);
        &assessed
    } else {
        test
    };

    Ok((
        validity_marginal(&model, test_ref, grid)?,
        validity_conditional(&model, test_ref, grid)?,
        plugin_ece(&model, test_ref, 1.0)?,
    ))
}
