//! Calibration assessment: validity curves, plugin expected calibration
//! error, and multi-run aggregation.
//!
//! A validity curve reports, for each deviation budget `eps`, the
//! probability that the predictor's conditional miscalibration is within
//! `eps`. The marginal estimator weighs each attained prediction value by
//! its test mass; the conditional estimator is the 0/1 indicator that
//! *every* attained value deviates by at most `eps`. Both are
//! right-continuous step functions; the exact jump positions are stored
//! alongside the display grid so the area under the curve — and the
//! identity `plugin l1-ECE = 1 - AUC` — are grid-independent.
//!
//! Test points are grouped by prediction *value*, not bin index: two bins
//! that happen to share a bias value pool their test points, matching the
//! definition of `E[Y | h(X) = r]`.

use crate::error::{Error, Result};
use crate::model::{BinningModel, Dataset};
use crate::stats;

/// Empirical statistics of one attained prediction value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionGroup {
    /// The prediction value `r`.
    pub value: f64,
    /// Mean test label among points with `h(X) = r`.
    pub mean_label: f64,
    /// Number of test points with `h(X) = r`.
    pub count: usize,
}

/// For each prediction value attained on the test set, the mean test
/// label among the points mapped to it, sorted by value.
pub fn empirical_bin_means(model: &BinningModel, test: &Dataset) -> Result<Vec<PredictionGroup>> {
    if test.is_empty() {
        return Err(Error::invalid_input("test set must be non-empty"));
    }
    let mut pairs: Vec<(f64, u8)> = test
        .samples()
        .iter()
        .map(|s| Ok((model.predict(s.score)?, s.label)))
        .collect::<Result<_>>()?;
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut groups: Vec<PredictionGroup> = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let value = pairs[i].0;
        let mut sum = 0u64;
        let mut count = 0usize;
        while i < pairs.len() && pairs[i].0 == value {
            sum += u64::from(pairs[i].1);
            count += 1;
            i += 1;
        }
        groups.push(PredictionGroup {
            value,
            mean_label: sum as f64 / count as f64,
            count,
        });
    }
    Ok(groups)
}

/// One exact discontinuity of a validity curve: a deviation level, the
/// probability mass that jumps there, and the curve value just after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub deviation: f64,
    pub mass: f64,
    pub cumulative: f64,
}

/// A right-continuous step function `eps -> V(eps)` sampled on a display
/// grid, with its exact jumps stored alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
    jumps: Vec<Jump>,
}

impl ValidityCurve {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// Exact value at `eps`: the cumulative mass of the last jump at a
    /// deviation <= `eps`.
    pub fn value_at(&self, eps: f64) -> f64 {
        let covered = self.jumps.partition_point(|j| j.deviation <= eps);
        if covered == 0 {
            0.0
        } else {
            self.jumps[covered - 1].cumulative
        }
    }

    /// CSV rows `epsilon,mean,stderr` (stderr 0 for a single curve) over
    /// the union of the display grid and the exact jump positions, so the
    /// area under the emitted step function is exact.
    pub fn to_csv(&self) -> String {
        let mut abscissas: Vec<f64> = self
            .grid
            .iter()
            .copied()
            .chain(self.jumps.iter().map(|j| j.deviation))
            .collect();
        abscissas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        abscissas.dedup();
        let mut out = String::from("epsilon,mean,stderr\n");
        for eps in abscissas {
            out.push_str(&format!("{eps},{},0\n", self.value_at(eps)));
        }
        out
    }
}

/// The default display grid: 1001 evenly spaced points on `[0, 1]`.
pub fn default_grid() -> Vec<f64> {
    grid_of_size(1001)
}

pub fn grid_of_size(points: usize) -> Vec<f64> {
    assert!(points >= 2, "grid needs at least two points");
    (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect()
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::invalid_input("grid needs at least two points"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(Error::invalid_input(
            "grid must be strictly increasing within [0, 1]",
        ));
    }
    Ok(())
}

/// Assembles a curve from `(deviation, mass)` pairs, merging exactly
/// equal deviations and accumulating masses in floating point.
fn curve_from_jumps(raw: Vec<(f64, f64)>, grid: &[f64]) -> ValidityCurve {
    let mut raw = raw;
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut merged: Vec<Jump> = Vec::with_capacity(raw.len());
    let mut cumulative = 0.0;
    for (deviation, mass) in raw {
        cumulative += mass;
        match merged.last_mut() {
            Some(last) if last.deviation == deviation => {
                last.mass += mass;
                last.cumulative = cumulative;
            }
            _ => merged.push(Jump {
                deviation,
                mass,
                cumulative,
            }),
        }
    }
    finish_curve(merged, grid)
}

/// Assembles a curve from `(deviation, count)` pairs out of `n` test
/// points. Counts accumulate exactly in integers, so the curve reaches
/// exactly 1 and is dominated by no rounding artifacts.
fn curve_from_counted_jumps(raw: Vec<(f64, usize)>, n: usize, grid: &[f64]) -> ValidityCurve {
    let mut raw = raw;
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut merged: Vec<Jump> = Vec::with_capacity(raw.len());
    let mut counts: Vec<usize> = Vec::with_capacity(raw.len());
    for (deviation, count) in raw {
        match (merged.last_mut(), counts.last_mut()) {
            (Some(last), Some(last_count)) if last.deviation == deviation => {
                *last_count += count;
            }
            _ => {
                merged.push(Jump {
                    deviation,
                    mass: 0.0,
                    cumulative: 0.0,
                });
                counts.push(count);
            }
        }
    }
    let mut cumulative_count = 0usize;
    for (jump, &count) in merged.iter_mut().zip(&counts) {
        cumulative_count += count;
        jump.mass = count as f64 / n as f64;
        jump.cumulative = cumulative_count as f64 / n as f64;
    }
    finish_curve(merged, grid)
}

fn finish_curve(jumps: Vec<Jump>, grid: &[f64]) -> ValidityCurve {
    let mut values = Vec::with_capacity(grid.len());
    let mut level = 0.0;
    let mut k = 0;
    for &eps in grid {
        while k < jumps.len() && jumps[k].deviation <= eps {
            level = jumps[k].cumulative;
            k += 1;
        }
        values.push(level);
    }
    ValidityCurve {
        grid: grid.to_vec(),
        values,
        jumps,
    }
}

/// Marginal validity estimate: `V(eps)` is the fraction of test points
/// whose prediction value deviates from its empirical conditional mean by
/// at most `eps`. Each distinct deviation contributes one jump whose mass
/// is the fraction of test points mapped to it.
pub fn validity_marginal(
    model: &BinningModel,
    test: &Dataset,
    grid: &[f64],
) -> Result<ValidityCurve> {
    validate_grid(grid)?;
    let groups = empirical_bin_means(model, test)?;
    let jumps = groups
        .iter()
        .map(|g| ((g.mean_label - g.value).abs(), g.count))
        .collect();
    Ok(curve_from_counted_jumps(jumps, test.len(), grid))
}

/// Conditional validity estimate: the 0/1 indicator that the maximum
/// deviation over all attained prediction values is at most `eps`.
/// Prediction values never attained on the test set are excluded.
pub fn validity_conditional(
    model: &BinningModel,
    test: &Dataset,
    grid: &[f64],
) -> Result<ValidityCurve> {
    validate_grid(grid)?;
    let groups = empirical_bin_means(model, test)?;
    let max_deviation = groups
        .iter()
        .map(|g| (g.mean_label - g.value).abs())
        .fold(0.0, f64::max);
    Ok(curve_from_jumps(vec![(max_deviation, 1.0)], grid))
}

/// Plugin `l_p` expected-calibration-error estimate:
/// `(sum_r mass_r |mean_r - r|^p)^(1/p)` over the attained prediction
/// values, with masses and conditional means from the test set.
pub fn plugin_ece(model: &BinningModel, test: &Dataset, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid_input(format!("need p >= 1, got {p}")));
    }
    let groups = empirical_bin_means(model, test)?;
    let n = test.len() as f64;
    let total: f64 = groups
        .iter()
        .map(|g| (g.count as f64 / n) * (g.mean_label - g.value).abs().powf(p))
        .sum();
    Ok(total.powf(1.0 / p))
}

/// A discrete predictor law: prediction values with their probability
/// masses and true conditional label means.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePredictorDistribution {
    atoms: Vec<(f64, f64, f64)>, // (prediction, mass, conditional mean)
}

impl DiscretePredictorDistribution {
    /// Atoms are `(prediction, mass, conditional_mean)`; masses must sum
    /// to 1 within 1e-12 and predictions must be distinct.
    pub fn new(atoms: Vec<(f64, f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid_input("distribution needs at least one atom"));
        }
        for &(r, mass, m) in &atoms {
            if !(0.0..=1.0).contains(&r) || !(0.0..=1.0).contains(&m) {
                return Err(Error::invalid_input(
                    "predictions and conditional means must lie in [0, 1]",
                ));
            }
            if mass.is_nan() || !(0.0..=1.0).contains(&mass) {
                return Err(Error::invalid_input("masses must lie in [0, 1]"));
            }
        }
        let total: f64 = stats::kahan_sum(atoms.iter().map(|a| a.1));
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid_input(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        let mut values: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if values.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid_input("prediction values must be distinct"));
        }
        Ok(DiscretePredictorDistribution { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64, f64)] {
        &self.atoms
    }

    /// Largest deviation `|m_r - r|` over the atoms.
    pub fn max_deviation(&self) -> f64 {
        self.atoms
            .iter()
            .map(|&(r, _, m)| (m - r).abs())
            .fold(0.0, f64::max)
    }

    /// The exact validity curve of this distribution.
    pub fn validity_curve(&self, grid: &[f64]) -> Result<ValidityCurve> {
        validate_grid(grid)?;
        let jumps = self
            .atoms
            .iter()
            .map(|&(r, mass, m)| ((m - r).abs(), mass))
            .collect();
        Ok(curve_from_jumps(jumps, grid))
    }
}

/// Exact `l_p` expected calibration error of a discrete predictor law.
pub fn ece_discrete(dist: &DiscretePredictorDistribution, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid_input(format!("need p >= 1, got {p}")));
    }
    let total: f64 = dist
        .atoms()
        .iter()
        .map(|&(r, mass, m)| mass * (m - r).abs().powf(p))
        .sum();
    Ok(total.powf(1.0 / p))
}

/// Exact area under a right-continuous step curve on `[0, 1]`, computed
/// from the recorded jumps rather than the display grid: each jump of
/// mass `w` at deviation `d` contributes `w * (1 - d)`.
pub fn curve_auc(curve: &ValidityCurve) -> f64 {
    curve
        .jumps()
        .iter()
        .map(|j| j.mass * (1.0 - j.deviation))
        .sum()
}

/// Pointwise mean and standard error across runs of a validity curve.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedCurve {
    grid: Vec<f64>,
    mean: Vec<f64>,
    stderr: Vec<f64>,
    runs: usize,
}

impl AggregatedCurve {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn stderr(&self) -> &[f64] {
        &self.stderr
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    /// Mean value at the grid point closest to `eps`.
    pub fn mean_at(&self, eps: f64) -> f64 {
        let idx = self
            .grid
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - eps)
                    .abs()
                    .partial_cmp(&(b.1 - eps).abs())
                    .unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        self.mean[idx]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,mean,stderr\n");
        for i in 0..self.grid.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.grid[i], self.mean[i], self.stderr[i]
            ));
        }
        out
    }
}

/// Pointwise aggregation of curves sharing one grid: mean and standard
/// error of the mean (sample standard deviation over `sqrt(runs)`; a
/// single run yields zero standard error).
pub fn aggregate_curves(curves: &[ValidityCurve]) -> Result<AggregatedCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::invalid_input("need at least one curve to aggregate"))?;
    for c in curves {
        if c.grid() != first.grid() {
            return Err(Error::invalid_input("curves must share the same grid"));
        }
    }
    let runs = curves.len();
    let mut mean = Vec::with_capacity(first.grid().len());
    let mut stderr = Vec::with_capacity(first.grid().len());
    let mut column = vec![0.0; runs];
    for i in 0..first.grid().len() {
        for (k, c) in curves.iter().enumerate() {
            column[k] = c.values()[i];
        }
        let (m, se) = stats::mean_and_stderr(&column);
        mean.push(m);
        stderr.push(se);
    }
    Ok(AggregatedCurve {
        grid: first.grid().to_vec(),
        mean,
        stderr,
        runs,
    })
}
