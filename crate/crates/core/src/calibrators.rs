//! Fit procedures for every binning calibrator.
//!
//! The uniform-mass family places bin edges at order statistics of the
//! calibration scores so that every bin receives (nearly) the same
//! number of points:
//!
//! - [`fit_umd`] — double-dipping uniform-mass binning: the same data
//!   defines the edges and estimates the bin biases. The label whose
//!   score sits exactly on a bin boundary is excluded from the bias
//!   mean, which is what makes the within-bin labels conditionally
//!   independent given the boundaries.
//! - [`fit_umd_original`] — the classical variant that keeps the
//!   boundary label in the mean for every bin but the last.
//! - [`fit_randomized_umd`] — adds an infinitesimal perturbation to the
//!   scores (breaking ties, so the order statistics are almost surely
//!   distinct) and to the bias estimates (making them pairwise
//!   distinct), plus the matching perturbation of query scores at
//!   prediction time.
//! - [`fit_ums`] — sample-split uniform-mass binning: one random split
//!   defines the edges, the other estimates the biases.
//! - [`fit_scaling_binning`] — identical to [`fit_umd`] except each bin
//!   averages the outputs of a continuous scaling method instead of the
//!   labels.
//!
//! [`fit_fixed_width`] and [`fit_isotonic`] are the non-uniform-mass
//! comparison methods.
//!
//! Callers fitting [`fit_umd`]/[`fit_umd_original`] on data that may
//! contain tied scores should route through [`perturb_scores`] first;
//! [`fit_randomized_umd`] does so internally.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::model::{bin_index, BinningModel, Dataset, ScoredSample, SeededRng};

/// Default randomization magnitude: far below every assessment
/// tolerance, so randomized and plain fits agree to within 1e-10.
pub const DEFAULT_DELTA: f64 = 1e-10;

/// Default calibration/bias split for the sample-splitting fit.
pub const DEFAULT_SPLIT_FRACTION: f64 = 0.5;

/// The available fit procedures, as exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CalibratorKind {
    Umd,
    UmdOriginal,
    UmdRandomized,
    Ums,
    FixedWidth,
    Isotonic,
    ScalingBinning,
}

impl CalibratorKind {
    pub fn all() -> &'static [CalibratorKind] {
        &[
            CalibratorKind::Umd,
            CalibratorKind::UmdOriginal,
            CalibratorKind::UmdRandomized,
            CalibratorKind::Ums,
            CalibratorKind::FixedWidth,
            CalibratorKind::Isotonic,
            CalibratorKind::ScalingBinning,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            CalibratorKind::Umd => "umd",
            CalibratorKind::UmdOriginal => "umd-original",
            CalibratorKind::UmdRandomized => "umd-randomized",
            CalibratorKind::Ums => "ums",
            CalibratorKind::FixedWidth => "fixed-width",
            CalibratorKind::Isotonic => "isotonic",
            CalibratorKind::ScalingBinning => "scaling-binning",
        }
    }
}

impl std::fmt::Display for CalibratorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CalibratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CalibratorKind::all()
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::invalid_input(format!(
                    "unknown calibrator {s:?}; expected one of umd | umd-original | \
                     umd-randomized | ums | fixed-width | isotonic | scaling-binning"
                ))
            })
    }
}

/// Edge positions of the uniform-mass partition as 1-based order-statistic
/// indices: `A_0 = 0`, `A_B = n + 1`, and `A_b = ceil(b (n+1) / B)` in
/// between. Consecutive gaps satisfy `A_b - A_{b-1} >= floor(n / B)`, so
/// every bin keeps at least `floor(n / B) - 1` interior points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeIndexArray {
    indices: Vec<usize>,
}

impl EdgeIndexArray {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn bins(&self) -> usize {
        self.indices.len() - 1
    }
}

fn edge_indices_unchecked(n: usize, bins: usize) -> EdgeIndexArray {
    // ceil(b (n+1) / B) in exact integer arithmetic.
    let indices = (0..=bins)
        .map(|b| (b * (n + 1)).div_ceil(bins))
        .collect();
    EdgeIndexArray { indices }
}

/// Computes the uniform-mass edge indices for `n` points and `bins` bins.
///
/// Requires `n >= 2 * bins` so every bin retains at least one point for
/// bias estimation after the boundary point is excluded.
pub fn uniform_mass_edges(n: usize, bins: usize) -> Result<EdgeIndexArray> {
    check_bin_capacity(n, bins)?;
    Ok(edge_indices_unchecked(n, bins))
}

fn check_bin_capacity(n: usize, bins: usize) -> Result<()> {
    if bins == 0 {
        return Err(Error::invalid_config("bin count must be at least 1"));
    }
    if n < 2 * bins {
        return Err(Error::invalid_config(format!(
            "uniform-mass binning requires n >= 2B; got n = {n}, B = {bins}"
        )));
    }
    Ok(())
}

/// Sorts `(score, value)` pairs by score. Ties keep their input order so
/// the result is deterministic; tie-free input is the caller's concern.
fn sort_by_score(scores: &[f64], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].partial_cmp(&scores[j]).unwrap());
    let sorted_scores = order.iter().map(|&i| scores[i]).collect();
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    (sorted_scores, sorted_values)
}

/// Shared uniform-mass fit: edges from order statistics, bias `b` the mean
/// of `values` at sorted positions `A_{b-1}+1 ..= A_b - 1` (1-based), with
/// the boundary value at `A_b` additionally included for bins `b < B` when
/// `include_boundary` is set.
fn fit_uniform_mass(
    scores: &[f64],
    values: &[f64],
    bins: usize,
    include_boundary: bool,
) -> Result<BinningModel> {
    let n = scores.len();
    check_bin_capacity(n, bins)?;
    let (sorted_scores, sorted_values) = sort_by_score(scores, values);
    let index = edge_indices_unchecked(n, bins);
    let a = index.indices();

    let mut edges = Vec::with_capacity(bins + 1);
    edges.push(0.0);
    for b in 1..bins {
        edges.push(sorted_scores[a[b] - 1]);
    }
    edges.push(1.0);

    let mut biases = Vec::with_capacity(bins);
    for b in 1..=bins {
        let lower = a[b - 1];
        let upper = a[b];
        // Positions lower+1 ..= upper-1, i.e. 0-based lower ..= upper-2.
        let mut end = upper - 1;
        if include_boundary && b < bins {
            end = upper;
        }
        if end <= lower {
            return Err(Error::invalid_config(format!(
                "bin {b} has no points for bias estimation"
            )));
        }
        let slice = &sorted_values[lower..end];
        biases.push(slice.iter().sum::<f64>() / slice.len() as f64);
    }

    BinningModel::new(edges, biases)
}

/// Uniform-mass binning without sample splitting. Bin `b` averages the
/// labels strictly between the boundary order statistics; the boundary
/// label itself is excluded. Scores are assumed tie-free.
pub fn fit_umd(data: &Dataset, bins: usize) -> Result<BinningModel> {
    let scores: Vec<f64> = data.scores().collect();
    let values: Vec<f64> = data.labels().map(f64::from).collect();
    fit_uniform_mass(&scores, &values, bins, false)
}

/// The original uniform-mass procedure: bins before the last also include
/// the boundary label in their mean. Differs from [`fit_umd`] by at most
/// `1 / floor(n / B)` per bin.
pub fn fit_umd_original(data: &Dataset, bins: usize) -> Result<BinningModel> {
    let scores: Vec<f64> = data.scores().collect();
    let values: Vec<f64> = data.labels().map(f64::from).collect();
    fit_uniform_mass(&scores, &values, bins, true)
}

/// Uniform-mass binning where bin `b` averages the supplied continuous
/// `scaled_scores` (one per sample, in `[0, 1]`) instead of the labels.
/// Edges are placed on the data scores exactly as in [`fit_umd`].
pub fn fit_scaling_binning(
    data: &Dataset,
    scaled_scores: &[f64],
    bins: usize,
) -> Result<BinningModel> {
    if scaled_scores.len() != data.len() {
        return Err(Error::invalid_input(format!(
            "expected {} scaled scores, got {}",
            data.len(),
            scaled_scores.len()
        )));
    }
    if scaled_scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::invalid_input("scaled scores must lie in [0, 1]"));
    }
    let scores: Vec<f64> = data.scores().collect();
    fit_uniform_mass(&scores, scaled_scores, bins, false)
}

/// Randomization knobs for tie-breaking: an arbitrarily small `delta`
/// plus the stream that supplies the uniform draws.
#[derive(Debug, Clone)]
pub struct RandomizationParams {
    pub delta: f64,
    pub rng: SeededRng,
}

impl RandomizationParams {
    pub fn new(delta: f64, rng: SeededRng) -> Result<Self> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::invalid_input(format!(
                "randomization delta must be a positive real, got {delta}"
            )));
        }
        Ok(RandomizationParams { delta, rng })
    }

    /// Default `delta` of [`DEFAULT_DELTA`] with a fresh stream.
    pub fn from_seed(seed: u64) -> Self {
        RandomizationParams {
            delta: DEFAULT_DELTA,
            rng: SeededRng::new(seed),
        }
    }
}

/// `(s + delta * u) / (1 + delta)` clamped to the unit interval against
/// the last-ulp rounding of the division.
pub(crate) fn perturb_one(score: f64, delta: f64, u: f64) -> f64 {
    ((score + delta * u) / (1.0 + delta)).clamp(0.0, 1.0)
}

/// Replaces each score `s` by `(s + delta * u) / (1 + delta)` with an
/// independent uniform `u`. Outputs stay in `[0, 1]`, move by at most
/// `delta`, and are almost surely pairwise distinct, which is exactly
/// what the uniform-mass fits need on data with tied scores.
pub fn perturb_scores(data: &Dataset, params: &mut RandomizationParams) -> Dataset {
    let samples = data
        .samples()
        .iter()
        .map(|s| ScoredSample {
            score: perturb_one(s.score, params.delta, params.rng.uniform()),
            label: s.label,
        })
        .collect();
    Dataset::new(samples).expect("perturbation preserves sample count")
}

/// Tie-free uniform-mass binning with almost surely distinct biases:
/// perturbs the scores, runs the [`fit_umd`] core, then nudges each bias
/// to `(bias + delta * v) / (1 + delta)` with independent uniform `v`.
/// Every bias moves by at most `delta`. Queries against the returned
/// model should go through [`predict_randomized`], which perturbs the
/// query score by the same rule with a fresh draw.
pub fn fit_randomized_umd(
    data: &Dataset,
    bins: usize,
    params: &mut RandomizationParams,
) -> Result<BinningModel> {
    check_bin_capacity(data.len(), bins)?;
    let perturbed = perturb_scores(data, params);
    let base = fit_umd(&perturbed, bins)?;
    let delta = params.delta;
    let biases = base
        .biases()
        .iter()
        .map(|&b| perturb_one(b, delta, params.rng.uniform()))
        .collect();
    BinningModel::new(base.edges().to_vec(), biases)
}

/// Prediction path matching [`fit_randomized_umd`]: the query score is
/// perturbed with a fresh uniform draw before bin lookup.
pub fn predict_randomized(
    model: &BinningModel,
    score: f64,
    delta: f64,
    rng: &mut SeededRng,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::invalid_input(format!(
            "score {score} outside [0, 1]"
        )));
    }
    model.predict(perturb_one(score, delta, rng.uniform()))
}

/// Sample-split uniform-mass binning: a uniformly random partition puts
/// `ceil(split_fraction * n)` points in the edge-defining split and the
/// rest in the bias split. Edges use the same order-statistic index rule
/// as [`fit_umd`] applied to the first split; bias `b` is the mean label
/// of the second-split points landing in bin `b`.
pub fn fit_ums(
    data: &Dataset,
    bins: usize,
    split_fraction: f64,
    rng: &mut SeededRng,
) -> Result<BinningModel> {
    if bins == 0 {
        return Err(Error::invalid_config("bin count must be at least 1"));
    }
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::invalid_config(format!(
            "split fraction must lie in (0, 1), got {split_fraction}"
        )));
    }
    let n = data.len();
    let n1 = ((split_fraction * n as f64).ceil() as usize).min(n);
    let n2 = n - n1;
    if n1 == 0 || n2 == 0 {
        return Err(Error::invalid_config(format!(
            "both splits must be non-empty; got {n1} and {n2} of {n}"
        )));
    }
    if n1 + 1 < bins {
        return Err(Error::invalid_config(format!(
            "edge split of {n1} points cannot define {bins} bins"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let split1 = &order[..n1];
    let split2 = &order[n1..];

    let samples = data.samples();
    let mut split1_scores: Vec<f64> = split1.iter().map(|&i| samples[i].score).collect();
    split1_scores.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let index = edge_indices_unchecked(n1, bins);
    let a = index.indices();
    let mut edges = Vec::with_capacity(bins + 1);
    edges.push(0.0);
    for b in 1..bins {
        edges.push(split1_scores[a[b] - 1]);
    }
    edges.push(1.0);

    let mut sums = vec![0u64; bins];
    let mut counts = vec![0u64; bins];
    for &i in split2 {
        let b = bin_index(&edges, samples[i].score);
        sums[b - 1] += u64::from(samples[i].label);
        counts[b - 1] += 1;
    }
    let biases = sums
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(b, (&s, &c))| {
            if c == 0 {
                Err(Error::invalid_config(format!(
                    "ums: bin {} received no second-split points",
                    b + 1
                )))
            } else {
                Ok(s as f64 / c as f64)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    BinningModel::new(edges, biases)
}

/// Fixed-width binning: edges at `b / B`, bias `b` the mean label of the
/// scores in bin `b`. A bin with no points predicts its midpoint
/// `(2b - 1) / 2B`, the least informative value for that interval.
pub fn fit_fixed_width(data: &Dataset, bins: usize) -> Result<BinningModel> {
    if bins == 0 {
        return Err(Error::invalid_config("bin count must be at least 1"));
    }
    let edges: Vec<f64> = (0..=bins).map(|b| b as f64 / bins as f64).collect();
    let mut sums = vec![0u64; bins];
    let mut counts = vec![0u64; bins];
    for s in data.samples() {
        let b = bin_index(&edges, s.score);
        sums[b - 1] += u64::from(s.label);
        counts[b - 1] += 1;
    }
    let biases = (0..bins)
        .map(|b| {
            if counts[b] == 0 {
                (2 * b + 1) as f64 / (2 * bins) as f64
            } else {
                sums[b] as f64 / counts[b] as f64
            }
        })
        .collect();
    BinningModel::new(edges, biases)
}

/// Isotonic regression via pool-adjacent-violators on the score-sorted
/// labels. The level sets of the solution become the bins: each edge sits
/// at the midpoint between the last score of one level set and the first
/// score of the next, and the biases (level-set means) are nondecreasing.
pub fn fit_isotonic(data: &Dataset) -> Result<BinningModel> {
    let mut samples: Vec<ScoredSample> = data.samples().to_vec();
    samples.sort_by(|a, b| a.score.partial_cmp(&b.score).unwrap());

    struct Block {
        sum: f64,
        count: usize,
        first: usize,
        last: usize,
    }
    let mut blocks: Vec<Block> = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        blocks.push(Block {
            sum: f64::from(s.label),
            count: 1,
            first: i,
            last: i,
        });
        // Pool while the previous block's mean is >= the new one's; merging
        // on equality keeps the level values strictly increasing.
        while blocks.len() >= 2 {
            let prev = &blocks[blocks.len() - 2];
            let curr = &blocks[blocks.len() - 1];
            if prev.sum * curr.count as f64 >= curr.sum * prev.count as f64 {
                let curr = blocks.pop().unwrap();
                let prev = blocks.last_mut().unwrap();
                prev.sum += curr.sum;
                prev.count += curr.count;
                prev.last = curr.last;
            } else {
                break;
            }
        }
    }

    let bins = blocks.len();
    let mut edges = Vec::with_capacity(bins + 1);
    edges.push(0.0);
    for w in blocks.windows(2) {
        edges.push(0.5 * (samples[w[0].last].score + samples[w[1].first].score));
    }
    edges.push(1.0);
    let biases = blocks.iter().map(|b| b.sum / b.count as f64).collect();
    BinningModel::new(edges, biases)
}
