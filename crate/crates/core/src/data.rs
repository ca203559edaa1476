//! Data ingestion, standardization, the split/subsample protocol, and
//! synthetic generators with exact ground-truth oracles.
//!
//! The synthetic side pairs a score density `q` on `[0, 1]` with a true
//! regression function `eta(s) = E[Y | S = s]`. Because both are known in
//! closed form, the conditional label mean of any score interval can be
//! computed by quadrature to 1e-10, giving the experiment harness an
//! exact reference that is independent of any empirical estimate.

use std::path::Path;

use rand::Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::model::{Dataset, ScoredSample, SeededRng};

/// A feature matrix (row-major) with one binary label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    features: Vec<f64>,
    rows: usize,
    cols: usize,
    labels: Vec<u8>,
}

impl FeatureDataset {
    pub fn new(features: Vec<f64>, rows: usize, cols: usize, labels: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid_input("feature matrix must be non-empty"));
        }
        if features.len() != rows * cols {
            return Err(Error::invalid_input(format!(
                "feature matrix: expected {} entries, got {}",
                rows * cols,
                features.len()
            )));
        }
        if labels.len() != rows {
            return Err(Error::invalid_input(format!(
                "expected {rows} labels, got {}",
                labels.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_input("feature matrix contains non-finite entries"));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::invalid_input("labels must be binary"));
        }
        Ok(FeatureDataset {
            features,
            rows,
            cols,
            labels,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.cols..(i + 1) * self.cols]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Copies the given rows into a new dataset (used by the split plan).
    pub fn subset(&self, rows: &[usize]) -> Result<FeatureDataset> {
        let mut features = Vec::with_capacity(rows.len() * self.cols);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        FeatureDataset::new(features, rows.len(), self.cols, labels)
    }
}

/// Loads a CSV file with a header row. Every column except the label
/// column must be numeric; the label column must contain 0 or 1.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<FeatureDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(|e| Error::data(format!("{}: {e}", path.as_ref().display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::data(format!("bad header row: {e}")))?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::data(format!("label column {label_column:?} not found")))?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header occupies line 1
        let record = record.map_err(|e| Error::data(format!("line {line}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::data(format!(
                "line {line}: expected {} fields, got {}",
                headers.len(),
                record.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                match field.trim() {
                    "0" => labels.push(0),
                    "1" => labels.push(1),
                    other => {
                        return Err(Error::data(format!(
                            "line {line}: label {other:?} is not 0 or 1"
                        )))
                    }
                }
            } else {
                let value: f64 = field.trim().parse().map_err(|e| {
                    Error::data(format!("line {line}: bad numeric field {field:?}: {e}"))
                })?;
                if !value.is_finite() {
                    return Err(Error::data(format!(
                        "line {line}: non-finite feature {field:?}"
                    )));
                }
                features.push(value);
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::data("csv file contains no data rows"));
    }
    FeatureDataset::new(features, rows, headers.len() - 1, labels)
}

/// Loads a scored dataset CSV with columns `score,label`.
pub fn load_scored_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(|e| Error::data(format!("{}: {e}", path.as_ref().display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::data(format!("bad header row: {e}")))?;
    let score_idx = headers
        .iter()
        .position(|h| h == "score")
        .ok_or_else(|| Error::data("scored csv needs a `score` column"))?;
    let label_idx = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| Error::data("scored csv needs a `label` column"))?;

    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::data(format!("line {line}: {e}")))?;
        let score: f64 = record
            .get(score_idx)
            .ok_or_else(|| Error::data(format!("line {line}: missing score")))?
            .trim()
            .parse()
            .map_err(|e| Error::data(format!("line {line}: bad score: {e}")))?;
        let label: u8 = match record.get(label_idx).map(str::trim) {
            Some("0") => 0,
            Some("1") => 1,
            other => {
                return Err(Error::data(format!(
                    "line {line}: label {other:?} is not 0 or 1"
                )))
            }
        };
        samples.push(
            ScoredSample::new(score, label)
                .map_err(|e| Error::data(format!("line {line}: {e}")))?,
        );
    }
    Dataset::new(samples).map_err(|e| Error::data(e.to_string()))
}

/// Writes a scored dataset as a `score,label` CSV with full precision.
pub fn write_scored_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let mut out = String::from("score,label\n");
    for s in data.samples() {
        out.push_str(&format!("{},{}\n", s.score, s.label));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Per-column centering/scaling parameters from [`standardize`]. Applies
/// identically to held-out data and inverts exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    means: Vec<f64>,
    scales: Vec<f64>,
    constant: Vec<bool>,
}

impl Standardization {
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// True for columns that had zero variance and were passed through.
    pub fn constant_columns(&self) -> &[bool] {
        &self.constant
    }

    pub fn apply(&self, data: &FeatureDataset) -> Result<FeatureDataset> {
        self.transform(data, |v, m, s| (v - m) / s)
    }

    /// Exact algebraic inverse of [`Standardization::apply`].
    pub fn invert(&self, data: &FeatureDataset) -> Result<FeatureDataset> {
        self.transform(data, |v, m, s| v * s + m)
    }

    fn transform(
        &self,
        data: &FeatureDataset,
        f: impl Fn(f64, f64, f64) -> f64,
    ) -> Result<FeatureDataset> {
        if data.cols() != self.means.len() {
            return Err(Error::invalid_input(format!(
                "standardization fitted on {} columns, data has {}",
                self.means.len(),
                data.cols()
            )));
        }
        let mut features = Vec::with_capacity(data.rows() * data.cols());
        for i in 0..data.rows() {
            for (j, &v) in data.row(i).iter().enumerate() {
                features.push(f(v, self.means[j], self.scales[j]));
            }
        }
        FeatureDataset::new(features, data.rows(), data.cols(), data.labels().to_vec())
    }
}

/// Centers each column to mean 0 and scales to population standard
/// deviation 1 (divide-by-n convention). Zero-variance columns pass
/// through unscaled and are flagged in the returned transform.
pub fn standardize(data: &FeatureDataset) -> Result<(FeatureDataset, Standardization)> {
    if data.rows() < 2 {
        return Err(Error::invalid_input("standardization needs at least two rows"));
    }
    let n = data.rows() as f64;
    let cols = data.cols();
    let mut means = vec![0.0; cols];
    for i in 0..data.rows() {
        for (j, &v) in data.row(i).iter().enumerate() {
            means[j] += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut variances = vec![0.0; cols];
    for i in 0..data.rows() {
        for (j, &v) in data.row(i).iter().enumerate() {
            variances[j] += (v - means[j]).powi(2);
        }
    }
    let mut scales = vec![0.0; cols];
    let mut constant = vec![false; cols];
    for j in 0..cols {
        let std = (variances[j] / n).sqrt();
        if std > 0.0 {
            scales[j] = std;
        } else {
            scales[j] = 1.0;
            constant[j] = true;
            means[j] = 0.0; // pass constant columns through untouched
        }
    }
    let transform = Standardization {
        means,
        scales,
        constant,
    };
    let standardized = transform.apply(data)?;
    Ok((standardized, transform))
}

/// Sizes for the train / scaler / calibration-pool partition and the
/// per-repetition subsampling protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train: usize,
    pub scaler: usize,
    pub pool: usize,
    pub calibration_n: usize,
    pub test_n: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl SplitPlan {
    fn validate(&self, rows: usize) -> Result<()> {
        let total = self.train + self.scaler + self.pool;
        if total > rows {
            return Err(Error::invalid_config(format!(
                "split sizes {total} exceed {rows} available rows"
            )));
        }
        if self.train == 0 || self.scaler == 0 || self.pool == 0 {
            return Err(Error::invalid_config("all three splits must be non-empty"));
        }
        if self.calibration_n + self.test_n > self.pool {
            return Err(Error::invalid_config(format!(
                "calibration ({}) + test ({}) exceed the pool ({})",
                self.calibration_n, self.test_n, self.pool
            )));
        }
        if self.calibration_n == 0 || self.test_n == 0 {
            return Err(Error::invalid_config(
                "calibration and test subsamples must be non-empty",
            ));
        }
        Ok(())
    }
}

/// The one-time row partition drawn from the plan's master seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub scaler: Vec<usize>,
    pub pool: Vec<usize>,
}

/// One repetition's disjoint calibration/test row sets (indices into the
/// original data, drawn from the pool without replacement).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repetition {
    pub calibration: Vec<usize>,
    pub test: Vec<usize>,
}

/// Draws the train/scaler/pool partition once from the master seed, then
/// per repetition `r` subsamples a calibration set and a disjoint test
/// set from the pool with a stream derived from `(seed, r)`. Identical
/// plans produce identical output.
pub fn split_and_subsample(
    data: &FeatureDataset,
    plan: &SplitPlan,
) -> Result<(SplitIndices, Vec<Repetition>)> {
    plan.validate(data.rows())?;
    let master = SeededRng::new(plan.seed);

    let mut order: Vec<usize> = (0..data.rows()).collect();
    shuffle(&mut order, &mut master.derive(0));
    let train = order[..plan.train].to_vec();
    let scaler = order[plan.train..plan.train + plan.scaler].to_vec();
    let pool = order[plan.train + plan.scaler..plan.train + plan.scaler + plan.pool].to_vec();

    let repetitions = (0..plan.repetitions)
        .map(|r| {
            let mut rng = master.derive(1 + r as u64);
            let mut scratch = pool.clone();
            partial_shuffle(&mut scratch, plan.calibration_n + plan.test_n, &mut rng);
            Repetition {
                calibration: scratch[..plan.calibration_n].to_vec(),
                test: scratch[plan.calibration_n..plan.calibration_n + plan.test_n].to_vec(),
            }
        })
        .collect();

    Ok((
        SplitIndices {
            train,
            scaler,
            pool,
        },
        repetitions,
    ))
}

fn shuffle(items: &mut [usize], rng: &mut SeededRng) {
    use rand::seq::SliceRandom;
    items.shuffle(rng);
}

/// Fisher-Yates for the first `k` positions only.
fn partial_shuffle(items: &mut [usize], k: usize, rng: &mut SeededRng) {
    let n = items.len();
    for i in 0..k.min(n.saturating_sub(1)) {
        let j = rng.gen_range(i..n);
        items.swap(i, j);
    }
}

/// Score densities available to the synthetic generator. Beta shapes must
/// be >= 1 so the density stays bounded and the quadrature oracle can
/// evaluate it at interval endpoints.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreDistribution {
    Uniform,
    Beta { alpha: f64, beta: f64 },
}

impl ScoreDistribution {
    fn validate(&self) -> Result<()> {
        match self {
            ScoreDistribution::Uniform => Ok(()),
            ScoreDistribution::Beta { alpha, beta } => {
                if !(alpha.is_finite() && beta.is_finite() && *alpha >= 1.0 && *beta >= 1.0) {
                    Err(Error::invalid_config(format!(
                        "beta score density needs shapes >= 1, got ({alpha}, {beta})"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Normalized density at `s` in `[0, 1]`.
    pub fn density(&self, s: f64) -> f64 {
        match self {
            ScoreDistribution::Uniform => 1.0,
            ScoreDistribution::Beta { alpha, beta } => {
                let ln_norm = statrs::function::gamma::ln_gamma(*alpha)
                    + statrs::function::gamma::ln_gamma(*beta)
                    - statrs::function::gamma::ln_gamma(alpha + beta);
                let ln_num = if s == 0.0 || s == 1.0 {
                    // Shapes are >= 1, so 0^0 conventions only arise at
                    // shape exactly 1 where the factor is 1.
                    (alpha - 1.0) * if s == 0.0 { f64::NEG_INFINITY } else { 0.0 }
                        + (beta - 1.0) * if s == 1.0 { f64::NEG_INFINITY } else { 0.0 }
                } else {
                    (alpha - 1.0) * s.ln() + (beta - 1.0) * (1.0 - s).ln()
                };
                if ln_num == f64::NEG_INFINITY {
                    0.0
                } else {
                    (ln_num - ln_norm).exp()
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        match self {
            ScoreDistribution::Uniform => rng.uniform(),
            ScoreDistribution::Beta { alpha, beta } => {
                let dist = rand_distr::Beta::new(*alpha, *beta)
                    .expect("shapes validated at construction");
                dist.sample(rng).clamp(0.0, 1.0)
            }
        }
    }
}

/// True regression functions `eta: [0, 1] -> [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum RegressionFn {
    /// `eta(s) = s` (perfectly calibrated scores).
    Identity,
    /// `eta(s) = s^k`.
    Power { exponent: f64 },
    /// `eta(s) = sigmoid(slope * (s - center))`.
    LogisticWarp { slope: f64, center: f64 },
    /// Right-continuous step function: `values[k]` on
    /// `[breaks[k-1], breaks[k])` with implicit outer breaks 0 and 1.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
}

impl RegressionFn {
    fn validate(&self) -> Result<()> {
        match self {
            RegressionFn::Identity => Ok(()),
            RegressionFn::Power { exponent } => {
                if !(exponent.is_finite() && *exponent > 0.0) {
                    Err(Error::invalid_config(format!(
                        "power regression needs a positive exponent, got {exponent}"
                    )))
                } else {
                    Ok(())
                }
            }
            RegressionFn::LogisticWarp { slope, center } => {
                if !slope.is_finite() || !center.is_finite() {
                    Err(Error::invalid_config("logistic warp parameters must be finite"))
                } else {
                    Ok(())
                }
            }
            RegressionFn::PiecewiseConstant { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(Error::invalid_config(format!(
                        "piecewise regression: {} breaks require {} values, got {}",
                        breaks.len(),
                        breaks.len() + 1,
                        values.len()
                    )));
                }
                if breaks.windows(2).any(|w| w[1] <= w[0])
                    || breaks.iter().any(|b| !(0.0..=1.0).contains(b))
                {
                    return Err(Error::invalid_config(
                        "piecewise breaks must be increasing within [0, 1]",
                    ));
                }
                if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::invalid_config("piecewise values must lie in [0, 1]"));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            RegressionFn::Identity => s,
            RegressionFn::Power { exponent } => s.powf(*exponent),
            RegressionFn::LogisticWarp { slope, center } => {
                1.0 / (1.0 + (-slope * (s - center)).exp())
            }
            RegressionFn::PiecewiseConstant { breaks, values } => {
                let k = breaks.partition_point(|&b| b <= s);
                values[k]
            }
        }
    }

    /// Interior discontinuities, used to split quadrature intervals.
    fn breakpoints(&self) -> &[f64] {
        match self {
            RegressionFn::PiecewiseConstant { breaks, .. } => breaks,
            _ => &[],
        }
    }
}

/// Ground truth for synthetic experiments: a score density, a regression
/// function, and the seed that makes generation reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub score_distribution: ScoreDistribution,
    pub regression: RegressionFn,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(
        score_distribution: ScoreDistribution,
        regression: RegressionFn,
        seed: u64,
    ) -> Result<Self> {
        score_distribution.validate()?;
        regression.validate()?;
        Ok(SyntheticSpec {
            score_distribution,
            regression,
            seed,
        })
    }
}

/// Draws `n` scores from the spec's distribution and labels them with
/// independent Bernoulli(`eta(score)`) flips, using the spec's own seed.
pub fn synthesize(spec: &SyntheticSpec, n: usize) -> Result<Dataset> {
    let mut rng = SeededRng::new(spec.seed);
    synthesize_with(spec, n, &mut rng)
}

/// As [`synthesize`] but drawing from a caller-supplied stream, so the
/// experiment harness can hand each trial its own derived stream.
pub fn synthesize_with(spec: &SyntheticSpec, n: usize, rng: &mut SeededRng) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid_input("cannot synthesize an empty dataset"));
    }
    let samples = (0..n)
        .map(|_| {
            let score = spec.score_distribution.sample(rng);
            let label = u8::from(rng.uniform() < spec.regression.eval(score));
            ScoredSample { score, label }
        })
        .collect();
    Dataset::new(samples)
}

/// Absolute tolerance of the ground-truth quadrature: two orders below
/// the decision margins of the coverage experiments.
pub const QUADRATURE_TOL: f64 = 1e-10;

const MASS_FLOOR: f64 = 1e-15;

/// Exact conditional label mean over a score interval:
/// `E[Y | lo <= S < hi]  =  (int eta q) / (int q)` on `[lo, hi]`,
/// by adaptive quadrature to [`QUADRATURE_TOL`].
pub fn true_bin_mean(spec: &SyntheticSpec, lo: f64, hi: f64) -> Result<f64> {
    let (weighted, mass) = interval_integrals(spec, lo, hi)?;
    if mass <= MASS_FLOOR {
        return Err(Error::invalid_input(format!(
            "interval [{lo}, {hi}] carries no probability mass"
        )));
    }
    Ok((weighted / mass).clamp(0.0, 1.0))
}

/// Probability mass of a score interval under the spec's density.
pub fn bin_mass(spec: &SyntheticSpec, lo: f64, hi: f64) -> Result<f64> {
    let (_, mass) = interval_integrals(spec, lo, hi)?;
    Ok(mass)
}

fn interval_integrals(spec: &SyntheticSpec, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
        return Err(Error::invalid_input(format!(
            "need 0 <= lo < hi <= 1, got [{lo}, {hi}]"
        )));
    }
    // Split at the regression function's discontinuities so the adaptive
    // rule only ever sees smooth integrands.
    let mut cuts = vec![lo];
    for &b in spec.regression.breakpoints() {
        if b > lo && b < hi {
            cuts.push(b);
        }
    }
    cuts.push(hi);

    let mut weighted = 0.0;
    let mut mass = 0.0;
    for w in cuts.windows(2) {
        let q = |s: f64| spec.score_distribution.density(s);
        let eq = |s: f64| spec.regression.eval(s) * spec.score_distribution.density(s);
        weighted += adaptive_simpson(&eq, w[0], w[1], QUADRATURE_TOL);
        mass += adaptive_simpson(&q, w[0], w[1], QUADRATURE_TOL);
    }
    Ok((weighted, mass))
}

/// Adaptive Simpson integration with the classic 15-fold error estimate.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }

    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_csv_two_rows() {
        let f = write_temp("a,b,label\n1.0,2.0,0\n3.5,-1.25,1\n");
        let data = load_csv(f.path(), "label").unwrap();
        assert_eq!(data.rows(), 2);
        assert_eq!(data.cols(), 2);
        assert_eq!(data.row(0), &[1.0, 2.0]);
        assert_eq!(data.row(1), &[3.5, -1.25]);
        assert_eq!(data.labels(), &[0, 1]);
    }

    #[test]
    fn load_csv_rejects_nonbinary_label_with_line() {
        let f = write_temp("a,label\n1.0,0\n2.0,2\n");
        let err = load_csv(f.path(), "label").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn load_csv_rejects_empty_file() {
        let f = write_temp("a,label\n");
        assert!(load_csv(f.path(), "label").is_err());
    }

    #[test]
    fn load_csv_missing_file_is_error() {
        assert!(load_csv("/nonexistent/never.csv", "label").is_err());
    }

    #[test]
    fn scored_csv_round_trip() {
        let data =
            Dataset::from_pairs([(0.125, 0), (1.0 / 3.0, 1), (0.9999999999, 0)]).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_scored_csv(f.path(), &data).unwrap();
        assert_eq!(load_scored_csv(f.path()).unwrap(), data);
    }

    #[test]
    fn standardize_two_point_column() {
        let data = FeatureDataset::new(vec![0.0, 2.0], 2, 1, vec![0, 1]).unwrap();
        let (out, transform) = standardize(&data).unwrap();
        assert_eq!(out.row(0), &[-1.0]);
        assert_eq!(out.row(1), &[1.0]);
        assert!(!transform.constant_columns()[0]);
    }

    #[test]
    fn standardize_flags_constant_column() {
        let data = FeatureDataset::new(vec![3.0, 1.0, 3.0, 2.0], 2, 2, vec![0, 1]).unwrap();
        let (out, transform) = standardize(&data).unwrap();
        assert!(transform.constant_columns()[0]);
        assert!(!transform.constant_columns()[1]);
        assert_eq!(out.row(0)[0], 3.0);
        assert_eq!(out.row(1)[0], 3.0);
    }

    #[test]
    fn standardize_inverse_recovers_input() {
        let data = FeatureDataset::new(
            vec![0.5, -3.0, 2.5, 10.0, -1.5, 4.0],
            3,
            2,
            vec![0, 1, 1],
        )
        .unwrap();
        let (out, transform) = standardize(&data).unwrap();
        let back = transform.invert(&out).unwrap();
        for i in 0..data.rows() {
            for (a, b) in data.row(i).iter().zip(back.row(i)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    fn toy_features(rows: usize) -> FeatureDataset {
        let features: Vec<f64> = (0..rows).map(|i| i as f64).collect();
        let labels: Vec<u8> = (0..rows).map(|i| (i % 2) as u8).collect();
        FeatureDataset::new(features, rows, 1, labels).unwrap()
    }

    #[test]
    fn split_and_subsample_deterministic() {
        let data = toy_features(100);
        let plan = SplitPlan {
            train: 40,
            scaler: 20,
            pool: 40,
            calibration_n: 10,
            test_n: 15,
            repetitions: 5,
            seed: 99,
        };
        let a = split_and_subsample(&data, &plan).unwrap();
        let b = split_and_subsample(&data, &plan).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.len(), 5);
    }

    #[test]
    fn split_and_subsample_disjoint_within_repetition() {
        let data = toy_features(60);
        let plan = SplitPlan {
            train: 20,
            scaler: 10,
            pool: 30,
            calibration_n: 12,
            test_n: 12,
            repetitions: 8,
            seed: 4,
        };
        let (splits, reps) = split_and_subsample(&data, &plan).unwrap();
        use std::collections::HashSet;
        let pool: HashSet<usize> = splits.pool.iter().copied().collect();
        for rep in &reps {
            let cal: HashSet<usize> = rep.calibration.iter().copied().collect();
            let test: HashSet<usize> = rep.test.iter().copied().collect();
            assert_eq!(cal.len(), 12);
            assert_eq!(test.len(), 12);
            assert!(cal.is_disjoint(&test));
            assert!(cal.union(&test).all(|i| pool.contains(i)));
        }
    }

    #[test]
    fn split_plan_infeasible_rejected() {
        let data = toy_features(10);
        let plan = SplitPlan {
            train: 6,
            scaler: 3,
            pool: 3,
            calibration_n: 2,
            test_n: 2,
            repetitions: 1,
            seed: 0,
        };
        assert!(split_and_subsample(&data, &plan).is_err());
    }

    fn uniform_spec(regression: RegressionFn, seed: u64) -> SyntheticSpec {
        SyntheticSpec::new(ScoreDistribution::Uniform, regression, seed).unwrap()
    }

    #[test]
    fn synthesize_zero_regression_gives_zero_labels() {
        let spec = uniform_spec(
            RegressionFn::PiecewiseConstant {
                breaks: vec![],
                values: vec![0.0],
            },
            5,
        );
        let data = synthesize(&spec, 500).unwrap();
        assert!(data.labels().all(|y| y == 0));
    }

    #[test]
    fn synthesize_identity_label_mean_near_half() {
        // E[Y] = E[S] = 1/2 for uniform scores; 3 sigma of n=4000 is ~0.024.
        let spec = uniform_spec(RegressionFn::Identity, 6);
        let data = synthesize(&spec, 4000).unwrap();
        let sigma = (0.25f64 / 4000.0).sqrt();
        assert!((data.label_mean() - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn synthesize_reproducible() {
        let spec = uniform_spec(RegressionFn::Identity, 123);
        assert_eq!(synthesize(&spec, 50).unwrap(), synthesize(&spec, 50).unwrap());
    }

    #[test]
    fn true_bin_mean_constant_regression() {
        let spec = uniform_spec(
            RegressionFn::PiecewiseConstant {
                breaks: vec![],
                values: vec![0.37],
            },
            0,
        );
        for (lo, hi) in [(0.0, 1.0), (0.2, 0.21), (0.5, 0.75)] {
            assert!((true_bin_mean(&spec, lo, hi).unwrap() - 0.37).abs() < 1e-10);
        }
    }

    #[test]
    fn true_bin_mean_uniform_identity_half_interval() {
        let spec = uniform_spec(RegressionFn::Identity, 0);
        assert!((true_bin_mean(&spec, 0.0, 0.5).unwrap() - 0.25).abs() < 1e-10);
    }

    #[test]
    fn true_bin_mean_uniform_square() {
        let spec = uniform_spec(RegressionFn::Power { exponent: 2.0 }, 0);
        assert!((true_bin_mean(&spec, 0.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn true_bin_mean_beta_identity_closed_form() {
        // E[S] of Beta(2, 5) is 2/7.
        let spec = SyntheticSpec::new(
            ScoreDistribution::Beta {
                alpha: 2.0,
                beta: 5.0,
            },
            RegressionFn::Identity,
            0,
        )
        .unwrap();
        assert!((true_bin_mean(&spec, 0.0, 1.0).unwrap() - 2.0 / 7.0).abs() < 1e-9);
        assert!((bin_mass(&spec, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn true_bin_mean_zero_mass_interval_rejected() {
        let spec = SyntheticSpec::new(
            ScoreDistribution::Beta {
                alpha: 1.0,
                beta: 400.0,
            },
            RegressionFn::Identity,
            0,
        )
        .unwrap();
        // Mass of [0.9, 1] under Beta(1, 400) is (0.1)^400: below any float.
        assert!(true_bin_mean(&spec, 0.9, 1.0).is_err());
        assert!(true_bin_mean(&spec, 0.7, 0.2).is_err());
    }

    #[test]
    fn true_bin_mean_matches_monte_carlo() {
        let specs = [
            SyntheticSpec::new(
                ScoreDistribution::Beta {
                    alpha: 2.0,
                    beta: 5.0,
                },
                RegressionFn::LogisticWarp {
                    slope: 4.0,
                    center: 0.5,
                },
                31,
            )
            .unwrap(),
            uniform_spec(
                RegressionFn::PiecewiseConstant {
                    breaks: vec![0.3, 0.6],
                    values: vec![0.2, 0.5, 0.9],
                },
                32,
            ),
            SyntheticSpec::new(
                ScoreDistribution::Beta {
                    alpha: 3.0,
                    beta: 1.5,
                },
                RegressionFn::Power { exponent: 1.7 },
                33,
            )
            .unwrap(),
        ];
        for spec in &specs {
            let (lo, hi) = (0.25, 0.8);
            let exact = true_bin_mean(spec, lo, hi).unwrap();
            let mut rng = SeededRng::new(spec.seed);
            let draws = 1_000_000usize;
            let mut hits = 0u64;
            let mut positives = 0u64;
            for _ in 0..draws {
                let s = spec.score_distribution.sample(&mut rng);
                if s >= lo && s < hi {
                    hits += 1;
                    if rng.uniform() < spec.regression.eval(s) {
                        positives += 1;
                    }
                }
            }
            let estimate = positives as f64 / hits as f64;
            let se = (estimate * (1.0 - estimate) / hits as f64).sqrt().max(1e-6);
            assert!(
                (estimate - exact).abs() < 4.0 * se,
                "spec {:?}: exact {exact} vs mc {estimate} (se {se})",
                spec.regression
            );
        }
    }
}
