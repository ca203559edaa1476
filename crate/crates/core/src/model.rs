//! Domain types shared by every binning calibrator: scored samples,
//! datasets, the fitted binning model, and the seeded random stream.
//!
//! A [`BinningModel`] is a partition of `[0, 1]` into `B` bins given by
//! `B + 1` edges together with one bias estimate per bin. Bins are
//! half-open `[e_{b-1}, e_b)` except the last, which is closed at 1 so
//! that a score of exactly 1 has a home. Bins are numbered `1..=B`.

use std::fmt::Write as _;
use std::path::Path;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A classifier score in `[0, 1]` paired with a binary label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    pub score: f64,
    pub label: u8,
}

impl ScoredSample {
    pub fn new(score: f64, label: u8) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::invalid_input(format!(
                "score {score} outside [0, 1]"
            )));
        }
        if label > 1 {
            return Err(Error::invalid_input(format!(
                "label {label} is not binary"
            )));
        }
        Ok(ScoredSample { score, label })
    }
}

/// A non-empty ordered collection of scored samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<ScoredSample>,
}

impl Dataset {
    pub fn new(samples: Vec<ScoredSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid_input("dataset must contain at least one sample"));
        }
        Ok(Dataset { samples })
    }

    /// Builds a dataset from raw `(score, label)` pairs, validating each.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, u8)>,
    {
        let samples = pairs
            .into_iter()
            .map(|(s, y)| ScoredSample::new(s, y))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[ScoredSample] {
        &self.samples
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.score)
    }

    pub fn labels(&self) -> impl Iterator<Item = u8> + '_ {
        self.samples.iter().map(|s| s.label)
    }

    pub fn label_mean(&self) -> f64 {
        let total: u64 = self.samples.iter().map(|s| u64::from(s.label)).sum();
        total as f64 / self.samples.len() as f64
    }
}

/// Given sorted edges `e_0 <= ... <= e_B`, returns the 1-based bin of
/// `score`: the unique `b` with `e_{b-1} <= score < e_b`, with `score = 1`
/// assigned to bin `B`. Zero-width bins (duplicated edges) are skipped in
/// favour of the widest interval containing the score.
pub(crate) fn bin_index(edges: &[f64], score: f64) -> usize {
    let bins = edges.len() - 1;
    edges.partition_point(|&e| e <= score).min(bins).max(1)
}

/// A fitted binning calibrator: edges plus per-bin bias estimates.
///
/// Invariants enforced at construction: `edges[0] == 0`, `edges[B] == 1`,
/// edges nondecreasing, all biases in `[0, 1]`, everything finite.
/// Prediction needs only this struct, never the training data.
#[derive(Debug, Clone, PartialEq)]
pub struct BinningModel {
    edges: Vec<f64>,
    biases: Vec<f64>,
}

impl BinningModel {
    pub fn new(edges: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::invalid_input("model needs at least two edges"));
        }
        if biases.len() + 1 != edges.len() {
            return Err(Error::invalid_input(format!(
                "{} edges require {} biases, got {}",
                edges.len(),
                edges.len() - 1,
                biases.len()
            )));
        }
        if edges[0] != 0.0 {
            return Err(Error::invalid_input("first edge must be exactly 0"));
        }
        if *edges.last().unwrap() != 1.0 {
            return Err(Error::invalid_input("last edge must be exactly 1"));
        }
        if edges.windows(2).any(|w| w[0].is_nan() || w[1].is_nan() || w[1] < w[0]) {
            return Err(Error::invalid_input("edges must be nondecreasing"));
        }
        if biases.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(Error::invalid_input("every bias must lie in [0, 1]"));
        }
        Ok(BinningModel { edges, biases })
    }

    /// Number of bins `B`.
    pub fn bins(&self) -> usize {
        self.biases.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Returns the 1-based bin index of `score`.
    ///
    /// Bins are `[e_{b-1}, e_b)` for `b < B`; the last bin is closed so
    /// that `score = 1` maps to bin `B`. Scores outside `[0, 1]` are
    /// rejected rather than clamped.
    pub fn assign_bin(&self, score: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::invalid_input(format!(
                "score {score} outside [0, 1]"
            )));
        }
        Ok(bin_index(&self.edges, score))
    }

    /// Returns the bias of the bin containing `score`.
    pub fn predict(&self, score: f64) -> Result<f64> {
        Ok(self.biases[self.assign_bin(score)? - 1])
    }

    /// Serializes the model as plain text: line 1 is `B`, line 2 the
    /// `B + 1` edges, line 3 the `B` biases. Values use the shortest
    /// decimal form that round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.bins());
        let _ = writeln!(out, "{}", join_floats(&self.edges));
        let _ = writeln!(out, "{}", join_floats(&self.biases));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let bins: usize = lines
            .next()
            .ok_or_else(|| Error::data("model file: missing bin-count line"))?
            .trim()
            .parse()
            .map_err(|e| Error::data(format!("model file: bad bin count: {e}")))?;
        let edges = parse_floats(
            lines
                .next()
                .ok_or_else(|| Error::data("model file: missing edges line"))?,
        )?;
        let biases = parse_floats(
            lines
                .next()
                .ok_or_else(|| Error::data("model file: missing biases line"))?,
        )?;
        if edges.len() != bins + 1 || biases.len() != bins {
            return Err(Error::data(format!(
                "model file: expected {} edges and {} biases, got {} and {}",
                bins + 1,
                bins,
                edges.len(),
                biases.len()
            )));
        }
        BinningModel::new(edges, biases).map_err(|e| Error::data(e.to_string()))
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        BinningModel::from_text(&text)
    }
}

fn join_floats(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out
}

fn parse_floats(line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|e| Error::data(format!("model file: bad number {tok:?}: {e}")))
        })
        .collect()
}

/// A reproducible random stream: identical seeds yield identical draw
/// sequences, and [`SeededRng::derive`] yields independent child streams
/// as a pure function of `(seed, stream)` regardless of how many draws
/// the parent has already made.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream keyed by `(seed, stream)`; used to hand out
    /// independent streams to parallel trials.
    pub fn derive(&self, stream: u64) -> SeededRng {
        SeededRng::new(splitmix64(self.seed ^ splitmix64(stream)))
    }

    /// A uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        use rand::Rng;
        self.inner.gen::<f64>()
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
