//! Pre-learnt score production: unregularized logistic regression and
//! sigmoid rescaling of an existing score.
//!
//! Both fits maximize the Bernoulli log-likelihood with a damped Newton
//! iteration (gradient ascent when the curvature is not positive
//! definite). A backtracking line search keeps the log-likelihood
//! nondecreasing at every iteration, and the fit is declared converged
//! once the gradient infinity-norm drops below the tolerance. Perfectly
//! separable data never converges: the weights drift outward until the
//! iteration cap is hit, and the flag reports it.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::FeatureDataset;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-8;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// A linear scorer `x -> sigmoid(w . x + intercept)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearScorer {
    pub fn apply(&self, features: &[f64]) -> f64 {
        let z: f64 = self
            .weights
            .iter()
            .zip(features)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.intercept;
        sigmoid(z)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("linear-scorer\n");
        let _ = writeln!(out, "{}", self.intercept);
        for w in &self.weights {
            let _ = writeln!(out, "{w}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("linear-scorer") => {}
            other => {
                return Err(Error::data(format!(
                    "expected linear-scorer tag, got {other:?}"
                )))
            }
        }
        let intercept = parse_line(lines.next())?;
        let weights = lines.map(|l| parse_line(Some(l))).collect::<Result<_>>()?;
        Ok(LinearScorer { weights, intercept })
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        LinearScorer::from_text(&std::fs::read_to_string(path)?)
    }
}

/// A one-dimensional recalibration map `s -> sigmoid(slope * s + intercept)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidScaler {
    pub slope: f64,
    pub intercept: f64,
}

impl SigmoidScaler {
    pub fn apply(&self, score: f64) -> f64 {
        sigmoid(self.slope * score + self.intercept)
    }

    pub fn to_text(&self) -> String {
        format!("sigmoid-scaler\n{} {}\n", self.slope, self.intercept)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("sigmoid-scaler") => {}
            other => {
                return Err(Error::data(format!(
                    "expected sigmoid-scaler tag, got {other:?}"
                )))
            }
        }
        let coeffs: Vec<f64> = lines
            .next()
            .ok_or_else(|| Error::data("sigmoid-scaler: missing coefficients"))?
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|e| Error::data(format!("bad coefficient {t:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if coeffs.len() != 2 {
            return Err(Error::data("sigmoid-scaler: expected two coefficients"));
        }
        Ok(SigmoidScaler {
            slope: coeffs[0],
            intercept: coeffs[1],
        })
    }
}

/// Outcome of a maximum-likelihood fit: the scorer plus convergence
/// diagnostics. `ll_trace` records the log-likelihood after every
/// accepted step (nondecreasing by construction).
#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub scorer: LinearScorer,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub ll_trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PlattFit {
    pub scaler: SigmoidScaler,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub ll_trace: Vec<f64>,
}

/// Fits unregularized logistic regression on the dataset's features and
/// labels by damped Newton ascent, stopping once the gradient
/// infinity-norm is at most `tol` or after `max_iters` iterations.
pub fn fit_logistic(data: &FeatureDataset, max_iters: usize, tol: f64) -> Result<LogisticFit> {
    let rows: Vec<&[f64]> = (0..data.rows()).map(|i| data.row(i)).collect();
    let labels: Vec<f64> = data.labels().iter().map(|&y| f64::from(y)).collect();
    let (theta, converged, iterations, grad_norm, ll_trace) =
        maximize(&rows, &labels, data.cols(), max_iters, tol)?;
    Ok(LogisticFit {
        scorer: LinearScorer {
            weights: theta[..data.cols()].to_vec(),
            intercept: theta[data.cols()],
        },
        converged,
        iterations,
        final_gradient_norm: grad_norm,
        ll_trace,
    })
}

/// Sigmoid rescaling of scores: the one-dimensional case of
/// [`fit_logistic`] with the score as the single feature, using the
/// default iteration cap and tolerance.
pub fn fit_platt(scores: &[f64], labels: &[u8]) -> Result<PlattFit> {
    fit_platt_with(scores, labels, DEFAULT_MAX_ITERS, DEFAULT_TOL)
}

pub fn fit_platt_with(
    scores: &[f64],
    labels: &[u8],
    max_iters: usize,
    tol: f64,
) -> Result<PlattFit> {
    if scores.len() != labels.len() {
        return Err(Error::invalid_input(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::invalid_input("cannot fit on an empty score vector"));
    }
    if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::invalid_input("scores must lie in [0, 1]"));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::invalid_input("labels must be binary"));
    }
    let rows: Vec<&[f64]> = scores.chunks(1).collect();
    let labels: Vec<f64> = labels.iter().map(|&y| f64::from(y)).collect();
    let (theta, converged, iterations, grad_norm, ll_trace) =
        maximize(&rows, &labels, 1, max_iters, tol)?;
    Ok(PlattFit {
        scaler: SigmoidScaler {
            slope: theta[0],
            intercept: theta[1],
        },
        converged,
        iterations,
        final_gradient_norm: grad_norm,
        ll_trace,
    })
}

type MaximizeOutcome = (Vec<f64>, bool, usize, f64, Vec<f64>);

/// Damped Newton ascent of the Bernoulli log-likelihood over the
/// augmented parameter vector `(weights, intercept)`.
fn maximize(
    rows: &[&[f64]],
    labels: &[f64],
    cols: usize,
    max_iters: usize,
    tol: f64,
) -> Result<MaximizeOutcome> {
    if rows.is_empty() {
        return Err(Error::invalid_input("cannot fit on an empty dataset"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid_input("tolerance must be positive"));
    }
    if rows
        .iter()
        .any(|r| r.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::invalid_input("features must be finite"));
    }

    let dim = cols + 1;
    let mut theta = vec![0.0; dim];
    let mut ll = log_likelihood(rows, labels, &theta);
    let mut ll_trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    let mut grad = gradient(rows, labels, &theta);

    for iter in 1..=max_iters {
        let grad_norm = inf_norm(&grad);
        if grad_norm <= tol {
            converged = true;
            break;
        }
        iterations = iter;

        let hessian = neg_curvature(rows, &theta);
        let direction = match cholesky_solve(&hessian, &grad, dim) {
            Some(d) => d,
            None => grad.clone(), // gradient ascent when curvature degenerates
        };

        // Backtracking line search: never accept a decrease.
        let mut step = 1.0;
        let mut advanced = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = theta
                .iter()
                .zip(&direction)
                .map(|(t, d)| t + step * d)
                .collect();
            let candidate_ll = log_likelihood(rows, labels, &candidate);
            if candidate_ll >= ll {
                theta = candidate;
                ll = candidate_ll;
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        ll_trace.push(ll);
        if !advanced {
            break; // no ascent direction left at this scale
        }
        grad = gradient(rows, labels, &theta);
    }
    let grad_norm = inf_norm(&grad);
    if grad_norm <= tol {
        converged = true;
    }
    // On (quasi-)separated data the fitted probabilities saturate and the
    // gradient underflows to zero while the maximizer sits at infinity;
    // that is divergence, not convergence.
    if perfectly_predicted(rows, labels, &theta) {
        converged = false;
    }

    Ok((theta, converged, iterations, grad_norm, ll_trace))
}

/// True when every sample's fitted probability matches its label to
/// within 1e-6, i.e. the likelihood supremum sits at infinite weights.
/// An interior maximizer always leaves some residual far above this.
fn perfectly_predicted(rows: &[&[f64]], labels: &[f64], theta: &[f64]) -> bool {
    rows.iter().zip(labels).all(|(row, &y)| {
        let p = sigmoid(dot_aug(theta, row));
        (p - y).abs() <= 1e-6
    })
}

fn dot_aug(theta: &[f64], row: &[f64]) -> f64 {
    theta
        .iter()
        .zip(row.iter().chain(std::iter::once(&1.0)))
        .map(|(t, x)| t * x)
        .sum()
}

fn log_likelihood(rows: &[&[f64]], labels: &[f64], theta: &[f64]) -> f64 {
    rows.iter()
        .zip(labels)
        .map(|(row, &y)| {
            let z = dot_aug(theta, row);
            y * z - softplus(z)
        })
        .sum()
}

fn gradient(rows: &[&[f64]], labels: &[f64], theta: &[f64]) -> Vec<f64> {
    let dim = theta.len();
    let mut grad = vec![0.0; dim];
    for (row, &y) in rows.iter().zip(labels) {
        let residual = y - sigmoid(dot_aug(theta, row));
        for (g, &x) in grad
            .iter_mut()
            .zip(row.iter().chain(std::iter::once(&1.0)))
        {
            *g += residual * x;
        }
    }
    grad
}

/// Negative Hessian of the log-likelihood (positive semidefinite),
/// stored densely row-major.
fn neg_curvature(rows: &[&[f64]], theta: &[f64]) -> Vec<f64> {
    let dim = theta.len();
    let mut h = vec![0.0; dim * dim];
    let mut aug = vec![0.0; dim];
    for row in rows {
        aug[..dim - 1].copy_from_slice(row);
        aug[dim - 1] = 1.0;
        let p = sigmoid(dot_aug(theta, row));
        let w = p * (1.0 - p);
        for i in 0..dim {
            for j in i..dim {
                h[i * dim + j] += w * aug[i] * aug[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            h[i * dim + j] = h[j * dim + i];
        }
    }
    h
}

/// Solves `a x = b` for symmetric positive-definite `a` via Cholesky.
/// Returns `None` when a pivot is not strictly positive.
fn cholesky_solve(a: &[f64], b: &[f64], dim: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = a[i * dim + j];
            for k in 0..j {
                sum -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if !sum.is_finite() || sum <= 1e-12 {
                    return None;
                }
                l[i * dim + i] = sum.sqrt();
            } else {
                l[i * dim + j] = sum / l[j * dim + j];
            }
        }
    }
    // Forward then backward substitution.
    let mut y = vec![0.0; dim];
    for i in 0..dim {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * dim + k] * y[k];
        }
        y[i] = sum / l[i * dim + i];
    }
    let mut x = vec![0.0; dim];
    for i in (0..dim).rev() {
        let mut sum = y[i];
        for k in i + 1..dim {
            sum -= l[k * dim + i] * x[k];
        }
        x[i] = sum / l[i * dim + i];
    }
    Some(x)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn parse_line(line: Option<&str>) -> Result<f64> {
    line.ok_or_else(|| Error::data("scorer file: missing line"))?
        .trim()
        .parse()
        .map_err(|e| Error::data(format!("scorer file: bad number: {e}")))
}
