//! Small numeric helpers shared by the assessment and experiment code.

use statrs::distribution::{Beta, ContinuousCDF};

/// Neumaier-compensated sum; the experiment harness reduces per-trial
/// results in index order with this so totals do not depend on thread
/// count or accumulation order upstream.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    kahan_sum(values.iter().copied()) / values.len() as f64
}

/// Mean and standard error of the mean: sample standard deviation with
/// divisor `n - 1`, divided by `sqrt(n)`. A single value yields 0.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let m = mean(values);
    if n == 1 {
        return (m, 0.0);
    }
    let ss = kahan_sum(values.iter().map(|v| (v - m) * (v - m)));
    let sample_var = ss / (n - 1) as f64;
    (m, (sample_var / n as f64).sqrt())
}

/// One-sided Clopper-Pearson upper confidence bound on a binomial
/// proportion: the exact upper limit for `successes` out of `trials` at
/// the given confidence level, via the beta quantile.
pub fn clopper_pearson_upper(successes: usize, trials: usize, confidence: f64) -> f64 {
    assert!(
        (0.0..1.0).contains(&(1.0 - confidence)) && confidence > 0.0,
        "confidence must lie in (0, 1)"
    );
    assert!(successes <= trials, "successes exceed trials");
    if trials == 0 || successes == trials {
        return 1.0;
    }
    let dist = Beta::new((successes + 1) as f64, (trials - successes) as f64)
        .expect("valid beta parameters");
    dist.inverse_cdf(confidence)
}
