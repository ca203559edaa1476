//! Closed-form finite-sample calibration bounds for uniform-mass
//! binning, their inversions to required sample sizes, and the bin-count
//! planning curve.
//!
//! All bounds share the same ingredients: with `n` calibration points and
//! `B` bins, every bin keeps at least `m = floor(n/B) - 1` labels for its
//! bias estimate, so a Hoeffding interval of half-width
//! `sqrt(log(2/t) / 2m)` holds per bin with failure budget `t`. Spending
//! `t = alpha/B` and a union bound gives the conditional (all bins
//! simultaneously) guarantee; spending `t = alpha` with total expectation
//! gives the sharper marginal guarantee available for the randomized
//! fit. Natural logarithms throughout.

use std::str::FromStr;

use crate::error::{Error, Result};

/// Which guarantee a number refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundVariant {
    /// Conditional guarantee of the double-dipping fit.
    UmdConditional,
    /// Conditional guarantee of the original (boundary-including) fit.
    UmdOriginalConditional,
    /// Marginal guarantee of the randomized fit.
    RandomizedMarginal,
    /// Conditional guarantee of the randomized fit.
    RandomizedConditional,
    /// Expected-ECE bound of the randomized fit.
    EceExpectation,
}

impl BoundVariant {
    pub fn all() -> &'static [BoundVariant] {
        &[
            BoundVariant::UmdConditional,
            BoundVariant::UmdOriginalConditional,
            BoundVariant::RandomizedMarginal,
            BoundVariant::RandomizedConditional,
            BoundVariant::EceExpectation,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundVariant::UmdConditional => "umd-conditional",
            BoundVariant::UmdOriginalConditional => "umd-original-conditional",
            BoundVariant::RandomizedMarginal => "randomized-marginal",
            BoundVariant::RandomizedConditional => "randomized-conditional",
            BoundVariant::EceExpectation => "ece-expectation",
        }
    }
}

impl std::fmt::Display for BoundVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundVariant::all()
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                Error::invalid_input(format!(
                    "unknown bound variant {s:?}; expected one of umd-conditional | \
                     umd-original-conditional | randomized-marginal | \
                     randomized-conditional | ece-expectation"
                ))
            })
    }
}

/// A fully specified guarantee statement.
#[derive(Debug, Clone, PartialEq)]
pub struct GuaranteeResult {
    pub epsilon: f64,
    pub n: usize,
    pub bins: usize,
    pub alpha: f64,
    pub delta: f64,
    pub variant: BoundVariant,
}

impl GuaranteeResult {
    /// `key=value` lines, one per field.
    pub fn to_key_value(&self) -> String {
        format!(
            "variant={}\nn={}\nbins={}\nalpha={}\ndelta={}\nepsilon={}\n",
            self.variant, self.n, self.bins, self.alpha, self.delta, self.epsilon
        )
    }
}

fn check_n_bins(n: usize, bins: usize) -> Result<()> {
    if bins == 0 {
        return Err(Error::invalid_config("bin count must be at least 1"));
    }
    if n < 2 * bins {
        return Err(Error::invalid_config(format!(
            "bounds require n >= 2B; got n = {n}, B = {bins}"
        )));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid_config(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::invalid_config(format!(
            "delta must be a nonnegative real, got {delta}"
        )));
    }
    Ok(())
}

/// Labels retained per bin for bias estimation.
fn per_bin_count(n: usize, bins: usize) -> f64 {
    (n / bins - 1) as f64
}

/// Conditional deviation bound of the double-dipping fit:
/// `sqrt(log(2B/alpha) / 2(floor(n/B) - 1))`.
pub fn eps_umd(n: usize, bins: usize, alpha: f64) -> Result<f64> {
    check_n_bins(n, bins)?;
    check_alpha(alpha)?;
    let m = per_bin_count(n, bins);
    Ok(((2.0 * bins as f64 / alpha).ln() / (2.0 * m)).sqrt())
}

/// Conditional deviation bound of the original fit: [`eps_umd`] plus the
/// `1 / floor(n/B)` cost of the boundary label in each mean.
pub fn eps_umd_original(n: usize, bins: usize, alpha: f64) -> Result<f64> {
    Ok(eps_umd(n, bins, alpha)? + 1.0 / ((n / bins) as f64))
}

/// Marginal vs conditional flavour of the randomized-fit guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationMode {
    Marginal,
    Conditional,
}

/// Deviation bound of the randomized fit: the marginal form spends the
/// whole failure budget per bin (`log(2/alpha)`), the conditional form
/// union-bounds across bins (`log(2B/alpha)`); both pay the additive
/// randomization `delta`.
pub fn eps_randomized(
    n: usize,
    bins: usize,
    alpha: f64,
    delta: f64,
    mode: CalibrationMode,
) -> Result<f64> {
    check_n_bins(n, bins)?;
    check_alpha(alpha)?;
    check_delta(delta)?;
    let m = per_bin_count(n, bins);
    let log_term = match mode {
        CalibrationMode::Marginal => (2.0 / alpha).ln(),
        CalibrationMode::Conditional => (2.0 * bins as f64 / alpha).ln(),
    };
    Ok((log_term / (2.0 * m)).sqrt() + delta)
}

/// Expected-ECE bound of the randomized fit: `sqrt(B / 2n) + delta`,
/// valid for every moment order in `[1, 2]`.
pub fn ece_expectation_bound(n: usize, bins: usize, delta: f64) -> Result<f64> {
    check_n_bins(n, bins)?;
    check_delta(delta)?;
    Ok((bins as f64 / (2.0 * n as f64)).sqrt() + delta)
}

/// Forward evaluation of any variant at `(n, bins, alpha, delta)`.
pub fn bound_for(
    variant: BoundVariant,
    n: usize,
    bins: usize,
    alpha: f64,
    delta: f64,
) -> Result<f64> {
    match variant {
        BoundVariant::UmdConditional => eps_umd(n, bins, alpha),
        BoundVariant::UmdOriginalConditional => eps_umd_original(n, bins, alpha),
        BoundVariant::RandomizedMarginal => {
            eps_randomized(n, bins, alpha, delta, CalibrationMode::Marginal)
        }
        BoundVariant::RandomizedConditional => {
            eps_randomized(n, bins, alpha, delta, CalibrationMode::Conditional)
        }
        BoundVariant::EceExpectation => ece_expectation_bound(n, bins, delta),
    }
}

/// Smallest `n >= 2B` whose forward bound is at most `epsilon`, by
/// monotone bisection with a short linear scan across the floor-function
/// plateaus at the boundary.
pub fn required_n(
    epsilon: f64,
    alpha: f64,
    bins: usize,
    delta: f64,
    variant: BoundVariant,
) -> Result<usize> {
    if bins == 0 {
        return Err(Error::invalid_config("bin count must be at least 1"));
    }
    if variant != BoundVariant::EceExpectation {
        check_alpha(alpha)?;
    }
    check_delta(delta)?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::invalid_config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    // The additive delta is the bound's limit as n grows.
    let floor = match variant {
        BoundVariant::RandomizedMarginal
        | BoundVariant::RandomizedConditional
        | BoundVariant::EceExpectation => delta,
        _ => 0.0,
    };
    if epsilon <= floor {
        return Err(Error::invalid_config(format!(
            "epsilon = {epsilon} is not achievable: the bound never drops below delta = {delta}"
        )));
    }

    let satisfied = |n: usize| -> bool {
        bound_for(variant, n, bins, alpha, delta)
            .map(|eps| eps <= epsilon)
            .unwrap_or(false)
    };

    let mut lo = 2 * bins;
    if satisfied(lo) {
        return Ok(lo);
    }
    let mut hi = lo.max(1);
    loop {
        hi = hi.saturating_mul(2);
        if satisfied(hi) {
            break;
        }
        if hi > (1usize << 60) {
            return Err(Error::invalid_config(format!(
                "epsilon = {epsilon} not reachable within any practical sample size"
            )));
        }
    }
    // Invariant: !satisfied(lo) && satisfied(hi).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if satisfied(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut best = hi;
    while best > 2 * bins && satisfied(best - 1) {
        best -= 1;
    }
    Ok(best)
}

/// One point of the planning curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub bins: usize,
    pub epsilon: f64,
}

/// The conditional bound swept across bin counts at fixed `n` and
/// `alpha`. Bin counts with `n < 2B` are infeasible and skipped, so the
/// output length is the number of feasible `B` in the range.
pub fn bound_curve(
    n: usize,
    alpha: f64,
    bins_range: std::ops::RangeInclusive<usize>,
) -> Result<Vec<BoundPoint>> {
    check_alpha(alpha)?;
    let mut points = Vec::new();
    for bins in bins_range {
        if bins == 0 || n < 2 * bins {
            continue;
        }
        points.push(BoundPoint {
            bins,
            epsilon: eps_umd(n, bins, alpha)?,
        });
    }
    Ok(points)
}

/// Hoeffding half-width for `m` bounded samples at failure budget `t`:
/// `sqrt(log(2/t) / 2m)`.
pub fn hoeffding_halfwidth(m: usize, t: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid_config("need at least one sample"));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid_config(format!(
            "failure budget must lie in (0, 1), got {t}"
        )));
    }
    Ok(((2.0 / t).ln() / (2.0 * m as f64)).sqrt())
}

/// The sample-complexity chain of the sample-splitting guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UmsSampleComplexity {
    /// Minimum points any single bin needs for its bias interval.
    pub n_min_per_bin: usize,
    /// First-split size for reliable quantile estimation.
    pub n_split1: usize,
    /// Second-split size so every bin receives `n_min_per_bin` points.
    pub n_split2: usize,
    /// Total calibration requirement.
    pub n_total: usize,
}

impl UmsSampleComplexity {
    pub fn to_key_value(&self) -> String {
        format!(
            "n_min_per_bin={}\nn_split1={}\nn_split2={}\nn_total={}\n",
            self.n_min_per_bin, self.n_split1, self.n_split2, self.n_total
        )
    }
}

/// Replicates the published sample-complexity accounting for the
/// sample-splitting method at target `(epsilon, alpha)` with `bins` bins
/// and quantile-estimation constant `c` (conventionally 100):
///
/// 1. `n_min_per_bin`: smallest `N` with
///    `sqrt(log(2B / (alpha/2)) / 2N) <= epsilon`;
/// 2. `n_split1 = c * B * log(10B / (alpha/4))`, counted in whole
///    multiples of `c * B` as in the published chain;
/// 3. `n_split2`: smallest `n'` with
///    `n'/2B - sqrt(n' * log(2B / (alpha/4)) / 2) >= n_min_per_bin`;
/// 4. `n_total = n_split1 + n_split2`.
pub fn ums_required_n(
    epsilon: f64,
    alpha: f64,
    bins: usize,
    c: f64,
) -> Result<UmsSampleComplexity> {
    check_alpha(alpha)?;
    if bins == 0 {
        return Err(Error::invalid_config("bin count must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid_config(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::invalid_config(format!(
            "quantile constant must be positive, got {c}"
        )));
    }

    let b = bins as f64;

    // Stage 1: per-bin Hoeffding width at budget alpha/2 split over bins.
    let log1 = (2.0 * b / (alpha / 2.0)).ln();
    let mut n_min = (log1 / (2.0 * epsilon * epsilon)).ceil() as usize;
    n_min = n_min.max(1);
    while hoeffding_halfwidth(n_min, alpha / 2.0 / b)? > epsilon {
        n_min += 1;
    }
    while n_min > 1 && hoeffding_halfwidth(n_min - 1, alpha / 2.0 / b)? <= epsilon {
        n_min -= 1;
    }

    // Stage 2: quantile estimation; the count is taken in whole multiples
    // of c * B, matching the coarse accounting of the published chain.
    let unit = c * b;
    let log2 = (10.0 * b / (alpha / 4.0)).ln();
    let n_split1 = (unit * log2.floor()).ceil() as usize;
    if n_split1 == 0 {
        return Err(Error::invalid_config("first split requirement underflowed"));
    }

    // Stage 3: smallest n' whose high-probability per-bin count reaches
    // n_min. The objective is increasing past its vertex, so the
    // predicate is monotone over the search range.
    let log3 = (2.0 * b / (alpha / 4.0)).ln();
    let enough = |n2: usize| -> bool {
        let x = n2 as f64;
        x / (2.0 * b) - (x * log3 / 2.0).sqrt() >= n_min as f64
    };
    let mut hi = 2 * bins * n_min.max(1);
    while !enough(hi) {
        hi = hi.saturating_mul(2);
        if hi > (1usize << 60) {
            return Err(Error::invalid_config(
                "second split requirement not reachable",
            ));
        }
    }
    let mut lo = 1usize;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if enough(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let n_split2 = hi;

    Ok(UmsSampleComplexity {
        n_min_per_bin: n_min,
        n_split1,
        n_split2,
        n_total: n_split1 + n_split2,
    })
}

/// Lower envelope of achievable validity from the randomized conditional
/// bound: the largest `1 - alpha` such that the bound at `(n, bins,
/// alpha, delta)` is at most `eps`, i.e.
/// `max(0, 1 - 2B exp(-2 (floor(n/B) - 1) (eps - delta)^2))`.
pub fn theoretical_validity_at(n: usize, bins: usize, delta: f64, eps: f64) -> Result<f64> {
    check_n_bins(n, bins)?;
    check_delta(delta)?;
    if eps <= delta {
        return Ok(0.0);
    }
    let m = per_bin_count(n, bins);
    let alpha = 2.0 * bins as f64 * (-2.0 * m * (eps - delta) * (eps - delta)).exp();
    Ok((1.0 - alpha).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planning_points_meet_caption_targets() {
        assert!(eps_umd(1000, 5, 0.1).unwrap() <= 0.12);
        assert!(eps_umd(5000, 10, 0.1).unwrap() <= 0.08);
        assert!(eps_umd(20000, 22, 0.1).unwrap() <= 0.06);
    }

    #[test]
    fn original_variant_below_point_one_at_2900() {
        let eps = eps_umd_original(2900, 10, 0.1).unwrap();
        assert!(eps < 0.1, "{eps}");
    }

    #[test]
    fn original_equals_umd_plus_floor_term() {
        // Equality is definitional; allow the one rounding of (x + t) - x.
        for (n, bins, alpha) in [(2900, 10, 0.1), (500, 7, 0.25), (64, 2, 0.05)] {
            let gap = eps_umd_original(n, bins, alpha).unwrap() - eps_umd(n, bins, alpha).unwrap();
            assert!((gap - 1.0 / ((n / bins) as f64)).abs() < 1e-16);
        }
    }

    #[test]
    fn randomized_conditional_with_zero_delta_equals_umd() {
        for (n, bins, alpha) in [(2900, 10, 0.1), (100, 4, 0.3)] {
            assert_eq!(
                eps_randomized(n, bins, alpha, 0.0, CalibrationMode::Conditional).unwrap(),
                eps_umd(n, bins, alpha).unwrap()
            );
        }
    }

    #[test]
    fn randomized_marginal_below_conditional() {
        for n in [40usize, 300, 5000] {
            for bins in [1usize, 5, 10] {
                if n < 2 * bins {
                    continue;
                }
                let marginal =
                    eps_randomized(n, bins, 0.1, 1e-10, CalibrationMode::Marginal).unwrap();
                let conditional =
                    eps_randomized(n, bins, 0.1, 1e-10, CalibrationMode::Conditional).unwrap();
                assert!(marginal <= conditional);
                assert!(
                    conditional <= eps_umd_original(n, bins, 0.1).unwrap() + 1e-10
                );
            }
        }
    }

    #[test]
    fn randomized_marginal_near_point_one_at_1500() {
        // Direct evaluation gives about 0.1003; the claim is within 0.005.
        let eps =
            eps_randomized(1500, 10, 0.1, 1e-10, CalibrationMode::Marginal).unwrap();
        assert!((eps - 0.1).abs() <= 0.005, "{eps}");
    }

    #[test]
    fn ece_expectation_values() {
        assert_eq!(ece_expectation_bound(2000, 10, 0.0).unwrap(), 0.05);
        assert_eq!(ece_expectation_bound(2, 1, 0.0).unwrap(), 0.5);
        let with_delta = ece_expectation_bound(2000, 10, 1e-3).unwrap();
        assert!((with_delta - ece_expectation_bound(2000, 10, 0.0).unwrap() - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn bounds_reject_bad_configurations() {
        assert!(eps_umd(19, 10, 0.1).is_err());
        assert!(eps_umd(100, 0, 0.1).is_err());
        assert!(eps_umd(100, 10, 0.0).is_err());
        assert!(eps_umd(100, 10, 1.0).is_err());
        assert!(eps_randomized(100, 10, 0.1, -1.0, CalibrationMode::Marginal).is_err());
    }

    #[test]
    fn required_n_known_case() {
        let n = required_n(0.1, 0.1, 10, 0.0, BoundVariant::UmdOriginalConditional).unwrap();
        assert!(n <= 2900, "{n}");
        assert!(eps_umd_original(n, 10, 0.1).unwrap() <= 0.1);
        assert!(eps_umd_original(n - 1, 10, 0.1).unwrap() > 0.1);
    }

    #[test]
    fn required_n_single_bin_closed_form() {
        // One bin: the bound is a plain Hoeffding width over n - 1 labels,
        // so the inversion sits within one of ceil(log(2/alpha)/2eps^2) + 1.
        for (eps, alpha) in [(0.1, 0.1), (0.05, 0.2), (0.2, 0.01)] {
            let n = required_n(eps, alpha, 1, 0.0, BoundVariant::UmdConditional).unwrap();
            let closed = ((2.0f64 / alpha).ln() / (2.0 * eps * eps)).ceil() as usize + 1;
            assert!(
                n.abs_diff(closed) <= 1,
                "eps {eps} alpha {alpha}: {n} vs {closed}"
            );
        }
    }

    #[test]
    fn required_n_round_trips_against_linear_scan() {
        let mut rng = crate::model::SeededRng::new(55);
        for trial in 0..1000 {
            let eps = 0.05 + 0.45 * rng.uniform();
            let alpha = 0.01 + 0.48 * rng.uniform();
            let bins = 1 + (rng.uniform() * 12.0) as usize;
            let variant = BoundVariant::all()[trial % BoundVariant::all().len()];
            let delta = if matches!(
                variant,
                BoundVariant::RandomizedMarginal
                    | BoundVariant::RandomizedConditional
                    | BoundVariant::EceExpectation
            ) {
                1e-10
            } else {
                0.0
            };
            let n = required_n(eps, alpha, bins, delta, variant).unwrap();
            // Independent check: forward bound satisfied at n, not at n-1.
            assert!(bound_for(variant, n, bins, alpha, delta).unwrap() <= eps);
            if n > 2 * bins {
                assert!(bound_for(variant, n - 1, bins, alpha, delta).unwrap() > eps);
            }
            // Linear scan oracle from the minimum legal n.
            let scan = (2 * bins..)
                .find(|&m| bound_for(variant, m, bins, alpha, delta).unwrap() <= eps)
                .unwrap();
            assert_eq!(n, scan, "variant {variant} eps {eps} alpha {alpha} B {bins}");
        }
    }

    #[test]
    fn required_n_rejects_unreachable_epsilon() {
        assert!(required_n(1e-11, 0.1, 10, 1e-10, BoundVariant::RandomizedMarginal).is_err());
        assert!(required_n(0.0, 0.1, 10, 0.0, BoundVariant::UmdConditional).is_err());
    }

    #[test]
    fn bound_curve_contains_caption_points() {
        let curve = bound_curve(1000, 0.1, 1..=60).unwrap();
        let at_5 = curve.iter().find(|p| p.bins == 5).unwrap();
        assert!(at_5.epsilon <= 0.12);
        // Feasible count: every B in 1..=60 needs n >= 2B, all hold at n=1000.
        assert_eq!(curve.len(), 60);

        let small = bound_curve(30, 0.1, 1..=60).unwrap();
        assert_eq!(small.len(), 15); // only B <= 15 feasible
    }

    #[test]
    fn bound_curve_single_bin_is_hoeffding_width() {
        let curve = bound_curve(800, 0.07, 1..=1).unwrap();
        assert_eq!(
            curve[0].epsilon,
            hoeffding_halfwidth(799, 0.07).unwrap()
        );
    }

    #[test]
    fn hoeffding_values() {
        let w = hoeffding_halfwidth(150, 0.1).unwrap();
        assert!((w - 0.0999).abs() < 1e-4, "{w}");
        // Quadrupling the count halves the width.
        let w4 = hoeffding_halfwidth(600, 0.1).unwrap();
        assert!((w - 2.0 * w4).abs() < 1e-15);
        assert!(hoeffding_halfwidth(150, 2.0).is_err());
        assert!(hoeffding_halfwidth(0, 0.1).is_err());
    }

    #[test]
    fn ums_chain_reference_point() {
        let r = ums_required_n(0.1, 0.1, 10, 100.0).unwrap();
        assert_eq!(r.n_min_per_bin, 300);
        assert!((7900..=8100).contains(&r.n_split1), "{}", r.n_split1);
        assert!((9400..=9600).contains(&r.n_split2), "{}", r.n_split2);
        assert!((17300..=17700).contains(&r.n_total), "{}", r.n_total);
    }

    #[test]
    fn ums_chain_hoeffding_stage() {
        // 300 points per bin, a 0.05 budget split over 10 bins: the
        // half-width sqrt(ln 400 / 600) is just under 0.1.
        let w = hoeffding_halfwidth(300, 0.05 / 10.0).unwrap();
        assert!((w - 0.0999).abs() < 2e-4, "{w}");
        assert!(w <= 0.1);
    }

    #[test]
    fn ums_chain_monotone_in_epsilon() {
        let mut last_total = usize::MAX;
        for eps in [0.05, 0.08, 0.1, 0.15, 0.2] {
            let r = ums_required_n(eps, 0.1, 10, 100.0).unwrap();
            assert!(r.n_total <= last_total);
            last_total = r.n_total;
        }
    }

    #[test]
    fn bounds_monotone_over_grid() {
        // Decreasing in n, increasing in the log term through B,
        // decreasing in alpha.
        for bins in [2usize, 5, 10] {
            let mut last = f64::INFINITY;
            for n in (2 * bins..2000).step_by(97) {
                let eps = eps_umd(n, bins, 0.1).unwrap();
                assert!(eps <= last + 1e-15);
                last = eps;
            }
        }
        for alphas in [[0.01, 0.05], [0.05, 0.2], [0.2, 0.6]] {
            assert!(eps_umd(400, 5, alphas[0]).unwrap() > eps_umd(400, 5, alphas[1]).unwrap());
        }
        // More bins with the same per-bin count raises the union-bound term.
        assert!(
            eps_umd(200 * 10, 10, 0.1).unwrap() > eps_umd(200 * 5, 5, 0.1).unwrap()
        );
    }

    #[test]
    fn theoretical_validity_inverts_conditional_bound() {
        let (n, bins, delta) = (3000, 10, 1e-10);
        for alpha in [0.05, 0.1, 0.3, 0.9] {
            let eps =
                eps_randomized(n, bins, alpha, delta, CalibrationMode::Conditional).unwrap();
            let v = theoretical_validity_at(n, bins, delta, eps).unwrap();
            assert!((v - (1.0 - alpha)).abs() < 1e-9, "alpha {alpha}: {v}");
        }
        assert_eq!(theoretical_validity_at(3000, 10, 1e-10, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn guarantee_result_key_value_lines() {
        let g = GuaranteeResult {
            epsilon: 0.099,
            n: 2900,
            bins: 10,
            alpha: 0.1,
            delta: 0.0,
            variant: BoundVariant::UmdOriginalConditional,
        };
        let text = g.to_key_value();
        assert!(text.contains("variant=umd-original-conditional"));
        assert!(text.contains("n=2900"));
        assert!(text.contains("epsilon=0.099"));
    }
}
