//! Post-hoc calibration toolkit for binary classifiers.
//!
//! The centrepiece is uniform-mass histogram binning fitted without
//! sample splitting, alongside the sample-split variant, fixed-width
//! binning, isotonic regression, and scaling-binning for comparison.
//! The toolkit also provides:
//!
//! - finite-sample distribution-free guarantee calculators (forward
//!   bounds, inversions to required sample sizes, and bin-count
//!   planning curves) in [`guarantees`];
//! - validity plots and plugin expected-calibration-error estimators
//!   in [`assessment`];
//! - a logistic-regression + sigmoid-rescaling score pipeline in
//!   [`scalers`];
//! - synthetic generators with exact ground-truth oracles and a
//!   Monte-Carlo harness that verifies the guarantees empirically in
//!   [`data`] and [`experiments`].
//!
//! Everything is deterministic given explicit seeds; parallel runs
//! reduce in a fixed order so results do not depend on thread count.

pub mod assessment;
pub mod calibrators;
pub mod data;
pub mod error;
pub mod experiments;
pub mod guarantees;
pub mod model;
pub mod plot;
pub mod scalers;
pub mod stats;

pub use error::{Error, Result};

/// Caps the global worker pool used by the experiment harness.
///
/// `None` keeps the default (all available cores). Calling this after the
/// pool is already initialized has no effect.
pub fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}
