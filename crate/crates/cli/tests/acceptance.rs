//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `cargo test -p bincal-cli --test acceptance --
//! --nocapture` to see them).
//!
//! The coverage criteria verify the distribution-free guarantees against
//! exact ground truth: synthetic specs whose conditional label means are
//! computed by quadrature on the fitted bins, never by a second
//! empirical sample.

use std::process::Command;

use bincal::assessment::{
    curve_auc, default_grid, ece_discrete, plugin_ece, validity_conditional, validity_marginal,
    DiscretePredictorDistribution,
};
use bincal::calibrators::{
    fit_randomized_umd, fit_umd, fit_umd_original, perturb_scores, uniform_mass_edges,
    CalibratorKind, RandomizationParams, DEFAULT_DELTA,
};
use bincal::data::{RegressionFn, ScoreDistribution, SyntheticSpec};
use bincal::experiments::{
    run_comparison, run_coverage, ComparisonConfig, ComparisonSource, CoverageVariant, MethodSpec,
};
use bincal::guarantees::{
    ece_expectation_bound, eps_randomized, eps_umd, eps_umd_original, ums_required_n,
    CalibrationMode,
};
use bincal::model::{BinningModel, Dataset, ScoredSample, SeededRng};

fn pass(criterion: u32, what: &str) {
    println!("acceptance criterion {criterion} ({what}): PASS");
}

/// The three synthetic ground-truth specs used by the coverage criteria.
fn coverage_specs(seed: u64) -> Vec<SyntheticSpec> {
    vec![
        SyntheticSpec::new(ScoreDistribution::Uniform, RegressionFn::Identity, seed).unwrap(),
        SyntheticSpec::new(
            ScoreDistribution::Uniform,
            RegressionFn::Power { exponent: 2.0 },
            seed,
        )
        .unwrap(),
        SyntheticSpec::new(
            ScoreDistribution::Beta {
                alpha: 2.0,
                beta: 5.0,
            },
            RegressionFn::LogisticWarp {
                slope: 4.0,
                center: 0.5,
            },
            seed,
        )
        .unwrap(),
    ]
}

#[test]
fn criterion_01_bound_formulas_reproduce_reference_numbers() {
    assert!(eps_umd_original(2900, 10, 0.1).unwrap() < 0.1);

    assert!(eps_umd(1000, 5, 0.1).unwrap() <= 0.12);
    assert!(eps_umd(5000, 10, 0.1).unwrap() <= 0.08);
    assert!(eps_umd(20000, 22, 0.1).unwrap() <= 0.06);

    let marginal =
        eps_randomized(1500, 10, 0.1, 1e-10, CalibrationMode::Marginal).unwrap();
    assert!((marginal - 0.1).abs() <= 0.005, "{marginal}");

    // Whenever the base bound is at most 0.1 with alpha <= 0.5 and at
    // least 5 bins, the boundary-label term is at most 0.007.
    let mut checked = 0usize;
    for bins in 5..=50 {
        for &alpha in &[0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5] {
            for n in (2 * bins..150_000).step_by(23) {
                let eps = eps_umd(n, bins, alpha).unwrap();
                if eps <= 0.1 {
                    let extra = 1.0 / ((n / bins) as f64);
                    assert!(
                        extra <= 0.007,
                        "n={n} B={bins} alpha={alpha}: extra term {extra}"
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 10_000, "grid too sparse: {checked}");
    pass(1, "bound formulas");
}

#[test]
fn criterion_02_sample_split_complexity_chain() {
    let r = ums_required_n(0.1, 0.1, 10, 100.0).unwrap();
    assert_eq!(r.n_min_per_bin, 300);
    assert!((7900..=8100).contains(&r.n_split1), "{}", r.n_split1);
    assert!((9400..=9600).contains(&r.n_split2), "{}", r.n_split2);
    assert!((17300..=17700).contains(&r.n_total), "{}", r.n_total);
    pass(2, "sample-split complexity chain");
}

#[test]
fn criterion_03_two_atom_example_exact() {
    let dist =
        DiscretePredictorDistribution::new(vec![(0.2, 0.9, 0.3), (0.8, 0.1, 0.6)]).unwrap();
    assert!((ece_discrete(&dist, 1.0).unwrap() - 0.11).abs() <= 1e-12);
    assert!((ece_discrete(&dist, 2.0).unwrap() - 0.013f64.sqrt()).abs() <= 1e-12);
    pass(3, "two-atom discrete example");
}

#[test]
fn criterion_04_ece_moment_ordering() {
    let mut rng = SeededRng::new(404);
    for _ in 0..1000 {
        let atoms = random_distribution(&mut rng);
        let dist = DiscretePredictorDistribution::new(atoms).unwrap();
        let ordered: Vec<f64> = [1.0, 1.5, 2.0, 4.0]
            .iter()
            .map(|&p| ece_discrete(&dist, p).unwrap())
            .collect();
        for w in ordered.windows(2) {
            assert!(w[0] <= w[1] + 1e-12, "{ordered:?}");
        }
        assert!(ordered[3] <= dist.max_deviation() + 1e-12);
    }
    pass(4, "moment ordering over 1000 random laws");
}

fn random_distribution(rng: &mut SeededRng) -> Vec<(f64, f64, f64)> {
    let k = 1 + (rng.uniform() * 11.0) as usize;
    let mut masses: Vec<f64> = (0..k).map(|_| rng.uniform().max(1e-3)).collect();
    let total: f64 = masses.iter().sum();
    for m in &mut masses {
        *m /= total;
    }
    let correction: f64 = 1.0 - masses.iter().sum::<f64>();
    masses[0] += correction;
    let mut predictions: Vec<f64> = Vec::new();
    while predictions.len() < k {
        let r = rng.uniform();
        if !predictions.contains(&r) {
            predictions.push(r);
        }
    }
    (0..k)
        .map(|i| (predictions[i], masses[i], rng.uniform()))
        .collect()
}

#[test]
fn criterion_05_auc_identity_and_domination() {
    let mut rng = SeededRng::new(505);
    let grid = default_grid();
    for case in 0..200 {
        let bins = 1 + (rng.uniform() * 8.0) as usize;
        let mut edges: Vec<f64> = (0..bins.saturating_sub(1)).map(|_| rng.uniform()).collect();
        edges.push(0.0);
        edges.push(1.0);
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup();
        let biases: Vec<f64> = (0..edges.len() - 1).map(|_| rng.uniform()).collect();
        let model = BinningModel::new(edges, biases).unwrap();

        let n = 5 + (rng.uniform() * 400.0) as usize;
        let p_one = rng.uniform();
        let test = Dataset::new(
            (0..n)
                .map(|_| ScoredSample {
                    score: rng.uniform(),
                    label: u8::from(rng.uniform() < p_one),
                })
                .collect(),
        )
        .unwrap();

        let l1 = plugin_ece(&model, &test, 1.0).unwrap();
        let marginal = validity_marginal(&model, &test, &grid).unwrap();
        let conditional = validity_conditional(&model, &test, &grid).unwrap();
        let auc = curve_auc(&marginal);
        assert!(
            (l1 - (1.0 - auc)).abs() <= 1e-12,
            "case {case}: l1 {l1} vs 1 - auc {}",
            1.0 - auc
        );
        for (c, m) in conditional.values().iter().zip(marginal.values()) {
            assert!(c <= m, "case {case}");
        }
    }
    pass(5, "plugin l1 equals 1 - AUC on 200 pairs");
}

#[test]
fn criterion_06_conditional_coverage_at_reference_point() {
    let (n, bins, alpha, trials) = (2900, 10, 0.1, 500);
    for (idx, spec) in coverage_specs(606).iter().enumerate() {
        let report = run_coverage(
            spec,
            CoverageVariant::Umd,
            n,
            bins,
            alpha,
            0.0,
            trials,
            606 + idx as u64,
        )
        .unwrap();
        let upper = report.failure_rate_upper(0.99);
        assert!(
            upper <= 0.12,
            "spec {idx}: failures {}/{trials}, upper {upper}",
            report.failure_count
        );
    }
    pass(6, "conditional coverage at (2900, 10, 0.1)");
}

#[test]
fn criterion_07_expected_ece_bound() {
    let (n, bins, trials) = (2000, 10, 500);
    let delta = DEFAULT_DELTA;
    let bound = ece_expectation_bound(n, bins, delta).unwrap();
    assert_eq!(bound, 0.05 + 1e-10);
    for (idx, spec) in coverage_specs(707).iter().enumerate() {
        let report = run_coverage(
            spec,
            CoverageVariant::UmdRandomized,
            n,
            bins,
            0.1,
            delta,
            trials,
            707 + idx as u64,
        )
        .unwrap();
        let mean_ece = report.mean_oracle_l2_ece();
        assert!(mean_ece <= bound, "spec {idx}: mean l2 ece {mean_ece} > {bound}");
    }
    pass(7, "expected l2 ECE within sqrt(B/2n) + delta");
}

#[test]
fn criterion_08_variant_gap_integer_exact() {
    let mut rng = SeededRng::new(808);
    for case in 0..1000 {
        let bins = 1 + (rng.uniform() * 10.0) as usize;
        let n = 2 * bins + (rng.uniform() * 180.0) as usize;
        let data = Dataset::new(
            (0..n)
                .map(|_| ScoredSample {
                    score: rng.uniform(),
                    label: u8::from(rng.uniform() < 0.5),
                })
                .collect(),
        )
        .unwrap();

        let plain = fit_umd(&data, bins).unwrap();
        let original = fit_umd_original(&data, bins).unwrap();

        // Integer-exact oracle: recompute both means as label-sum ratios
        // via the shared index rule and verify
        //   |s2/c2 - s1/c1| <= 1 / floor(n/B)
        // as the cross-multiplied integer inequality.
        let mut samples: Vec<ScoredSample> = data.samples().to_vec();
        samples.sort_by(|a, b| a.score.partial_cmp(&b.score).unwrap());
        let index = uniform_mass_edges(n, bins).unwrap();
        let a = index.indices();
        let m = (n / bins) as i128;
        for b in 1..=bins {
            let (lower, upper) = (a[b - 1], a[b]);
            let sum = |from: usize, to: usize| -> i128 {
                samples[from..to].iter().map(|s| i128::from(s.label)).sum()
            };
            let c1 = (upper - 1 - lower) as i128;
            let s1 = sum(lower, upper - 1);
            let (c2, s2) = if b < bins {
                ((upper - lower) as i128, sum(lower, upper))
            } else {
                (c1, s1)
            };
            assert!(
                (s2 * c1 - s1 * c2).abs() * m <= c1 * c2,
                "case {case} bin {b}: gap exceeds 1/floor(n/B)"
            );
            // The fitted biases are these ratios in floating point.
            assert!((plain.biases()[b - 1] - s1 as f64 / c1 as f64).abs() < 1e-12);
            assert!((original.biases()[b - 1] - s2 as f64 / c2 as f64).abs() < 1e-12);
        }
    }
    pass(8, "variant gap bounded by 1/floor(n/B) on 1000 datasets");
}

#[test]
fn criterion_09_randomized_biases_distinct_on_tied_scores() {
    let data = Dataset::new(
        (0..50)
            .map(|i| ScoredSample {
                score: 0.5,
                label: (i % 2) as u8,
            })
            .collect(),
    )
    .unwrap();
    for seed in 0..10_000u64 {
        let mut params = RandomizationParams::from_seed(seed);
        let model = fit_randomized_umd(&data, 10, &mut params).unwrap();

        let mut sorted = model.biases().to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(
            sorted.windows(2).all(|w| w[0] < w[1]),
            "seed {seed}: biases not pairwise distinct"
        );

        // Replay the score perturbation to recover the pre-randomization
        // biases, and bound how far the nudge moved each one.
        let mut replay = RandomizationParams::from_seed(seed);
        let base = fit_umd(&perturb_scores(&data, &mut replay), 10).unwrap();
        for (nudged, original) in model.biases().iter().zip(base.biases()) {
            assert!(
                (nudged - original).abs() <= DEFAULT_DELTA + 1e-15,
                "seed {seed}: bias moved by {}",
                (nudged - original).abs()
            );
        }
    }
    pass(9, "randomized biases pairwise distinct over 10^4 seeded fits");
}

#[test]
fn criterion_10_double_dip_beats_sample_split() {
    let spec = SyntheticSpec::new(
        ScoreDistribution::Beta {
            alpha: 2.0,
            beta: 2.0,
        },
        RegressionFn::LogisticWarp {
            slope: 2.5,
            center: 0.45,
        },
        1010,
    )
    .unwrap();
    let config = ComparisonConfig {
        source: ComparisonSource::Synthetic(spec),
        methods: vec![
            MethodSpec::new(CalibratorKind::Umd),
            MethodSpec::new(CalibratorKind::Ums),
        ],
        calibration_sizes: vec![500, 1000],
        bins: 10,
        repetitions: 100,
        test_n: 5000,
        grid_points: 1001,
        delta: DEFAULT_DELTA,
        seed: 1010,
    };
    let report = run_comparison(&config).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    for &n in &config.calibration_sizes {
        let umd = report.outcome("umd", n).unwrap();
        let ums = report.outcome("ums", n).unwrap();
        assert!(
            umd.ece_mean <= ums.ece_mean,
            "n={n}: umd ece {} vs ums ece {}",
            umd.ece_mean,
            ums.ece_mean
        );
        let umd_at = umd.marginal.mean_at(0.05);
        let ums_at = ums.marginal.mean_at(0.05);
        assert!(
            umd_at >= ums_at,
            "n={n}: marginal validity at 0.05: umd {umd_at} vs ums {ums_at}"
        );
    }
    pass(10, "double dipping dominates sample splitting");
}

#[test]
fn criterion_11_end_to_end_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("cal.csv");
    let mut csv = String::from("score,label\n");
    let mut rng = SeededRng::new(1111);
    for _ in 0..200 {
        csv.push_str(&format!(
            "{},{}\n",
            rng.uniform(),
            u8::from(rng.uniform() < 0.6)
        ));
    }
    std::fs::write(&data_path, csv).unwrap();

    let config_path = dir.path().join("compare.toml");
    std::fs::write(
        &config_path,
        r#"
[experiment]
seed = 5
repetitions = 4
bins = 5
calibration_sizes = [150]
test_n = 400
grid_points = 101

[source]
kind = "synthetic"
score = "uniform"
eta = "power"
exponent = 2.0

[[method]]
calibrator = "umd-randomized"

[[method]]
calibrator = "isotonic"
"#,
    )
    .unwrap();

    let run_pipeline = |tag: &str| -> Vec<(String, Vec<u8>)> {
        let sub = dir.path().join(tag);
        std::fs::create_dir_all(&sub).unwrap();
        let model = sub.join("model.txt");
        let run = |args: &[&str]| {
            let out = Command::new(env!("CARGO_BIN_EXE_bincal"))
                .args(args)
                .current_dir(&sub)
                .env_remove("BINCAL_SEED")
                .output()
                .expect("binary runs");
            assert!(
                out.status.success(),
                "{}",
                String::from_utf8_lossy(&out.stderr)
            );
            out.stdout
        };
        run(&[
            "--seed",
            "7",
            "fit",
            "--calibrator",
            "umd-randomized",
            "--data",
            data_path.to_str().unwrap(),
            "--bins",
            "5",
            "--out",
            model.to_str().unwrap(),
        ]);
        run(&[
            "assess",
            "--model",
            model.to_str().unwrap(),
            "--test",
            data_path.to_str().unwrap(),
            "--grid-size",
            "101",
            "--out-prefix",
            sub.join("assess").to_str().unwrap(),
        ]);
        run(&[
            "compare",
            "--config",
            config_path.to_str().unwrap(),
            "--out-prefix",
            sub.join("cmp").to_str().unwrap(),
        ]);

        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&sub)
            .unwrap()
            .map(|entry| {
                let entry = entry.unwrap();
                (
                    entry.file_name().to_string_lossy().into_owned(),
                    std::fs::read(entry.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        files
    };

    let first = run_pipeline("first");
    let second = run_pipeline("second");
    assert_eq!(first.len(), second.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in first.iter().zip(&second) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "file {name_a} differs between runs");
    }
    assert!(first.iter().any(|(name, _)| name == "model.txt"));
    assert!(first.iter().any(|(name, _)| name.ends_with("_ece.csv")));
    pass(11, "fit -> assess -> compare byte-identical under a fixed seed");
}
