//! End-to-end checks of the command-line surface: outputs, file
//! formats, exit codes, and seeded reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn bincal(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bincal"))
        .args(args)
        .current_dir(dir)
        .env_remove("BINCAL_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_five_point_csv(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("five.csv");
    std::fs::write(&path, "score,label\n0.1,0\n0.2,1\n0.3,0\n0.4,1\n0.5,1\n").unwrap();
    path
}

#[test]
fn fit_umd_reproduces_hand_traced_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_five_point_csv(dir.path());
    let model = dir.path().join("model.txt");
    let out = bincal(
        &[
            "fit",
            "--calibrator",
            "umd",
            "--data",
            data.to_str().unwrap(),
            "--bins",
            "2",
            "--out",
            model.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        std::fs::read_to_string(&model).unwrap(),
        "2\n0 0.3 1\n0.5 1\n"
    );
    let text = stdout(&out);
    assert!(text.contains("n=5"));
    assert!(text.contains("bins=2"));
    assert!(text.contains("bin_counts=2 3"));
}

#[test]
fn fit_rejects_undersized_data_with_exit_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_five_point_csv(dir.path());
    let out = bincal(
        &[
            "fit",
            "--calibrator",
            "umd",
            "--data",
            data.to_str().unwrap(),
            "--bins",
            "3",
            "--out",
            dir.path().join("m.txt").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("n >= 2B"), "{}", stderr(&out));
}

#[test]
fn randomized_fit_is_byte_identical_under_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_five_point_csv(dir.path());
    let run = |name: &str| {
        let model = dir.path().join(name);
        let out = bincal(
            &[
                "--seed",
                "42",
                "fit",
                "--calibrator",
                "umd-randomized",
                "--data",
                data.to_str().unwrap(),
                "--bins",
                "2",
                "--out",
                model.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
        std::fs::read(model).unwrap()
    };
    assert_eq!(run("a.txt"), run("b.txt"));
}

#[test]
fn assess_perfectly_calibrated_fixture() {
    let dir = tempfile::tempdir().unwrap();
    // Model with biases equal to the test bin means: zero deviation.
    let model = dir.path().join("model.txt");
    std::fs::write(&model, "2\n0 0.5 1\n0 1\n").unwrap();
    let test = dir.path().join("test.csv");
    std::fs::write(&test, "score,label\n0.1,0\n0.2,0\n0.8,1\n0.9,1\n").unwrap();
    let out = bincal(
        &[
            "assess",
            "--model",
            model.to_str().unwrap(),
            "--test",
            test.to_str().unwrap(),
            "--grid-size",
            "11",
            "--out-prefix",
            dir.path().join("perfect").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("l1_ece=0"), "{text}");
    assert!(text.contains("l2_ece=0"), "{text}");
    for curve in ["marginal", "conditional"] {
        let csv =
            std::fs::read_to_string(dir.path().join(format!("perfect_{curve}.csv"))).unwrap();
        for line in csv.lines().skip(1) {
            let mean = line.split(',').nth(1).unwrap();
            assert_eq!(mean, "1", "{curve}: {line}");
        }
    }
}

#[test]
fn assess_prints_l1_matching_csv_auc() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.txt");
    std::fs::write(&model, "2\n0 0.5 1\n0.25 0.75\n").unwrap();
    let test = dir.path().join("test.csv");
    let mut csv = String::from("score,label\n");
    for i in 0..40 {
        let score = (i as f64 + 0.5) / 40.0;
        let label = u8::from(i % 3 == 0);
        csv.push_str(&format!("{score},{label}\n"));
    }
    std::fs::write(&test, csv).unwrap();
    let prefix = dir.path().join("check");
    let out = bincal(
        &[
            "assess",
            "--model",
            model.to_str().unwrap(),
            "--test",
            test.to_str().unwrap(),
            "--out-prefix",
            prefix.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let l1: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("l1_ece="))
        .unwrap()
        .parse()
        .unwrap();

    // Left-step integration of the emitted marginal CSV, which includes
    // the exact jump rows.
    let rows: Vec<(f64, f64)> = std::fs::read_to_string(format!(
        "{}_marginal.csv",
        prefix.to_str().unwrap()
    ))
    .unwrap()
    .lines()
    .skip(1)
    .map(|l| {
        let mut it = l.split(',');
        (
            it.next().unwrap().parse().unwrap(),
            it.next().unwrap().parse().unwrap(),
        )
    })
    .collect();
    let mut auc = 0.0;
    for w in rows.windows(2) {
        auc += w[0].1 * (w[1].0 - w[0].0);
    }
    auc += rows.last().unwrap().1 * (1.0 - rows.last().unwrap().0);
    assert!(
        (l1 - (1.0 - auc)).abs() < 1e-6,
        "printed {l1} vs csv-derived {}",
        1.0 - auc
    );
}

#[test]
fn missing_model_file_is_exit_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let test = write_five_point_csv(dir.path());
    let out = bincal(
        &[
            "assess",
            "--model",
            "no-such-model.txt",
            "--test",
            test.to_str().unwrap(),
            "--out-prefix",
            "x",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bincal(&["plan", "--n", "100", "--definitely-not-a-flag"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bound_examples_print_expected_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = bincal(
        &[
            "bound", "--variant", "umd-original", "--n", "2900", "--B", "10", "--alpha", "0.1",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = stdout(&out);
    let eps: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("epsilon="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(eps < 0.1, "{eps}");

    let out = bincal(
        &[
            "bound",
            "--variant",
            "ums-complexity",
            "--epsilon",
            "0.1",
            "--alpha",
            "0.1",
            "--B",
            "10",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = stdout(&out);
    let total: usize = text
        .lines()
        .find_map(|l| l.strip_prefix("n_total="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((17300..=17700).contains(&total), "{total}");
}

#[test]
fn plan_csv_contains_caption_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = bincal(&["plan", "--n", "1000", "--alpha", "0.1"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("B,epsilon\n"));
    let row5 = text
        .lines()
        .find(|l| l.starts_with("5,"))
        .expect("B = 5 row present");
    let eps: f64 = row5.split(',').nth(1).unwrap().parse().unwrap();
    assert!(eps <= 0.12, "{eps}");
}

#[test]
fn coverage_summary_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--seed", "9", "coverage", "--variant", "umd", "--n", "120", "--bins", "4", "--trials",
        "10", "--eta", "identity",
    ];
    let a = bincal(&args, dir.path());
    let b = bincal(&args, dir.path());
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
}
