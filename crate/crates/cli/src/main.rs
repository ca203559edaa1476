//! Command-line surface for the calibration toolkit: fit calibrators,
//! predict, assess validity, evaluate guarantee bounds, plan bin counts,
//! and run the coverage / comparison experiment harnesses.
//!
//! Every run with an explicit `--seed` is end-to-end deterministic.
//! Printed numbers carry six significant digits; files keep full
//! precision. Exit codes: 0 success, 2 usage error, 3 data error,
//! 4 infeasible configuration.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use bincal::assessment::{curve_auc, grid_of_size, plugin_ece, validity_conditional, validity_marginal};
use bincal::calibrators::{
    fit_fixed_width, fit_isotonic, fit_randomized_umd, fit_scaling_binning, fit_umd,
    fit_umd_original, fit_ums, perturb_scores, CalibratorKind, RandomizationParams,
    DEFAULT_DELTA, DEFAULT_SPLIT_FRACTION,
};
use bincal::data::{load_scored_csv, SyntheticSpec};
use bincal::experiments::config::{load_comparison_config, synthetic_source};
use bincal::experiments::{run_comparison, run_coverage, CoverageVariant};
use bincal::guarantees::{
    bound_curve, bound_for, required_n, ums_required_n, BoundVariant, GuaranteeResult,
};
use bincal::model::{BinningModel, SeededRng};
use bincal::plot::{render_svg, Series};
use bincal::Error;

#[derive(Parser)]
#[command(name = "bincal", version, about = "Post-hoc calibration toolkit for binary classifiers")]
struct Cli {
    /// Seed for every random choice (env: BINCAL_SEED).
    #[arg(long, global = true, env = "BINCAL_SEED", default_value_t = 0)]
    seed: u64,

    /// Worker threads for the experiment commands (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a binning calibrator on a score,label CSV.
    Fit(FitArgs),
    /// Predict with a fitted model file.
    Predict(PredictArgs),
    /// Assess a fitted model on a score,label CSV: validity curves + ECE.
    Assess(AssessArgs),
    /// Evaluate a guarantee bound, invert it, or run the sample-split
    /// sample-complexity chain.
    Bound(BoundArgs),
    /// Emit the bound-vs-bin-count planning curve as CSV.
    Plan(PlanArgs),
    /// Monte-Carlo coverage verification on synthetic ground truth.
    Coverage(CoverageArgs),
    /// Multi-method comparison driven by a config file.
    Compare(CompareArgs),
}

#[derive(Args)]
struct FitArgs {
    /// umd | umd-original | umd-randomized | ums | fixed-width | isotonic | scaling-binning
    #[arg(long)]
    calibrator: String,
    /// Input CSV with columns score,label.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, visible_alias = "B")]
    bins: usize,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Randomization magnitude for the randomized fit and tie-breaking.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Edge/bias split for the sample-splitting fit.
    #[arg(long, default_value_t = DEFAULT_SPLIT_FRACTION)]
    split_fraction: f64,
    /// Break tied scores with a seeded perturbation before fitting the
    /// tie-sensitive variants.
    #[arg(long)]
    perturb_ties: bool,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// A single score in [0, 1].
    #[arg(long)]
    score: f64,
}

#[derive(Args)]
struct AssessArgs {
    #[arg(long)]
    model: PathBuf,
    /// Test CSV with columns score,label.
    #[arg(long)]
    test: PathBuf,
    /// Number of display-grid points on [0, 1].
    #[arg(long, default_value_t = 1001)]
    grid_size: usize,
    /// Prefix for <prefix>_marginal.csv and <prefix>_conditional.csv.
    #[arg(long)]
    out_prefix: String,
    /// Also write <prefix>_validity.svg.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct BoundArgs {
    /// umd | umd-original | randomized-marginal | randomized-conditional |
    /// ece-expectation | ums-complexity (full names accepted).
    #[arg(long)]
    variant: String,
    /// Calibration size for a forward bound evaluation.
    #[arg(long)]
    n: Option<usize>,
    /// Target deviation for an inversion (required n) or the
    /// sample-splitting chain.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, visible_alias = "B")]
    bins: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Quantile-estimation constant of the sample-splitting chain.
    #[arg(long, default_value_t = 100.0)]
    c: f64,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    b_min: usize,
    #[arg(long, default_value_t = 60)]
    b_max: usize,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoverageArgs {
    /// umd | umd-original | umd-randomized
    #[arg(long, default_value = "umd")]
    variant: String,
    #[arg(long)]
    n: usize,
    #[arg(long, visible_alias = "B")]
    bins: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long)]
    trials: usize,
    /// uniform | beta
    #[arg(long, default_value = "uniform")]
    score: String,
    #[arg(long)]
    beta_alpha: Option<f64>,
    #[arg(long)]
    beta_beta: Option<f64>,
    /// identity | power | logistic-warp | piecewise
    #[arg(long, default_value = "identity")]
    eta: String,
    #[arg(long)]
    exponent: Option<f64>,
    #[arg(long)]
    slope: Option<f64>,
    #[arg(long)]
    center: Option<f64>,
    /// Comma-separated interior breakpoints for the piecewise regression.
    #[arg(long, value_delimiter = ',')]
    breaks: Option<Vec<f64>>,
    /// Comma-separated values for the piecewise regression.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Write per-trial rows to <prefix>_trials.csv.
    #[arg(long)]
    out_prefix: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    /// TOML configuration file (see the compare section of the README).
    #[arg(long)]
    config: PathBuf,
    /// Prefix for the emitted CSV bundle.
    #[arg(long)]
    out_prefix: String,
    /// Also write per-size validity SVG plots.
    #[arg(long)]
    svg: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    bincal::configure_threads(cli.threads);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) => 4,
        Error::InvalidInput(_) | Error::Data(_) | Error::Io(_) => 3,
    }
}

/// Six significant digits for terminal output.
fn fmt6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..15).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Fit(args) => cmd_fit(args, cli.seed),
        Command::Predict(args) => cmd_predict(args),
        Command::Assess(args) => cmd_assess(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Coverage(args) => cmd_coverage(args, cli.seed),
        Command::Compare(args) => cmd_compare(args, cli.seed),
    }
}

fn cmd_fit(args: FitArgs, seed: u64) -> Result<(), Error> {
    let kind: CalibratorKind = args.calibrator.parse()?;
    let data = load_scored_csv(&args.data)?;
    let model = match kind {
        CalibratorKind::Umd | CalibratorKind::UmdOriginal | CalibratorKind::ScalingBinning => {
            let fit_input = if args.perturb_ties {
                let mut params =
                    RandomizationParams::new(args.delta, SeededRng::new(seed))?;
                perturb_scores(&data, &mut params)
            } else {
                data.clone()
            };
            match kind {
                CalibratorKind::Umd => fit_umd(&fit_input, args.bins)?,
                CalibratorKind::UmdOriginal => fit_umd_original(&fit_input, args.bins)?,
                // The scaled values are the input scores themselves: the
                // upstream scaler already produced them.
                _ => {
                    let scaled: Vec<f64> = data.scores().collect();
                    fit_scaling_binning(&fit_input, &scaled, args.bins)?
                }
            }
        }
        CalibratorKind::UmdRandomized => {
            let mut params = RandomizationParams::new(args.delta, SeededRng::new(seed))?;
            fit_randomized_umd(&data, args.bins, &mut params)?
        }
        CalibratorKind::Ums => {
            let mut rng = SeededRng::new(seed);
            fit_ums(&data, args.bins, args.split_fraction, &mut rng)?
        }
        CalibratorKind::FixedWidth => fit_fixed_width(&data, args.bins)?,
        CalibratorKind::Isotonic => fit_isotonic(&data)?,
    };
    model.write_to(&args.out)?;

    let mut counts = vec![0usize; model.bins()];
    for s in data.samples() {
        counts[model.assign_bin(s.score)? - 1] += 1;
    }
    println!("n={}", data.len());
    println!("bins={}", model.bins());
    println!(
        "bin_counts={}",
        counts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
    println!("model={}", args.out.display());
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), Error> {
    let model = BinningModel::read_from(&args.model)?;
    println!("{}", fmt6(model.predict(args.score)?));
    Ok(())
}

fn cmd_assess(args: AssessArgs) -> Result<(), Error> {
    let model = BinningModel::read_from(&args.model)?;
    let test = load_scored_csv(&args.test)?;
    if args.grid_size < 2 {
        return Err(Error::invalid_config("grid size must be at least 2"));
    }
    let grid = grid_of_size(args.grid_size);
    let marginal = validity_marginal(&model, &test, &grid)?;
    let conditional = validity_conditional(&model, &test, &grid)?;

    let marginal_path = format!("{}_marginal.csv", args.out_prefix);
    let conditional_path = format!("{}_conditional.csv", args.out_prefix);
    std::fs::write(&marginal_path, marginal.to_csv())?;
    std::fs::write(&conditional_path, conditional.to_csv())?;

    if args.svg {
        let series = vec![
            Series::from_values("marginal", marginal.grid(), marginal.values()),
            Series::from_values("conditional", conditional.grid(), conditional.values()),
        ];
        std::fs::write(
            format!("{}_validity.svg", args.out_prefix),
            render_svg("validity", "epsilon", "V(epsilon)", &series),
        )?;
    }

    println!("l1_ece={}", fmt6(plugin_ece(&model, &test, 1.0)?));
    println!("l2_ece={}", fmt6(plugin_ece(&model, &test, 2.0)?));
    println!("marginal_auc={}", fmt6(curve_auc(&marginal)));
    println!("marginal_csv={marginal_path}");
    println!("conditional_csv={conditional_path}");
    Ok(())
}

fn parse_bound_variant(s: &str) -> Result<BoundVariant, Error> {
    match s {
        "umd" => Ok(BoundVariant::UmdConditional),
        "umd-original" => Ok(BoundVariant::UmdOriginalConditional),
        other => BoundVariant::from_str(other),
    }
}

fn cmd_bound(args: BoundArgs) -> Result<(), Error> {
    if args.variant == "ums-complexity" {
        let epsilon = args.epsilon.ok_or_else(|| {
            Error::invalid_config("ums-complexity needs --epsilon")
        })?;
        let result = ums_required_n(epsilon, args.alpha, args.bins, args.c)?;
        print!("{}", result.to_key_value());
        return Ok(());
    }

    let variant = parse_bound_variant(&args.variant)?;
    match (args.n, args.epsilon) {
        (Some(n), None) => {
            let epsilon = bound_for(variant, n, args.bins, args.alpha, args.delta)?;
            let result = GuaranteeResult {
                epsilon,
                n,
                bins: args.bins,
                alpha: args.alpha,
                delta: args.delta,
                variant,
            };
            print!("{}", result.to_key_value());
            println!("epsilon_6sig={}", fmt6(epsilon));
        }
        (None, Some(epsilon)) => {
            let n = required_n(epsilon, args.alpha, args.bins, args.delta, variant)?;
            let achieved = bound_for(variant, n, args.bins, args.alpha, args.delta)?;
            println!("variant={variant}");
            println!("target_epsilon={epsilon}");
            println!("required_n={n}");
            println!("achieved_epsilon={}", fmt6(achieved));
        }
        _ => {
            return Err(Error::invalid_config(
                "pass exactly one of --n (forward bound) or --epsilon (inversion)",
            ))
        }
    }
    Ok(())
}

fn cmd_plan(args: PlanArgs) -> Result<(), Error> {
    if args.b_min == 0 || args.b_max < args.b_min {
        return Err(Error::invalid_config("need 1 <= b_min <= b_max"));
    }
    let points = bound_curve(args.n, args.alpha, args.b_min..=args.b_max)?;
    let mut csv = String::from("B,epsilon\n");
    for p in &points {
        csv.push_str(&format!("{},{}\n", p.bins, p.epsilon));
    }
    match args.out {
        Some(path) => {
            std::fs::write(&path, csv)?;
            println!("plan_csv={}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_coverage(args: CoverageArgs, seed: u64) -> Result<(), Error> {
    let variant: CoverageVariant = args.variant.parse()?;
    let spec: SyntheticSpec = synthetic_source(
        &args.score,
        args.beta_alpha,
        args.beta_beta,
        &args.eta,
        args.exponent,
        args.slope,
        args.center,
        args.breaks.clone(),
        args.values.clone(),
        seed,
    )?;
    let report = run_coverage(
        &spec,
        variant,
        args.n,
        args.bins,
        args.alpha,
        args.delta,
        args.trials,
        seed,
    )?;
    print!("{}", report.summary());
    if let Some(prefix) = args.out_prefix {
        let path = format!("{prefix}_trials.csv");
        std::fs::write(&path, report.to_csv())?;
        println!("trials_csv={path}");
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs, seed: u64) -> Result<(), Error> {
    let mut config = load_comparison_config(&args.config)?;
    // The command-line seed wins only when the file leaves it at 0.
    if config.seed == 0 {
        config.seed = seed;
        if let bincal::experiments::ComparisonSource::Synthetic(spec) = &mut config.source {
            spec.seed = seed;
        }
    }
    let report = run_comparison(&config)?;

    let ece_path = format!("{}_ece.csv", args.out_prefix);
    std::fs::write(&ece_path, report.ece_csv())?;
    println!("ece_csv={ece_path}");

    for outcome in &report.outcomes {
        for (tag, curve) in [
            ("marginal", &outcome.marginal),
            ("conditional", &outcome.conditional),
        ] {
            let path = format!(
                "{}_{}_n{}_{}.csv",
                args.out_prefix, outcome.label, outcome.calibration_n, tag
            );
            std::fs::write(&path, curve.to_csv())?;
        }
        println!(
            "method={} n={} l1_ece={} stderr={}",
            outcome.label,
            outcome.calibration_n,
            fmt6(outcome.ece_mean),
            fmt6(outcome.ece_stderr)
        );
    }
    for theory in &report.theory {
        let path = format!("{}_theory_n{}.csv", args.out_prefix, theory.calibration_n);
        let mut csv = String::from("epsilon,mean,stderr\n");
        for (eps, v) in report.grid.iter().zip(&theory.values) {
            csv.push_str(&format!("{eps},{v},0\n"));
        }
        std::fs::write(&path, csv)?;
    }
    for failure in &report.failures {
        println!(
            "failed: method={} n={}: {}",
            failure.label, failure.calibration_n, failure.message
        );
    }

    if args.svg {
        type CurvePick = fn(&bincal::experiments::MethodOutcome) -> &bincal::assessment::AggregatedCurve;
        let views: [(&str, CurvePick); 2] = [
            ("marginal", |o| &o.marginal),
            ("conditional", |o| &o.conditional),
        ];
        for theory in &report.theory {
            let n = theory.calibration_n;
            for (tag, pick) in views {
                let mut series: Vec<Series> = report
                    .outcomes
                    .iter()
                    .filter(|o| o.calibration_n == n)
                    .map(|o| Series::from_aggregated(&o.label, pick(o)))
                    .collect();
                series.push(Series::from_values("guarantee", &report.grid, &theory.values));
                let path = format!("{}_n{}_{}.svg", args.out_prefix, n, tag);
                std::fs::write(
                    &path,
                    render_svg(
                        &format!("{tag} validity, n={n}"),
                        "epsilon",
                        "V(epsilon)",
                        &series,
                    ),
                )?;
                println!("svg={path}");
            }
        }
    }
    Ok(())
}
