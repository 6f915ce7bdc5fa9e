use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tbpdc::baselines::BaselineConfig;
use tbpdc::complexity::{link_slope_bound, massart_check, ComplexityReport};
use tbpdc::environment::{ComparisonModel, ProblemInstance, RewardChannel};
use tbpdc::harness::{sweep, Algorithm, ExperimentConfig, ModeSpec, SummaryRow};
use tbpdc::instances::{build_instance, fit_theta, load_pair_counts, LinkFamily, Setup};
use tbpdc::rank_search::{Gamma0, RsConfig};
use tbpdc::{Error, Result};

/// Thresholding bandits with pulls and duels.
///
/// Every `--delta` is a failure probability: 0.05 asks for the correct
/// positive set with probability at least 0.95.
#[derive(Parser, Debug)]
#[command(name = "tbpdc", version)]
struct Cli {
    /// Worker threads for sweeps [default: all cores].
    #[arg(long, env = "TBPDC_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Repeat one (setup, K, algorithm) cell and write its run CSV.
    Run(RunArgs),
    /// Run every cell of a JSON experiment config.
    Sweep(SweepArgs),
    /// Print the hardness report of an instance as JSON and as a table.
    Complexity(ComplexityArgs),
    /// Generate an instance and write it as JSON.
    Gen(GenArgs),
    /// Fit the link parameter to pairwise comparison counts.
    FitTheta(FitArgs),
    /// Plot a summary CSV with the external plotting tool.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelKind {
    Linear,
    Btl,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ChannelKind {
    Bernoulli,
    Gaussian,
}

const SETUPS: [&str; 7] = [
    "harmonic",
    "exponential",
    "threegroups",
    "uniform",
    "twelvegroups",
    "fourgroups",
    "fromfile",
];

#[derive(Args, Debug)]
struct InstanceArgs {
    /// Instance family.
    #[arg(long, value_parser = PossibleValuesParser::new(SETUPS))]
    setup: String,
    /// Number of arms.
    #[arg(long)]
    k: usize,
    /// Graded-item CSV (`item_id,level`) for `--setup fromfile`.
    #[arg(long)]
    items: Option<PathBuf>,
    /// Confidence used to scale the exponential setup's gap law.
    #[arg(long)]
    setup_delta: Option<f64>,
    /// Link family of the comparison model.
    #[arg(long, value_enum, default_value = "linear")]
    model: ModelKind,
    /// Link parameter.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Reward distribution of pulls.
    #[arg(long, value_enum, default_value = "bernoulli")]
    channel: ChannelKind,
    /// Standard deviation of Gaussian rewards.
    #[arg(long, default_value_t = 0.5)]
    scale: f64,
}

impl InstanceArgs {
    fn setup(&self) -> Result<Setup> {
        match self.setup.as_str() {
            "fromfile" => {
                let path = self.items.clone().ok_or_else(|| {
                    Error::InvalidConfig("--setup fromfile needs --items FILE".into())
                })?;
                Ok(Setup::Fromfile { path })
            }
            "exponential" => Ok(Setup::Exponential {
                delta: self.setup_delta,
            }),
            name => Setup::from_name(name),
        }
    }

    fn model(&self) -> ComparisonModel {
        match self.model {
            ModelKind::Linear => ComparisonModel::Linear { theta: self.theta },
            ModelKind::Btl => ComparisonModel::Btl { theta: self.theta },
        }
    }

    fn channel(&self) -> RewardChannel {
        match self.channel {
            ChannelKind::Bernoulli => RewardChannel::Bernoulli,
            ChannelKind::Gaussian => RewardChannel::Gaussian { scale: self.scale },
        }
    }
}

fn parse_gamma0(s: &str) -> std::result::Result<Gamma0, String> {
    if s == "adaptive" {
        return Ok(Gamma0::Adaptive);
    }
    s.parse::<f64>()
        .map(Gamma0::Fixed)
        .map_err(|_| format!("expected `adaptive` or a number, got `{s}`"))
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Algorithm identifier.
    #[arg(long, value_parser = PossibleValuesParser::new(Algorithm::ALL.map(Algorithm::id)))]
    algo: String,
    /// Failure probability handed to the algorithm.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Repetitions.
    #[arg(long, default_value_t = 500)]
    reps: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run CSV; the summary is written next to it as `<stem>_summary.csv`.
    #[arg(long)]
    out: PathBuf,
    /// Shrinking factor of the Rank-Search confidence level.
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    /// Initial confidence level: `adaptive` or a number in (0, 1/2).
    #[arg(long, default_value = "adaptive", value_parser = parse_gamma0)]
    gamma0: Gamma0,
    /// Duel budget of the Borda ranking in rankthensearch-borda.
    #[arg(long, default_value_t = 1_000_000_000)]
    duel_budget: u64,
    /// Multiplier on the CLUCB confidence radius.
    #[arg(long, default_value_t = 1.0)]
    clucb_radius_scale: f64,
    /// Replace both oracles by their noiseless test doubles.
    #[arg(long)]
    noiseless: bool,
    /// Write 0 in the wall_ms column for byte-reproducible output.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output_path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ComplexityArgs {
    /// Instance JSON as written by `gen`.
    #[arg(long)]
    instance: PathBuf,
    /// Also check the margin-condition inequalities at this margin.
    #[arg(long)]
    massart_c: Option<f64>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Seed for random setups.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file [default: standard output].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// CSV with header `i,j,wins_i,totals` (0-based arm indices).
    #[arg(long)]
    comparisons: PathBuf,
    /// Link family to fit.
    #[arg(long, value_enum)]
    model: ModelKind,
    /// JSON array of means, or an instance JSON.
    #[arg(long)]
    means: PathBuf,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Summary CSV written by `run` or `sweep`.
    #[arg(long)]
    summary: PathBuf,
    /// Output directory for the figures.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated setups to plot [default: all].
    #[arg(long)]
    setups: Option<String>,
    /// Image format.
    #[arg(long)]
    format: Option<String>,
    /// Logarithmic y axis.
    #[arg(long)]
    logy: bool,
}

/// Executable of the plotting tool, overridable with `TBPDC_PLOT_TOOL`.
const PLOT_TOOL: &str = "tbpdc-plot";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Run(args) => cmd_run(args, cli.threads),
        Cmd::Sweep(args) => cmd_sweep(args, cli.threads),
        Cmd::Complexity(args) => cmd_complexity(args),
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::FitTheta(args) => cmd_fit(args),
        Cmd::Plot(args) => cmd_plot(args),
    }
}

fn cmd_run(args: RunArgs, threads: Option<usize>) -> Result<()> {
    let algorithm: Algorithm = args.algo.parse()?;
    let config = ExperimentConfig {
        setups: vec![args.instance.setup()?],
        k_values: vec![args.instance.k],
        algorithms: vec![algorithm],
        delta: args.delta,
        reps: args.reps,
        master_seed: args.seed,
        output_path: args.out.clone(),
        channel: args.instance.channel(),
        model: args.instance.model(),
        mode: if args.noiseless {
            ModeSpec::Noiseless
        } else {
            ModeSpec::Stochastic
        },
        rs: RsConfig {
            gamma0: args.gamma0,
            kappa: args.kappa,
            ..RsConfig::default()
        },
        baseline: BaselineConfig {
            duel_budget: args.duel_budget,
            clucb_radius_scale: args.clucb_radius_scale,
            ..BaselineConfig::default()
        },
        timing: !args.no_timing,
    };
    let out = sweep(&config, threads)?;
    out.write(&args.out)?;
    print_summary(&out.summary);
    Ok(())
}

fn cmd_sweep(args: SweepArgs, threads: Option<usize>) -> Result<()> {
    let mut config = ExperimentConfig::from_path(&args.config)?;
    if let Some(out) = args.out {
        config.output_path = out;
    }
    let out = sweep(&config, threads)?;
    out.write(&config.output_path)?;
    print_summary(&out.summary);
    Ok(())
}

fn print_summary(rows: &[SummaryRow]) {
    println!(
        "{:<14} {:>5} {:<22} {:>5} {:>8} {:>14} {:>12} {:>14} {:>12}",
        "setup", "K", "algorithm", "reps", "success", "pull_mean", "pull_std", "duel_mean", "duel_std"
    );
    for r in rows {
        println!(
            "{:<14} {:>5} {:<22} {:>5} {:>8.3} {:>14.1} {:>12.1} {:>14.1} {:>12.1}",
            r.setup, r.k, r.algorithm, r.reps, r.success_rate, r.pull_mean, r.pull_std, r.duel_mean, r.duel_std
        );
    }
}

fn read_instance(path: &Path) -> Result<ProblemInstance> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.6}"))
}

fn cmd_complexity(args: ComplexityArgs) -> Result<()> {
    let instance = read_instance(&args.instance)?;
    let report = ComplexityReport::new(&instance)?;
    let mut doc = serde_json::to_value(&report)?;
    if let Some(c) = args.massart_c {
        let l = link_slope_bound(instance.model(), instance.means()).ok_or_else(|| {
            Error::PreconditionUnmet("no slope bound for an explicit preference matrix".into())
        })?;
        doc["massart"] = serde_json::to_value(massart_check(&instance, c, l)?)?;
    }
    println!("{}", serde_json::to_string_pretty(&doc)?);
    println!();
    println!("{:>4} {:>10} {:>10} {:>10} {:>10} {:>12}", "arm", "mean", "borda", "gap", "duel_gap", "robust_gap");
    for i in 0..instance.num_arms() {
        println!(
            "{:>4} {:>10.6} {:>10.6} {:>10.6} {:>10} {:>12}",
            i,
            instance.means()[i],
            instance.borda_scores()[i],
            report.label_gaps[i],
            fmt_opt(report.duel_gaps.as_ref().map(|g| g[i])),
            fmt_opt(report.robust_duel_gaps.as_ref().and_then(|g| g[i])),
        );
    }
    println!();
    let opt_arm = |x: Option<usize>| x.map_or_else(|| "-".into(), |v| v.to_string());
    for (name, value) in [
        ("H_l", format!("{:.6}", report.h_l)),
        ("H_c1", fmt_opt(report.h_c1)),
        ("H_c2", fmt_opt(report.h_c2)),
        ("i_u", opt_arm(report.i_u)),
        ("i_l", opt_arm(report.i_l)),
        ("gamma_star", fmt_opt(report.gamma_star)),
        ("delta_star", format!("{:.6}", report.delta_star)),
    ] {
        println!("{name:<12} {value}");
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let setup = args.instance.setup()?;
    let instance = build_instance(
        &setup,
        args.instance.k,
        args.instance.channel(),
        args.instance.model(),
        &mut rng,
    )?;
    let json = serde_json::to_string_pretty(&instance)?;
    match args.out {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    Ok(())
}

fn read_means(path: &Path) -> Result<Vec<f64>> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let array = if value.is_array() { &value } else { &value["means"] };
    Ok(serde_json::from_value(array.clone())?)
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let pairs = load_pair_counts(&args.comparisons)?;
    let means = read_means(&args.means)?;
    let family = match args.model {
        ModelKind::Linear => LinkFamily::Linear,
        ModelKind::Btl => LinkFamily::Btl,
    };
    let fit = fit_theta(&pairs, &means, family)?;
    println!("{}", serde_json::to_string_pretty(&fit)?);
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let tool = std::env::var("TBPDC_PLOT_TOOL").unwrap_or_else(|_| PLOT_TOOL.into());
    let mut argv: Vec<String> = vec![
        "--summary".into(),
        args.summary.display().to_string(),
        "--out".into(),
        args.out.display().to_string(),
    ];
    if let Some(s) = args.setups {
        argv.extend(["--setups".into(), s]);
    }
    if let Some(f) = args.format {
        argv.extend(["--format".into(), f]);
    }
    if args.logy {
        argv.push("--logy".into());
    }
    match Command::new(&tool).args(&argv).status() {
        Ok(status) if status.success() => Ok(()),
        Ok(status) => Err(Error::InvalidConfig(format!("{tool} exited with {status}"))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{tool} not found; would run:")?;
            writeln!(out, "{tool} {}", argv.join(" "))?;
            Ok(())
        }
        Err(e) => Err(e.into()),
    }
}
