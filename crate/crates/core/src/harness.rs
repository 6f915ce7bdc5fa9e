//! Seeded Monte-Carlo experiments.
//!
//! A sweep runs every (setup, K, algorithm, repetition) cell of an
//! [`ExperimentConfig`]. Each run derives its own seeds from the master
//! seed (see [`crate::seeding`]), so results do not depend on scheduling
//! and the output is a pure function of the configuration.
//!
//! Random setups redraw their means for each repetition from the instance
//! seed, which leaves the algorithm out so that all algorithms of a
//! repetition face the same instance. Duels spent choosing `gamma_0`
//! adaptively count toward the reported duel totals.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{clucb, rank_then_search, simple_label, BaselineConfig};
use crate::complexity::ComplexityReport;
use crate::environment::{ComparisonModel, Oracle, OracleMode, ProblemInstance, RewardChannel, Session};
use crate::error::{Error, Result};
use crate::instances::{build_instance, Setup};
use crate::outcome::{AlgorithmOutcome, BinarySearchTrace};
use crate::rank_search::{rank_search, RsConfig};
use crate::seeding::{instance_seed, run_seed, stream, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "rs")]
    RankSearch,
    #[serde(rename = "clucb")]
    Clucb,
    #[serde(rename = "simplelabel")]
    SimpleLabel,
    #[serde(rename = "rankthensearch-borda")]
    RankThenSearchBorda,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::RankSearch,
        Algorithm::Clucb,
        Algorithm::SimpleLabel,
        Algorithm::RankThenSearchBorda,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::RankSearch => "rs",
            Algorithm::Clucb => "clucb",
            Algorithm::SimpleLabel => "simplelabel",
            Algorithm::RankThenSearchBorda => "rankthensearch-borda",
        }
    }

    pub fn uses_duels(self) -> bool {
        matches!(self, Algorithm::RankSearch | Algorithm::RankThenSearchBorda)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// Runs one algorithm on an oracle. `delta` in the configs is used as is.
pub fn run_algorithm<O: Oracle + ?Sized, R: Rng + ?Sized>(
    algorithm: Algorithm,
    oracle: &mut O,
    tau: f64,
    rs: &RsConfig,
    baseline: &BaselineConfig,
    rng: &mut R,
) -> Result<AlgorithmOutcome> {
    match algorithm {
        Algorithm::RankSearch => rank_search(oracle, tau, rs, rng),
        Algorithm::Clucb => clucb(oracle, tau, baseline),
        Algorithm::SimpleLabel => simple_label(oracle, tau, baseline),
        Algorithm::RankThenSearchBorda => rank_then_search(oracle, tau, baseline, rng),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    #[default]
    Stochastic,
    Noiseless,
}

impl From<ModeSpec> for OracleMode {
    fn from(m: ModeSpec) -> Self {
        match m {
            ModeSpec::Stochastic => OracleMode::Stochastic,
            ModeSpec::Noiseless => OracleMode::Noiseless,
        }
    }
}

fn default_model() -> ComparisonModel {
    ComparisonModel::Linear { theta: 1.0 }
}

fn default_reps() -> usize {
    500
}

fn default_delta() -> f64 {
    0.05
}

fn default_true() -> bool {
    true
}

/// A sweep description, read from JSON. `delta` is the failure probability
/// handed to every algorithm and overrides the `delta` of `rs` and
/// `baseline`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub setups: Vec<Setup>,
    #[serde(rename = "K_values", alias = "k_values")]
    pub k_values: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Run CSV path; the summary goes next to it as `<stem>_summary.csv`.
    pub output_path: PathBuf,
    #[serde(default)]
    pub channel: RewardChannel,
    #[serde(default = "default_model")]
    pub model: ComparisonModel,
    #[serde(default)]
    pub mode: ModeSpec,
    #[serde(default)]
    pub rs: RsConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
    /// Measure wall time. When off, `wall_ms` is written as 0 so that the
    /// CSV output is byte-for-byte reproducible.
    #[serde(default = "default_true")]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if self.setups.is_empty() || self.k_values.is_empty() || self.algorithms.is_empty() {
            return Err(Error::InvalidConfig(
                "setups, K_values and algorithms must be nonempty".into(),
            ));
        }
        self.rs_config().validate()?;
        self.baseline_config().validate()?;
        Ok(())
    }

    pub fn rs_config(&self) -> RsConfig {
        RsConfig {
            delta: self.delta,
            ..self.rs.clone()
        }
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig {
            delta: self.delta,
            ..self.baseline.clone()
        }
    }

    pub fn summary_path(&self) -> PathBuf {
        summary_path_for(&self.output_path)
    }

    /// The instance faced by repetition `rep` of a cell.
    pub fn instance(&self, setup: &Setup, k: usize, rep: usize) -> Result<ProblemInstance> {
        let seed = instance_seed(self.master_seed, setup.name(), k, rep);
        let mut rng = stream(seed, Stream::Instance);
        build_instance(setup, k, self.channel, self.model.clone(), &mut rng)
    }
}

pub fn summary_path_for(run_path: &Path) -> PathBuf {
    let stem = run_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "runs".into());
    run_path.with_file_name(format!("{stem}_summary.csv"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub setup: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub algorithm: String,
    pub rep: usize,
    pub seed: u64,
    pub n_pull: u64,
    pub n_duel: u64,
    pub success: bool,
    pub flagged: bool,
    pub rounds: usize,
    pub fol_calls: usize,
    pub wall_ms: f64,
    #[serde(skip)]
    pub pulls_per_arm: Vec<u64>,
    #[serde(skip)]
    pub duels_per_arm: Vec<u64>,
    #[serde(skip)]
    pub binary_searches: Vec<BinarySearchTrace>,
}

impl RunRecord {
    fn sort_key(&self) -> (&str, usize, &str, usize) {
        (&self.setup, self.k, &self.algorithm, self.rep)
    }
}

/// Runs one repetition of one cell.
pub fn run_once(
    config: &ExperimentConfig,
    setup: &Setup,
    k: usize,
    algorithm: Algorithm,
    rep: usize,
) -> Result<RunRecord> {
    let instance = config.instance(setup, k, rep)?;
    let seed = run_seed(config.master_seed, setup.name(), k, algorithm.id(), rep);
    let mut session = Session::with_mode(&instance, stream(seed, Stream::Oracle), config.mode.into());
    let mut rng = stream(seed, Stream::Algorithm);
    let start = Instant::now();
    let outcome = run_algorithm(
        algorithm,
        &mut session,
        instance.tau(),
        &config.rs_config(),
        &config.baseline_config(),
        &mut rng,
    )?;
    let wall_ms = if config.timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    Ok(RunRecord {
        setup: setup.name().to_string(),
        k,
        algorithm: algorithm.id().to_string(),
        rep,
        seed,
        n_pull: outcome.counters.n_pull,
        n_duel: outcome.counters.n_duel,
        success: outcome.success(&instance),
        flagged: outcome.flagged(),
        rounds: outcome.rounds,
        fol_calls: outcome.fol_calls,
        wall_ms,
        pulls_per_arm: outcome.counters.pulls_per_arm,
        duels_per_arm: outcome.counters.duels_participated_per_arm,
        binary_searches: outcome.binary_searches,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub setup: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub algorithm: String,
    pub reps: usize,
    pub success_rate: f64,
    pub pull_mean: f64,
    pub pull_std: f64,
    pub duel_mean: f64,
    pub duel_std: f64,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One summary row per cell of sorted records.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    records
        .chunk_by(|a, b| (&a.setup, a.k, &a.algorithm) == (&b.setup, b.k, &b.algorithm))
        .map(|cell| {
            let pulls: Vec<f64> = cell.iter().map(|r| r.n_pull as f64).collect();
            let duels: Vec<f64> = cell.iter().map(|r| r.n_duel as f64).collect();
            let (pull_mean, pull_std) = mean_std(&pulls);
            let (duel_mean, duel_std) = mean_std(&duels);
            let wins = cell.iter().filter(|r| r.success).count();
            SummaryRow {
                setup: cell[0].setup.clone(),
                k: cell[0].k,
                algorithm: cell[0].algorithm.clone(),
                reps: cell.len(),
                success_rate: wins as f64 / cell.len() as f64,
                pull_mean,
                pull_std,
                duel_mean,
                duel_std,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    /// Sorted by (setup, K, algorithm, rep).
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

/// Runs every cell, on `threads` workers (all cores when `None`).
pub fn sweep(config: &ExperimentConfig, threads: Option<usize>) -> Result<SweepOutput> {
    config.validate()?;
    for setup in &config.setups {
        for &k in &config.k_values {
            config.instance(setup, k, 0)?;
        }
    }
    let mut jobs = Vec::new();
    for setup in &config.setups {
        for &k in &config.k_values {
            for &alg in &config.algorithms {
                for rep in 0..config.reps {
                    jobs.push((setup, k, alg, rep));
                }
            }
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let mut records = pool.install(|| {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|&(setup, k, alg, rep)| run_once(config, setup, k, alg, rep))
            .collect::<Result<Vec<_>>>()
    })?;
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let summary = summarize(&records);
    Ok(SweepOutput { records, summary })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub const RUN_HEADER: [&str; 12] = [
    "setup", "K", "algorithm", "rep", "seed", "n_pull", "n_duel", "success", "flagged", "rounds",
    "fol_calls", "wall_ms",
];

pub const SUMMARY_HEADER: [&str; 9] = [
    "setup",
    "K",
    "algorithm",
    "reps",
    "success_rate",
    "pull_mean",
    "pull_std",
    "duel_mean",
    "duel_std",
];

impl SweepOutput {
    /// Writes the run CSV to `run_path` and the summary next to it.
    pub fn write(&self, run_path: &Path) -> Result<()> {
        write_csv(run_path, &self.records, &RUN_HEADER)?;
        write_csv(&summary_path_for(run_path), &self.summary, &SUMMARY_HEADER)
    }
}

pub fn read_run_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmBound {
    pub arm: usize,
    pub label_gap: f64,
    pub duel_gap: f64,
    /// The duel gap for the two boundary arms.
    pub robust_gap: f64,
    pub mean_pulls: f64,
    pub mean_duels: f64,
    /// `duel_gap^2 E[duels] + label_gap^2 E[pulls]`.
    pub duel_sum: f64,
    /// `robust_gap^2 E[duels] + label_gap^2 E[pulls]`.
    pub robust_sum: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmwiseReport {
    /// `min(1/10, R^2/2)`.
    pub c: f64,
    /// `c ln(1 / (2 delta))`.
    pub lower_bound: f64,
    /// Smallest off-diagonal preference.
    pub min_preference: f64,
    /// The lower bound is only proven when every preference is at least 3/8.
    pub precondition_met: bool,
    pub arms: Vec<ArmBound>,
}

impl ArmwiseReport {
    pub fn flagged_arms(&self) -> Vec<usize> {
        self.arms.iter().filter(|a| a.flagged).map(|a| a.arm).collect()
    }
}

/// Compares the per-arm query counts of `records` (all on `instance`)
/// with the per-arm lower bound `c ln(1 / (2 delta))`. An arm is flagged
/// when its robust-gap weighted sum falls below the bound.
pub fn armwise_bound_report(
    records: &[RunRecord],
    instance: &ProblemInstance,
    delta: f64,
) -> Result<ArmwiseReport> {
    let k = instance.num_arms();
    if records.is_empty()
        || records
            .iter()
            .any(|r| r.pulls_per_arm.len() != k || r.duels_per_arm.len() != k)
    {
        return Err(Error::MissingCounters);
    }
    let report = ComplexityReport::new(instance)?;
    let duel_gaps = report.duel_gaps.ok_or(Error::OneSidedInstance)?;
    let robust = report.robust_duel_gaps.expect("two-sided");
    let r = instance.channel().sub_gaussian_scale();
    let c = (0.1f64).min(r * r / 2.0);
    let lower_bound = c * (1.0 / (2.0 * delta)).ln();
    let n = records.len() as f64;
    let arms = (0..k)
        .map(|arm| {
            let mean_pulls = records.iter().map(|r| r.pulls_per_arm[arm] as f64).sum::<f64>() / n;
            let mean_duels = records.iter().map(|r| r.duels_per_arm[arm] as f64).sum::<f64>() / n;
            let label_gap = report.label_gaps[arm];
            let duel_gap = duel_gaps[arm];
            let robust_gap = robust[arm].unwrap_or(duel_gap);
            let pull_part = label_gap * label_gap * mean_pulls;
            let duel_sum = duel_gap * duel_gap * mean_duels + pull_part;
            let robust_sum = robust_gap * robust_gap * mean_duels + pull_part;
            ArmBound {
                arm,
                label_gap,
                duel_gap,
                robust_gap,
                mean_pulls,
                mean_duels,
                duel_sum,
                robust_sum,
                flagged: robust_sum < lower_bound,
            }
        })
        .collect();
    let min_preference = instance.min_preference();
    Ok(ArmwiseReport {
        c,
        lower_bound,
        min_preference,
        precondition_met: min_preference >= 3.0 / 8.0,
        arms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(reps: usize) -> ExperimentConfig {
        ExperimentConfig {
            setups: vec![Setup::Harmonic, Setup::Uniform],
            k_values: vec![4, 6],
            algorithms: vec![Algorithm::RankSearch, Algorithm::SimpleLabel],
            delta: 0.05,
            reps,
            master_seed: 7,
            output_path: PathBuf::from("runs.csv"),
            channel: RewardChannel::Bernoulli,
            model: default_model(),
            mode: ModeSpec::Stochastic,
            rs: RsConfig::default(),
            baseline: BaselineConfig::default(),
            timing: false,
        }
    }

    #[test]
    fn algorithm_ids_round_trip() {
        for alg in Algorithm::ALL {
            assert_eq!(alg.id().parse::<Algorithm>().unwrap(), alg);
            let json = serde_json::to_string(&alg).unwrap();
            assert_eq!(json, format!("\"{}\"", alg.id()));
        }
        assert!(matches!("lucb".parse::<Algorithm>(), Err(Error::UnknownAlgorithm(_))));
    }

    #[test]
    fn run_once_is_deterministic() {
        let cfg = config(1);
        let a = run_once(&cfg, &Setup::Uniform, 6, Algorithm::RankSearch, 3).unwrap();
        let b = run_once(&cfg, &Setup::Uniform, 6, Algorithm::RankSearch, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed, run_seed(7, "uniform", 6, "rs", 3));
    }

    #[test]
    fn algorithms_share_the_instance_of_a_rep() {
        let cfg = config(1);
        let a = cfg.instance(&Setup::Uniform, 6, 2).unwrap();
        let b = cfg.instance(&Setup::Uniform, 6, 2).unwrap();
        let c = cfg.instance(&Setup::Uniform, 6, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.means(), c.means());
    }

    #[test]
    fn sweep_counts_and_summary() {
        let cfg = config(3);
        let out = sweep(&cfg, Some(2)).unwrap();
        assert_eq!(out.records.len(), 24);
        assert_eq!(out.summary.len(), 8);
        for row in &out.summary {
            let cell: Vec<&RunRecord> = out
                .records
                .iter()
                .filter(|r| r.setup == row.setup && r.k == row.k && r.algorithm == row.algorithm)
                .collect();
            let mean = cell.iter().map(|r| r.n_pull as f64).sum::<f64>() / cell.len() as f64;
            assert!((mean - row.pull_mean).abs() < 1e-9);
        }
    }

    #[test]
    fn noiseless_smoke_mode_always_succeeds() {
        let mut cfg = config(2);
        cfg.mode = ModeSpec::Noiseless;
        cfg.setups = vec![Setup::Harmonic, Setup::Threegroups, Setup::Twelvegroups];
        cfg.k_values = vec![6, 10];
        cfg.algorithms = vec![Algorithm::RankSearch, Algorithm::Clucb, Algorithm::SimpleLabel];
        let out = sweep(&cfg, Some(1)).unwrap();
        assert!(out.records.iter().all(|r| r.success), "{:?}", out.records.iter().find(|r| !r.success));
    }

    #[test]
    fn mean_std_values() {
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bad_k_is_reported_before_running() {
        let mut cfg = config(1);
        cfg.k_values = vec![5];
        assert!(matches!(sweep(&cfg, Some(1)), Err(Error::BadK(_))));
    }

    fn fake_record(k: usize, pulls: u64, duels: u64) -> RunRecord {
        RunRecord {
            setup: "harmonic".into(),
            k,
            algorithm: "rs".into(),
            rep: 0,
            seed: 0,
            n_pull: pulls * k as u64,
            n_duel: duels * k as u64 / 2,
            success: true,
            flagged: false,
            rounds: 1,
            fol_calls: 1,
            wall_ms: 0.0,
            pulls_per_arm: vec![pulls; k],
            duels_per_arm: vec![duels; k],
            binary_searches: Vec::new(),
        }
    }

    #[test]
    fn armwise_flags_zero_counters() {
        let inst = crate::instances::build_instance(
            &Setup::Harmonic,
            6,
            RewardChannel::Bernoulli,
            default_model(),
            &mut stream(0, Stream::Instance),
        )
        .unwrap();
        let rep = armwise_bound_report(&[fake_record(6, 0, 0)], &inst, 0.05).unwrap();
        assert_eq!(rep.flagged_arms().len(), 6);
        assert!(!rep.precondition_met);
        let rep = armwise_bound_report(&[fake_record(6, 0, 0)], &inst, 0.5).unwrap();
        assert!(rep.lower_bound.abs() < 1e-15);
        assert!(rep.flagged_arms().is_empty());
        let rep = armwise_bound_report(&[fake_record(6, 10_000, 10_000)], &inst, 0.05).unwrap();
        assert!(rep.flagged_arms().is_empty());
        let mut missing = fake_record(6, 1, 1);
        missing.pulls_per_arm.clear();
        assert!(matches!(
            armwise_bound_report(&[missing], &inst, 0.05),
            Err(Error::MissingCounters)
        ));
    }

    #[test]
    fn config_json_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"setups":[{"name":"harmonic"}],"K_values":[10],"algorithms":["rs","clucb"],
                "output_path":"out/runs.csv"}"#,
        )
        .unwrap();
        assert_eq!(cfg.reps, 500);
        assert_eq!(cfg.delta, 0.05);
        assert_eq!(cfg.rs_config().kappa, 2.0);
        assert_eq!(cfg.summary_path(), PathBuf::from("out/runs_summary.csv"));
        cfg.validate().unwrap();
    }
}
