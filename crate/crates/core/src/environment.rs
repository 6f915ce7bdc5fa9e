//! Problem instances and the two query oracles.
//!
//! An instance is the pair (preference matrix, mean vector) plus the
//! threshold and the reward distribution family. Algorithms never touch an
//! instance directly: they talk to an [`Oracle`], which answers pulls and
//! duels and keeps the [`QueryCounters`] exact.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for `M_ij + M_ji = 1` in explicit matrices.
pub const COMPLEMENT_TOLERANCE: f64 = 1e-12;

/// Reward distribution of a pull.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RewardChannel {
    Bernoulli,
    Gaussian { scale: f64 },
}

impl RewardChannel {
    /// Sub-Gaussian parameter `R` used in confidence radii. A variable
    /// supported on `[0, 1]` is `1/2`-sub-Gaussian.
    pub fn sub_gaussian_scale(&self) -> f64 {
        match *self {
            RewardChannel::Bernoulli => 0.5,
            RewardChannel::Gaussian { scale } => scale,
        }
    }
}

impl Default for RewardChannel {
    fn default() -> Self {
        RewardChannel::Bernoulli
    }
}

/// How duel outcomes are generated from the means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ComparisonModel {
    /// `M_ij = (1 + theta (mu_i - mu_j)) / 2`.
    Linear { theta: f64 },
    /// `M_ij = 1 / (1 + exp(-theta (mu_i - mu_j)))`.
    Btl { theta: f64 },
    /// Arbitrary preference matrix, row `i` holds `M_i.`.
    Matrix { rows: Vec<Vec<f64>> },
}

impl ComparisonModel {
    /// Win probability of `i` over `j` under a link model, as a function of
    /// the mean difference. `None` for explicit matrices.
    pub fn link(&self, diff: f64) -> Option<f64> {
        match *self {
            ComparisonModel::Linear { theta } => Some((1.0 + theta * diff) / 2.0),
            ComparisonModel::Btl { theta } => Some(1.0 / (1.0 + (-theta * diff).exp())),
            ComparisonModel::Matrix { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ComparisonModel::Linear { .. } => "linear",
            ComparisonModel::Btl { .. } => "btl",
            ComparisonModel::Matrix { .. } => "matrix",
        }
    }
}

/// On-disk form of an instance. Deserialising goes through validation.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct InstanceDoc {
    means: Vec<f64>,
    tau: f64,
    #[serde(default)]
    channel: RewardChannel,
    model: ComparisonModel,
}

/// A validated TBP-DC instance. Immutable once built, so it can be shared
/// freely across concurrent runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct ProblemInstance {
    means: Vec<f64>,
    tau: f64,
    channel: RewardChannel,
    model: ComparisonModel,
    borda: Vec<f64>,
}

impl TryFrom<InstanceDoc> for ProblemInstance {
    type Error = Error;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        ProblemInstance::new(doc.means, doc.tau, doc.channel, doc.model)
    }
}

impl From<ProblemInstance> for InstanceDoc {
    fn from(inst: ProblemInstance) -> Self {
        InstanceDoc {
            means: inst.means,
            tau: inst.tau,
            channel: inst.channel,
            model: inst.model,
        }
    }
}

impl ProblemInstance {
    /// Builds and validates an instance, caching the Borda scores.
    pub fn new(
        means: Vec<f64>,
        tau: f64,
        channel: RewardChannel,
        model: ComparisonModel,
    ) -> Result<Self> {
        let k = means.len();
        if k < 2 {
            return Err(Error::DimensionMismatch(format!(
                "need at least 2 arms, got {k}"
            )));
        }
        if !tau.is_finite() {
            return Err(Error::InvalidConfig(format!("threshold {tau} is not finite")));
        }
        for (arm, &mu) in means.iter().enumerate() {
            if !mu.is_finite() {
                return Err(Error::InvalidProbability(format!("mean of arm {arm} is {mu}")));
            }
            if channel == RewardChannel::Bernoulli && !(0.0..=1.0).contains(&mu) {
                return Err(Error::InvalidProbability(format!(
                    "Bernoulli mean of arm {arm} is {mu}"
                )));
            }
            if mu == tau {
                return Err(Error::DegenerateArm { arm, tau });
            }
        }
        if let RewardChannel::Gaussian { scale } = channel {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "Gaussian scale must be positive, got {scale}"
                )));
            }
        }

        match &model {
            ComparisonModel::Linear { theta } => {
                check_theta(*theta)?;
                let (lo, hi) = min_max(&means);
                if theta * (hi - lo) > 1.0 + COMPLEMENT_TOLERANCE {
                    return Err(Error::LinkOutOfRange(format!(
                        "linear link needs theta * (max mu - min mu) <= 1, got {}",
                        theta * (hi - lo)
                    )));
                }
            }
            ComparisonModel::Btl { theta } => check_theta(*theta)?,
            ComparisonModel::Matrix { rows } => validate_matrix(rows, k)?,
        }

        let mut inst = ProblemInstance {
            means,
            tau,
            channel,
            model,
            borda: Vec::new(),
        };
        inst.borda = (0..k)
            .map(|i| {
                let total: f64 = (0..k).filter(|&j| j != i).map(|j| inst.preference(i, j)).sum();
                total / (k - 1) as f64
            })
            .collect();
        Ok(inst)
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn channel(&self) -> RewardChannel {
        self.channel
    }

    pub fn model(&self) -> &ComparisonModel {
        &self.model
    }

    /// `M_ij`, the probability that `i` wins a duel against `j`. The
    /// diagonal is reported as `1/2`.
    pub fn preference(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.5;
        }
        match &self.model {
            ComparisonModel::Matrix { rows } => rows[i][j],
            link => link
                .link(self.means[i] - self.means[j])
                .expect("link models always yield a value")
                .clamp(0.0, 1.0),
        }
    }

    /// All Borda scores `p_i`.
    pub fn borda_scores(&self) -> &[f64] {
        &self.borda
    }

    /// `p_i = (1/(K-1)) sum_{j != i} M_ij`.
    pub fn borda_score(&self, i: usize) -> Result<f64> {
        self.borda.get(i).copied().ok_or(Error::IndexOutOfRange {
            index: i,
            arms: self.num_arms(),
        })
    }

    pub fn is_positive(&self, i: usize) -> bool {
        self.means[i] >= self.tau
    }

    /// Ground-truth positive set, ascending.
    pub fn positive_set(&self) -> Vec<usize> {
        (0..self.num_arms()).filter(|&i| self.is_positive(i)).collect()
    }

    /// True iff every positive arm has a strictly larger Borda score than
    /// every negative arm. Vacuously true when one side is empty.
    pub fn validate_assumption(&self) -> bool {
        let mut min_pos = f64::INFINITY;
        let mut max_neg = f64::NEG_INFINITY;
        for (i, &p) in self.borda.iter().enumerate() {
            if self.is_positive(i) {
                min_pos = min_pos.min(p);
            } else {
                max_neg = max_neg.max(p);
            }
        }
        min_pos > max_neg
    }

    /// The instance with labels swapped: `mu -> 2 tau - mu`, `M -> M^T`.
    pub fn mirrored(&self) -> Result<Self> {
        let means = self.means.iter().map(|&mu| 2.0 * self.tau - mu).collect();
        let model = match &self.model {
            ComparisonModel::Matrix { rows } => {
                let k = rows.len();
                ComparisonModel::Matrix {
                    rows: (0..k).map(|i| (0..k).map(|j| rows[j][i]).collect()).collect(),
                }
            }
            other => other.clone(),
        };
        ProblemInstance::new(means, self.tau, self.channel, model)
    }

    /// Smallest off-diagonal `M_ij`.
    pub fn min_preference(&self) -> f64 {
        let k = self.num_arms();
        let mut lo = f64::INFINITY;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    lo = lo.min(self.preference(i, j));
                }
            }
        }
        lo
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.num_arms() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                arms: self.num_arms(),
            })
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 {
        Ok(())
    } else {
        Err(Error::LinkOutOfRange(format!("theta must be positive, got {theta}")))
    }
}

fn validate_matrix(rows: &[Vec<f64>], k: usize) -> Result<()> {
    if rows.len() != k || rows.iter().any(|r| r.len() != k) {
        return Err(Error::DimensionMismatch(format!(
            "preference matrix must be {k}x{k}"
        )));
    }
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let m = rows[i][j];
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::InvalidProbability(format!("M[{i}][{j}] = {m}")));
            }
            if (m + rows[j][i] - 1.0).abs() > COMPLEMENT_TOLERANCE {
                return Err(Error::InvalidProbability(format!(
                    "M[{i}][{j}] + M[{j}][{i}] = {} != 1",
                    m + rows[j][i]
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Exact tallies of the queries issued during one run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounters {
    pub pulls_per_arm: Vec<u64>,
    /// Duels where the arm was the algorithm's chosen (left) arm.
    pub duels_initiated_per_arm: Vec<u64>,
    /// Duels involving the arm on either side.
    pub duels_participated_per_arm: Vec<u64>,
    pub n_pull: u64,
    pub n_duel: u64,
}

impl QueryCounters {
    pub fn new(arms: usize) -> Self {
        QueryCounters {
            pulls_per_arm: vec![0; arms],
            duels_initiated_per_arm: vec![0; arms],
            duels_participated_per_arm: vec![0; arms],
            n_pull: 0,
            n_duel: 0,
        }
    }

    pub fn record_pull(&mut self, arm: usize) {
        self.pulls_per_arm[arm] += 1;
        self.n_pull += 1;
    }

    pub fn record_duel(&mut self, left: usize, right: usize) {
        self.duels_initiated_per_arm[left] += 1;
        self.duels_participated_per_arm[left] += 1;
        self.duels_participated_per_arm[right] += 1;
        self.n_duel += 1;
    }

    /// Checks the conservation laws between per-arm and total counts.
    pub fn is_consistent(&self) -> bool {
        self.n_pull == self.pulls_per_arm.iter().sum::<u64>()
            && self.n_duel == self.duels_initiated_per_arm.iter().sum::<u64>()
            && 2 * self.n_duel == self.duels_participated_per_arm.iter().sum::<u64>()
    }
}

/// The only door through which algorithms learn about an instance.
pub trait Oracle {
    fn num_arms(&self) -> usize;

    /// Sub-Gaussian parameter `R` of pull rewards. Known to the learner.
    fn noise_scale(&self) -> f64;

    /// One reward sample from `arm`.
    fn pull(&mut self, arm: usize) -> Result<f64>;

    /// `true` when `left` wins against `right`.
    fn duel(&mut self, left: usize, right: usize) -> Result<bool>;

    fn counters(&self) -> &QueryCounters;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    /// Rewards and duels drawn from the instance's distributions.
    Stochastic,
    /// Test double: pulls return `mu_i` exactly and duels return
    /// `p_i > p_j`.
    Noiseless,
}

/// One run's view of an instance: the oracle together with its counters and
/// its own noise stream.
#[derive(Debug)]
pub struct Session<'a> {
    instance: &'a ProblemInstance,
    counters: QueryCounters,
    rng: ChaCha8Rng,
    mode: OracleMode,
}

impl<'a> Session<'a> {
    pub fn new(instance: &'a ProblemInstance, rng: ChaCha8Rng) -> Self {
        Self::with_mode(instance, rng, OracleMode::Stochastic)
    }

    pub fn with_mode(instance: &'a ProblemInstance, rng: ChaCha8Rng, mode: OracleMode) -> Self {
        Session {
            instance,
            counters: QueryCounters::new(instance.num_arms()),
            rng,
            mode,
        }
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.instance
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn into_counters(self) -> QueryCounters {
        self.counters
    }
}

impl Oracle for Session<'_> {
    fn num_arms(&self) -> usize {
        self.instance.num_arms()
    }

    fn noise_scale(&self) -> f64 {
        self.instance.channel.sub_gaussian_scale()
    }

    fn pull(&mut self, arm: usize) -> Result<f64> {
        self.instance.check_index(arm)?;
        let mu = self.instance.means[arm];
        let reward = match (self.mode, self.instance.channel) {
            (OracleMode::Noiseless, _) => mu,
            (OracleMode::Stochastic, RewardChannel::Bernoulli) => {
                if self.rng.random_bool(mu) {
                    1.0
                } else {
                    0.0
                }
            }
            (OracleMode::Stochastic, RewardChannel::Gaussian { scale }) => Normal::new(mu, scale)
                .expect("scale validated at construction")
                .sample(&mut self.rng),
        };
        self.counters.record_pull(arm);
        Ok(reward)
    }

    fn duel(&mut self, left: usize, right: usize) -> Result<bool> {
        self.instance.check_index(left)?;
        self.instance.check_index(right)?;
        if left == right {
            return Err(Error::SelfDuel(left));
        }
        let win = match self.mode {
            OracleMode::Noiseless => self.instance.borda[left] > self.instance.borda[right],
            OracleMode::Stochastic => self.rng.random_bool(self.instance.preference(left, right)),
        };
        self.counters.record_duel(left, right);
        Ok(win)
    }

    fn counters(&self) -> &QueryCounters {
        &self.counters
    }
}
