//! Synthetic setups, graded-item data and link-parameter fitting.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::environment::{ComparisonModel, ProblemInstance, RewardChannel};
use crate::error::{Error, Result};

/// Threshold used by every generated setup.
pub const TAU: f64 = 0.5;
/// Number of difficulty levels in graded-item data.
pub const LEVELS: i64 = 12;
const DEFAULT_EXPONENTIAL_DELTA: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Setup {
    /// `mu_i = 1/(l+3-i)` for `i <= l`, else `1 - 1/(i-l+2)`, with `K = 2l`.
    Harmonic,
    /// Gaps drawn from an exponential law of rate `4 ln(4l/delta)`.
    Exponential {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    /// 0.1 blocks around four middle arms at 0.35, 0.45, 0.55, 0.65.
    Threegroups,
    Uniform,
    /// Uniform over `{1/13, ..., 12/13}`.
    Twelvegroups,
    /// Mostly the extreme levels `1/13`, `12/13`, rarely `6/13`, `7/13`.
    Fourgroups,
    /// Graded items from a CSV file, `mu = level / 13`.
    Fromfile { path: PathBuf },
}

impl Setup {
    pub fn name(&self) -> &'static str {
        match self {
            Setup::Harmonic => "harmonic",
            Setup::Exponential { .. } => "exponential",
            Setup::Threegroups => "threegroups",
            Setup::Uniform => "uniform",
            Setup::Twelvegroups => "twelvegroups",
            Setup::Fourgroups => "fourgroups",
            Setup::Fromfile { .. } => "fromfile",
        }
    }

    /// Parses a setup name; `fromfile` needs a path and is not accepted.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "harmonic" => Setup::Harmonic,
            "exponential" => Setup::Exponential { delta: None },
            "threegroups" => Setup::Threegroups,
            "uniform" => Setup::Uniform,
            "twelvegroups" => Setup::Twelvegroups,
            "fourgroups" => Setup::Fourgroups,
            other => return Err(Error::InvalidConfig(format!("unknown setup `{other}`"))),
        })
    }

    /// Whether the means are drawn afresh for every repetition.
    pub fn is_random(&self) -> bool {
        !matches!(self, Setup::Harmonic | Setup::Threegroups)
    }
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn half_of(k: usize, min_half: usize, setup: &str) -> Result<usize> {
    if k % 2 != 0 || k / 2 < min_half {
        return Err(Error::BadK(format!(
            "{setup} needs an even K of at least {}, got {k}",
            2 * min_half
        )));
    }
    Ok(k / 2)
}

pub fn harmonic_means(k: usize) -> Result<Vec<f64>> {
    let l = half_of(k, 1, "harmonic")?;
    Ok((1..=k)
        .map(|i| {
            if i <= l {
                1.0 / (l + 3 - i) as f64
            } else {
                1.0 - 1.0 / (i + 2 - l) as f64
            }
        })
        .collect())
}

pub fn threegroups_means(k: usize) -> Result<Vec<f64>> {
    let l = half_of(k, 3, "threegroups")?;
    let middle = [0.35, 0.45, 0.55, 0.65];
    Ok((1..=k)
        .map(|i| {
            if i + 2 <= l {
                0.1
            } else if i <= l + 2 {
                middle[i + 1 - l]
            } else {
                0.9
            }
        })
        .collect())
}

/// Rate of the exponential gap law for `K = 2l`.
pub fn exponential_rate(l: usize, delta: f64) -> f64 {
    4.0 * (4.0 * l as f64 / delta).ln()
}

/// Draws the means of a setup with `k` arms. Deterministic setups ignore
/// `rng`.
pub fn gen_means<R: Rng + ?Sized>(setup: &Setup, k: usize, rng: &mut R) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::BadK("K must be positive".into()));
    }
    match setup {
        Setup::Harmonic => harmonic_means(k),
        Setup::Threegroups => threegroups_means(k),
        Setup::Exponential { delta } => {
            let l = half_of(k, 1, "exponential")?;
            let delta = delta.unwrap_or(DEFAULT_EXPONENTIAL_DELTA);
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::InvalidProbability(format!("delta = {delta}")));
            }
            let law = Exp::new(exponential_rate(l, delta))
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok((0..k)
                .map(|i| {
                    let x = loop {
                        let x: f64 = law.sample(rng);
                        if x <= 1.0 {
                            break x;
                        }
                    };
                    if i < l {
                        x
                    } else {
                        1.0 - x
                    }
                })
                .collect())
        }
        Setup::Uniform => Ok((0..k)
            .map(|_| loop {
                let mu: f64 = rng.random();
                if mu != TAU {
                    break mu;
                }
            })
            .collect()),
        Setup::Twelvegroups => Ok((0..k)
            .map(|_| rng.random_range(1..=12) as f64 / 13.0)
            .collect()),
        Setup::Fourgroups => Ok((0..k)
            .map(|_| {
                let level = match rng.random_range(0..12) {
                    0..=4 => 1,
                    5..=9 => 12,
                    10 => 6,
                    _ => 7,
                };
                level as f64 / 13.0
            })
            .collect()),
        Setup::Fromfile { path } => {
            let data = load_graded_items(path)?;
            data.subsample_means(Some(k), rng)
        }
    }
}

/// Builds a problem instance for a setup at threshold 1/2.
pub fn build_instance<R: Rng + ?Sized>(
    setup: &Setup,
    k: usize,
    channel: RewardChannel,
    model: ComparisonModel,
    rng: &mut R,
) -> Result<ProblemInstance> {
    ProblemInstance::new(gen_means(setup, k, rng)?, TAU, channel, model)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedItem {
    pub item_id: String,
    pub level: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GradedItemData {
    pub items: Vec<GradedItem>,
}

impl GradedItemData {
    pub fn new(items: Vec<GradedItem>) -> Result<Self> {
        let mut seen = HashSet::new();
        for item in &items {
            if !(1..=LEVELS).contains(&item.level) {
                return Err(Error::LevelOutOfRange {
                    item: item.item_id.clone(),
                    level: item.level,
                });
            }
            if !seen.insert(item.item_id.as_str()) {
                return Err(Error::Parse(format!("duplicate item id `{}`", item.item_id)));
            }
        }
        Ok(GradedItemData { items })
    }

    /// `level / 13` per item.
    pub fn means(&self) -> Vec<f64> {
        self.items.iter().map(|it| it.level as f64 / 13.0).collect()
    }

    /// Means of a uniform subsample of `k` items (file order kept), or of
    /// all items when `k` is `None`.
    pub fn subsample_means<R: Rng + ?Sized>(&self, k: Option<usize>, rng: &mut R) -> Result<Vec<f64>> {
        let all = self.means();
        let Some(k) = k else { return Ok(all) };
        if k > all.len() {
            return Err(Error::SubsampleTooLarge {
                requested: k,
                available: all.len(),
            });
        }
        let mut picked = sample(rng, all.len(), k).into_vec();
        picked.sort_unstable();
        Ok(picked.into_iter().map(|i| all[i]).collect())
    }

    pub fn to_instance<R: Rng + ?Sized>(
        &self,
        subsample: Option<usize>,
        model: ComparisonModel,
        rng: &mut R,
    ) -> Result<ProblemInstance> {
        let means = self.subsample_means(subsample, rng)?;
        ProblemInstance::new(means, TAU, RewardChannel::Bernoulli, model)
    }
}

/// Reads a CSV with header `item_id,level`.
pub fn load_graded_items(path: impl AsRef<Path>) -> Result<GradedItemData> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    parse_graded_items(&mut reader)
}

pub fn parse_graded_items<R: std::io::Read>(reader: &mut csv::Reader<R>) -> Result<GradedItemData> {
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["item_id", "level"] {
        return Err(Error::Parse(format!("expected header `item_id,level`, got `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut items = Vec::new();
    for row in reader.records() {
        let row = row?;
        let level = row[1]
            .trim()
            .parse::<i64>()
            .map_err(|e| Error::Parse(format!("level `{}`: {e}", &row[1])))?;
        items.push(GradedItem {
            item_id: row[0].to_string(),
            level,
        });
    }
    GradedItemData::new(items)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkFamily {
    Linear,
    Btl,
}

impl LinkFamily {
    pub fn model(self, theta: f64) -> ComparisonModel {
        match self {
            LinkFamily::Linear => ComparisonModel::Linear { theta },
            LinkFamily::Btl => ComparisonModel::Btl { theta },
        }
    }
}

/// Aggregated outcomes of duels between `i` and `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCount {
    pub i: usize,
    pub j: usize,
    pub wins_i: u64,
    pub totals: u64,
}

pub const FIT_LOWER: f64 = 1e-6;
pub const FIT_WIDTH: f64 = 1e-6;
pub const BTL_THETA_MAX: f64 = 50.0;
const PROB_CLAMP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaFit {
    pub theta: f64,
    pub loglik: f64,
    pub null_loglik: f64,
    /// Likelihood-ratio statistic `2 (loglik - null_loglik)`.
    pub lr_stat: f64,
    pub lr_pvalue: f64,
    /// Inverse square root of the observed information at the optimum.
    pub std_error: Option<f64>,
    pub bracket: (f64, f64),
    /// Bracket width after each golden-section step.
    #[serde(skip)]
    pub widths: Vec<f64>,
    /// Best log-likelihood seen after each step.
    #[serde(skip)]
    pub best_logliks: Vec<f64>,
}

fn log_likelihood(pairs: &[PairCount], means: &[f64], family: LinkFamily, theta: f64) -> f64 {
    let model = family.model(theta);
    pairs
        .iter()
        .map(|pc| {
            let m = model
                .link(means[pc.i] - means[pc.j])
                .expect("link families")
                .clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            let losses = (pc.totals - pc.wins_i) as f64;
            pc.wins_i as f64 * m.ln() + losses * (1.0 - m).ln()
        })
        .sum()
}

/// Maximum-likelihood link parameter by golden-section search on
/// `[1e-6, theta_max]`, with a chi-square(1) likelihood-ratio test against
/// fair coins.
pub fn fit_theta(pairs: &[PairCount], means: &[f64], family: LinkFamily) -> Result<ThetaFit> {
    if pairs.iter().all(|pc| pc.totals == 0) {
        return Err(Error::NoComparisons);
    }
    for pc in pairs {
        for idx in [pc.i, pc.j] {
            if idx >= means.len() {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    arms: means.len(),
                });
            }
        }
        if pc.i == pc.j {
            return Err(Error::SelfDuel(pc.i));
        }
        if pc.wins_i > pc.totals || pc.totals == 0 {
            return Err(Error::InvalidConfig(format!(
                "pair ({}, {}): {} wins of {} comparisons",
                pc.i, pc.j, pc.wins_i, pc.totals
            )));
        }
    }
    if means.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFiniteLikelihood("means must be finite".into()));
    }
    let upper = match family {
        LinkFamily::Btl => BTL_THETA_MAX,
        LinkFamily::Linear => {
            let (lo, hi) = crate::environment::min_max(means);
            if hi > lo {
                1.0 / (hi - lo)
            } else {
                1.0
            }
        }
    };
    let f = |theta: f64| log_likelihood(pairs, means, family, theta);

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (FIT_LOWER, upper);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut widths = Vec::new();
    let mut best_logliks = Vec::new();
    let mut best = f1.max(f2);
    while b - a > FIT_WIDTH {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
        best = best.max(f1).max(f2);
        widths.push(b - a);
        best_logliks.push(best);
    }
    let (theta, loglik) = [(x1, f1), (x2, f2), ((a + b) / 2.0, f((a + b) / 2.0))]
        .into_iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, (x, v)| if v > acc.1 { (x, v) } else { acc });
    if !loglik.is_finite() {
        return Err(Error::NonFiniteLikelihood(format!("log-likelihood {loglik}")));
    }
    let null_loglik: f64 = pairs.iter().map(|pc| pc.totals as f64 * 0.5f64.ln()).sum();
    let lr_stat = (2.0 * (loglik - null_loglik)).max(0.0);
    let lr_pvalue = erfc((lr_stat / 2.0).sqrt());

    let h = 1e-4 * theta.max(1e-2);
    let curvature = (f(theta + h) - 2.0 * loglik + f((theta - h).max(FIT_LOWER / 2.0))) / (h * h);
    let std_error = (curvature < 0.0).then(|| 1.0 / (-curvature).sqrt());

    Ok(ThetaFit {
        theta,
        loglik,
        null_loglik,
        lr_stat,
        lr_pvalue,
        std_error,
        bracket: (FIT_LOWER, upper),
        widths,
        best_logliks,
    })
}

/// Reads a comparisons CSV with header `i,j,wins_i,totals` (0-based arms).
pub fn load_pair_counts(path: impl AsRef<Path>) -> Result<Vec<PairCount>> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["i", "j", "wins_i", "totals"] {
        return Err(Error::Parse("expected header `i,j,wins_i,totals`".into()));
    }
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Simulates `n` duels between uniformly random distinct pairs and
/// aggregates them per ordered pair.
pub fn simulate_pair_counts<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    n: u64,
    rng: &mut R,
) -> Vec<PairCount> {
    let k = instance.num_arms();
    let mut wins = vec![0u64; k * k];
    let mut totals = vec![0u64; k * k];
    for _ in 0..n {
        let i = rng.random_range(0..k);
        let mut j = rng.random_range(0..k - 1);
        if j >= i {
            j += 1;
        }
        totals[i * k + j] += 1;
        if rng.random_bool(instance.preference(i, j)) {
            wins[i * k + j] += 1;
        }
    }
    (0..k * k)
        .filter(|&c| totals[c] > 0)
        .map(|c| PairCount {
            i: c / k,
            j: c % k,
            wins_i: wins[c],
            totals: totals[c],
        })
        .collect()
}
