//! Comparison methods: two pull-only labelers and a rank-everything-then-
//! search method.
//!
//! `borda_rank` is a plain successive-refinement Borda ranking. It stands in
//! for dedicated active-ranking algorithms and is reported under the
//! identifier `rankthensearch-borda`.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::Oracle;
use crate::error::{Error, Result};
use crate::outcome::{AlgorithmOutcome, BinarySearchTrace, CapFlag};
use crate::rank_search::{
    binary_search, check_delta, figure_out_label, DuelTally, DEFAULT_MAX_PULLS_PER_FOL,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub delta: f64,
    /// Multiplier on the CLUCB confidence radius.
    pub clucb_radius_scale: f64,
    /// Total pull cap for CLUCB.
    pub clucb_max_pulls: u64,
    /// Duel budget of the Borda ranking.
    pub duel_budget: u64,
    pub ranking_gamma0: f64,
    pub ranking_kappa: f64,
    pub max_pulls_per_fol: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            delta: 0.05,
            clucb_radius_scale: 1.0,
            clucb_max_pulls: 100_000_000,
            duel_budget: 1_000_000_000,
            ranking_gamma0: 0.25,
            ranking_kappa: 2.0,
            max_pulls_per_fol: DEFAULT_MAX_PULLS_PER_FOL,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        let positive = [self.clucb_radius_scale, self.ranking_gamma0, self.ranking_kappa - 1.0];
        if positive.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidConfig(
                "radius scale and ranking gamma0 must be positive, ranking kappa above 1".into(),
            ));
        }
        if self.duel_budget == 0 || self.clucb_max_pulls == 0 || self.max_pulls_per_fol == 0 {
            return Err(Error::InvalidConfig("budgets must be positive".into()));
        }
        Ok(())
    }
}

fn finish<O: Oracle + ?Sized>(
    oracle: &O,
    labels: Vec<bool>,
    start: Instant,
    rounds: usize,
    fol_calls: usize,
    flags: Vec<CapFlag>,
    binary_searches: Vec<BinarySearchTrace>,
) -> AlgorithmOutcome {
    AlgorithmOutcome {
        labels,
        counters: oracle.counters().clone(),
        rounds,
        fol_calls,
        flags,
        binary_searches,
        trace: Vec::new(),
        gamma0: None,
        wall_time: start.elapsed(),
    }
}

/// Figure-Out-Label on every arm at confidence `delta / K`.
pub fn simple_label<O: Oracle + ?Sized>(
    oracle: &mut O,
    tau: f64,
    config: &BaselineConfig,
) -> Result<AlgorithmOutcome> {
    config.validate()?;
    let start = Instant::now();
    let k = oracle.num_arms();
    let delta1 = config.delta / k as f64;
    let mut labels = Vec::with_capacity(k);
    let mut flags = Vec::new();
    for arm in 0..k {
        let fol = figure_out_label(oracle, arm, tau, delta1, config.max_pulls_per_fol)?;
        if fol.capped {
            flags.push(CapFlag::PullCap { arm });
        }
        labels.push(fol.label);
    }
    Ok(finish(oracle, labels, start, 0, k, flags, Vec::new()))
}

/// CLUCB specialised to thresholding.
///
/// After one pull per arm, at global step `t` (pulls so far) arm `i` has
/// radius `scale * R * sqrt(2 ln(4 K t^3 / delta) / T_i)`. Arms whose
/// interval still contains `tau` are ambiguous; the widest ambiguous arm
/// (lowest index on ties) is pulled until none is left.
pub fn clucb<O: Oracle + ?Sized>(
    oracle: &mut O,
    tau: f64,
    config: &BaselineConfig,
) -> Result<AlgorithmOutcome> {
    config.validate()?;
    let start = Instant::now();
    let k = oracle.num_arms();
    let scale = config.clucb_radius_scale * oracle.noise_scale();
    let mut sums = vec![0.0; k];
    let mut pulls = vec![0u64; k];
    for arm in 0..k {
        sums[arm] += oracle.pull(arm)?;
        pulls[arm] += 1;
    }
    let mut total = k as u64;
    let mut flags = Vec::new();
    loop {
        let t = total as f64;
        let log_term = (4.0 * k as f64 * t * t * t / config.delta).ln();
        let mut widest: Option<(usize, f64)> = None;
        for arm in 0..k {
            let n = pulls[arm] as f64;
            let radius = scale * (2.0 * log_term / n).sqrt();
            let mean = sums[arm] / n;
            let ambiguous = mean - radius <= tau && tau <= mean + radius;
            if ambiguous && widest.is_none_or(|(_, r)| radius > r) {
                widest = Some((arm, radius));
            }
        }
        let Some((arm, _)) = widest else { break };
        if total >= config.clucb_max_pulls {
            flags.push(CapFlag::PullCap { arm });
            break;
        }
        sums[arm] += oracle.pull(arm)?;
        pulls[arm] += 1;
        total += 1;
    }
    let labels = (0..k).map(|i| sums[i] / pulls[i] as f64 > tau).collect();
    Ok(finish(oracle, labels, start, 0, 0, flags, Vec::new()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BordaRanking {
    /// Arms in ascending order of estimated Borda score.
    pub order: Vec<usize>,
    pub estimates: Vec<f64>,
    pub rounds: usize,
    /// The duel budget ran out before every pair was resolved.
    pub exhausted: bool,
}

/// Successive-refinement Borda ranking.
///
/// In round `r`, with `gamma_r = gamma0 / kappa^r`, every unresolved arm is
/// dueled against uniform random opponents until it holds more than
/// `ln(8 K (r+1)^2 / delta) / gamma_r^2` comparisons, and its confidence
/// radius becomes `gamma_r`. Arms `i` and `j` are resolved once
/// `|p_i - p_j|` exceeds the sum of their radii (`2 gamma_r` when both are
/// current). Stops when every arm is resolved against every other, or when
/// the next sweep would exceed `budget` duels.
pub fn borda_rank<O: Oracle + ?Sized, R: Rng + ?Sized>(
    oracle: &mut O,
    delta: f64,
    gamma0: f64,
    kappa: f64,
    budget: u64,
    rng: &mut R,
) -> Result<BordaRanking> {
    check_delta(delta)?;
    let k = oracle.num_arms();
    let mut tally = DuelTally::new(k);
    let mut radius = vec![f64::INFINITY; k];
    let mut active: Vec<usize> = (0..k).collect();
    let mut round = 0usize;
    let mut exhausted = false;
    let start_duels = oracle.counters().n_duel;

    while !active.is_empty() {
        let gamma = gamma0 / kappa.powi(round as i32);
        let r1 = (round + 1) as f64;
        let threshold = (8.0 * k as f64 * r1 * r1 / delta).ln() / (gamma * gamma);
        loop {
            let pending: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&i| tally.comparisons[i] as f64 <= threshold)
                .collect();
            if pending.is_empty() {
                break;
            }
            let used = oracle.counters().n_duel - start_duels;
            if used + pending.len() as u64 > budget {
                exhausted = true;
                break;
            }
            for i in pending {
                tally.duel_random(oracle, i, rng)?;
            }
        }
        if exhausted {
            break;
        }
        for &i in &active {
            radius[i] = gamma;
        }

        let est: Vec<f64> = (0..k).map(|i| tally.estimate(i)).collect();
        active = (0..k)
            .filter(|&i| {
                (0..k).any(|j| j != i && (est[i] - est[j]).abs() <= radius[i] + radius[j])
            })
            .collect();
        round += 1;
    }

    let estimates: Vec<f64> = (0..k).map(|i| tally.estimate(i)).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| estimates[a].total_cmp(&estimates[b]).then(a.cmp(&b)));
    Ok(BordaRanking {
        order,
        estimates,
        rounds: round,
        exhausted,
    })
}

/// Ranks all arms with [`borda_rank`] at `delta / 2`, then runs one binary
/// search at `delta / 2`. Arms before the boundary are negative, the rest
/// positive.
pub fn rank_then_search<O: Oracle + ?Sized, R: Rng + ?Sized>(
    oracle: &mut O,
    tau: f64,
    config: &BaselineConfig,
    rng: &mut R,
) -> Result<AlgorithmOutcome> {
    config.validate()?;
    let start = Instant::now();
    let k = oracle.num_arms();
    let half = config.delta / 2.0;
    let ranking = borda_rank(
        oracle,
        half,
        config.ranking_gamma0,
        config.ranking_kappa,
        config.duel_budget,
        rng,
    )?;
    let mut flags = Vec::new();
    if ranking.exhausted {
        flags.push(CapFlag::DuelBudget);
    }
    let bs = binary_search(&ranking.order, tau, half, oracle, config.max_pulls_per_fol)?;
    flags.extend(bs.capped_arms.iter().map(|&arm| CapFlag::PullCap { arm }));
    let mut labels = vec![false; k];
    for &arm in &ranking.order[bs.boundary..] {
        labels[arm] = true;
    }
    let trace = BinarySearchTrace {
        len: k,
        probes: bs.probed.len(),
    };
    Ok(finish(
        oracle,
        labels,
        start,
        ranking.rounds,
        bs.probed.len(),
        flags,
        vec![trace],
    ))
}
