//! Rank-Search and its subroutines.
//!
//! Rank-Search alternates between ranking the working set by empirical
//! Borda scores (duels) and a binary search over that ranking that labels a
//! few arms with pulls. Arms separated from the binary-search boundary by
//! more than `2 gamma_t` in estimated score inherit the boundary's label
//! for free. The confidence level `gamma_t` shrinks by `kappa` each round.
//!
//! Opponents are drawn uniformly from the other `K - 1` arms, which makes
//! `wins / comparisons` an unbiased estimate of the Borda score.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::Oracle;
use crate::error::{Error, Result};
use crate::outcome::{ceil_log2, AlgorithmOutcome, BinarySearchTrace, CapFlag, RoundTrace};

pub const DEFAULT_MAX_PULLS_PER_FOL: u64 = 10_000_000;
pub const DEFAULT_MAX_TOTAL_DUELS: u64 = 1_000_000_000;

/// Starting value and shrink factor of the adaptive `gamma_0` search.
pub const ADAPTIVE_GAMMA0_START: f64 = 0.1;
pub const ADAPTIVE_GAMMA0_SHRINK: f64 = 1.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma0 {
    Fixed(f64),
    Adaptive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RsConfig {
    pub delta: f64,
    pub gamma0: Gamma0,
    pub kappa: f64,
    pub max_pulls_per_fol: u64,
    pub max_total_duels: u64,
    /// Keep a [`RoundTrace`] per round in the outcome.
    pub record_trace: bool,
}

impl Default for RsConfig {
    fn default() -> Self {
        RsConfig {
            delta: 0.05,
            gamma0: Gamma0::Adaptive,
            kappa: 2.0,
            max_pulls_per_fol: DEFAULT_MAX_PULLS_PER_FOL,
            max_total_duels: DEFAULT_MAX_TOTAL_DUELS,
            record_trace: false,
        }
    }
}

impl RsConfig {
    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if !(self.kappa > 1.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidConfig(format!("kappa must exceed 1, got {}", self.kappa)));
        }
        if let Gamma0::Fixed(g) = self.gamma0 {
            if !(g > 0.0 && g < 0.5) {
                return Err(Error::InvalidConfig(format!("gamma0 must lie in (0, 1/2), got {g}")));
            }
        }
        if self.max_pulls_per_fol == 0 || self.max_total_duels == 0 {
            return Err(Error::InvalidConfig("caps must be positive".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("delta must lie in (0, 1), got {delta}")))
    }
}

/// Result of one Figure-Out-Label call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FolOutcome {
    pub label: bool,
    pub pulls: u64,
    /// The pull cap stopped the call before its confidence rule did.
    pub capped: bool,
}

/// Labels one arm against `tau` with confidence `1 - delta1`.
///
/// Pulls follow a doubling schedule: at inner round `t` the arm is pulled
/// until more than `2^t` samples are held, then the radius
/// `R sqrt(2 ln(4 (t+1)^2 / delta1) / n)` is compared with `|mean - tau|`.
pub fn figure_out_label<O: Oracle + ?Sized>(
    oracle: &mut O,
    arm: usize,
    tau: f64,
    delta1: f64,
    max_pulls: u64,
) -> Result<FolOutcome> {
    check_delta(delta1)?;
    let scale = oracle.noise_scale();
    let mut n: u64 = 0;
    let mut sum = 0.0;
    let mut t: u32 = 0;
    loop {
        let target = 1u64.checked_shl(t).unwrap_or(u64::MAX);
        while n <= target {
            if n >= max_pulls {
                return Ok(FolOutcome {
                    label: n > 0 && sum / n as f64 > tau,
                    pulls: n,
                    capped: true,
                });
            }
            sum += oracle.pull(arm)?;
            n += 1;
        }
        let mean = sum / n as f64;
        let tf = f64::from(t) + 1.0;
        let radius = scale * (2.0 * (4.0 * tf * tf / delta1).ln() / n as f64).sqrt();
        t += 1;
        if (mean - tau).abs() > radius {
            return Ok(FolOutcome {
                label: mean > tau,
                pulls: n,
                capped: false,
            });
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinarySearchOutcome {
    /// Number of leading arms of the sequence judged negative.
    pub boundary: usize,
    /// Probed arms with their Figure-Out-Label labels, in probe order.
    pub probed: Vec<(usize, bool)>,
    pub capped_arms: Vec<usize>,
}

/// Bisection over a sequence assumed to be sorted by score, ascending.
///
/// Every probe runs Figure-Out-Label at confidence
/// `delta0 / ceil(log2 max(|S|, 2))`. A positive probe moves the upper end
/// left, a negative one moves the lower end right.
pub fn binary_search<O: Oracle + ?Sized>(
    sequence: &[usize],
    tau: f64,
    delta0: f64,
    oracle: &mut O,
    max_pulls: u64,
) -> Result<BinarySearchOutcome> {
    if sequence.is_empty() {
        return Err(Error::InvalidConfig("binary search over an empty sequence".into()));
    }
    check_delta(delta0)?;
    let per_probe = delta0 / ceil_log2(sequence.len().max(2)) as f64;
    let mut lo = 0usize;
    let mut hi = sequence.len();
    let mut probed = Vec::new();
    let mut capped_arms = Vec::new();
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        let arm = sequence[mid - 1];
        let fol = figure_out_label(oracle, arm, tau, per_probe, max_pulls)?;
        if fol.capped {
            capped_arms.push(arm);
        }
        probed.push((arm, fol.label));
        if fol.label {
            hi = mid - 1;
        } else {
            lo = mid;
        }
    }
    Ok(BinarySearchOutcome {
        boundary: lo,
        probed,
        capped_arms,
    })
}

/// Per-arm comparison and win counts shared by the ranking phases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DuelTally {
    pub comparisons: Vec<u64>,
    pub wins: Vec<u64>,
}

impl DuelTally {
    pub fn new(arms: usize) -> Self {
        DuelTally {
            comparisons: vec![0; arms],
            wins: vec![0; arms],
        }
    }

    /// Empirical Borda score; `1/2` before any comparison.
    pub fn estimate(&self, arm: usize) -> f64 {
        match self.comparisons[arm] {
            0 => 0.5,
            b => self.wins[arm] as f64 / b as f64,
        }
    }

    /// Duels `arm` against an opponent drawn uniformly from the other arms.
    pub fn duel_random<O: Oracle + ?Sized, R: Rng + ?Sized>(
        &mut self,
        oracle: &mut O,
        arm: usize,
        rng: &mut R,
    ) -> Result<()> {
        let k = self.comparisons.len();
        let mut opponent = rng.random_range(0..k - 1);
        if opponent >= arm {
            opponent += 1;
        }
        if oracle.duel(arm, opponent)? {
            self.wins[arm] += 1;
        }
        self.comparisons[arm] += 1;
        Ok(())
    }
}

/// `ln(8 |S| (t+1)^2 / delta) / gamma^2`.
pub fn duel_threshold(set_len: usize, round: usize, delta: f64, gamma: f64) -> f64 {
    let t1 = (round + 1) as f64;
    (8.0 * set_len as f64 * t1 * t1 / delta).ln() / (gamma * gamma)
}

/// Sweeps the working set, one random duel per arm per sweep, until every
/// arm holds more than `threshold` comparisons. Fails before a sweep that
/// would push the oracle past `max_total_duels`.
fn duel_until<O: Oracle + ?Sized, R: Rng + ?Sized>(
    oracle: &mut O,
    tally: &mut DuelTally,
    set: &[usize],
    threshold: f64,
    max_total_duels: u64,
    rng: &mut R,
) -> Result<()> {
    while set.iter().any(|&i| tally.comparisons[i] as f64 <= threshold) {
        if oracle.counters().n_duel + set.len() as u64 > max_total_duels {
            return Err(Error::DuelCapExceeded(max_total_duels));
        }
        for &i in set {
            tally.duel_random(oracle, i, rng)?;
        }
    }
    Ok(())
}

/// Adaptive choice of `gamma_0`: starting at `0.1`, duel every arm up to
/// the round-zero budget and divide `gamma_0` by `1.1` until the spread of
/// estimated scores reaches `2 gamma_0`. Counts accumulate in `tally`.
pub fn init_gamma0<O: Oracle + ?Sized, R: Rng + ?Sized>(
    oracle: &mut O,
    delta: f64,
    tally: &mut DuelTally,
    max_total_duels: u64,
    rng: &mut R,
) -> Result<f64> {
    check_delta(delta)?;
    let all: Vec<usize> = (0..oracle.num_arms()).collect();
    let mut gamma = ADAPTIVE_GAMMA0_START;
    loop {
        let threshold = duel_threshold(all.len(), 0, delta, gamma);
        duel_until(oracle, tally, &all, threshold, max_total_duels, rng)?;
        let (lo, hi) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let p = tally.estimate(i);
            (lo.min(p), hi.max(p))
        });
        if hi - lo >= 2.0 * gamma {
            return Ok(gamma);
        }
        gamma /= ADAPTIVE_GAMMA0_SHRINK;
    }
}

struct Labels {
    values: Vec<Option<bool>>,
}

impl Labels {
    fn set(&mut self, arm: usize, label: bool) {
        assert!(
            self.values[arm].is_none(),
            "arm {arm} labelled twice"
        );
        self.values[arm] = Some(label);
    }
}

/// Cut used to label leftovers when the duel cap ends a run early.
#[derive(Clone, Copy)]
struct Fallback {
    threshold: f64,
    inclusive: bool,
}

/// Runs Rank-Search to completion.
pub fn rank_search<O: Oracle + ?Sized, R: Rng + ?Sized>(
    oracle: &mut O,
    tau: f64,
    config: &RsConfig,
    rng: &mut R,
) -> Result<AlgorithmOutcome> {
    config.validate()?;
    let start = Instant::now();
    let k = oracle.num_arms();
    if k < 2 {
        return Err(Error::DimensionMismatch(format!("need at least 2 arms, got {k}")));
    }
    let delta = config.delta;
    let mut tally = DuelTally::new(k);
    let mut labels = Labels { values: vec![None; k] };
    let mut flags = Vec::new();
    let mut searches = Vec::new();
    let mut trace = Vec::new();
    let mut fol_calls = 0usize;
    let mut set: Vec<usize> = (0..k).collect();
    let mut fallback = Fallback {
        threshold: 0.5,
        inclusive: false,
    };

    let gamma0 = match config.gamma0 {
        Gamma0::Fixed(g) => Some(g),
        Gamma0::Adaptive => {
            match init_gamma0(oracle, delta, &mut tally, config.max_total_duels, rng) {
                Ok(g) => Some(g),
                Err(Error::DuelCapExceeded(_)) => None,
                Err(e) => return Err(e),
            }
        }
    };

    let mut round = 0usize;
    if let Some(mut gamma) = gamma0 {
        while !set.is_empty() {
            let threshold = duel_threshold(set.len(), round, delta, gamma);
            match duel_until(oracle, &mut tally, &set, threshold, config.max_total_duels, rng) {
                Ok(()) => {}
                Err(Error::DuelCapExceeded(_)) => break,
                Err(e) => return Err(e),
            }

            let mut ranked: Vec<(usize, f64)> = set.iter().map(|&i| (i, tally.estimate(i))).collect();
            ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let order: Vec<usize> = ranked.iter().map(|&(i, _)| i).collect();

            let t1 = (round + 1) as f64;
            let bs = binary_search(
                &order,
                tau,
                delta / (4.0 * t1 * t1),
                oracle,
                config.max_pulls_per_fol,
            )?;
            fol_calls += bs.probed.len();
            searches.push(BinarySearchTrace {
                len: order.len(),
                probes: bs.probed.len(),
            });
            flags.extend(bs.capped_arms.iter().map(|&arm| CapFlag::PullCap { arm }));

            let mut removed = vec![false; k];
            for &(arm, label) in &bs.probed {
                labels.set(arm, label);
                removed[arm] = true;
            }

            let b = bs.boundary;
            let mut inferred_positive = Vec::new();
            let mut inferred_negative = Vec::new();
            if b < ranked.len() {
                let anchor = ranked[b].1;
                for &(arm, p) in &ranked {
                    if !removed[arm] && p - anchor > 2.0 * gamma {
                        inferred_positive.push(arm);
                    }
                }
            }
            if b > 0 {
                let anchor = ranked[b - 1].1;
                for &(arm, p) in &ranked {
                    if !removed[arm] && p - anchor < -2.0 * gamma {
                        inferred_negative.push(arm);
                    }
                }
            }
            for &arm in &inferred_positive {
                labels.set(arm, true);
                removed[arm] = true;
            }
            for &arm in &inferred_negative {
                labels.set(arm, false);
                removed[arm] = true;
            }

            fallback = match (b > 0, b < ranked.len()) {
                (true, true) => Fallback {
                    threshold: (ranked[b - 1].1 + ranked[b].1) / 2.0,
                    inclusive: false,
                },
                (false, _) => Fallback {
                    threshold: ranked[0].1,
                    inclusive: true,
                },
                (true, false) => Fallback {
                    threshold: ranked[b - 1].1,
                    inclusive: false,
                },
            };

            if config.record_trace {
                trace.push(RoundTrace {
                    round,
                    gamma,
                    ranked,
                    boundary: b,
                    probed: bs.probed,
                    inferred_positive,
                    inferred_negative,
                });
            }

            set.retain(|&arm| !removed[arm]);
            gamma /= config.kappa;
            round += 1;
        }
    }

    if !set.is_empty() {
        flags.push(CapFlag::DuelCap);
        for &arm in &set {
            let p = tally.estimate(arm);
            let label = if fallback.inclusive {
                p >= fallback.threshold
            } else {
                p > fallback.threshold
            };
            labels.set(arm, label);
        }
    }

    Ok(AlgorithmOutcome {
        labels: labels
            .values
            .into_iter()
            .map(|y| y.expect("every arm is labelled at termination"))
            .collect(),
        counters: oracle.counters().clone(),
        rounds: round,
        fol_calls,
        flags,
        binary_searches: searches,
        trace,
        gamma0,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{
        ComparisonModel, OracleMode, ProblemInstance, QueryCounters, RewardChannel, Session,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(means: Vec<f64>) -> ProblemInstance {
        ProblemInstance::new(means, 0.5, RewardChannel::Bernoulli, ComparisonModel::Linear { theta: 1.0 })
            .unwrap()
    }

    /// Hand-stepped doubling schedule for a noiseless reward at distance
    /// `gap` from the threshold with R = 0.5. Sample counts after inner
    /// round t are 2, 3, 5, 9, 17, ...
    fn hand_stepped_pulls(gap: f64, delta1: f64) -> u64 {
        let mut n = 0u64;
        for t in 0u32.. {
            n = if t == 0 { 2 } else { 2u64.pow(t) + 1 };
            let gamma = 0.5 * (2.0 * (4.0 * f64::from(t + 1).powi(2) / delta1).ln() / n as f64).sqrt();
            if gap > gamma {
                break;
            }
        }
        n
    }

    #[test]
    fn fol_noiseless_pull_count() {
        assert_eq!(hand_stepped_pulls(0.5, 0.05), 17);
        let inst = instance(vec![1.0, 0.0]);
        let mut s = Session::with_mode(&inst, ChaCha8Rng::seed_from_u64(0), OracleMode::Noiseless);
        let up = figure_out_label(&mut s, 0, 0.5, 0.05, u64::MAX).unwrap();
        assert_eq!(up, FolOutcome { label: true, pulls: 17, capped: false });
        let down = figure_out_label(&mut s, 1, 0.5, 0.05, u64::MAX).unwrap();
        assert_eq!(down, FolOutcome { label: false, pulls: 17, capped: false });
        assert_eq!(s.counters().n_pull, 34);
    }

    #[test]
    fn fol_pull_cap_is_flagged() {
        let inst = instance(vec![0.5001, 0.1]);
        let mut s = Session::new(&inst, ChaCha8Rng::seed_from_u64(0));
        let out = figure_out_label(&mut s, 0, 0.5, 0.05, 1000).unwrap();
        assert!(out.capped);
        assert_eq!(out.pulls, 1000);
    }

    #[test]
    fn fol_error_rate_within_delta() {
        let inst = instance(vec![0.9, 0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let runs = 1000;
        let mut wrong = 0;
        for _ in 0..runs {
            let mut s = Session::new(&inst, ChaCha8Rng::seed_from_u64(rng.random()));
            if !figure_out_label(&mut s, 0, 0.5, 0.01, u64::MAX).unwrap().label {
                wrong += 1;
            }
        }
        // 1% target plus three binomial standard deviations.
        let bound = 0.01 * runs as f64 + 3.0 * (runs as f64 * 0.01 * 0.99).sqrt();
        assert!((wrong as f64) <= bound, "{wrong} wrong labels");
    }

    fn noiseless_bs(means: Vec<f64>) -> (BinarySearchOutcome, usize) {
        let inst = instance(means);
        let mut s = Session::with_mode(&inst, ChaCha8Rng::seed_from_u64(0), OracleMode::Noiseless);
        let seq: Vec<usize> = (0..inst.num_arms()).collect();
        let out = binary_search(&seq, 0.5, 0.05, &mut s, u64::MAX).unwrap();
        (out, inst.num_arms())
    }

    #[test]
    fn binary_search_sorted_sequence() {
        // 3 negatives then 5 positives. Probes: b=4 (+), b=2 (-), b=3 (-).
        let (out, n) = noiseless_bs(vec![0.1, 0.2, 0.3, 0.6, 0.7, 0.8, 0.9, 0.95]);
        assert_eq!(out.boundary, 3);
        assert_eq!(out.probed, vec![(3, true), (1, false), (2, false)]);
        assert!(out.probed.len() <= ceil_log2(n) + 1);
    }

    #[test]
    fn binary_search_one_sided() {
        let (pos, _) = noiseless_bs(vec![0.6, 0.7, 0.8, 0.9, 0.95]);
        assert_eq!(pos.boundary, 0);
        assert_eq!(pos.probed.last(), Some(&(0, true)));
        let (neg, n) = noiseless_bs(vec![0.1, 0.2, 0.3, 0.4, 0.45]);
        assert_eq!(neg.boundary, n);
    }

    #[test]
    fn binary_search_brackets_boundary_on_misranked_sequence() {
        let inst = instance(vec![0.1, 0.2, 0.3, 0.6, 0.7, 0.8, 0.9]);
        let seq = vec![0, 4, 1, 3, 2, 5, 6];
        let mut s = Session::with_mode(&inst, ChaCha8Rng::seed_from_u64(0), OracleMode::Noiseless);
        let out = binary_search(&seq, 0.5, 0.05, &mut s, u64::MAX).unwrap();
        let b = out.boundary;
        if b < seq.len() {
            assert!(inst.is_positive(seq[b]));
        }
        if b > 0 {
            assert!(!inst.is_positive(seq[b - 1]));
        }
    }

    fn noiseless_rs(means: Vec<f64>, seed: u64) -> AlgorithmOutcome {
        let inst = instance(means);
        let mut s = Session::with_mode(&inst, ChaCha8Rng::seed_from_u64(0), OracleMode::Noiseless);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rank_search(&mut s, 0.5, &RsConfig::default(), &mut rng).unwrap()
    }

    #[test]
    fn rank_search_noiseless_four_arms() {
        for seed in 0..5 {
            let out = noiseless_rs(vec![0.1, 0.2, 0.8, 0.9], seed);
            assert_eq!(out.predicted_positive_set(), vec![2, 3]);
            assert!(!out.flagged());
        }
    }

    #[test]
    fn rank_search_two_arms() {
        let out = noiseless_rs(vec![0.2, 0.8], 1);
        assert_eq!(out.predicted_positive_set(), vec![1]);
        assert!(out.fol_calls <= 2);
        // At most two noiseless calls at gap 0.3 and confidence delta / 4.
        let per_call = hand_stepped_pulls(0.3, 0.05 / 4.0);
        assert!(out.counters.n_pull <= 2 * per_call, "{}", out.counters.n_pull);
        assert!(out.counters.is_consistent());
    }

    #[test]
    fn rank_search_is_deterministic() {
        let inst = instance(vec![0.1, 0.25, 0.4, 0.6, 0.7, 0.9]);
        let run = || {
            let mut s = Session::new(&inst, ChaCha8Rng::seed_from_u64(3));
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let mut out = rank_search(&mut s, 0.5, &RsConfig::default(), &mut rng).unwrap();
            out.wall_time = Default::default();
            out
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn adaptive_gamma0_exits_immediately_on_wide_spread() {
        let inst = instance(vec![0.0, 0.05, 0.95, 1.0]);
        let mut s = Session::new(&inst, ChaCha8Rng::seed_from_u64(1));
        let mut tally = DuelTally::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = init_gamma0(&mut s, 0.05, &mut tally, u64::MAX, &mut rng).unwrap();
        assert_eq!(g, 0.1);
        let threshold = duel_threshold(4, 0, 0.05, 0.1);
        assert!(tally.comparisons.iter().all(|&b| b as f64 > threshold));
        assert_eq!(s.counters().n_duel, tally.comparisons.iter().sum::<u64>());
    }

    #[test]
    fn adaptive_gamma0_hits_cap_on_identical_arms() {
        let rows = vec![vec![0.5; 3]; 3];
        let inst = ProblemInstance::new(
            vec![0.4, 0.6, 0.7],
            0.5,
            RewardChannel::Bernoulli,
            ComparisonModel::Matrix { rows },
        )
        .unwrap();
        let mut s = Session::with_mode(&inst, ChaCha8Rng::seed_from_u64(1), OracleMode::Noiseless);
        let mut tally = DuelTally::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let err = init_gamma0(&mut s, 0.05, &mut tally, 100_000, &mut rng).unwrap_err();
        assert!(matches!(err, Error::DuelCapExceeded(100_000)));
        assert!(s.counters().n_duel <= 100_000);
    }

    #[test]
    fn duel_cap_yields_flagged_full_labelling() {
        let inst = instance(vec![0.1, 0.2, 0.3, 0.7, 0.8, 0.9]);
        let mut s = Session::new(&inst, ChaCha8Rng::seed_from_u64(1));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let config = RsConfig {
            gamma0: Gamma0::Fixed(0.1),
            max_total_duels: 5_000,
            ..RsConfig::default()
        };
        let out = rank_search(&mut s, 0.5, &config, &mut rng).unwrap();
        assert!(out.flags.contains(&CapFlag::DuelCap));
        assert_eq!(out.labels.len(), 6);
        assert!(out.counters.n_duel <= 5_000);
    }

    #[test]
    fn config_validation() {
        let bad = [
            RsConfig { kappa: 1.0, ..RsConfig::default() },
            RsConfig { delta: 1.0, ..RsConfig::default() },
            RsConfig { gamma0: Gamma0::Fixed(0.5), ..RsConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }

    /// Oracle that refuses every query, for checking that degenerate inputs
    /// fail before touching it.
    struct Refusing(QueryCounters);

    impl Oracle for Refusing {
        fn num_arms(&self) -> usize {
            1
        }
        fn noise_scale(&self) -> f64 {
            0.5
        }
        fn pull(&mut self, _: usize) -> Result<f64> {
            unreachable!()
        }
        fn duel(&mut self, _: usize, _: usize) -> Result<bool> {
            unreachable!()
        }
        fn counters(&self) -> &QueryCounters {
            &self.0
        }
    }

    #[test]
    fn single_arm_oracle_is_rejected() {
        let mut o = Refusing(QueryCounters::new(1));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(rank_search(&mut o, 0.5, &RsConfig::default(), &mut rng).is_err());
    }
}
