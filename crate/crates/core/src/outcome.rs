use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::environment::{ProblemInstance, QueryCounters};

/// A safety cap was hit. The run still produced labels, but they carry no
/// guarantee and the harness counts the run as a failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CapFlag {
    /// Figure-Out-Label on `arm` stopped at the per-call pull cap.
    PullCap { arm: usize },
    /// The total duel cap of Rank-Search was reached.
    DuelCap,
    /// The Borda ranking ran out of its duel budget.
    DuelBudget,
}

/// Size of the sequence handed to one binary search and the number of
/// Figure-Out-Label calls it made.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarySearchTrace {
    pub len: usize,
    pub probes: usize,
}

impl BinarySearchTrace {
    /// `ceil(log2 len) + 1`.
    pub fn probe_bound(&self) -> usize {
        ceil_log2(self.len) + 1
    }

    pub fn within_bound(&self) -> bool {
        self.probes <= self.probe_bound()
    }
}

/// `ceil(log2 n)` for `n >= 1`; zero for `n <= 1`.
pub(crate) fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Snapshot of one Rank-Search round, kept only when tracing is enabled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: usize,
    pub gamma: f64,
    /// Working set in ranked order with the estimates used for ranking.
    pub ranked: Vec<(usize, f64)>,
    pub boundary: usize,
    pub probed: Vec<(usize, bool)>,
    pub inferred_positive: Vec<usize>,
    pub inferred_negative: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmOutcome {
    /// Predicted label per arm; `true` means above the threshold.
    pub labels: Vec<bool>,
    pub counters: QueryCounters,
    pub rounds: usize,
    pub fol_calls: usize,
    pub flags: Vec<CapFlag>,
    pub binary_searches: Vec<BinarySearchTrace>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<RoundTrace>,
    pub gamma0: Option<f64>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl AlgorithmOutcome {
    pub fn predicted_positive_set(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &y)| y.then_some(i))
            .collect()
    }

    pub fn flagged(&self) -> bool {
        !self.flags.is_empty()
    }

    /// Exact recovery of the positive set, regardless of flags.
    pub fn matches(&self, instance: &ProblemInstance) -> bool {
        self.labels.len() == instance.num_arms()
            && self
                .labels
                .iter()
                .enumerate()
                .all(|(i, &y)| y == instance.is_positive(i))
    }

    /// Exact recovery without any cap hit.
    pub fn success(&self, instance: &ProblemInstance) -> bool {
        !self.flagged() && self.matches(instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_log2_values() {
        let got: Vec<usize> = [1, 2, 3, 4, 5, 8, 9, 64, 65].iter().map(|&n| ceil_log2(n)).collect();
        assert_eq!(got, vec![0, 1, 2, 2, 3, 3, 4, 6, 7]);
        assert_eq!(BinarySearchTrace { len: 8, probes: 4 }.probe_bound(), 4);
    }
}
