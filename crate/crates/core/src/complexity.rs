//! Ground-truth hardness quantities of an instance.
//!
//! Everything here reads the true means and Borda scores, so it is only
//! ever used for reporting and checking, never by the algorithms.

use serde::{Deserialize, Serialize};

use crate::environment::{ComparisonModel, ProblemInstance};
use crate::error::{Error, Result};

/// Tolerance used when comparing both sides of the Massart inequalities.
pub const MASSART_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    /// `|mu_i - tau|`.
    pub label_gaps: Vec<f64>,
    pub h_l: f64,
    /// Entry `m - 1` is the sum of the `m` largest `1 / gap^2` terms.
    pub h_l_partial: Vec<f64>,
    pub delta_star: f64,
    /// Worst positive arm; `None` when the instance is one-sided.
    pub i_u: Option<usize>,
    /// Best negative arm; `None` when the instance is one-sided.
    pub i_l: Option<usize>,
    pub duel_gaps: Option<Vec<f64>>,
    /// `None` in the two boundary slots.
    pub robust_duel_gaps: Option<Vec<Option<f64>>>,
    /// `None` when one-sided or when some duel gap is not positive.
    pub h_c1: Option<f64>,
    /// `None` when one-sided or when some robust gap is not positive.
    pub h_c2: Option<f64>,
    /// Smallest robust gap; `None` without non-boundary arms.
    pub gamma_star: Option<f64>,
    /// Every positive arm outscores every negative arm.
    pub separable: bool,
}

struct Parts<'a> {
    means: &'a [f64],
    tau: f64,
    p: &'a [f64],
}

impl Parts<'_> {
    fn positive(&self, i: usize) -> bool {
        self.means[i] >= self.tau
    }

    fn boundary(&self) -> Result<(usize, usize)> {
        let mut i_u: Option<usize> = None;
        let mut i_l: Option<usize> = None;
        for i in 0..self.means.len() {
            if self.positive(i) {
                if i_u.is_none_or(|u| self.p[i] < self.p[u]) {
                    i_u = Some(i);
                }
            } else if i_l.is_none_or(|l| self.p[i] > self.p[l]) {
                i_l = Some(i);
            }
        }
        match (i_u, i_l) {
            (Some(u), Some(l)) => Ok((u, l)),
            _ => Err(Error::OneSidedInstance),
        }
    }

    fn duel_gap(&self, i: usize, (i_u, i_l): (usize, usize)) -> f64 {
        if self.positive(i) {
            self.p[i] - self.p[i_u]
        } else {
            self.p[i_l] - self.p[i]
        }
    }

    fn robust_gap(&self, i: usize, (i_u, i_l): (usize, usize)) -> Result<f64> {
        if i == i_u || i == i_l {
            return Err(Error::BoundaryArm(i));
        }
        let side = self.positive(i);
        let best = (0..self.means.len())
            .filter(|&j| self.positive(j) == side)
            .map(|j| {
                if side {
                    (self.p[j] - self.p[i_l]).min(self.p[i] - self.p[j])
                } else {
                    (self.p[j] - self.p[i]).min(self.p[i_u] - self.p[j])
                }
            })
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(best)
    }
}

fn label_gaps(means: &[f64], tau: f64) -> Result<Vec<f64>> {
    means
        .iter()
        .enumerate()
        .map(|(arm, &mu)| {
            let gap = (mu - tau).abs();
            if gap > 0.0 {
                Ok(gap)
            } else {
                Err(Error::DegenerateArm { arm, tau })
            }
        })
        .collect()
}

/// Prefix sums of `1 / gap^2`, largest terms first.
fn partial_sums(gaps: &[f64]) -> Vec<f64> {
    let mut terms: Vec<f64> = gaps.iter().map(|g| 1.0 / (g * g)).collect();
    terms.sort_by(|a, b| b.total_cmp(a));
    terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect()
}

fn inverse_square_sum(gaps: impl Iterator<Item = f64>) -> Option<f64> {
    let mut total = 0.0;
    for g in gaps {
        if g <= 0.0 {
            return None;
        }
        total += 1.0 / (g * g);
    }
    Some(total)
}

impl ComplexityReport {
    pub fn new(instance: &ProblemInstance) -> Result<Self> {
        Self::from_parts(instance.means(), instance.tau(), instance.borda_scores())
    }

    /// Report from raw means, threshold and Borda scores.
    pub fn from_parts(means: &[f64], tau: f64, scores: &[f64]) -> Result<Self> {
        if means.len() != scores.len() || means.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} means, {} scores",
                means.len(),
                scores.len()
            )));
        }
        let parts = Parts { means, tau, p: scores };
        let gaps = label_gaps(means, tau)?;
        let h_l_partial = partial_sums(&gaps);
        let h_l = *h_l_partial.last().expect("nonempty");
        let delta_star = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        let separable = {
            let (mut lo_pos, mut hi_neg) = (f64::INFINITY, f64::NEG_INFINITY);
            for (i, &p) in scores.iter().enumerate() {
                if parts.positive(i) {
                    lo_pos = lo_pos.min(p);
                } else {
                    hi_neg = hi_neg.max(p);
                }
            }
            lo_pos > hi_neg
        };
        let mut report = ComplexityReport {
            label_gaps: gaps,
            h_l,
            h_l_partial,
            delta_star,
            i_u: None,
            i_l: None,
            duel_gaps: None,
            robust_duel_gaps: None,
            h_c1: None,
            h_c2: None,
            gamma_star: None,
            separable,
        };
        let Ok(boundary) = parts.boundary() else {
            return Ok(report);
        };
        let (i_u, i_l) = boundary;
        let k = means.len();
        let duel: Vec<f64> = (0..k).map(|i| parts.duel_gap(i, boundary)).collect();
        let robust: Vec<Option<f64>> = (0..k)
            .map(|i| parts.robust_gap(i, boundary).ok())
            .collect();
        let inner = || (0..k).filter(|&i| i != i_u && i != i_l);
        report.h_c1 = inverse_square_sum(inner().map(|i| duel[i]));
        report.h_c2 = inverse_square_sum(inner().map(|i| robust[i].expect("non-boundary")));
        report.gamma_star = inner()
            .map(|i| robust[i].expect("non-boundary"))
            .reduce(f64::min);
        report.i_u = Some(i_u);
        report.i_l = Some(i_l);
        report.duel_gaps = Some(duel);
        report.robust_duel_gaps = Some(robust);
        Ok(report)
    }

    /// Sum of the `m` largest `1 / gap^2` terms; zero for `m = 0`.
    pub fn h_l_top(&self, m: usize) -> Result<f64> {
        match m {
            0 => Ok(0.0),
            m if m <= self.h_l_partial.len() => Ok(self.h_l_partial[m - 1]),
            m => Err(Error::InvalidConfig(format!(
                "m = {m} exceeds {} arms",
                self.h_l_partial.len()
            ))),
        }
    }
}

/// `(i_u, i_l)`: the lowest-scoring positive arm and the highest-scoring
/// negative arm, lowest index on ties.
pub fn boundary_arms(instance: &ProblemInstance) -> Result<(usize, usize)> {
    Parts {
        means: instance.means(),
        tau: instance.tau(),
        p: instance.borda_scores(),
    }
    .boundary()
}

/// `H_l`, or the sum of its `m` largest terms.
pub fn pull_complexity(instance: &ProblemInstance, m: Option<usize>) -> Result<f64> {
    let gaps = label_gaps(instance.means(), instance.tau())?;
    let sums = partial_sums(&gaps);
    match m {
        None => Ok(*sums.last().expect("nonempty")),
        Some(0) => Ok(0.0),
        Some(m) => sums
            .get(m - 1)
            .copied()
            .ok_or_else(|| Error::InvalidConfig(format!("m = {m} exceeds {} arms", sums.len()))),
    }
}

pub fn robust_duel_gap(instance: &ProblemInstance, arm: usize) -> Result<f64> {
    if arm >= instance.num_arms() {
        return Err(Error::IndexOutOfRange {
            index: arm,
            arms: instance.num_arms(),
        });
    }
    let parts = Parts {
        means: instance.means(),
        tau: instance.tau(),
        p: instance.borda_scores(),
    };
    let boundary = parts.boundary()?;
    parts.robust_gap(arm, boundary)
}

/// `(H_c1, H_c2)`, both summed over the non-boundary arms.
pub fn duel_complexities(instance: &ProblemInstance) -> Result<(f64, f64)> {
    let parts = Parts {
        means: instance.means(),
        tau: instance.tau(),
        p: instance.borda_scores(),
    };
    let (i_u, i_l) = parts.boundary()?;
    let mut h = (0.0, 0.0);
    for i in (0..instance.num_arms()).filter(|&i| i != i_u && i != i_l) {
        let d = parts.duel_gap(i, (i_u, i_l));
        let r = parts.robust_gap(i, (i_u, i_l))?;
        if d <= 0.0 || r <= 0.0 {
            return Err(Error::ZeroGap(i));
        }
        h.0 += 1.0 / (d * d);
        h.1 += 1.0 / (r * r);
    }
    Ok(h)
}

/// Largest `L` with `M(x, y) - 1/2 >= L (x - y)` for all `x > y` in
/// `[min mu, max mu]`. Linear link: `theta / 2`. BTL: the chord slope at
/// the full range, since the logistic curve is concave for positive
/// arguments. `None` for explicit matrices or a single distinct mean.
pub fn link_slope_bound(model: &ComparisonModel, means: &[f64]) -> Option<f64> {
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    match model {
        ComparisonModel::Linear { theta } => Some(theta / 2.0),
        ComparisonModel::Btl { .. } if range > 0.0 => {
            Some((model.link(range).expect("btl link") - 0.5) / range)
        }
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub passed: bool,
    /// Smallest `lhs - rhs` over the clause's inequalities; infinite when
    /// the clause is vacuous.
    pub slack: f64,
}

impl ClauseResult {
    fn from_slack(slack: f64) -> Self {
        ClauseResult {
            passed: slack >= -MASSART_TOLERANCE,
            slack,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassartReport {
    pub c: f64,
    pub l: f64,
    /// `p_iu - p_il >= 2 L c`.
    pub boundary_separation: ClauseResult,
    /// Robust gap at least `min(2 L c, duel gap)` for every non-boundary arm.
    pub robust_gap_floor: ClauseResult,
    /// `H_c2 <= H_c1 / (4 L^2 c^2)`.
    pub complexity_ratio: ClauseResult,
}

impl MassartReport {
    pub fn all_passed(&self) -> bool {
        self.boundary_separation.passed && self.robust_gap_floor.passed && self.complexity_ratio.passed
    }
}

/// Checks the three consequences of a margin condition `|mu_i - tau| >= c`
/// under a link with slope bound `l`.
///
/// Both hypotheses are verified first: every label gap must be at least
/// `c` and every pair `x > y` must satisfy `M - 1/2 >= l (x - y)`.
pub fn massart_check(instance: &ProblemInstance, c: f64, l: f64) -> Result<MassartReport> {
    if !(c > 0.0 && l > 0.0 && c.is_finite() && l.is_finite()) {
        return Err(Error::PreconditionUnmet("c and L must be positive".into()));
    }
    let means = instance.means();
    let tau = instance.tau();
    let k = instance.num_arms();
    if let Some(arm) = (0..k).find(|&i| (means[i] - tau).abs() < c - MASSART_TOLERANCE) {
        return Err(Error::PreconditionUnmet(format!(
            "arm {arm} has gap {} below c = {c}",
            (means[arm] - tau).abs()
        )));
    }
    for i in 0..k {
        for j in 0..k {
            let d = means[i] - means[j];
            if d > 0.0 && instance.preference(i, j) - 0.5 < l * d - MASSART_TOLERANCE {
                return Err(Error::PreconditionUnmet(format!(
                    "link slope below L = {l} for arms {i}, {j}"
                )));
            }
        }
    }

    let p = instance.borda_scores();
    let parts = Parts { means, tau, p };
    let (i_u, i_l) = parts.boundary()?;
    let floor = 2.0 * l * c;
    let boundary_separation = ClauseResult::from_slack(p[i_u] - p[i_l] - floor);

    let mut gap_slack = f64::INFINITY;
    let (mut h_c1, mut h_c2) = (0.0, 0.0);
    for i in (0..k).filter(|&i| i != i_u && i != i_l) {
        let d = parts.duel_gap(i, (i_u, i_l));
        let r = parts.robust_gap(i, (i_u, i_l))?;
        gap_slack = gap_slack.min(r - floor.min(d));
        h_c1 += 1.0 / (d * d);
        h_c2 += 1.0 / (r * r);
    }
    let ratio_slack = if h_c1.is_finite() {
        h_c1 / (floor * floor) - h_c2
    } else {
        f64::INFINITY
    };
    Ok(MassartReport {
        c,
        l,
        boundary_separation,
        robust_gap_floor: ClauseResult::from_slack(gap_slack),
        complexity_ratio: ClauseResult {
            passed: ratio_slack >= -MASSART_TOLERANCE * h_c2.max(1.0),
            slack: ratio_slack,
        },
    })
}
