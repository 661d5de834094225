//! Nash equilibrium of the symmetric water-filling game in finitely many
//! operations.
//!
//! The equilibrium conditions, rewritten in the threshold variables, form a
//! triangular system: the weakest user's equation involves only its own
//! threshold, the next one only its own and the weakest's, and so on. Each
//! equation is piecewise linear and increasing in the unknown, so it is
//! solved exactly by locating the right linear segment.

mod closed_form;
mod sequences;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{payoffs, GameSpec, StrategyProfile};

pub use closed_form::{three_player_closed_form, two_player_closed_form};
pub use sequences::{
    htilde, multipliers_from_thresholds, strategy_from_thresholds, tau, thresholds_from_multipliers,
    MultiplierSet, ThresholdSet,
};

use sequences::{check_crosstalk, htilde_slope};

/// Values of one user's budget function `H~^M` at the noise levels of the
/// channels it may newly enter: `values[c]` belongs to canonical channel
/// `first + c`. A user transmits on exactly the channels whose entry is
/// below its budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakpointTable {
    pub first: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    /// Original user and channel order.
    pub strategies: StrategyProfile,
    /// Canonical order (users by budget, channels by noise).
    pub canonical: StrategyProfile,
    /// Canonical user order.
    pub thresholds: ThresholdSet,
    /// Canonical user order.
    pub multipliers: MultiplierSet,
    /// Active channel count per canonical user, nonincreasing.
    pub breakpoints: Vec<usize>,
    /// Canonical user order.
    pub phi: Vec<BreakpointTable>,
    /// Nats, original user order.
    pub payoffs: Vec<f64>,
    /// `user_order[u]` is the original index of canonical user `u`.
    pub user_order: Vec<usize>,
}

impl EquilibriumSolution {
    /// Assembles the reported solution from canonical strategies and thresholds.
    pub(crate) fn assemble(
        spec: &GameSpec,
        canonical: StrategyProfile,
        thresholds: ThresholdSet,
        phi: Vec<BreakpointTable>,
    ) -> Result<Self> {
        let multipliers = multipliers_from_thresholds(&thresholds, spec.g())?;
        let breakpoints = thresholds
            .t
            .iter()
            .map(|&t| active_channels(spec, t))
            .collect();
        let rates = payoffs(spec.profile(), spec.g(), &canonical);
        Ok(Self {
            strategies: spec.to_original(&canonical),
            payoffs: spec.user_values_to_original(&rates),
            canonical,
            thresholds,
            multipliers,
            breakpoints,
            phi,
            user_order: spec.user_order().to_vec(),
        })
    }
}

/// Channels strictly below the threshold (canonical noise is sorted).
fn active_channels(spec: &GameSpec, t: f64) -> usize {
    spec.profile().noise().iter().take_while(|&&n| n < t).count()
}

/// Solves `H~^k(t^k; t^{k+1..L}) = budget_k` for `k = L, L-1, ..., 1`.
///
/// `H~^k` is piecewise linear in `t^k` with kinks at the noise levels above
/// `t^{k+1}`, so each step scans those kinks for the segment containing the
/// budget and solves one linear equation on it.
pub fn solve_triangular(spec: &GameSpec) -> Result<ThresholdSet> {
    check_crosstalk(spec.g())?;
    let (profile, g) = (spec.profile(), spec.g());
    let users = spec.users();
    let mut t = vec![0.0; users];

    for k in (0..users).rev() {
        let target = spec.budgets()[k];
        let lower = t.get(k + 1).copied().unwrap_or(0.0);
        let fixed = &t[k + 1..];

        let mut start = lower;
        let mut h_start = htilde(profile, g, k, start, fixed);
        if spec.budgets().get(k + 1) == Some(&target) || h_start >= target {
            // Equal budgets: the stronger user sits on the same threshold.
            t[k] = lower;
            continue;
        }
        for &kink in profile.noise().iter().filter(|&&n| n > lower) {
            if kink == start {
                continue;
            }
            let h = htilde(profile, g, k, kink, fixed);
            if h >= target {
                break;
            }
            start = kink;
            h_start = h;
        }
        let slope = htilde_slope(profile, g, k, start);
        t[k] = start + (target - h_start) / slope;
    }
    ThresholdSet::new(t)
}

/// The unique equilibrium for `0 <= g < 1`.
pub fn solve_ne(spec: &GameSpec) -> Result<EquilibriumSolution> {
    let thresholds = solve_triangular(spec)?;
    let canonical = strategy_from_thresholds(spec.profile(), spec.g(), &thresholds)?;
    let phi = budget_breakpoints(spec, &thresholds);
    EquilibriumSolution::assemble(spec, canonical, thresholds, phi)
}

/// `H~^M` evaluated at the noise level of every channel not already claimed
/// by the weaker users.
pub(crate) fn budget_breakpoints(spec: &GameSpec, thresholds: &ThresholdSet) -> Vec<BreakpointTable> {
    let (profile, g) = (spec.profile(), spec.g());
    let t = &thresholds.t;
    (0..t.len())
        .map(|k| {
            let first = t.get(k + 1).map_or(0, |&next| active_channels(spec, next));
            let values = profile.noise()[first..]
                .iter()
                .map(|&n0| htilde(profile, g, k, n0, &t[k + 1..]))
                .collect();
            BreakpointTable { first, values }
        })
        .collect()
}

pub(crate) fn require_users(spec: &GameSpec, expected: usize) -> Result<()> {
    if spec.users() != expected {
        return Err(Error::WrongUserCount {
            expected,
            got: spec.users(),
        });
    }
    if spec.budgets().windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::NonStrictBudgets);
    }
    check_crosstalk(spec.g())
}
