//! Iterative water-filling: users take turns playing their best response
//! (a single-user water-fill against the current interference) until a full
//! round leaves the profile unchanged.
//!
//! Also provides [`multiplier_sweep`], the multiplier-space form of the same
//! scheme, where each stage moves one user's multiplier so that its budget
//! is met while all users stay on the equilibrium strategy map.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game_ne::{
    budget_breakpoints, strategy_from_thresholds, thresholds_from_multipliers, EquilibriumSolution, MultiplierSet,
};
use crate::model::{effective_noise, ChannelProfile, GameSpec, Strategy, StrategyProfile};
use crate::single_wf::waterfill_closed_form;

pub const DEFAULT_MAX_ROUNDS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IwfaTrace {
    /// Rounds needed to reach the final profile. The confirming round that
    /// observes no further change is not counted.
    pub iterations: usize,
    /// Max-norm change of the whole profile over each executed round.
    pub strategy_deltas: Vec<f64>,
    /// Per round, each user's multiplier (reciprocal water level) after its update.
    pub multiplier_history: Vec<Vec<f64>>,
    /// Largest round-to-round increase of any user's multiplier. Best
    /// responses need not lower the multipliers monotonically (only the
    /// multiplier-space sweep does), so this is reported rather than enforced.
    pub max_multiplier_increase: f64,
    pub converged: bool,
    /// Canonical order.
    pub final_profile: StrategyProfile,
}

/// Best response of user `j`, returning the strategy and its multiplier.
fn respond(spec: &GameSpec, j: usize, others: &StrategyProfile) -> Result<(Strategy, f64)> {
    let noise = effective_noise(spec.profile(), spec.g(), j, others);
    let seen = ChannelProfile::new(spec.profile().weights().to_vec(), noise)?;
    let sol = waterfill_closed_form(&seen, spec.budgets()[j])?;
    Ok((Strategy::new(seen.to_original(&sol.strategy.powers)), sol.multiplier))
}

/// Water-filling against the interference created by `others` (canonical
/// order; user `j`'s own entry is ignored).
pub fn best_response(spec: &GameSpec, j: usize, others: &StrategyProfile) -> Result<Strategy> {
    respond(spec, j, others).map(|(s, _)| s)
}

/// Round-robin best responses from all-zero strategies.
pub fn iwfa_solve(spec: &GameSpec, tol: f64, max_rounds: usize) -> Result<(EquilibriumSolution, IwfaTrace)> {
    let start = StrategyProfile::zeros(spec.users(), spec.channels());
    iwfa_solve_from(spec, start, tol, max_rounds, |_, _| {})
}

/// Round-robin best responses from an arbitrary canonical start; `on_round`
/// sees the profile after every round.
pub fn iwfa_solve_from(
    spec: &GameSpec,
    start: StrategyProfile,
    tol: f64,
    max_rounds: usize,
    mut on_round: impl FnMut(usize, &StrategyProfile),
) -> Result<(EquilibriumSolution, IwfaTrace)> {
    spec.check_dims(&start)?;
    let mut current = start;
    let mut multipliers = vec![0.0; spec.users()];
    let mut trace = IwfaTrace {
        iterations: 0,
        strategy_deltas: Vec::new(),
        multiplier_history: Vec::new(),
        max_multiplier_increase: 0.0,
        converged: false,
        final_profile: current.clone(),
    };

    for round in 1..=max_rounds {
        let before = current.clone();
        for j in 0..spec.users() {
            let (strategy, omega) = respond(spec, j, &current)?;
            current.strategies[j] = strategy;
            multipliers[j] = omega;
        }
        let delta = current.max_abs_diff(&before);
        if let Some(prev) = trace.multiplier_history.last() {
            let rise = prev
                .iter()
                .zip(&multipliers)
                .map(|(a, b)| b - a)
                .fold(trace.max_multiplier_increase, f64::max);
            trace.max_multiplier_increase = rise;
        }
        trace.strategy_deltas.push(delta);
        trace.multiplier_history.push(multipliers.clone());
        on_round(round, &current);
        if delta <= tol {
            trace.converged = true;
            trace.iterations = round - 1;
            break;
        }
        trace.iterations = round;
    }
    trace.iterations = trace.iterations.max(1);
    trace.final_profile = current.clone();

    let solution = solution_from_multipliers(spec, current, &multipliers)?;
    Ok((solution, trace))
}

fn solution_from_multipliers(spec: &GameSpec, profile: StrategyProfile, multipliers: &[f64]) -> Result<EquilibriumSolution> {
    let mut omega = multipliers.to_vec();
    // Equal budgets can leave one-ulp inversions.
    for r in 1..omega.len() {
        omega[r] = omega[r].max(omega[r - 1]);
    }
    let thresholds = thresholds_from_multipliers(&MultiplierSet { omega }, spec.g())?;
    let phi = budget_breakpoints(spec, &thresholds);
    EquilibriumSolution::assemble(spec, profile, thresholds, phi)
}

/// Weighted power `H^k(omega)` of every user when all of them play the
/// equilibrium-form strategies induced by `omega` (any order).
pub fn budgets_at(spec: &GameSpec, omega: &[f64]) -> Result<Vec<f64>> {
    let mut order: Vec<usize> = (0..omega.len()).collect();
    order.sort_by(|&a, &b| omega[a].total_cmp(&omega[b]));
    let sorted = MultiplierSet::new(order.iter().map(|&u| omega[u]).collect())?;
    let t = thresholds_from_multipliers(&sorted, spec.g())?;
    let map = strategy_from_thresholds(spec.profile(), spec.g(), &t)?;
    let mut out = vec![0.0; omega.len()];
    for (rank, &u) in order.iter().enumerate() {
        out[u] = spec.profile().weighted_sum(map.user(rank));
    }
    Ok(out)
}

/// Multiplier-space iteration: starting from `omega^k = 1/N0_1` (all users
/// silent), each stage lowers one user's multiplier until its own budget is
/// met, cycling through users in canonical order. Returns the multiplier
/// vector after every stage.
pub fn multiplier_sweep(spec: &GameSpec, rounds: usize) -> Result<Vec<Vec<f64>>> {
    let ceiling = 1.0 / spec.profile().noise()[0];
    let mut omega = vec![ceiling; spec.users()];
    let mut history = Vec::with_capacity(rounds * spec.users());
    for _ in 0..rounds {
        for k in 0..spec.users() {
            omega[k] = solve_stage(spec, &omega, k)?;
            history.push(omega.clone());
        }
    }
    Ok(history)
}

/// Bisection on `omega^k` for `H^k(omega) = budget_k` (H^k decreases in omega^k).
fn solve_stage(spec: &GameSpec, omega: &[f64], k: usize) -> Result<f64> {
    let target = spec.budgets()[k];
    let mut trial = omega.to_vec();
    let mut h = |w: f64| -> Result<f64> {
        trial[k] = w;
        Ok(budgets_at(spec, &trial)?[k])
    };
    let mut hi = omega[k];
    let mut lo = hi;
    while h(lo)? < target {
        lo *= 0.5;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if h(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
