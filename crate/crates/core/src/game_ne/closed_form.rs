//! Explicit equilibrium formulas for two and three users.
//!
//! These follow the explicit per-user formulas term by term and share no
//! code with the triangular solver beyond the final bookkeeping, so they act
//! as an independent check on it.

use super::{require_users, BreakpointTable, EquilibriumSolution, ThresholdSet};
use crate::error::Result;
use crate::model::{GameSpec, Strategy, StrategyProfile};

/// `sum_{i in range} pi_i f(i)` with the convention that an empty range is 0.
fn wsum(w: &[f64], range: std::ops::Range<usize>, f: impl Fn(usize) -> f64) -> f64 {
    range.map(|i| w[i] * f(i)).sum()
}

/// Active-count rule for a user whose candidate channels start after
/// `floor`: `k = floor` if the budget does not exceed the first breakpoint,
/// otherwise the largest `k` with `phi_k < budget`.
fn count_below(phi: &[f64], budget: f64) -> usize {
    phi.iter().take_while(|&&p| p < budget).count()
}

/// Two users with `budget_1 > budget_2` and `0 <= g < 1`.
pub fn two_player_closed_form(spec: &GameSpec) -> Result<EquilibriumSolution> {
    require_users(spec, 2)?;
    let (w, n0, g) = (spec.profile().weights(), spec.profile().noise(), spec.g());
    let n = n0.len();
    let (b1, b2) = (spec.budgets()[0], spec.budgets()[1]);

    // (a) the weaker user.
    let phi2: Vec<f64> = (0..n)
        .map(|k| wsum(w, 0..k + 1, |i| n0[k] - n0[i]) / (1.0 + g))
        .collect();
    let k2 = count_below(&phi2, b2);
    let t2 = ((1.0 + g) * b2 + wsum(w, 0..k2, |i| n0[i])) / wsum(w, 0..k2, |_| 1.0);

    // (b) the stronger user, on channels k2+1..n.
    let phi1: Vec<f64> = (k2..n)
        .map(|k| {
            wsum(w, k2..k + 1, |i| n0[k] - n0[i])
                + wsum(w, 0..k2, |i| (1.0 + g) * n0[k] - n0[i] - g * t2) / (1.0 + g)
        })
        .collect();
    let k1 = k2 + count_below(&phi1, b1);
    let t1 = (b1 + wsum(w, k2..k1, |i| n0[i]) + wsum(w, 0..k2, |i| g * t2 + n0[i]) / (1.0 + g))
        / wsum(w, 0..k1, |_| 1.0);

    let user1 = (0..n)
        .map(|i| {
            if i < k2 {
                t1 - (g * t2 + n0[i]) / (1.0 + g)
            } else if i < k1 {
                t1 - n0[i]
            } else {
                0.0
            }
        })
        .collect();
    let user2 = (0..n)
        .map(|i| if i < k2 { (t2 - n0[i]) / (1.0 + g) } else { 0.0 })
        .collect();

    EquilibriumSolution::assemble(
        spec,
        StrategyProfile::new(vec![Strategy::new(user1), Strategy::new(user2)]),
        ThresholdSet::new(vec![t1, t2])?,
        vec![
            BreakpointTable {
                first: k2,
                values: phi1,
            },
            BreakpointTable {
                first: 0,
                values: phi2,
            },
        ],
    )
}

/// Three users with `budget_1 > budget_2 > budget_3` and `0 <= g < 1`.
pub fn three_player_closed_form(spec: &GameSpec) -> Result<EquilibriumSolution> {
    require_users(spec, 3)?;
    let (w, n0, g) = (spec.profile().weights(), spec.profile().noise(), spec.g());
    let n = n0.len();
    let (b1, b2, b3) = (spec.budgets()[0], spec.budgets()[1], spec.budgets()[2]);
    let (d1, d2) = (1.0 + g, 1.0 + 2.0 * g);

    // (a) user 3.
    let phi3: Vec<f64> = (0..n)
        .map(|k| wsum(w, 0..k + 1, |i| n0[k] - n0[i]) / d2)
        .collect();
    let k3 = count_below(&phi3, b3);
    let t3 = (d2 * b3 + wsum(w, 0..k3, |i| n0[i])) / wsum(w, 0..k3, |_| 1.0);

    // (b) user 2.
    let phi2: Vec<f64> = (k3..n)
        .map(|k| {
            wsum(w, k3..k + 1, |i| (n0[k] - n0[i]) / d1)
                + wsum(w, 0..k3, |i| n0[k] / d1 - (n0[i] + g * t3 / d1) / d2)
        })
        .collect();
    let k2 = k3 + count_below(&phi2, b2);
    let t2 = (b2 + wsum(w, k3..k2, |i| n0[i]) / d1 + wsum(w, 0..k3, |i| g * t3 / d1 + n0[i]) / d2)
        / (wsum(w, 0..k2, |_| 1.0) / d1);

    // (c) user 1.
    let shared3 = |i: usize| g * t2 / d1 + (g * t3 / d1 + n0[i]) / d2;
    let shared2 = |i: usize| (g * t2 + n0[i]) / d1;
    let phi1: Vec<f64> = (k2..n)
        .map(|k| {
            wsum(w, k2..k + 1, |i| n0[k] - n0[i])
                + wsum(w, k3..k2, |i| n0[k] - shared2(i))
                + wsum(w, 0..k3, |i| n0[k] - shared3(i))
        })
        .collect();
    let k1 = k2 + count_below(&phi1, b1);
    let t1 = (b1 + wsum(w, k2..k1, |i| n0[i]) + wsum(w, k3..k2, shared2) + wsum(w, 0..k3, shared3))
        / wsum(w, 0..k1, |_| 1.0);

    let user1 = (0..n)
        .map(|i| {
            if i < k3 {
                t1 - shared3(i)
            } else if i < k2 {
                t1 - shared2(i)
            } else if i < k1 {
                t1 - n0[i]
            } else {
                0.0
            }
        })
        .collect();
    let user2 = (0..n)
        .map(|i| {
            if i < k3 {
                t2 / d1 - (g * t3 / d1 + n0[i]) / d2
            } else if i < k2 {
                (t2 - n0[i]) / d1
            } else {
                0.0
            }
        })
        .collect();
    let user3 = (0..n)
        .map(|i| if i < k3 { (t3 - n0[i]) / d2 } else { 0.0 })
        .collect();

    EquilibriumSolution::assemble(
        spec,
        StrategyProfile::new(vec![Strategy::new(user1), Strategy::new(user2), Strategy::new(user3)]),
        ThresholdSet::new(vec![t1, t2, t3])?,
        vec![
            BreakpointTable {
                first: k2,
                values: phi1,
            },
            BreakpointTable {
                first: k3,
                values: phi2,
            },
            BreakpointTable {
                first: 0,
                values: phi3,
            },
        ],
    )
}
