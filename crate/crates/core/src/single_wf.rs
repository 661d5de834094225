//! Single-user water-filling.
//!
//! [`waterfill_closed_form`] locates the active set from the breakpoint
//! vector `phi` and computes the water level directly, so the cost is one
//! pass over the channels. [`waterfill_bisection`] is the classic root search
//! on the multiplier and serves as an independent oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelProfile, Strategy};

const BISECTION_MAX_ITERS: usize = 1_000_000;

/// Optimal single-user allocation, in canonical channel order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterfillSolution {
    pub strategy: Strategy,
    /// Common value of `T_i + N0_i` on active channels.
    pub water_level: f64,
    /// Lagrange multiplier, `1 / water_level`.
    pub multiplier: f64,
    /// Number of channels with positive power; they are the first `active_count`.
    pub active_count: usize,
    pub phi: Vec<f64>,
}

/// `phi_t = sum_{i <= t} pi_i (N0_t - N0_i)`: the budget at which channel `t`
/// starts receiving power.
pub fn phi_breakpoints(profile: &ChannelProfile) -> Vec<f64> {
    let (w, n0) = (profile.weights(), profile.noise());
    (0..profile.len())
        .map(|t| (0..=t).map(|i| w[i] * (n0[t] - n0[i])).sum())
        .collect()
}

/// Number of active channels: the largest `k` with `phi_k < budget`
/// (`phi_{n+1}` is unbounded, so `k = n` when every breakpoint is below).
fn active_count(phi: &[f64], budget: f64) -> usize {
    phi.iter().take_while(|&&p| p < budget).count()
}

pub fn waterfill_closed_form(profile: &ChannelProfile, budget: f64) -> Result<WaterfillSolution> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::InvalidBudget(budget));
    }
    let phi = phi_breakpoints(profile);
    let k = active_count(&phi, budget);
    let (w, n0) = (profile.weights(), profile.noise());
    let weight: f64 = w[..k].iter().sum();
    let weighted_noise: f64 = w[..k].iter().zip(&n0[..k]).map(|(p, n)| p * n).sum();
    let level = (budget + weighted_noise) / weight;

    let mut powers = vec![0.0; profile.len()];
    for i in 0..k {
        powers[i] = level - n0[i];
    }
    Ok(WaterfillSolution {
        strategy: Strategy::new(powers),
        water_level: level,
        multiplier: 1.0 / level,
        active_count: k,
        phi,
    })
}

/// `H(omega) = sum_i pi_i [1/omega - N0_i]_+`, decreasing in `omega`.
fn allocated(profile: &ChannelProfile, omega: f64) -> f64 {
    let level = 1.0 / omega;
    profile
        .weights()
        .iter()
        .zip(profile.noise())
        .map(|(p, n)| p * (level - n).max(0.0))
        .sum()
}

/// Bisection on the multiplier until `|H(omega) - budget| <= tol`.
///
/// Powers below `tol` are reported as zero, so a budget sitting exactly on a
/// breakpoint yields the same active set as the closed form.
pub fn waterfill_bisection(profile: &ChannelProfile, budget: f64, tol: f64) -> Result<WaterfillSolution> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::InvalidBudget(budget));
    }
    let mut hi = 1.0 / profile.noise()[0];
    let mut lo = hi;
    while allocated(profile, lo) <= budget {
        lo *= 0.5;
    }

    let mut omega = 0.5 * (lo + hi);
    let mut residual = allocated(profile, omega) - budget;
    let mut iters = 0;
    while residual.abs() > tol {
        iters += 1;
        if iters > BISECTION_MAX_ITERS {
            return Err(Error::ToleranceNotReached { tol, residual });
        }
        if residual > 0.0 {
            lo = omega;
        } else {
            hi = omega;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            // Bracket exhausted at f64 resolution.
            return Err(Error::ToleranceNotReached { tol, residual });
        }
        omega = mid;
        residual = allocated(profile, omega) - budget;
    }

    let level = 1.0 / omega;
    let powers: Vec<f64> = profile
        .noise()
        .iter()
        .map(|n| {
            let p = level - n;
            if p > tol {
                p
            } else {
                0.0
            }
        })
        .collect();
    let active = powers.iter().take_while(|&&p| p > 0.0).count();
    Ok(WaterfillSolution {
        strategy: Strategy::new(powers),
        water_level: level,
        multiplier: omega,
        active_count: active,
        phi: phi_breakpoints(profile),
    })
}
