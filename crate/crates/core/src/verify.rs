//! Independent certification of equilibria.
//!
//! All profiles here are in canonical order (users by budget, channels by noise).

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iwfa::best_response;
use crate::model::{effective_noise, payoff, GameSpec, Strategy, StrategyProfile};
use crate::single_wf::waterfill_closed_form;

/// Relative power below which a channel counts as unused.
const ACTIVE_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `residuals[j][i]`, canonical order.
    pub residuals: Vec<Vec<f64>>,
    pub max_residual: f64,
    /// Median marginal value over each user's active channels.
    pub implied_multipliers: Vec<f64>,
    pub satisfied: bool,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Equal marginal value `1/(T + interference + noise)` on used channels, no
/// larger marginal value on unused ones.
pub fn kkt_check(spec: &GameSpec, all: &StrategyProfile, threshold: f64) -> Result<KktReport> {
    if !(0.0..=1.0).contains(&spec.g()) {
        return Err(Error::CrosstalkOutOfRange(spec.g()));
    }
    spec.check_feasible(all)?;
    let mut residuals = Vec::with_capacity(spec.users());
    let mut implied = Vec::with_capacity(spec.users());
    for j in 0..spec.users() {
        let noise = effective_noise(spec.profile(), spec.g(), j, all);
        let powers = all.user(j);
        let cut = ACTIVE_REL * spec.budgets()[j];
        let mut marginal: Vec<f64> = powers.iter().zip(&noise).map(|(t, n)| 1.0 / (t + n)).collect();
        let mut active: Vec<f64> = marginal
            .iter()
            .zip(powers)
            .filter(|(_, &t)| t > cut)
            .map(|(m, _)| *m)
            .collect();
        if active.is_empty() {
            return Err(Error::InfeasibleProfile(format!("user {j} has no active channel")));
        }
        let omega = median(&mut active);
        for (m, &t) in marginal.iter_mut().zip(powers) {
            *m = if t > cut { (*m - omega).abs() } else { (*m - omega).max(0.0) };
        }
        residuals.push(marginal);
        implied.push(omega);
    }
    let max_residual = residuals.iter().flatten().fold(0.0, |a: f64, &b| a.max(b));
    Ok(KktReport {
        residuals,
        max_residual,
        implied_multipliers: implied,
        satisfied: max_residual <= threshold,
    })
}

/// `v^j(best response to the others) - v^j(current)` for every user.
pub fn best_response_gap(spec: &GameSpec, all: &StrategyProfile) -> Result<Vec<f64>> {
    spec.check_dims(all)?;
    let (profile, g) = (spec.profile(), spec.g());
    (0..spec.users())
        .map(|j| {
            let mut deviated = all.clone();
            deviated.strategies[j] = best_response(spec, j, all)?;
            Ok(payoff(profile, g, j, &deviated) - payoff(profile, g, j, all))
        })
        .collect()
}

/// `count` distinct equilibria of the `g = 1` game.
///
/// With full crosstalk every user sees the same total `T^j + sum_{k!=j} T^k`,
/// so any split of the single-user water-fill of the pooled budget is an
/// equilibrium. Starting from the split proportional to budgets, profile `c`
/// moves `c * eps_max / count` of weighted power between two users across two
/// active channels, leaving budgets and per-channel totals unchanged.
pub fn continuum_g1(spec: &GameSpec, count: usize, seed: u64) -> Result<Vec<StrategyProfile>> {
    if spec.g() != 1.0 {
        return Err(Error::CrosstalkNotOne(spec.g()));
    }
    if spec.users() < 2 {
        return Err(Error::WrongUserCount {
            expected: 2,
            got: spec.users(),
        });
    }
    let profile = spec.profile();
    let total: f64 = spec.budgets().iter().sum();
    let pooled = waterfill_closed_form(profile, total)?;
    let aggregate = &pooled.strategy.powers;
    let base = StrategyProfile::new(
        spec.budgets()
            .iter()
            .map(|b| Strategy::new(aggregate.iter().map(|a| a * b / total).collect()))
            .collect(),
    );
    if count <= 1 {
        return Ok(vec![base; count]);
    }
    if pooled.active_count < 2 {
        return Err(Error::InfeasibleSplit(
            "the pooled allocation uses a single channel".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = sample(&mut rng, spec.users(), 2);
    let chans = sample(&mut rng, pooled.active_count, 2);
    let (a, b, k, m) = (users.index(0), users.index(1), chans.index(0), chans.index(1));
    let w = profile.weights();
    // User a gains on k and loses on m; user b does the opposite.
    let eps_max = (w[m] * base.user(a)[m]).min(w[k] * base.user(b)[k]);

    Ok((0..count)
        .map(|c| {
            let eps = eps_max * c as f64 / (count - 1) as f64;
            let mut p = base.clone();
            p.strategies[a].powers[k] += eps / w[k];
            p.strategies[a].powers[m] = (p.user(a)[m] - eps / w[m]).max(0.0);
            p.strategies[b].powers[k] = (p.user(b)[k] - eps / w[k]).max(0.0);
            p.strategies[b].powers[m] += eps / w[m];
            p
        })
        .collect())
}
