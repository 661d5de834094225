//! Cooperative benchmark: maximize the total rate `sum_j v^j` over all
//! users' budget sets, and compare it with the equilibrium.
//!
//! The objective is not concave once `g > 0`, so this is a multi-start local
//! search (projected gradient ascent with backtracking) that always includes
//! the equilibrium as one of its starts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game_ne::solve_ne;
use crate::model::{payoffs, sum_rate, ChannelProfile, GameSpec, Strategy, StrategyProfile};
use crate::single_wf::waterfill_closed_form;
use crate::verify::continuum_g1;

/// Stop when the projected gradient step `|x - P(x + grad)|` falls below this.
pub const STATIONARITY_TOL: f64 = 1e-6;
const MAX_ITERS: usize = 200_000;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoaPoint {
    pub g: f64,
    pub ne_sum_rate: f64,
    pub opt_sum_rate: f64,
    /// `1 - ne_sum_rate / opt_sum_rate`.
    pub poa: f64,
    /// Original user order.
    pub per_user_ne: Vec<f64>,
    /// Original user order.
    pub per_user_opt: Vec<f64>,
}

/// Gradient of the total rate with respect to every `T^l_i`.
///
/// Raising `T^l_i` helps user `l` through its own signal and hurts every
/// other user `j` through the crosstalk term in its denominator.
pub fn sum_rate_gradient(profile: &ChannelProfile, g: f64, all: &StrategyProfile) -> Vec<Vec<f64>> {
    let n = profile.len();
    let total = all.aggregate(n);
    let (w, n0) = (profile.weights(), profile.noise());
    // Per channel: sum over users of g (1/num_j - 1/den_j).
    let mut cross = vec![0.0; n];
    let mut own = vec![vec![0.0; n]; all.users()];
    for (j, s) in all.strategies.iter().enumerate() {
        for i in 0..n {
            let den = n0[i] + g * (total[i] - s.powers[i]);
            let num = den + s.powers[i];
            own[j][i] = 1.0 / num;
            cross[i] += g * (1.0 / num - 1.0 / den);
        }
    }
    for (j, s) in all.strategies.iter().enumerate() {
        for i in 0..n {
            let den = n0[i] + g * (total[i] - s.powers[i]);
            let self_cross = g * (own[j][i] - 1.0 / den);
            own[j][i] = w[i] * (own[j][i] + cross[i] - self_cross);
        }
    }
    own
}

/// Euclidean projection of `y` onto `{x >= 0, sum_i w_i x_i = budget}`.
///
/// The solution is `x_i = [y_i - lambda w_i]_+`; sorting the ratios `y_i / w_i`
/// gives the active set, and with it `lambda`, exactly.
pub fn project_weighted_simplex(y: &[f64], w: &[f64], budget: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| (y[b] / w[b]).total_cmp(&(y[a] / w[a])));
    let (mut wy, mut ww) = (0.0, 0.0);
    let mut lambda = 0.0;
    for (pos, &i) in idx.iter().enumerate() {
        wy += w[i] * y[i];
        ww += w[i] * w[i];
        lambda = (wy - budget) / ww;
        let next = idx.get(pos + 1).map(|&k| y[k] / w[k]);
        if next.is_none_or(|r| r <= lambda) {
            break;
        }
    }
    y.iter().zip(w).map(|(yi, wi)| (yi - lambda * wi).max(0.0)).collect()
}

fn project(spec: &GameSpec, rows: &[Vec<f64>]) -> StrategyProfile {
    let w = spec.profile().weights();
    StrategyProfile::new(
        rows.iter()
            .zip(spec.budgets())
            .map(|(y, &b)| Strategy::new(project_weighted_simplex(y, w, b)))
            .collect(),
    )
}

fn step(spec: &GameSpec, x: &StrategyProfile, grad: &[Vec<f64>], s: f64) -> StrategyProfile {
    let rows: Vec<Vec<f64>> = x
        .strategies
        .iter()
        .zip(grad)
        .map(|(st, g)| st.powers.iter().zip(g).map(|(p, d)| p + s * d).collect())
        .collect();
    project(spec, &rows)
}

fn dot(a: &StrategyProfile, b: &StrategyProfile, c: &[Vec<f64>]) -> f64 {
    a.strategies
        .iter()
        .zip(&b.strategies)
        .zip(c)
        .flat_map(|((x, y), g)| x.powers.iter().zip(&y.powers).zip(g).map(|((p, q), d)| (p - q) * d))
        .sum()
}

/// Norm of `x - P(x + grad)`; zero exactly at first-order stationary points.
pub fn projected_gradient_norm(spec: &GameSpec, all: &StrategyProfile) -> f64 {
    let grad = sum_rate_gradient(spec.profile(), spec.g(), all);
    let moved = step(spec, all, &grad, 1.0);
    moved
        .strategies
        .iter()
        .zip(&all.strategies)
        .flat_map(|(a, b)| a.powers.iter().zip(&b.powers).map(|(p, q)| (p - q) * (p - q)))
        .sum::<f64>()
        .sqrt()
}

/// Projected gradient ascent with Armijo backtracking. The trial step is the
/// Barzilai-Borwein length from the previous move (1.0 on the first move)
/// and is halved until the sufficient-increase test passes.
fn ascend(spec: &GameSpec, start: StrategyProfile) -> (StrategyProfile, f64) {
    let (profile, g) = (spec.profile(), spec.g());
    let mut x = start;
    let mut fx = sum_rate(profile, g, &x);
    let mut grad = sum_rate_gradient(profile, g, &x);
    let mut trial = 1.0;
    for _ in 0..MAX_ITERS {
        if projected_gradient_norm(spec, &x) <= STATIONARITY_TOL {
            break;
        }
        let mut s = trial;
        let accepted = loop {
            let y = step(spec, &x, &grad, s);
            let fy = sum_rate(profile, g, &y);
            if fy >= fx + ARMIJO * dot(&y, &x, &grad) {
                break Some((y, fy));
            }
            s *= 0.5;
            if s < 1e-16 {
                break None;
            }
        };
        let Some((y, fy)) = accepted else { break };
        let gy = sum_rate_gradient(profile, g, &y);
        let (mut ss, mut sy) = (0.0, 0.0);
        for ((a, b), (ga, gb)) in y.strategies.iter().zip(&x.strategies).zip(gy.iter().zip(&grad)) {
            for i in 0..a.powers.len() {
                let dx = a.powers[i] - b.powers[i];
                ss += dx * dx;
                sy += dx * (ga[i] - gb[i]);
            }
        }
        trial = if sy.abs() > 0.0 { (ss / sy.abs()).clamp(1e-10, 1e10) } else { 1.0 };
        x = y;
        fx = fy;
        grad = gy;
    }
    (x, fx)
}

/// An equilibrium to seed the search with.
fn equilibrium_start(spec: &GameSpec) -> Result<StrategyProfile> {
    if spec.g() < 1.0 {
        Ok(solve_ne(spec)?.canonical)
    } else if spec.users() == 1 {
        let wf = waterfill_closed_form(spec.profile(), spec.budgets()[0])?;
        Ok(StrategyProfile::new(vec![wf.strategy]))
    } else {
        Ok(continuum_g1(spec, 1, 0)?.remove(0))
    }
}

/// Each user's budget spread by normalized exponential draws (a flat
/// Dirichlet point scaled to the budget).
fn random_start(spec: &GameSpec, rng: &mut ChaCha8Rng) -> StrategyProfile {
    let profile = spec.profile();
    StrategyProfile::new(
        spec.budgets()
            .iter()
            .map(|&b| {
                let e: Vec<f64> = (0..profile.len()).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                let scale = b / profile.weighted_sum(&e);
                Strategy::new(e.iter().map(|v| v * scale).collect())
            })
            .collect(),
    )
}

/// Best total-rate profile (canonical order) over the equilibrium start and
/// `starts` random starts. Start `s` draws from ChaCha8 stream `s` of `seed`,
/// so the result does not depend on scheduling.
pub fn centralized_solve(spec: &GameSpec, starts: usize, seed: u64) -> Result<StrategyProfile> {
    let warm = equilibrium_start(spec)?;
    let results: Vec<(StrategyProfile, f64)> = (0..=starts)
        .into_par_iter()
        .map(|s| {
            let start = if s == 0 {
                warm.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(s as u64);
                random_start(spec, &mut rng)
            };
            ascend(spec, start)
        })
        .collect();
    let mut best = 0;
    for (s, r) in results.iter().enumerate() {
        if r.1 > results[best].1 {
            best = s;
        }
    }
    Ok(results.into_iter().nth(best).map(|r| r.0).expect("at least one start"))
}

/// Equilibrium versus centralized optimum at every crosstalk level in `g_grid`.
pub fn poa_sweep(template: &GameSpec, g_grid: &[f64], starts: usize, seed: u64) -> Result<Vec<PoaPoint>> {
    g_grid
        .iter()
        .map(|&g| {
            let spec = template.with_g(g)?;
            let ne = solve_ne(&spec)?;
            let opt = centralized_solve(&spec, starts, seed)?;
            let per_user_opt = spec.user_values_to_original(&payoffs(spec.profile(), g, &opt));
            let ne_sum_rate: f64 = ne.payoffs.iter().sum();
            let opt_sum_rate: f64 = per_user_opt.iter().sum();
            Ok(PoaPoint {
                g,
                ne_sum_rate,
                opt_sum_rate,
                poa: 1.0 - ne_sum_rate / opt_sum_rate,
                per_user_ne: ne.payoffs,
                per_user_opt,
            })
        })
        .collect()
}
