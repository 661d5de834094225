//! Domain types shared by every solver: the channel environment, the game
//! instance, strategies, and the Shannon-rate payoffs.
//!
//! All solvers work in *canonical order*: channels sorted by nondecreasing
//! noise floor and users sorted by nonincreasing power budget. The
//! constructors below sort the raw inputs and keep the permutations so results
//! can be reported in the caller's original order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for `sum_i pi_i T_i == budget`.
pub const TOL_BUDGET: f64 = 1e-9;

/// Channel weights `pi_i` and noise floors `N0_i`, stored in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    weights: Vec<f64>,
    noise: Vec<f64>,
    /// `order[c]` is the original index of canonical channel `c`.
    order: Vec<usize>,
}

impl ChannelProfile {
    /// Validates and sorts channels by noise (stable, so ties keep their
    /// original relative order).
    pub fn new(weights: Vec<f64>, noise: Vec<f64>) -> Result<Self> {
        if noise.is_empty() {
            return Err(Error::EmptyInput("noise"));
        }
        if weights.len() != noise.len() {
            return Err(Error::DimensionMismatch {
                what: "weights",
                got: weights.len(),
                expected: noise.len(),
            });
        }
        check_positive("weights", &weights)?;
        check_positive("noise", &noise)?;

        let mut order: Vec<usize> = (0..noise.len()).collect();
        order.sort_by(|&a, &b| noise[a].total_cmp(&noise[b]));
        Ok(Self {
            weights: order.iter().map(|&i| weights[i]).collect(),
            noise: order.iter().map(|&i| noise[i]).collect(),
            order,
        })
    }

    /// Builds a profile whose weights are all `1/n`.
    pub fn uniform(noise: Vec<f64>) -> Result<Self> {
        let n = noise.len().max(1);
        Self::new(vec![1.0 / n as f64; noise.len()], noise)
    }

    pub fn len(&self) -> usize {
        self.noise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noise.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `sum_i pi_i x_i`.
    pub fn weighted_sum(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(p, x)| p * x).sum()
    }

    /// Maps a per-channel vector from canonical to original channel order.
    pub fn to_original(&self, canonical: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; canonical.len()];
        for (c, &orig) in self.order.iter().enumerate() {
            out[orig] = canonical[c];
        }
        out
    }

    /// Maps a per-channel vector from original to canonical channel order.
    pub fn to_canonical(&self, original: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&i| original[i]).collect()
    }
}

fn check_positive(what: &'static str, values: &[f64]) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        // NaN fails this comparison too.
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveValue { what, index, value });
        }
    }
    Ok(())
}

/// Power allocation of a single user over the channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Strategy {
    pub powers: Vec<f64>,
}

impl Strategy {
    pub fn new(powers: Vec<f64>) -> Self {
        Self { powers }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            powers: vec![0.0; n],
        }
    }

    /// Checks nonnegativity and `|sum pi_i T_i - budget| <= TOL_BUDGET * max(1, budget)`.
    pub fn check_feasible(&self, profile: &ChannelProfile, budget: f64) -> Result<()> {
        if self.powers.len() != profile.len() {
            return Err(Error::DimensionMismatch {
                what: "strategy",
                got: self.powers.len(),
                expected: profile.len(),
            });
        }
        if let Some((i, &p)) = self
            .powers
            .iter()
            .enumerate()
            .find(|(_, p)| !(**p >= 0.0 && p.is_finite()))
        {
            return Err(Error::InfeasibleProfile(format!(
                "power {p} on channel {i} is negative or not finite"
            )));
        }
        let spent = profile.weighted_sum(&self.powers);
        if (spent - budget).abs() > TOL_BUDGET * budget.max(1.0) {
            return Err(Error::InfeasibleProfile(format!(
                "weighted power {spent} does not match budget {budget}"
            )));
        }
        Ok(())
    }
}

/// One strategy per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyProfile {
    pub strategies: Vec<Strategy>,
}

impl StrategyProfile {
    pub fn new(strategies: Vec<Strategy>) -> Self {
        Self { strategies }
    }

    pub fn zeros(users: usize, n: usize) -> Self {
        Self {
            strategies: vec![Strategy::zeros(n); users],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        Self {
            strategies: rows.into_iter().map(Strategy::new).collect(),
        }
    }

    pub fn users(&self) -> usize {
        self.strategies.len()
    }

    pub fn user(&self, j: usize) -> &[f64] {
        &self.strategies[j].powers
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.strategies.iter().map(|s| s.powers.clone()).collect()
    }

    /// Per-channel sum of all users' powers.
    pub fn aggregate(&self, n: usize) -> Vec<f64> {
        let mut total = vec![0.0; n];
        for s in &self.strategies {
            for (acc, p) in total.iter_mut().zip(&s.powers) {
                *acc += p;
            }
        }
        total
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(&self, other: &StrategyProfile) -> f64 {
        self.strategies
            .iter()
            .zip(&other.strategies)
            .flat_map(|(a, b)| a.powers.iter().zip(&b.powers).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// A symmetric water-filling game in canonical form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    profile: ChannelProfile,
    g: f64,
    budgets: Vec<f64>,
    /// `user_order[u]` is the original index of canonical user `u`.
    user_order: Vec<usize>,
}

/// Validates raw game data and sorts channels (by noise) and users (by budget).
pub fn validate_and_canonicalize(
    weights: Vec<f64>,
    noise: Vec<f64>,
    g: f64,
    budgets: Vec<f64>,
) -> Result<GameSpec> {
    let profile = ChannelProfile::new(weights, noise)?;
    GameSpec::new(profile, g, budgets)
}

impl GameSpec {
    pub fn new(profile: ChannelProfile, g: f64, budgets: Vec<f64>) -> Result<Self> {
        if budgets.is_empty() {
            return Err(Error::EmptyInput("budgets"));
        }
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::CrosstalkOutOfRange(g));
        }
        check_positive("budgets", &budgets)?;
        let mut user_order: Vec<usize> = (0..budgets.len()).collect();
        user_order.sort_by(|&a, &b| budgets[b].total_cmp(&budgets[a]));
        Ok(Self {
            budgets: user_order.iter().map(|&u| budgets[u]).collect(),
            profile,
            g,
            user_order,
        })
    }

    pub fn profile(&self) -> &ChannelProfile {
        &self.profile
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// Budgets in canonical (nonincreasing) order.
    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn user_order(&self) -> &[usize] {
        &self.user_order
    }

    pub fn users(&self) -> usize {
        self.budgets.len()
    }

    pub fn channels(&self) -> usize {
        self.profile.len()
    }

    /// Same instance with a different crosstalk coefficient.
    pub fn with_g(&self, g: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::CrosstalkOutOfRange(g));
        }
        Ok(Self { g, ..self.clone() })
    }

    /// Budgets in the caller's original user order.
    pub fn original_budgets(&self) -> Vec<f64> {
        self.user_values_to_original(&self.budgets)
    }

    pub fn user_values_to_original(&self, canonical: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; canonical.len()];
        for (u, &orig) in self.user_order.iter().enumerate() {
            out[orig] = canonical[u];
        }
        out
    }

    /// Canonical profile -> original user and channel order.
    pub fn to_original(&self, canonical: &StrategyProfile) -> StrategyProfile {
        let mut rows = vec![Strategy::zeros(self.channels()); canonical.users()];
        for (u, &orig) in self.user_order.iter().enumerate() {
            rows[orig] = Strategy::new(self.profile.to_original(canonical.user(u)));
        }
        StrategyProfile::new(rows)
    }

    /// Original-order profile -> canonical order.
    pub fn to_canonical(&self, original: &StrategyProfile) -> Result<StrategyProfile> {
        self.check_dims(original)?;
        Ok(StrategyProfile::new(
            self.user_order
                .iter()
                .map(|&orig| Strategy::new(self.profile.to_canonical(original.user(orig))))
                .collect(),
        ))
    }

    pub fn check_dims(&self, all: &StrategyProfile) -> Result<()> {
        if all.users() != self.users() {
            return Err(Error::DimensionMismatch {
                what: "strategy profile",
                got: all.users(),
                expected: self.users(),
            });
        }
        for s in &all.strategies {
            if s.powers.len() != self.channels() {
                return Err(Error::DimensionMismatch {
                    what: "strategy",
                    got: s.powers.len(),
                    expected: self.channels(),
                });
            }
        }
        Ok(())
    }

    /// Dimensions, nonnegativity and every user's budget (canonical order).
    pub fn check_feasible(&self, all: &StrategyProfile) -> Result<()> {
        self.check_dims(all)?;
        for (s, &budget) in all.strategies.iter().zip(&self.budgets) {
            s.check_feasible(&self.profile, budget)?;
        }
        Ok(())
    }
}

/// Noise plus crosstalk seen by user `j`: `N0_i + g * sum_{k != j} T^k_i`.
pub fn effective_noise(profile: &ChannelProfile, g: f64, j: usize, all: &StrategyProfile) -> Vec<f64> {
    let mut noise = profile.noise().to_vec();
    if g == 0.0 {
        return noise;
    }
    for (k, s) in all.strategies.iter().enumerate() {
        if k == j {
            continue;
        }
        for (acc, p) in noise.iter_mut().zip(&s.powers) {
            *acc += g * p;
        }
    }
    noise
}

/// Shannon rate of user `j` in nats: `sum_i pi_i ln(1 + T^j_i / (N0_i + g sum_{k!=j} T^k_i))`.
pub fn payoff(profile: &ChannelProfile, g: f64, j: usize, all: &StrategyProfile) -> f64 {
    assert_eq!(all.user(j).len(), profile.len(), "strategy length must match channel count");
    let denom = effective_noise(profile, g, j, all);
    profile
        .weights()
        .iter()
        .zip(all.user(j))
        .zip(&denom)
        .map(|((pi, t), d)| pi * (t / d).ln_1p())
        .sum()
}

pub fn payoffs(profile: &ChannelProfile, g: f64, all: &StrategyProfile) -> Vec<f64> {
    (0..all.users()).map(|j| payoff(profile, g, j, all)).collect()
}

pub fn sum_rate(profile: &ChannelProfile, g: f64, all: &StrategyProfile) -> f64 {
    payoffs(profile, g, all).iter().sum()
}
