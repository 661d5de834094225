//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wfgame::model::{validate_and_canonicalize, ChannelProfile, GameSpec, Strategy, StrategyProfile};

pub fn ex1_noise() -> Vec<f64> {
    (0..5).map(|i| 1.7f64.powi(i)).collect()
}

pub fn ex_game(g: f64, budgets: Vec<f64>) -> GameSpec {
    validate_and_canonicalize(vec![0.2; 5], ex1_noise(), g, budgets).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_channels(rng: &mut impl Rng, max_n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rng.gen_range(1..=max_n);
    let weights = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let noise = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
    (weights, noise)
}

/// Budgets drawn from (0.05, 10); distinct with probability one.
pub fn random_budgets(rng: &mut impl Rng, users: usize) -> Vec<f64> {
    loop {
        let b: Vec<f64> = (0..users).map(|_| rng.gen_range(0.05..10.0)).collect();
        let mut s = b.clone();
        s.sort_by(f64::total_cmp);
        if s.windows(2).all(|w| w[0] < w[1]) {
            return b;
        }
    }
}

pub fn random_game(rng: &mut impl Rng, users: usize, max_n: usize, g: f64) -> GameSpec {
    let (w, n) = random_channels(rng, max_n);
    validate_and_canonicalize(w, n, g, random_budgets(rng, users)).unwrap()
}

/// Each user's budget spread over the channels at random.
pub fn random_feasible(rng: &mut impl Rng, spec: &GameSpec) -> StrategyProfile {
    let profile = spec.profile();
    StrategyProfile::new(
        spec.budgets()
            .iter()
            .map(|&b| {
                let raw: Vec<f64> = (0..profile.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
                let scale = b / profile.weighted_sum(&raw);
                Strategy::new(raw.iter().map(|v| v * scale).collect())
            })
            .collect(),
    )
}

prop_compose! {
    pub fn channels(max_n: usize)(n in 1..=max_n)(
        weights in prop::collection::vec(0.05f64..1.0, n),
        noise in prop::collection::vec(0.1f64..10.0, n),
    ) -> (Vec<f64>, Vec<f64>) {
        (weights, noise)
    }
}

prop_compose! {
    pub fn channel_profile(max_n: usize)((w, n) in channels(max_n)) -> ChannelProfile {
        ChannelProfile::new(w, n).unwrap()
    }
}

prop_compose! {
    /// A game with `users` distinct budgets and crosstalk in [0, 0.95].
    pub fn game(users: usize, max_n: usize)(
        (w, n) in channels(max_n),
        g in 0.0f64..0.95,
        budgets in prop::collection::vec(0.05f64..10.0, users),
    ) -> GameSpec {
        validate_and_canonicalize(w, n, g, budgets).unwrap()
    }
}

pub fn strict(spec: &GameSpec) -> bool {
    spec.budgets().windows(2).all(|w| w[0] > w[1] * (1.0 + 1e-9))
}
