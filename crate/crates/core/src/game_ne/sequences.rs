//! Algebra of the threshold sequence `t^1 >= ... >= t^L`, the multiplier
//! sequence `omega^1 <= ... <= omega^L`, and the strategy map they induce.
//!
//! Users are indexed from 0 in code; the factor `1 + (r-1) g` of the
//! one-based formulas becomes `1 + r g`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelProfile, Strategy, StrategyProfile};

/// Water thresholds in canonical user order, nonincreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThresholdSet {
    pub t: Vec<f64>,
}

/// Lagrange multipliers in canonical user order, positive and nondecreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiplierSet {
    pub omega: Vec<f64>,
}

impl ThresholdSet {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.windows(2).any(|w| !(w[1] <= w[0])) {
            return Err(Error::UnsortedThresholds);
        }
        Ok(Self { t })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

impl MultiplierSet {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        let positive = omega.iter().all(|&w| w > 0.0 && w.is_finite());
        if !positive || omega.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::UnsortedMultipliers);
        }
        Ok(Self { omega })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

pub(crate) fn check_crosstalk(g: f64) -> Result<()> {
    if (0.0..1.0).contains(&g) {
        Ok(())
    } else {
        Err(Error::CrosstalkOutOfRange(g))
    }
}

/// `t^r = ((1 + (r-1) g) / omega^r - g sum_{j<=r} 1/omega^j) / (1 - g)`,
/// evaluated through the equivalent recurrence
/// `t^{r+1} = t^r + (1 + (r-1) g)/(1 - g) (1/omega^{r+1} - 1/omega^r)`
/// so that the output is exactly nonincreasing.
pub fn thresholds_from_multipliers(omega: &MultiplierSet, g: f64) -> Result<ThresholdSet> {
    check_crosstalk(g)?;
    let omega = MultiplierSet::new(omega.omega.clone())?;
    let inv: Vec<f64> = omega.omega.iter().map(|w| 1.0 / w).collect();
    let mut t = Vec::with_capacity(inv.len());
    for (r, &v) in inv.iter().enumerate() {
        match t.last() {
            None => t.push(v),
            Some(&prev) => {
                let step = (1.0 + (r - 1) as f64 * g) / (1.0 - g) * (v - inv[r - 1]);
                t.push((prev + step).min(prev));
            }
        }
    }
    Ok(ThresholdSet { t })
}

/// Inverse of [`thresholds_from_multipliers`]:
/// `1/omega^1 = t^1`, `1/omega^{r+1} = 1/omega^r + (1 - g)/(1 + (r-1) g) (t^{r+1} - t^r)`.
pub fn multipliers_from_thresholds(t: &ThresholdSet, g: f64) -> Result<MultiplierSet> {
    check_crosstalk(g)?;
    let t = ThresholdSet::new(t.t.clone())?;
    let mut inv: Vec<f64> = Vec::with_capacity(t.len());
    for (r, &tr) in t.t.iter().enumerate() {
        let v = match inv.last() {
            None => tr,
            Some(&prev) => prev + (1.0 - g) / (1.0 + (r - 1) as f64 * g) * (tr - t.t[r - 1]),
        };
        if !(v > 0.0) {
            return Err(Error::NonPositiveReciprocal(r));
        }
        inv.push(v);
    }
    let mut omega: Vec<f64> = inv.iter().map(|v| 1.0 / v).collect();
    // Reciprocals of a nonincreasing sequence can wobble by one ulp.
    for r in 1..omega.len() {
        omega[r] = omega[r].max(omega[r - 1]);
    }
    Ok(MultiplierSet { omega })
}

/// `tau(k, m) = (1 + m g) sum_{j=k}^{m-1} (t_j - t_{j+1}) / (1 + j g) + t_m`
/// for zero-based users `k <= m`: the water level seen by user `k` on a
/// channel shared by users `0..=m`.
pub fn tau(k: usize, m: usize, t: &ThresholdSet, g: f64) -> Result<f64> {
    if k > m || m >= t.len() {
        return Err(Error::IndexOutOfRange(format!(
            "tau requires k <= m < L, got k={k}, m={m}, L={}",
            t.len()
        )));
    }
    Ok((1.0 + m as f64 * g) * telescoped(k, m, &t.t, g) + t.t[m])
}

fn telescoped(k: usize, m: usize, t: &[f64], g: f64) -> f64 {
    (k..m).map(|j| (t[j] - t[j + 1]) / (1.0 + j as f64 * g)).sum()
}

/// Power of user `k` on a channel with noise `n0`, given `t[k..]`.
///
/// The channel hosts users `k..=m` from this tail (all of `0..=m` in fact),
/// where `m` is the last user whose threshold exceeds `n0`. The power is
/// `(tau(k, m) - n0) / (1 + m g)`, written in its divided-out form.
fn user_power(k: usize, tail: &[f64], g: f64, n0: f64) -> f64 {
    let active = tail.iter().take_while(|&&t| n0 < t).count();
    if active == 0 {
        return 0.0;
    }
    let m = active - 1;
    let shared: f64 = (0..m)
        .map(|j| (tail[j] - tail[j + 1]) / (1.0 + (k + j) as f64 * g))
        .sum();
    shared + (tail[m] - n0) / (1.0 + (k + m) as f64 * g)
}

/// Candidate equilibrium strategies (canonical order) induced by thresholds.
///
/// On a channel with `t^{m+1} <= N0_i < t^m` users `1..=m` transmit with
/// `T^k_i = (tau(k, m) - N0_i) / (1 + (m-1) g)`; all others are silent.
pub fn strategy_from_thresholds(profile: &ChannelProfile, g: f64, t: &ThresholdSet) -> Result<StrategyProfile> {
    check_crosstalk(g)?;
    let t = ThresholdSet::new(t.t.clone())?;
    let mut rows = Vec::with_capacity(t.len());
    for k in 0..t.len() {
        let mut powers = Vec::with_capacity(profile.len());
        for (channel, &n0) in profile.noise().iter().enumerate() {
            let p = user_power(k, &t.t[k..], g, n0);
            if p < 0.0 {
                if p < -1e-12 * t.t[0].abs().max(1.0) {
                    return Err(Error::NegativePower {
                        user: k,
                        channel,
                        value: p,
                    });
                }
                powers.push(0.0);
            } else {
                powers.push(p);
            }
        }
        rows.push(Strategy::new(powers));
    }
    Ok(StrategyProfile::new(rows))
}

/// `H~^k(t_k; t^{k+1..L})`: weighted power of user `k` when its own threshold
/// is `t_k` and the weaker users' thresholds are fixed at `lower`.
pub fn htilde(profile: &ChannelProfile, g: f64, k: usize, t_k: f64, lower: &[f64]) -> f64 {
    let mut tail = Vec::with_capacity(lower.len() + 1);
    tail.push(t_k);
    tail.extend_from_slice(lower);
    profile
        .weights()
        .iter()
        .zip(profile.noise())
        .map(|(pi, &n0)| pi * user_power(k, &tail, g, n0))
        .sum()
}

/// Slope of `H~^k` in `t_k` just to the right of `at`.
pub(crate) fn htilde_slope(profile: &ChannelProfile, g: f64, k: usize, at: f64) -> f64 {
    let weight: f64 = profile
        .weights()
        .iter()
        .zip(profile.noise())
        .filter(|(_, &n0)| n0 <= at)
        .map(|(pi, _)| pi)
        .sum();
    weight / (1.0 + k as f64 * g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> ChannelProfile {
        ChannelProfile::uniform((0..5).map(|i| 1.7f64.powi(i)).collect()).unwrap()
    }

    /// Direct evaluation of the defining formula for `t^r`.
    fn thresholds_explicit(omega: &[f64], g: f64) -> Vec<f64> {
        (0..omega.len())
            .map(|r| {
                let sum: f64 = omega[..=r].iter().map(|w| 1.0 / w).sum();
                ((1.0 + r as f64 * g) / omega[r] - g * sum) / (1.0 - g)
            })
            .collect()
    }

    #[test]
    fn thresholds_examples() {
        let one = thresholds_from_multipliers(&MultiplierSet { omega: vec![0.25] }, 0.7).unwrap();
        assert_eq!(one.t, vec![4.0]);

        let two = thresholds_from_multipliers(&MultiplierSet { omega: vec![0.25, 1.0 / 3.0] }, 0.5).unwrap();
        assert!((two.t[0] - 4.0).abs() < 1e-12);
        assert!((two.t[1] - 2.0).abs() < 1e-12);

        let omega = vec![0.1, 0.2, 0.5];
        let free = thresholds_from_multipliers(&MultiplierSet { omega: omega.clone() }, 0.0).unwrap();
        for (t, w) in free.t.iter().zip(&omega) {
            assert!((t - 1.0 / w).abs() < 1e-12);
        }
    }

    #[test]
    fn recurrence_matches_explicit_formula() {
        let omega = vec![0.05, 0.08, 0.08, 0.3];
        for g in [0.0, 0.2, 0.9] {
            let rec = thresholds_from_multipliers(&MultiplierSet { omega: omega.clone() }, g).unwrap();
            for (a, b) in rec.t.iter().zip(thresholds_explicit(&omega, g)) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "g={g}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn multipliers_examples() {
        let m = multipliers_from_thresholds(&ThresholdSet { t: vec![4.0, 2.0] }, 0.5).unwrap();
        assert!((m.omega[0] - 0.25).abs() < 1e-15);
        assert!((m.omega[1] - 1.0 / 3.0).abs() < 1e-15);
        let single = multipliers_from_thresholds(&ThresholdSet { t: vec![8.0] }, 0.3).unwrap();
        assert_eq!(single.omega, vec![0.125]);
    }

    #[test]
    fn ordering_errors() {
        assert_eq!(
            thresholds_from_multipliers(&MultiplierSet { omega: vec![0.5, 0.25] }, 0.5).unwrap_err(),
            Error::UnsortedMultipliers
        );
        assert_eq!(
            multipliers_from_thresholds(&ThresholdSet { t: vec![1.0, 2.0] }, 0.5).unwrap_err(),
            Error::UnsortedThresholds
        );
        assert_eq!(
            multipliers_from_thresholds(&ThresholdSet { t: vec![1.0, 0.0] }, 0.0).unwrap_err(),
            Error::NonPositiveReciprocal(1)
        );
        assert_eq!(
            thresholds_from_multipliers(&MultiplierSet { omega: vec![0.5] }, 1.0).unwrap_err(),
            Error::CrosstalkOutOfRange(1.0)
        );
    }

    #[test]
    fn tau_examples() {
        let t = ThresholdSet { t: vec![10.0008, 5.0008] };
        assert_eq!(tau(0, 0, &t, 0.9).unwrap(), 10.0008);
        assert_eq!(tau(1, 1, &t, 0.9).unwrap(), 5.0008);
        assert!((tau(0, 1, &t, 0.9).unwrap() - 14.5008).abs() < 1e-12);

        let flat = ThresholdSet { t: vec![9.0, 4.0, 4.0] };
        assert_eq!(tau(1, 2, &flat, 0.37).unwrap(), 4.0);
        assert!(matches!(tau(2, 1, &flat, 0.5), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(tau(0, 3, &flat, 0.5), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn user_power_agrees_with_tau() {
        let t = ThresholdSet { t: vec![12.0, 7.0, 3.5, 2.0] };
        let g = 0.6;
        for k in 0..4 {
            for m in k..4 {
                let n0 = if m + 1 < 4 { 0.5 * (t.t[m] + t.t[m + 1]) } else { 1.0 };
                let via_tau = (tau(k, m, &t, g).unwrap() - n0) / (1.0 + m as f64 * g);
                let direct = user_power(k, &t.t[k..], g, n0);
                assert!((via_tau - direct).abs() < 1e-12, "k={k} m={m}");
            }
        }
    }

    #[test]
    fn two_user_reference_strategies() {
        let p = ex1();
        let t = ThresholdSet { t: vec![10.0008, 5.0008] };
        let s = strategy_from_thresholds(&p, 0.9, &t).unwrap();
        let t1 = [7.106, 6.737, 6.111, 5.046];
        let t2 = [2.106, 1.737, 1.111, 0.046, 0.0];
        for i in 0..4 {
            assert!((s.user(0)[i] - t1[i]).abs() < 2e-3, "T1[{i}] = {}", s.user(0)[i]);
        }
        for i in 0..5 {
            assert!((s.user(1)[i] - t2[i]).abs() < 2e-3, "T2[{i}] = {}", s.user(1)[i]);
        }
        // N0_5 = 8.3521 < t^1, so the stronger user also transmits on channel 5.
        assert!((s.user(0)[4] - (10.0008 - p.noise()[4])).abs() < 1e-12);
    }

    #[test]
    fn single_user_map_is_waterfilling() {
        let p = ex1();
        let s = strategy_from_thresholds(&p, 0.4, &ThresholdSet { t: vec![3.0] }).unwrap();
        for (x, n) in s.user(0).iter().zip(p.noise()) {
            assert_eq!(*x, (3.0 - n).max(0.0));
        }
    }

    #[test]
    fn htilde_examples() {
        let p = ex1();
        assert_eq!(htilde(&p, 0.9, 1, 0.8, &[]), 0.0);
        assert_eq!(htilde(&p, 0.9, 1, 1.0, &[]), 0.0);
        assert!((htilde(&p, 0.9, 1, 5.0008, &[]) - 1.0).abs() < 1e-3);
        // First four channels carry a weighted 5.0; the last adds pi_5 (t^1 - N0_5).
        let expected = 5.0 + 0.2 * (10.0008 - p.noise()[4]);
        assert!((htilde(&p, 0.9, 0, 10.0008, &[5.0008]) - expected).abs() < 1e-3);
    }

    #[test]
    fn htilde_is_budget_of_strategy_map() {
        let p = ex1();
        let t = ThresholdSet { t: vec![9.0, 6.0, 2.5] };
        let s = strategy_from_thresholds(&p, 0.35, &t).unwrap();
        for k in 0..3 {
            let h = htilde(&p, 0.35, k, t.t[k], &t.t[k + 1..]);
            assert!((h - p.weighted_sum(s.user(k))).abs() < 1e-12);
        }
    }
}
