//! Joint click statistics of four identical on/off detectors behind three
//! balanced splitters, and the click-based coherence estimators.
//!
//! Every photon reaching the splitter tree lands on one of the four detectors
//! with probability 1/4, independently. `Γ_i` is the probability that exactly
//! `i` detectors fire. The estimators are
//!
//! ```text
//! g2 = (8Γ₂ + 24Γ₃ + 48Γ₄) / (3⟨n⟩²)
//! g3 = 16Γ₃ / ⟨n⟩³
//! g4 = 256Γ₄ / ⟨n⟩⁴,        ⟨n⟩ = Σ iΓᵢ
//! ```
//!
//! The g2 numerator averages the two-group correlation ⟨n₁n₂⟩ over the three
//! ways of pairing the four detectors into two groups of two.

use serde::{Deserialize, Serialize};

use crate::error::{CoherenceError, Result};
use crate::state::{kahan_sum, PhotonDistribution};

pub const DETECTORS: usize = 4;

/// Largest photon number the literal nested-sum evaluation accepts.
pub const NESTED_SUM_MAX_PHOTONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickDistribution {
    /// Γ₀..Γ₄.
    pub gamma_click: [f64; 5],
    /// ⟨n⟩ = Σ iΓᵢ.
    pub mean_clicks: f64,
    /// Photon-number mass beyond truncation. It belongs to the upper click
    /// buckets and is never folded into Γ₀.
    pub truncation_defect: f64,
}

impl ClickDistribution {
    pub fn from_gammas(gamma_click: [f64; 5], truncation_defect: f64) -> Self {
        let mean_clicks = gamma_click.iter().enumerate().map(|(i, g)| i as f64 * g).sum();
        Self {
            gamma_click,
            mean_clicks,
            truncation_defect,
        }
    }

    pub fn total(&self) -> f64 {
        kahan_sum(self.gamma_click.iter().copied())
    }

    /// Largest absolute element-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.gamma_click
            .iter()
            .zip(&other.gamma_click)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Normalized coherences of orders 2–4 with the mean count they were
/// normalized by (mean clicks for click estimators, mean photon number for
/// ideal and moment-based values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceTriple {
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub mean_clicks: f64,
}

impl CoherenceTriple {
    /// g⁽ᵐ⁾ for m ∈ {2, 3, 4}.
    pub fn order(&self, m: u8) -> Option<f64> {
        match m {
            2 => Some(self.g2),
            3 => Some(self.g3),
            4 => Some(self.g4),
            _ => None,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.g2, self.g3, self.g4]
    }
}

/// Γ₀..Γ₄ via the occupancy chain: a photon added to a configuration with k
/// occupied detectors keeps k with probability k/4 and makes k+1 otherwise.
pub fn click_probabilities(dist: &PhotonDistribution) -> ClickDistribution {
    let mut occ = [1.0, 0.0, 0.0, 0.0, 0.0];
    let mut gamma = [0.0f64; 5];
    for &p in dist.probs() {
        for (g, o) in gamma.iter_mut().zip(&occ) {
            *g += p * o;
        }
        let mut next = [0.0f64; 5];
        for k in 0..=DETECTORS {
            let stay = k as f64 / 4.0;
            next[k] += occ[k] * stay;
            if k < DETECTORS {
                next[k + 1] += occ[k] * (1.0 - stay);
            }
        }
        occ = next;
    }
    ClickDistribution::from_gammas(gamma, dist.tail_mass())
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Γⱼ = Σ_L Λ_L · C(4,j) Σᵢ (−1)ⁱ C(j,i) ((j−i)/4)^L, the probability that
/// exactly j of four equally likely cells are occupied by L balls.
pub fn occupancy_oracle(dist: &PhotonDistribution) -> ClickDistribution {
    let mut gamma = [0.0f64; 5];
    for (l, &p) in dist.probs().iter().enumerate() {
        for (j, g) in gamma.iter_mut().enumerate() {
            let mut s = 0.0;
            for i in 0..=j {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                // 0⁰ = 1 keeps the L = 0 case exact
                s += sign * binom(j, i) * ((j - i) as f64 / 4.0).powi(l as i32);
            }
            *g += p * binom(DETECTORS, j) * s;
        }
    }
    ClickDistribution::from_gammas(gamma, dist.tail_mass())
}

/// Reference evaluation of the splitter-tree multinomial sums, literally
/// indexed by the photon split at each splitter: N to one arm of the first
/// splitter (L−N to the other), K of N to D1, M of L−N to D3.
///
/// Cost is O(L³) per photon number, so distributions are limited to
/// [`NESTED_SUM_MAX_PHOTONS`].
pub fn nested_sum_clicks(dist: &PhotonDistribution) -> Result<ClickDistribution> {
    if dist.len() > NESTED_SUM_MAX_PHOTONS + 1 {
        return Err(CoherenceError::invalid(
            "dist",
            format!("nested sums accept at most {} photons", NESTED_SUM_MAX_PHOTONS),
        ));
    }
    let fact: Vec<f64> = (0..=NESTED_SUM_MAX_PHOTONS)
        .scan(1.0f64, |acc, k| {
            if k > 0 {
                *acc *= k as f64;
            }
            Some(*acc)
        })
        .collect();
    let mut gamma = [0.0f64; 5];
    for (l, &p) in dist.probs().iter().enumerate() {
        let weight = 0.25f64.powi(l as i32) * fact[l];
        if l == 0 {
            gamma[0] += p;
        }
        if l >= 1 {
            gamma[1] += 4.0 * p * 0.25f64.powi(l as i32);
        }
        if l >= 2 {
            let s: f64 = (1..l).map(|k1| 1.0 / (fact[k1] * fact[l - k1])).sum();
            gamma[2] += 6.0 * p * weight * s;
        }
        if l >= 3 {
            let mut s = 0.0;
            for k1 in 2..l {
                let k2 = l - k1;
                for k3 in 1..k1 {
                    let k4 = k1 - k3;
                    s += 1.0 / (fact[k2] * fact[k3] * fact[k4]);
                }
            }
            gamma[3] += 4.0 * p * weight * s;
        }
        if l >= 4 {
            let mut s = 0.0;
            for k1 in 2..=l - 2 {
                let k2 = l - k1;
                for k3 in 1..k1 {
                    let k4 = k1 - k3;
                    for k5 in 1..k2 {
                        let k6 = k2 - k5;
                        s += 1.0 / (fact[k3] * fact[k4] * fact[k5] * fact[k6]);
                    }
                }
            }
            gamma[4] += p * weight * s;
        }
    }
    Ok(ClickDistribution::from_gammas(gamma, dist.tail_mass()))
}

/// Click-based g², g³, g⁴.
pub fn coherence_from_clicks(clicks: &ClickDistribution) -> Result<CoherenceTriple> {
    let n = clicks.mean_clicks;
    if !(n > 0.0) {
        return Err(CoherenceError::NoSignal);
    }
    let [_, _, g2c, g3c, g4c] = clicks.gamma_click;
    Ok(CoherenceTriple {
        g2: (8.0 * g2c + 24.0 * g3c + 48.0 * g4c) / (3.0 * n * n),
        g3: 16.0 * g3c / n.powi(3),
        g4: 256.0 * g4c / n.powi(4),
        mean_clicks: n,
    })
}
