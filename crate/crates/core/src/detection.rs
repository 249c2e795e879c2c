//! Detection loss (binomial thinning) and Poissonian background noise.

use serde::{Deserialize, Serialize};

use crate::error::{CoherenceError, Result};
use crate::state::{kahan_sum, PhotonDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionParams {
    /// Overall efficiency in [0, 1].
    pub eta: f64,
    /// Mean background-noise photon number, ≥ 0.
    pub gamma: f64,
}

impl DetectionParams {
    pub const IDEAL: Self = Self { eta: 1.0, gamma: 0.0 };

    pub fn new(eta: f64, gamma: f64) -> Result<Self> {
        let d = Self { eta, gamma };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        check_eta(self.eta)?;
        check_gamma(self.gamma)
    }

    pub fn is_ideal(&self) -> bool {
        self.eta == 1.0 && self.gamma == 0.0
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(CoherenceError::invalid("eta", format!("must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(CoherenceError::invalid(
            "gamma",
            format!("must be finite and >= 0, got {gamma}"),
        ));
    }
    Ok(())
}

fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n_max {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Binomial thinning: Λₘ = Σₙ P(n) C(n,m) ηᵐ (1−η)ⁿ⁻ᵐ.
///
/// The output keeps the input length; the input tail is carried over whole.
pub fn bernoulli_loss(dist: &PhotonDistribution, eta: f64) -> Result<PhotonDistribution> {
    check_eta(eta)?;
    if eta == 1.0 {
        return Ok(dist.clone());
    }
    let len = dist.len();
    let mut out = vec![0.0; len];
    if eta == 0.0 {
        out[0] = dist.total();
        return Ok(PhotonDistribution::from_parts_unchecked(out, dist.tail_mass()));
    }
    let lnf = ln_factorials(len);
    let (ln_eta, ln_loss) = (eta.ln(), (1.0 - eta).ln());
    for (n, &p) in dist.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let ln_p = p.ln();
        for (m, slot) in out.iter_mut().enumerate().take(n + 1) {
            let ln_binom = lnf[n] - lnf[m] - lnf[n - m];
            *slot += (ln_p + ln_binom + m as f64 * ln_eta + (n - m) as f64 * ln_loss).exp();
        }
    }
    Ok(PhotonDistribution::from_parts_unchecked(out, dist.tail_mass()))
}

/// Number of extra terms appended by [`noise_convolve`], ceil(γ + 10√γ + 20).
pub fn noise_extension(gamma: f64) -> usize {
    (gamma + 10.0 * gamma.sqrt() + 20.0).ceil() as usize
}

fn poisson_pmf(gamma: f64, len: usize) -> Vec<f64> {
    let ln_g = gamma.ln();
    let mut ln_p = -gamma;
    (0..len)
        .map(|k| {
            if k > 0 {
                ln_p += ln_g - (k as f64).ln();
            }
            ln_p.exp()
        })
        .collect()
}

/// P(Poisson(γ) ≥ k), summed upward until terms vanish.
fn poisson_upper_tail(gamma: f64, k: usize) -> f64 {
    let ln_g = gamma.ln();
    let mut ln_p = -gamma + (1..=k).map(|j| ln_g - (j as f64).ln()).sum::<f64>();
    let mut total = 0.0;
    let mut j = k;
    loop {
        let term = ln_p.exp();
        total += term;
        j += 1;
        ln_p += ln_g - (j as f64).ln();
        if (j as f64) > gamma && term <= total * 1e-17 {
            break;
        }
    }
    total
}

/// Convolution with Poisson(γ) background noise,
/// q_L = Σ_{m≤L} p_m γ^{L−m} e^{−γ} / (L−m)!.
///
/// The output is longer by [`noise_extension`] terms; the Poisson mass
/// falling past the new end is added to the tail.
pub fn noise_convolve(dist: &PhotonDistribution, gamma: f64) -> Result<PhotonDistribution> {
    check_gamma(gamma)?;
    if gamma == 0.0 {
        return Ok(dist.clone());
    }
    let ext = noise_extension(gamma);
    let out_len = dist.len() + ext;
    let pois = poisson_pmf(gamma, out_len);
    let probs = dist.probs();
    let out: Vec<f64> = (0..out_len)
        .map(|l| kahan_sum((0..=l.min(probs.len() - 1)).map(|m| probs[m] * pois[l - m])))
        .collect();
    // every retained input term loses at most P(Poisson >= ext + 1)
    let lost = dist.total() * poisson_upper_tail(gamma, ext + 1);
    Ok(PhotonDistribution::from_parts_unchecked(out, dist.tail_mass() + lost))
}

/// Loss first, then noise mixing.
pub fn detect(dist: &PhotonDistribution, params: &DetectionParams) -> Result<PhotonDistribution> {
    params.validate()?;
    noise_convolve(&bernoulli_loss(dist, params.eta)?, params.gamma)
}
