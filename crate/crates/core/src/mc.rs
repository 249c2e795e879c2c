//! Seeded Monte-Carlo simulation of the detection chain: draw a photon
//! number, thin it by η, add Poisson(γ) noise photons, route every photon to
//! one of four detectors uniformly, and record which detectors fire.
//!
//! Trials are grouped into fixed-size blocks; block `b` draws from a ChaCha8
//! stream keyed by `(seed, b)`, so results do not depend on thread count or
//! scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clicks::{ClickDistribution, CoherenceTriple, DETECTORS};
use crate::detection::DetectionParams;
use crate::error::CoherenceError;
use crate::state::{squeezed_distribution, PhotonDistribution, StateParams, DEFAULT_TAIL_TOL};

const BLOCK: u64 = 1 << 14;

/// Stratum streams are offset so they never collide with direct-mode streams.
const STRATUM_STREAM_SHIFT: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Source {
    /// Phase-dependent squeezed state.
    Squeezed(StateParams),
    /// Exactly `n` photons per pulse.
    Fock { n: usize },
}

impl Source {
    pub fn distribution(&self, tail_tol: f64) -> Result<PhotonDistribution, CoherenceError> {
        match self {
            Source::Squeezed(p) => squeezed_distribution(p, tail_tol),
            Source::Fock { n } => Ok(PhotonDistribution::fock(*n)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Photon number drawn by inverse CDF each trial.
    Direct,
    /// Trials split evenly over the source photon numbers with non-negligible
    /// probability; estimates are reweighted by the exact probabilities.
    /// Makes multi-click events observable in weak-field regimes.
    Stratified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub source: Source,
    pub detection: DetectionParams,
    #[serde(default = "default_sampling")]
    pub sampling: Sampling,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

fn default_sampling() -> Sampling {
    Sampling::Direct
}

fn default_tail_tol() -> f64 {
    DEFAULT_TAIL_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub trials: u64,
    /// Trials with 0..4 clicks.
    pub click_histogram: [u64; 5],
    /// Times each detector fired.
    pub detector_clicks: [u64; 4],
    /// Estimated Γ₀..Γ₄ (reweighted under stratified sampling).
    pub gamma_hat: [f64; 5],
    pub gamma_se: [f64; 5],
    pub estimated: CoherenceTriple,
    /// Standard errors of g², g³, g⁴, ⟨n⟩.
    pub std_errors: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error(transparent)]
    Invalid(#[from] CoherenceError),
    #[error("no signal: no clicks recorded in {trials} trials")]
    NoSignal { trials: u64, click_histogram: [u64; 5] },
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Tally {
    hist: [u64; 5],
    detectors: [u64; 4],
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for i in 0..5 {
            self.hist[i] += other.hist[i];
        }
        for i in 0..4 {
            self.detectors[i] += other.detectors[i];
        }
        self
    }
}

struct Chain {
    eta: f64,
    noise: Option<Poisson<f64>>,
}

impl Chain {
    fn new(detection: &DetectionParams) -> Result<Self, CoherenceError> {
        detection.validate()?;
        let noise = if detection.gamma > 0.0 {
            Some(Poisson::new(detection.gamma).map_err(|e| CoherenceError::invalid("gamma", e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            eta: detection.eta,
            noise,
        })
    }

    /// Returns the bitmask of fired detectors for `n` source photons.
    fn trial<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> u8 {
        let kept = if self.eta >= 1.0 || n == 0 {
            n
        } else if self.eta <= 0.0 {
            0
        } else {
            Binomial::new(n, self.eta).expect("valid binomial").sample(rng)
        };
        let extra = self.noise.as_ref().map_or(0, |p| p.sample(rng) as u64);
        let mut mask = 0u8;
        for _ in 0..kept + extra {
            mask |= 1 << rng.random_range(0..DETECTORS as u8);
            if mask == 0b1111 {
                break;
            }
        }
        mask
    }
}

fn record(t: &mut Tally, mask: u8) {
    t.hist[mask.count_ones() as usize] += 1;
    for d in 0..4 {
        if mask & (1 << d) != 0 {
            t.detectors[d] += 1;
        }
    }
}

fn block_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `trials` trials, drawing the photon number with `draw`, on streams
/// `stream_base + block`.
fn run_blocks(
    trials: u64,
    seed: u64,
    stream_base: u64,
    chain: &Chain,
    draw: &(dyn Fn(&mut ChaCha8Rng) -> u64 + Sync),
) -> Tally {
    let blocks = trials.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, stream_base + b);
            let count = BLOCK.min(trials - b * BLOCK);
            let mut t = Tally::default();
            for _ in 0..count {
                let n = draw(&mut rng);
                record(&mut t, chain.trial(n, &mut rng));
            }
            t
        })
        .reduce(Tally::default, Tally::merge)
}

fn inverse_cdf(cdf: &[f64], u: f64) -> u64 {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1) as u64
}

pub fn run_mc(config: &McConfig) -> Result<McResult, McError> {
    if config.trials == 0 {
        return Err(CoherenceError::invalid("trials", "must be >= 1").into());
    }
    let chain = Chain::new(&config.detection)?;
    let dist = config.source.distribution(config.tail_tol)?;

    let (tally, gamma_hat, cov) = match config.sampling {
        Sampling::Direct => {
            let mut acc = 0.0;
            let cdf: Vec<f64> = dist
                .probs()
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
            let total = acc;
            let tally = run_blocks(config.trials, config.seed, 0, &chain, &|rng| {
                inverse_cdf(&cdf, rng.random::<f64>() * total)
            });
            let t = config.trials as f64;
            let gamma_hat = tally.hist.map(|c| c as f64 / t);
            let cov = multinomial_cov(&gamma_hat, t);
            (tally, gamma_hat, cov)
        }
        Sampling::Stratified => stratified(config, &chain, &dist)?,
    };

    let gamma_se = [0, 1, 2, 3, 4].map(|i| cov[i][i].max(0.0).sqrt());
    let clicks = ClickDistribution::from_gammas(gamma_hat, 0.0);
    if tally.hist[0] == config.trials || !(clicks.mean_clicks > 0.0) {
        return Err(McError::NoSignal {
            trials: config.trials,
            click_histogram: tally.hist,
        });
    }
    let estimated = crate::clicks::coherence_from_clicks(&clicks)?;
    let std_errors = delta_method(&gamma_hat, &cov);
    Ok(McResult {
        trials: config.trials,
        click_histogram: tally.hist,
        detector_clicks: tally.detectors,
        gamma_hat,
        gamma_se,
        estimated,
        std_errors,
    })
}

/// Minimum probability for a photon number to get its own stratum.
const STRATUM_MIN_PROB: f64 = 1e-30;

fn stratified(
    config: &McConfig,
    chain: &Chain,
    dist: &PhotonDistribution,
) -> Result<(Tally, [f64; 5], [[f64; 5]; 5]), McError> {
    let strata: Vec<(usize, f64)> = dist
        .probs()
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, p)| p > STRATUM_MIN_PROB)
        .collect();
    let k = strata.len() as u64;
    if config.trials < k {
        return Err(CoherenceError::invalid("trials", format!("stratified sampling needs at least {k} trials")).into());
    }
    let total_p: f64 = strata.iter().map(|s| s.1).sum();
    let mut tally = Tally::default();
    let mut gamma_hat = [0.0; 5];
    let mut cov = [[0.0; 5]; 5];
    for (idx, &(n, p)) in strata.iter().enumerate() {
        let trials = config.trials / k + u64::from((idx as u64) < config.trials % k);
        let base = ((n as u64) + 1) << STRATUM_STREAM_SHIFT;
        let t = run_blocks(trials, config.seed, base, chain, &|_| n as u64);
        let w = p / total_p;
        let freq = t.hist.map(|c| c as f64 / trials as f64);
        let c = multinomial_cov(&freq, trials as f64);
        for i in 0..5 {
            gamma_hat[i] += w * freq[i];
            for j in 0..5 {
                cov[i][j] += w * w * c[i][j];
            }
        }
        tally = tally.merge(t);
    }
    Ok((tally, gamma_hat, cov))
}

fn multinomial_cov(p: &[f64; 5], trials: f64) -> [[f64; 5]; 5] {
    let mut c = [[0.0; 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            let diag = if i == j { p[i] } else { 0.0 };
            c[i][j] = (diag - p[i] * p[j]) / trials;
        }
    }
    c
}

/// Propagates the Γ covariance through the estimators to first order.
fn delta_method(g: &[f64; 5], cov: &[[f64; 5]; 5]) -> [f64; 4] {
    let n: f64 = (0..5).map(|i| i as f64 * g[i]).sum();
    let num2 = 8.0 * g[2] + 24.0 * g[3] + 48.0 * g[4];
    let c2 = [0.0, 0.0, 8.0, 24.0, 48.0];
    let mut grads = [[0.0; 5]; 4];
    for i in 0..5 {
        let dn = i as f64;
        grads[0][i] = c2[i] / (3.0 * n * n) - 2.0 * num2 * dn / (3.0 * n.powi(3));
        grads[1][i] = if i == 3 { 16.0 / n.powi(3) } else { 0.0 } - 48.0 * g[3] * dn / n.powi(4);
        grads[2][i] = if i == 4 { 256.0 / n.powi(4) } else { 0.0 } - 1024.0 * g[4] * dn / n.powi(5);
        grads[3][i] = dn;
    }
    grads.map(|grad| {
        let mut v = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                v += grad[i] * cov[i][j] * grad[j];
            }
        }
        v.max(0.0).sqrt()
    })
}
