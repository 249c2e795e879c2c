//! Photon-number distribution of the displaced squeezed state S(ξ)D(α)|0⟩
//! with ξ = r·e^{iθ} and real α.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoherenceError, Result};

/// Default bound on the probability mass dropped by truncation.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
/// Largest number of photon-number terms any distribution may hold.
pub const N_HARD_MAX: usize = 4096;
/// Below this squeezing the state is treated as coherent.
pub const R_MIN: f64 = 1e-8;

/// Rescale threshold for the Hermite recurrence pair.
const RESCALE_ABOVE: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateParams {
    /// Squeezing parameter, r ≥ 0.
    pub r: f64,
    /// Squeezing phase in radians.
    pub theta: f64,
    /// Real displacement amplitude.
    pub alpha: f64,
}

impl StateParams {
    pub fn new(r: f64, theta: f64, alpha: f64) -> Result<Self> {
        let p = Self { r, theta, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.r.is_finite() || self.r < 0.0 {
            return Err(CoherenceError::invalid(
                "r",
                format!("must be finite and >= 0, got {}", self.r),
            ));
        }
        if !self.theta.is_finite() {
            return Err(CoherenceError::invalid("theta", "must be finite"));
        }
        if !self.alpha.is_finite() {
            return Err(CoherenceError::invalid("alpha", "must be finite"));
        }
        Ok(())
    }

    /// ξ = r·e^{iθ}.
    pub fn squeeze_factor(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.theta)
    }

    /// Coherent amplitude of the equivalent D(Ω)S(ξ)|0⟩ ordering,
    /// Ω = α(cosh r − e^{iθ} sinh r).
    pub fn omega(&self) -> Complex64 {
        let (s, c) = (self.r.sinh(), self.r.cosh());
        self.alpha * (Complex64::new(c, 0.0) - Complex64::from_polar(s, self.theta))
    }

    /// Exact mean photon number |Ω|² + sinh²r.
    pub fn mean_photons(&self) -> f64 {
        self.omega().norm_sqr() + self.r.sinh().powi(2)
    }
}

/// Truncated probability vector p₀..p_N plus the mass dropped beyond N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl PhotonDistribution {
    /// Builds a distribution after checking non-negativity and normalization.
    pub fn new(probs: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(CoherenceError::invalid("probs", "empty distribution"));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(CoherenceError::invalid(
                "probs",
                format!("p[{i}] = {p} is not a probability"),
            ));
        }
        if !(tail_mass.is_finite() && tail_mass >= 0.0) {
            return Err(CoherenceError::invalid(
                "tail_mass",
                format!("{tail_mass} is not a probability"),
            ));
        }
        let total = kahan_sum(probs.iter().copied()) + tail_mass;
        if (total - 1.0).abs() > 1e-10 {
            return Err(CoherenceError::invalid("probs", format!("total mass {total} is not 1")));
        }
        Ok(Self { probs, tail_mass })
    }

    pub(crate) fn from_parts_unchecked(probs: Vec<f64>, tail_mass: f64) -> Self {
        Self { probs, tail_mass }
    }

    /// Normalizes arbitrary non-negative weights into a distribution with no tail.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total = kahan_sum(weights.iter().copied());
        if !(total > 0.0 && total.is_finite()) {
            return Err(CoherenceError::invalid("weights", "must have positive finite total"));
        }
        Self::new(weights.iter().map(|w| w / total).collect(), 0.0)
    }

    pub fn vacuum() -> Self {
        Self::fock(0)
    }

    /// Deterministic n-photon (Fock) distribution.
    pub fn fock(n: usize) -> Self {
        let mut probs = vec![0.0; n + 1];
        probs[n] = 1.0;
        Self { probs, tail_mass: 0.0 }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Σpₙ over the retained terms.
    pub fn total(&self) -> f64 {
        kahan_sum(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        kahan_sum(self.probs.iter().enumerate().map(|(n, p)| n as f64 * p))
    }

    /// Total-variation distance over the union of supports.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let n = self.len().max(other.len());
        let get = |d: &Self, i: usize| d.probs.get(i).copied().unwrap_or(0.0);
        0.5 * ((0..n).map(|i| (get(self, i) - get(other, i)).abs()).sum::<f64>()
            + (self.tail_mass - other.tail_mass).abs())
    }
}

pub(crate) fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    // Neumaier variant
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(CoherenceError::invalid(
            "tol",
            format!("must lie in (0, 1e-6], got {tol}"),
        ));
    }
    Ok(())
}

/// Scaled Hermite values uₙ = Hₙ(x)·t^{n/2}/√(n!) for n = 0..=n_max.
///
/// Uses the three-term recurrence
/// u_{n+1} = 2√(t/(n+1))·x·uₙ − 2t·√(n/(n+1))·u_{n−1}, which follows from
/// H_{n+1} = 2xHₙ − 2nH_{n−1}.
pub fn hermite_scaled(n_max: usize, x: Complex64, t: f64) -> Result<Vec<Complex64>> {
    if !(x.re.is_finite() && x.im.is_finite()) {
        return Err(CoherenceError::invalid("x", "must be finite"));
    }
    if !(0.0..=0.5).contains(&t) {
        return Err(CoherenceError::invalid("t", format!("must lie in [0, 0.5], got {t}")));
    }
    let mut u = Vec::with_capacity(n_max + 1);
    u.push(Complex64::new(1.0, 0.0));
    if n_max == 0 {
        return Ok(u);
    }
    u.push(2.0 * t.sqrt() * x);
    for n in 1..n_max {
        let nf = n as f64;
        let next = 2.0 * (t / (nf + 1.0)).sqrt() * x * u[n] - 2.0 * t * (nf / (nf + 1.0)).sqrt() * u[n - 1];
        u.push(next);
    }
    Ok(u)
}

/// Accumulates terms until the dropped mass is below `tol`.
///
/// `next_term(n)` yields pₙ. Stops once the compensated remainder 1 − Σp is
/// below `tol`, the last four terms are each below `tol`, and n is well past
/// the mean (so a slowly rising head is never mistaken for a tail). For tol
/// near machine precision the remainder can stall at the rounding level of
/// the sum; the series then also stops once the last four terms are below ε·tol.
fn truncate_series(mean: f64, tol: f64, mut next_term: impl FnMut(usize) -> f64) -> Result<PhotonDistribution> {
    let mut probs: Vec<f64> = Vec::new();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let min_len = (mean + 4.0 * mean.sqrt() + 4.0).ceil() as usize;
    for n in 0..N_HARD_MAX {
        let p = next_term(n).max(0.0);
        probs.push(p);
        let t = sum + p;
        if sum.abs() >= p.abs() {
            comp += (sum - t) + p;
        } else {
            comp += (p - t) + sum;
        }
        sum = t;
        let remainder = 1.0 - (sum + comp);
        let tail_small = probs.len() >= 4 && probs[probs.len() - 4..].iter().all(|&q| q < tol);
        let rounding_limited = probs.len() >= 4 && probs[probs.len() - 4..].iter().all(|&q| q <= f64::EPSILON * tol);
        if n + 1 >= min_len && tail_small && (remainder < tol || rounding_limited) {
            return Ok(PhotonDistribution::from_parts_unchecked(probs, remainder.max(0.0)));
        }
    }
    Err(CoherenceError::Truncation { tol, cap: N_HARD_MAX })
}

/// Poisson distribution with mean α², truncated so the dropped tail is below `tol`.
pub fn coherent_distribution(alpha: f64, tol: f64) -> Result<PhotonDistribution> {
    check_tol(tol)?;
    if !alpha.is_finite() {
        return Err(CoherenceError::invalid("alpha", "must be finite"));
    }
    let mu = alpha * alpha;
    if mu == 0.0 {
        return Ok(PhotonDistribution::vacuum());
    }
    let ln_mu = mu.ln();
    let mut ln_p = -mu;
    truncate_series(mu, tol, |n| {
        if n > 0 {
            ln_p += ln_mu - (n as f64).ln();
        }
        ln_p.exp()
    })
}

/// Photon-number distribution of the phase-dependent squeezed state,
///
/// P(n) = (1/cosh r)·exp[−α² + α² cos θ tanh r]·|uₙ|²,
///
/// with uₙ the scaled Hermite values at x = α e^{−iθ/2}/√(2 cosh r sinh r)
/// and t = tanh(r)/2. For r < [`R_MIN`] the coherent limit is used.
pub fn squeezed_distribution(params: &StateParams, tol: f64) -> Result<PhotonDistribution> {
    params.validate()?;
    check_tol(tol)?;
    let StateParams { r, alpha, .. } = *params;
    if r < R_MIN {
        return coherent_distribution(alpha, tol);
    }
    formula_distribution(params, tol)
}

fn formula_distribution(params: &StateParams, tol: f64) -> Result<PhotonDistribution> {
    let StateParams { r, theta, alpha } = *params;
    let (sh, ch, th) = (r.sinh(), r.cosh(), r.tanh());
    let x = Complex64::from_polar(alpha / (2.0 * ch * sh).sqrt(), -theta / 2.0);
    let t = th / 2.0;
    let two_sqrt_t_x = 2.0 * t.sqrt() * x;

    // exp[...] and |u_n|² are combined in the log domain so that large α
    // cannot overflow the recurrence or underflow the prefactor.
    let ln_prefactor = -alpha * alpha + alpha * alpha * theta.cos() * th - ch.ln();
    let mut ln_scale = 0.0f64;
    let mut prev = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::new(1.0, 0.0);

    truncate_series(params.mean_photons(), tol, |n| {
        if n == 1 {
            prev = cur;
            cur = two_sqrt_t_x * cur;
        } else if n > 1 {
            let k = (n - 1) as f64;
            let next = 2.0 * (t / (k + 1.0)).sqrt() * x * cur - 2.0 * t * (k / (k + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        let mag = cur.norm().max(prev.norm());
        if mag > RESCALE_ABOVE {
            prev /= mag;
            cur /= mag;
            ln_scale += mag.ln();
        }
        let norm2 = cur.norm_sqr();
        if norm2 == 0.0 {
            0.0
        } else {
            (ln_prefactor + 2.0 * ln_scale + norm2.ln()).exp()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    // explicit series H_n(x) = n! Σ_m (−1)^m (2x)^{n−2m} / (m! (n−2m)!)
    fn hermite_explicit(n: usize, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..=n / 2 {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * (2.0 * x).powu((n - 2 * m) as u32) / (factorial(m) * factorial(n - 2 * m));
        }
        acc * factorial(n)
    }

    #[test]
    fn hermite_zero_order_is_one() {
        let u = hermite_scaled(0, Complex64::new(3.7, -1.0), 0.3).unwrap();
        assert_eq!(u, vec![Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn hermite_at_origin() {
        let u = hermite_scaled(3, Complex64::new(0.0, 0.0), 0.1).unwrap();
        assert!((u[2].re - (-2.0 * 0.1 / 2f64.sqrt())).abs() < 1e-15);
        assert!((u[2].re + 0.141421356).abs() < 1e-8);
        assert_eq!(u[1], Complex64::new(0.0, 0.0));
        assert_eq!(u[3], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn hermite_matches_explicit_series() {
        let x = Complex64::new(0.7, -0.4);
        let t = 0.23;
        let u = hermite_scaled(15, x, t).unwrap();
        for (n, un) in u.iter().enumerate() {
            let want = hermite_explicit(n, x) * t.powf(n as f64 / 2.0) / factorial(n).sqrt();
            assert!(
                (un - want).norm() <= 1e-12 * want.norm().max(1.0),
                "n={n}: {un} vs {want}"
            );
        }
    }

    #[test]
    fn hermite_rejects_bad_inputs() {
        assert!(hermite_scaled(3, Complex64::new(f64::NAN, 0.0), 0.1).is_err());
        assert!(hermite_scaled(3, Complex64::new(1.0, 0.0), 0.6).is_err());
        assert!(hermite_scaled(3, Complex64::new(1.0, 0.0), -0.1).is_err());
    }

    #[test]
    fn vacuum_and_coherent_limits() {
        let d = squeezed_distribution(&StateParams::new(0.0, 0.0, 0.0).unwrap(), 1e-12).unwrap();
        assert_eq!(d.probs()[0], 1.0);
        assert!(d.probs()[1..].iter().all(|&p| p == 0.0));

        let d = squeezed_distribution(&StateParams::new(0.0, 0.0, 1.0).unwrap(), 1e-12).unwrap();
        assert!((d.probs()[0] - (-1f64).exp()).abs() < 1e-15);
        assert!((d.probs()[1] - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn coherent_mean() {
        let d = coherent_distribution(2.0, 1e-12).unwrap();
        assert!((d.mean() - 4.0).abs() < 1e-10);
        assert!(d.tail_mass() < 1e-12);
        assert_eq!(coherent_distribution(0.0, 1e-12).unwrap().probs(), &[1.0]);
    }

    #[test]
    fn squeezed_vacuum_matches_closed_form() {
        // P(2k) = tanh^{2k} r (2k)! / (4^k (k!)² cosh r), odd terms zero
        let r: f64 = 0.5;
        let d = squeezed_distribution(&StateParams::new(r, 0.0, 0.0).unwrap(), 1e-12).unwrap();
        assert!((d.probs()[2] - r.tanh().powi(2) / (2.0 * r.cosh())).abs() < 1e-15);
        assert!((d.probs()[2] - 0.0947).abs() < 5e-5);
        for (n, &p) in d.probs().iter().enumerate() {
            if n % 2 == 1 {
                assert_eq!(p, 0.0);
            } else {
                let k = n / 2;
                let want =
                    r.tanh().powi(n as i32) * factorial(n) / (4f64.powi(k as i32) * factorial(k).powi(2) * r.cosh());
                assert!((p - want).abs() <= 1e-13 * want.max(1e-300), "n={n}");
            }
        }
    }

    #[test]
    fn zero_odd_terms_do_not_end_the_series() {
        for r in [0.7, 1.5, 2.5] {
            let d = squeezed_distribution(&StateParams::new(r, 0.0, 0.0).unwrap(), 1e-12).unwrap();
            assert!(d.tail_mass() < 1e-12, "r={r} tail={}", d.tail_mass());
        }
    }

    #[test]
    fn tolerance_near_machine_precision_terminates() {
        let d = coherent_distribution(0.3, 1e-15).unwrap();
        assert!(d.tail_mass() < 1e-15);
        let d = squeezed_distribution(&StateParams::new(0.8, 1.0, 1.2).unwrap(), 1e-15).unwrap();
        assert!((d.total() + d.tail_mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mean_equals_omega_plus_sinh() {
        for &(r, theta, alpha) in &[(0.3, 0.0, 0.1), (0.2, 1.0, 0.5), (0.001, PI, 0.032), (1.0, 2.5, 1.5)] {
            let p = StateParams::new(r, theta, alpha).unwrap();
            let d = squeezed_distribution(&p, 1e-12).unwrap();
            let want = p.mean_photons();
            assert!(((d.mean() - want) / want).abs() < 1e-8, "{p:?}: {} vs {want}", d.mean());
        }
    }

    #[test]
    fn large_displacement_does_not_overflow() {
        let p = StateParams::new(0.2, 0.4, 30.0).unwrap();
        let d = squeezed_distribution(&p, 1e-12).unwrap();
        assert!((d.total() + d.tail_mass() - 1.0).abs() < 1e-10);
        assert!(((d.mean() - p.mean_photons()) / p.mean_photons()).abs() < 1e-8);
    }

    #[test]
    fn truncation_failure_is_reported() {
        let p = StateParams::new(4.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            squeezed_distribution(&p, 1e-12),
            Err(CoherenceError::Truncation { .. })
        ));
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(StateParams::new(-0.1, 0.0, 0.0).is_err());
        assert!(StateParams::new(0.1, f64::NAN, 0.0).is_err());
        let p = StateParams::new(0.1, 0.0, 0.0).unwrap();
        assert!(squeezed_distribution(&p, 1e-3).is_err());
        assert!(squeezed_distribution(&p, 0.0).is_err());
    }

    #[test]
    fn continuity_at_branch_point() {
        for factor in [0.5, 1.5] {
            let r = R_MIN * factor;
            let p = StateParams::new(r, 0.7, 0.4).unwrap();
            let formula = formula_distribution(&p, 1e-12).unwrap();
            let coherent = coherent_distribution(0.4, 1e-12).unwrap();
            assert!(formula.total_variation(&coherent) < 1e-6);
        }
    }

    #[test]
    fn distribution_validation() {
        assert!(PhotonDistribution::new(vec![0.5, 0.5], 0.0).is_ok());
        assert!(PhotonDistribution::new(vec![0.5, 0.6], 0.0).is_err());
        assert!(PhotonDistribution::new(vec![1.2, -0.2], 0.0).is_err());
        assert!(PhotonDistribution::new(vec![], 0.0).is_err());
    }
}
