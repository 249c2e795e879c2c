//! Ideal (unit efficiency, noise-free) coherences: the printed closed form in
//! terms of Ω, A, B, C, D, an exact Gaussian-moment evaluation, and the
//! factorial-moment definition applied to any photon distribution.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clicks::CoherenceTriple;
use crate::error::{CoherenceError, Result};
use crate::state::{kahan_sum, PhotonDistribution, StateParams};

/// Imaginary residue of A or B above this (relative) is flagged.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-10;

/// Relative disagreement above which the printed closed form is flagged.
pub const PRINTED_FORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticIntermediates {
    pub omega: Complex64,
    pub a_val: f64,
    pub b_val: f64,
    pub c_val: f64,
    pub d_val: f64,
    /// |Im B| relative to |B| (zero when B vanishes).
    pub imag_residue: f64,
}

pub fn intermediates(params: &StateParams) -> AnalyticIntermediates {
    let r = params.r;
    let (sh, ch) = (r.sinh(), r.cosh());
    let omega = params.omega();
    let e_pos = Complex64::from_polar(1.0, params.theta);
    let e_neg = e_pos.conj();
    let b = (omega.conj().powu(2) * e_pos + omega.powu(2) * e_neg) * ch * sh;
    let imag_residue = if b.norm() > 0.0 { b.im.abs() / b.norm() } else { 0.0 };
    AnalyticIntermediates {
        omega,
        a_val: omega.norm_sqr() + sh * sh,
        b_val: b.re,
        c_val: (2.0 * r).cosh() + 3.0 * sh * sh,
        d_val: 13.0 * ch * ch + 23.0 * (2.0 * r).cosh(),
        imag_residue,
    }
}

/// g², g³, g⁴ exactly as the published closed form prints them.
///
/// The g⁴ expression does not agree with the moments of the state (see
/// [`ideal_coherence`]); it is kept for comparison.
pub fn g_ideal(params: &StateParams) -> Result<CoherenceTriple> {
    params.validate()?;
    let AnalyticIntermediates {
        omega,
        a_val: a,
        b_val: b,
        c_val: c,
        d_val: d,
        ..
    } = intermediates(params);
    if !(a > 0.0) {
        return Err(CoherenceError::UndefinedCoherence);
    }
    let r = params.r;
    let o2 = omega.norm_sqr();
    let s2 = r.sinh().powi(2);
    let c2r = (2.0 * r).cosh();
    let c4r = (4.0 * r).cosh();

    let g2 = 1.0 - (b - (2.0 * o2 + c2r) * s2) / (a * a);
    let g3 = 1.0
        - (3.0 * b * (o2 + 3.0 * s2) - (2.0 + 7.0 * c2r) * s2 * s2 - 3.0 * o2 * s2 * (2.0 * o2 + 4.0 * c2r - 1.0))
            / a.powi(3);
    let g4 = 1.0
        + (3.0 * b * b + (3.0 - 7.0 * c2r + 13.0 * c4r) * s2 * s2 + 12.0 * o2.powi(3) * s2.powi(3)
            - 6.0 * b * (o2 * o2 - 8.0 * o2 * s2 - 3.0 * c * s2)
            + 6.0 * o2 * s2 * (2.0 * c + 3.0 * c2r)
            + 4.0 * d * o2 * s2 * s2)
            / a.powi(4);
    Ok(CoherenceTriple {
        g2,
        g3,
        g4,
        mean_clicks: a,
    })
}

fn double_factorial_odd(n: i64) -> f64 {
    // (n)!! for odd n, with (−1)!! = 1
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Normal-ordered moment ⟨b†ⁱ bʲ⟩ of a zero-mean Gaussian mode with
/// ⟨b†b⟩ = n and ⟨bb⟩ = m, by Wick pairing.
fn gaussian_normal_moment(i: usize, j: usize, n: f64, m: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..=i.min(j) {
        if !(i - p).is_multiple_of(2) || !(j - p).is_multiple_of(2) {
            continue;
        }
        let ways = binom(i, p)
            * binom(j, p)
            * (1..=p).map(|k| k as f64).product::<f64>()
            * double_factorial_odd(i as i64 - p as i64 - 1)
            * double_factorial_odd(j as i64 - p as i64 - 1);
        acc += ways * n.powi(p as i32) * m.conj().powu(((i - p) / 2) as u32) * m.powu(((j - p) / 2) as u32);
    }
    acc
}

/// ⟨a†ᵏaᵏ⟩ for a = Ω + b with b the squeezed-vacuum fluctuation.
pub fn normal_ordered_moment(params: &StateParams, k: usize) -> f64 {
    let r = params.r;
    let omega = params.omega();
    let n = r.sinh().powi(2);
    // S†aS = a cosh r − a† e^{iθ} sinh r gives ⟨bb⟩ = −e^{iθ} sinh r cosh r
    let m = -Complex64::from_polar(r.sinh() * r.cosh(), params.theta);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..=k {
        for j in 0..=k {
            acc += binom(k, i)
                * binom(k, j)
                * omega.conj().powu((k - i) as u32)
                * omega.powu((k - j) as u32)
                * gaussian_normal_moment(i, j, n, m);
        }
    }
    acc.re
}

/// Exact ideal coherences from Gaussian (Wick) normal-ordered moments.
pub fn gaussian_moments(params: &StateParams) -> Result<CoherenceTriple> {
    params.validate()?;
    let mean = normal_ordered_moment(params, 1);
    if !(mean > 0.0) {
        return Err(CoherenceError::UndefinedCoherence);
    }
    Ok(CoherenceTriple {
        g2: normal_ordered_moment(params, 2) / mean.powi(2),
        g3: normal_ordered_moment(params, 3) / mean.powi(3),
        g4: normal_ordered_moment(params, 4) / mean.powi(4),
        mean_clicks: mean,
    })
}

/// Printed closed form next to the exact moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealReport {
    pub printed: CoherenceTriple,
    pub exact: CoherenceTriple,
    /// |printed/exact − 1| per order.
    pub rel_discrepancy: [f64; 3],
    pub imag_residue: f64,
}

impl IdealReport {
    /// Values used downstream; the exact moments govern.
    pub fn governing(&self) -> CoherenceTriple {
        self.exact
    }

    /// Orders whose printed value disagrees with the moments.
    pub fn flagged_orders(&self) -> Vec<u8> {
        (0..3)
            .filter(|&i| self.rel_discrepancy[i] > PRINTED_FORM_TOL)
            .map(|i| i as u8 + 2)
            .collect()
    }
}

pub fn ideal_coherence(params: &StateParams) -> Result<IdealReport> {
    let printed = g_ideal(params)?;
    let exact = gaussian_moments(params)?;
    let p = printed.as_array();
    let e = exact.as_array();
    let rel_discrepancy = [0, 1, 2].map(|i| rel_diff(p[i], e[i]));
    Ok(IdealReport {
        printed,
        exact,
        rel_discrepancy,
        imag_residue: intermediates(params).imag_residue,
    })
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

/// Normalized factorial moment ⟨n(n−1)⋯(n−m+1)⟩ / ⟨n⟩ᵐ by direct summation.
pub fn normalized_factorial_moment(dist: &PhotonDistribution, m: u32) -> Result<f64> {
    let mean = dist.mean();
    if !(mean > 0.0) {
        return Err(CoherenceError::UndefinedCoherence);
    }
    let moment = kahan_sum(dist.probs().iter().enumerate().map(|(n, &p)| {
        let falling: f64 = (0..m as usize).map(|k| n as f64 - k as f64).product();
        falling.max(0.0) * p
    }));
    Ok(moment / mean.powi(m as i32))
}

/// g², g³, g⁴ of a single-mode distribution as normalized factorial moments.
pub fn factorial_moments(dist: &PhotonDistribution) -> Result<CoherenceTriple> {
    Ok(CoherenceTriple {
        g2: normalized_factorial_moment(dist, 2)?,
        g3: normalized_factorial_moment(dist, 3)?,
        g4: normalized_factorial_moment(dist, 4)?,
        mean_clicks: dist.mean(),
    })
}
