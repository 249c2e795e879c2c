//! Parameter grids, extremum searches, and squeezing in decibels.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::ideal_coherence;
use crate::clicks::{click_probabilities, coherence_from_clicks, CoherenceTriple};
use crate::detection::{detect, DetectionParams};
use crate::error::{CoherenceError, Result};
use crate::state::{squeezed_distribution, StateParams, DEFAULT_TAIL_TOL};

pub const DEFAULT_GRID_POINTS: usize = 200;
pub const DEFAULT_REL_TOL: f64 = 1e-4;
const MAX_GOLDEN_ITERS: usize = 400;

/// Squeezing in dB, −10·log₁₀(e^{−2r}) = 20·log₁₀(e)·r.
pub fn squeezing_db(r: f64) -> f64 {
    20.0 * std::f64::consts::LOG10_E * r
}

/// Inverse of [`squeezing_db`].
pub fn r_from_db(db: f64) -> f64 {
    db / (20.0 * std::f64::consts::LOG10_E)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameter {
    R,
    Theta,
    Alpha,
    Eta,
    Gamma,
}

impl Parameter {
    pub fn name(&self) -> &'static str {
        match self {
            Parameter::R => "r",
            Parameter::Theta => "theta",
            Parameter::Alpha => "alpha",
            Parameter::Eta => "eta",
            Parameter::Gamma => "gamma",
        }
    }

    pub fn set(&self, state: &mut StateParams, detection: &mut DetectionParams, value: f64) {
        match self {
            Parameter::R => state.r = value,
            Parameter::Theta => state.theta = value,
            Parameter::Alpha => state.alpha = value,
            Parameter::Eta => detection.eta = value,
            Parameter::Gamma => detection.gamma = value,
        }
    }

    /// Log spacing is the default for amplitude-like parameters.
    pub fn default_spacing(&self, min: f64) -> Spacing {
        match self {
            Parameter::R | Parameter::Alpha | Parameter::Gamma if min > 0.0 => Spacing::Log,
            _ => Spacing::Linear,
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Parameter {
    type Err = CoherenceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r" => Ok(Parameter::R),
            "theta" => Ok(Parameter::Theta),
            "alpha" => Ok(Parameter::Alpha),
            "eta" => Ok(Parameter::Eta),
            "gamma" => Ok(Parameter::Gamma),
            other => Err(CoherenceError::invalid("param", format!("unknown parameter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// Unit efficiency, no noise, exact moments of the state.
    Ideal,
    /// Loss, noise, and four-detector click estimators.
    Click,
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pipeline::Ideal => "ideal",
            Pipeline::Click => "click",
        })
    }
}

impl FromStr for Pipeline {
    type Err = CoherenceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Pipeline::Ideal),
            "click" => Ok(Pipeline::Click),
            other => Err(CoherenceError::invalid(
                "pipeline",
                format!("unknown pipeline `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: Parameter,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn validate(&self) -> Result<()> {
        let field = format!("axis.{}", self.param);
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(CoherenceError::InvalidParameter {
                field,
                reason: format!("bounds [{}, {}] must be finite and ordered", self.min, self.max),
            });
        }
        if self.points < 2 {
            return Err(CoherenceError::InvalidParameter {
                field,
                reason: "needs at least 2 points".into(),
            });
        }
        if self.spacing == Spacing::Log && self.min <= 0.0 {
            return Err(CoherenceError::InvalidParameter {
                field,
                reason: "log spacing needs min > 0".into(),
            });
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        grid(self.min, self.max, self.points, self.spacing)
    }
}

fn grid(min: f64, max: f64, points: usize, spacing: Spacing) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            let f = i as f64 / last;
            let v = match spacing {
                Spacing::Linear => min + (max - min) * f,
                Spacing::Log => (min.ln() + (max.ln() - min.ln()) * f).exp(),
            };
            // pin endpoints exactly
            if i == 0 {
                min
            } else if i + 1 == points {
                max
            } else {
                v
            }
        })
        .collect()
}

/// Re-optimization of one parameter at every grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Optimize {
    pub param: Parameter,
    pub min: f64,
    pub max: f64,
    pub mode: Mode,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_rel_tol() -> f64 {
    DEFAULT_REL_TOL
}

fn default_tail_tol() -> f64 {
    DEFAULT_TAIL_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub state: StateParams,
    pub detection: DetectionParams,
    pub pipeline: Pipeline,
    pub orders: Vec<u8>,
    #[serde(default)]
    pub optimize: Option<Optimize>,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(CoherenceError::invalid("axes", "a sweep has one or two axes"));
        }
        for axis in &self.axes {
            axis.validate()?;
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return Err(CoherenceError::invalid("axes", "axes must be distinct parameters"));
        }
        validate_orders(&self.orders)?;
        if let Some(opt) = &self.optimize {
            if self.axes.iter().any(|a| a.param == opt.param) {
                return Err(CoherenceError::invalid(
                    "optimize.param",
                    "cannot optimize a swept parameter",
                ));
            }
        }
        Ok(())
    }
}

pub fn validate_orders(orders: &[u8]) -> Result<()> {
    if orders.is_empty() {
        return Err(CoherenceError::invalid("orders", "at least one order is required"));
    }
    if let Some(m) = orders.iter().find(|m| !(2..=4).contains(*m)) {
        return Err(CoherenceError::invalid(
            "orders",
            format!("order {m} not in {{2, 3, 4}}"),
        ));
    }
    Ok(())
}

/// Coherences at one parameter point with notes on anything suspicious.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub coherence: CoherenceTriple,
    pub diagnostics: Vec<String>,
}

pub fn evaluate(
    pipeline: Pipeline,
    state: &StateParams,
    detection: &DetectionParams,
    tail_tol: f64,
) -> Result<Evaluation> {
    match pipeline {
        Pipeline::Ideal => {
            let report = ideal_coherence(state)?;
            let diagnostics = report
                .flagged_orders()
                .into_iter()
                .map(|m| format!("printed_g{m}_rel_diff={:.3e}", report.rel_discrepancy[(m - 2) as usize]))
                .collect();
            Ok(Evaluation {
                coherence: report.governing(),
                diagnostics,
            })
        }
        Pipeline::Click => {
            detection.validate()?;
            let source = squeezed_distribution(state, tail_tol)?;
            let detected = detect(&source, detection)?;
            let clicks = click_probabilities(&detected);
            let coherence = coherence_from_clicks(&clicks)?;
            let mut diagnostics = Vec::new();
            if clicks.truncation_defect > 0.0 {
                diagnostics.push(format!("truncation_defect={:.3e}", clicks.truncation_defect));
            }
            Ok(Evaluation { coherence, diagnostics })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_values: Vec<f64>,
    /// g², g³, g⁴; `None` where not requested or not computable.
    pub values: [Option<f64>; 3],
    pub mean_clicks: Option<f64>,
    pub diagnostics: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis_names: Vec<String>,
    pub pipeline: Pipeline,
    pub orders: Vec<u8>,
    pub rows: Vec<SweepRow>,
}

/// Evaluates the pipeline over the grid in row-major order (last axis fastest).
/// Point failures are recorded in the row's diagnostics.
pub fn sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let axis_values: Vec<Vec<f64>> = spec.axes.iter().map(Axis::values).collect();
    let points: Vec<Vec<f64>> = match axis_values.as_slice() {
        [a] => a.iter().map(|&x| vec![x]).collect(),
        [a, b] => a.iter().flat_map(|&x| b.iter().map(move |&y| vec![x, y])).collect(),
        _ => unreachable!("validated axis count"),
    };
    let rows = points.into_par_iter().map(|coords| sweep_row(spec, coords)).collect();
    Ok(SweepTable {
        axis_names: spec.axes.iter().map(|a| a.param.name().to_string()).collect(),
        pipeline: spec.pipeline,
        orders: spec.orders.clone(),
        rows,
    })
}

fn sweep_row(spec: &SweepSpec, coords: Vec<f64>) -> SweepRow {
    let mut state = spec.state;
    let mut detection = spec.detection;
    for (axis, &v) in spec.axes.iter().zip(&coords) {
        axis.param.set(&mut state, &mut detection, v);
    }
    let mut values = [None; 3];
    let mut diagnostics: Vec<String> = Vec::new();
    let mut mean_clicks = None;

    match &spec.optimize {
        None => match evaluate(spec.pipeline, &state, &detection, spec.tail_tol) {
            Ok(eval) => {
                for &m in &spec.orders {
                    values[(m - 2) as usize] = eval.coherence.order(m).filter(|v| v.is_finite());
                }
                mean_clicks = Some(eval.coherence.mean_clicks);
                diagnostics = eval.diagnostics;
            }
            Err(e) => diagnostics.push(format!("error: {e}")),
        },
        Some(opt) => {
            for &m in &spec.orders {
                let search = ExtremumSpec {
                    order: m,
                    param: opt.param,
                    min: opt.min,
                    max: opt.max,
                    mode: opt.mode,
                    pipeline: spec.pipeline,
                    state,
                    detection,
                    grid_points: opt.grid_points,
                    spacing: None,
                    rel_tol: opt.rel_tol,
                    tail_tol: spec.tail_tol,
                };
                match find_extremum(&search) {
                    Ok(res) => {
                        values[(m - 2) as usize] = Some(res.value);
                        if mean_clicks.is_none() {
                            mean_clicks = Some(res.mean_clicks);
                        }
                        let tag = if opt.mode == Mode::Min { "argmin" } else { "argmax" };
                        diagnostics.push(format!("{tag}_g{m}_{}={:.6e}", opt.param, res.location));
                        if res.at_boundary {
                            diagnostics.push(format!("boundary_extremum_g{m}"));
                        }
                    }
                    Err(e) => diagnostics.push(format!("error_g{m}: {e}")),
                }
            }
        }
    }
    SweepRow {
        axis_values: coords,
        values,
        mean_clicks,
        diagnostics: diagnostics.join(";"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremumSpec {
    pub order: u8,
    pub param: Parameter,
    pub min: f64,
    pub max: f64,
    pub mode: Mode,
    pub pipeline: Pipeline,
    pub state: StateParams,
    pub detection: DetectionParams,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Coarse-grid spacing; defaults to log for r, α, γ with a positive lower bound.
    #[serde(default)]
    pub spacing: Option<Spacing>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremumResult {
    pub param: Parameter,
    pub location: f64,
    pub value: f64,
    pub order: u8,
    pub mode: Mode,
    /// Final bracket width relative to |location|.
    pub bracket_width: f64,
    /// Best coarse-grid point sat on a search bound.
    pub at_boundary: bool,
    /// Mean count at the extremum.
    pub mean_clicks: f64,
    pub evaluations: usize,
}

/// Coarse grid scan followed by golden-section refinement between the
/// neighbours of the best grid point. Ties go to the smaller parameter value.
pub fn find_extremum(spec: &ExtremumSpec) -> Result<ExtremumResult> {
    validate_orders(&[spec.order])?;
    let spacing = spec.spacing.unwrap_or_else(|| spec.param.default_spacing(spec.min));
    Axis {
        param: spec.param,
        min: spec.min,
        max: spec.max,
        points: spec.grid_points,
        spacing,
    }
    .validate()?;
    if !(spec.rel_tol > 0.0) {
        return Err(CoherenceError::invalid("rel_tol", "must be positive"));
    }
    if spec.min == spec.max {
        return Err(CoherenceError::invalid("bounds", "empty search interval"));
    }
    let sign = if spec.mode == Mode::Min { 1.0 } else { -1.0 };
    let evals = std::cell::Cell::new(0usize);
    let objective = |x: f64| -> (f64, f64) {
        evals.set(evals.get() + 1);
        let mut state = spec.state;
        let mut detection = spec.detection;
        spec.param.set(&mut state, &mut detection, x);
        match evaluate(spec.pipeline, &state, &detection, spec.tail_tol) {
            Ok(e) => match e.coherence.order(spec.order) {
                Some(v) if v.is_finite() => (sign * v, e.coherence.mean_clicks),
                _ => (f64::INFINITY, f64::NAN),
            },
            Err(_) => (f64::INFINITY, f64::NAN),
        }
    };

    let xs = grid(spec.min, spec.max, spec.grid_points, spacing);
    let fs: Vec<(f64, f64)> = xs.iter().map(|&x| objective(x)).collect();
    let mut best = 0;
    for i in 1..xs.len() {
        if fs[i].0 < fs[best].0 {
            best = i;
        }
    }
    if !fs[best].0.is_finite() {
        return Err(CoherenceError::invalid(
            spec.param.name(),
            "no evaluable point in the search interval",
        ));
    }
    let at_boundary = best == 0 || best + 1 == xs.len();
    let lo = xs[best.saturating_sub(1)];
    let hi = xs[(best + 1).min(xs.len() - 1)];

    // refine in log coordinates when the grid is log-spaced
    let (to_u, from_u): (fn(f64) -> f64, fn(f64) -> f64) = match spacing {
        Spacing::Log => (f64::ln, f64::exp),
        Spacing::Linear => (|x| x, |x| x),
    };
    let span = spec.max - spec.min;
    let refined = golden_section(
        |u| objective(from_u(u)).0,
        to_u(lo),
        to_u(hi),
        |a, b| {
            let (xa, xb) = (from_u(a), from_u(b));
            let scale = (0.5 * (xa + xb)).abs().max(f64::EPSILON * span);
            (xb - xa).abs() / scale
        },
        spec.rel_tol,
    );

    let (mut location, mut value_signed) = (xs[best], fs[best].0);
    let mut mean_clicks = fs[best].1;
    let refined_x = from_u(refined.x);
    if refined.fx < value_signed {
        location = refined_x;
        value_signed = refined.fx;
        mean_clicks = objective(refined_x).1;
    }
    Ok(ExtremumResult {
        param: spec.param,
        location,
        value: sign * value_signed,
        order: spec.order,
        mode: spec.mode,
        bracket_width: refined.width,
        at_boundary,
        mean_clicks,
        evaluations: evals.get(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub fx: f64,
    pub width: f64,
}

/// Golden-section minimization of `f` on [a, b] until `width(a, b) <= tol`.
pub fn golden_section(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    width: impl Fn(f64, f64) -> f64,
    tol: f64,
) -> GoldenResult {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..MAX_GOLDEN_ITERS {
        if width(a, b) <= tol {
            break;
        }
        // on ties keep the left part
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    GoldenResult {
        x,
        fx,
        width: width(a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn db_conversion() {
        assert_eq!(squeezing_db(0.0), 0.0);
        let db = squeezing_db(0.001);
        assert!((db - 0.0087).abs() < 1e-4);
        assert_eq!(format!("{db:.3}"), "0.009");
        assert!((squeezing_db(0.00196) - 0.017).abs() < 5e-4);
        // −10 log10(e^{−2r})
        assert!((squeezing_db(0.37) + 10.0 * (-0.74f64).exp().log10()).abs() < 1e-12);
        assert!((r_from_db(squeezing_db(0.25)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let res = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, |a, b| b - a, 1e-9);
        assert!((res.x - 0.3).abs() < 1e-8);
        assert!(res.width <= 1e-9);
    }

    #[test]
    fn grid_endpoints_and_spacing() {
        let g = grid(1e-3, 1.0, 4, Spacing::Log);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[3], 1.0);
        assert!((g[1] - 1e-2).abs() < 1e-15);
        let lin = grid(0.0, 2.0 * PI, 9, Spacing::Linear);
        assert_eq!(lin[8], 2.0 * PI);
    }

    #[test]
    fn axis_validation() {
        let ok = Axis {
            param: Parameter::Alpha,
            min: 0.1,
            max: 1.0,
            points: 3,
            spacing: Spacing::Log,
        };
        assert!(ok.validate().is_ok());
        assert!(Axis {
            points: 1,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(Axis { min: 2.0, ..ok.clone() }.validate().is_err());
        assert!(Axis { min: 0.0, ..ok.clone() }.validate().is_err());
        assert!(Axis {
            min: 0.0,
            spacing: Spacing::Linear,
            ..ok
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn coherent_alpha_sweep_is_flat() {
        let spec = SweepSpec {
            axes: vec![Axis {
                param: Parameter::Alpha,
                min: 0.01,
                max: 2.0,
                points: 7,
                spacing: Spacing::Log,
            }],
            state: StateParams::new(0.0, 0.0, 0.0).unwrap(),
            detection: DetectionParams::IDEAL,
            pipeline: Pipeline::Ideal,
            orders: vec![2, 3, 4],
            optimize: None,
            tail_tol: DEFAULT_TAIL_TOL,
        };
        let table = sweep(&spec).unwrap();
        assert_eq!(table.rows.len(), 7);
        for row in &table.rows {
            for v in row.values {
                assert!((v.unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vacuum_point_is_recorded_not_fatal() {
        let spec = SweepSpec {
            axes: vec![Axis {
                param: Parameter::Alpha,
                min: 0.0,
                max: 1.0,
                points: 3,
                spacing: Spacing::Linear,
            }],
            state: StateParams::new(0.0, 0.0, 0.0).unwrap(),
            detection: DetectionParams::IDEAL,
            pipeline: Pipeline::Ideal,
            orders: vec![2],
            optimize: None,
            tail_tol: DEFAULT_TAIL_TOL,
        };
        let table = sweep(&spec).unwrap();
        assert!(table.rows[0].diagnostics.starts_with("error"));
        assert_eq!(table.rows[0].values, [None, None, None]);
        assert!(table.rows[1].values[0].is_some());
    }

    #[test]
    fn boundary_extremum_is_flagged() {
        // coherent light at r = 0 is flat; a monotone case: g2 of squeezed vacuum falls with r
        let spec = ExtremumSpec {
            order: 2,
            param: Parameter::R,
            min: 0.1,
            max: 1.0,
            mode: Mode::Min,
            pipeline: Pipeline::Ideal,
            state: StateParams::new(0.5, 0.0, 0.0).unwrap(),
            detection: DetectionParams::IDEAL,
            grid_points: 50,
            spacing: None,
            rel_tol: 1e-4,
            tail_tol: DEFAULT_TAIL_TOL,
        };
        let res = find_extremum(&spec).unwrap();
        assert!(res.at_boundary);
        assert!((res.location - 1.0).abs() < 1e-3);
    }
}
