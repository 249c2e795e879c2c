//! Figure presets: the sweeps behind each published figure.

use std::f64::consts::PI;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::detection::DetectionParams;
use crate::state::StateParams;
use crate::sweep::{
    r_from_db, Axis, Mode, Optimize, Parameter, Pipeline, Spacing, SweepSpec, DEFAULT_GRID_POINTS, DEFAULT_REL_TOL,
};

use super::config::FigurePreset;

/// Detection settings used for the "feasible experiment" curves.
pub const FEASIBLE: DetectionParams = DetectionParams { eta: 0.5, gamma: 1e-5 };

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub name: String,
    pub note: String,
    pub spec: SweepSpec,
}

impl Dataset {
    /// First 12 hex digits of SHA-256 over the spec's JSON.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(&self.spec).expect("spec serializes");
        Sha256::digest(&json)
            .iter()
            .take(6)
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn file_stem(&self, preset: FigurePreset) -> String {
        format!("{}_{}_{}", preset.id(), self.name, self.hash())
    }
}

fn axis(param: Parameter, min: f64, max: f64, points: usize, spacing: Spacing) -> Axis {
    Axis {
        param,
        min,
        max,
        points,
        spacing,
    }
}

fn pipeline_tag(p: Pipeline) -> &'static str {
    match p {
        Pipeline::Ideal => "ideal",
        Pipeline::Click => "feasible",
    }
}

fn spec(axes: Vec<Axis>, state: StateParams, pipeline: Pipeline, orders: Vec<u8>, tail_tol: f64) -> SweepSpec {
    let detection = match pipeline {
        Pipeline::Ideal => DetectionParams::IDEAL,
        Pipeline::Click => FEASIBLE,
    };
    SweepSpec {
        axes,
        state,
        detection,
        pipeline,
        orders,
        optimize: None,
        tail_tol,
    }
}

/// Datasets of a preset. `points` overrides the per-axis resolution; axes in
/// `axis_overrides` replace preset axes of the same parameter.
pub fn datasets(preset: FigurePreset, points: Option<usize>, axis_overrides: &[Axis], tail_tol: f64) -> Vec<Dataset> {
    let pts = |default: usize| points.unwrap_or(default);
    let mut out = Vec::new();
    match preset {
        FigurePreset::Fig2map => {
            let st = StateParams {
                r: 0.0,
                theta: 0.0,
                alpha: 0.0,
            };
            out.push(Dataset {
                name: "map_theta0".into(),
                note: "maps of g2, g3, g4 over r and alpha at theta = 0, ideal; axis extents are not printed with the figure, defaults r in [1e-3, 1.5], alpha in [1e-3, 2], log-spaced".into(),
                spec: spec(
                    vec![axis(Parameter::R, 1e-3, 1.5, pts(60), Spacing::Log), axis(Parameter::Alpha, 1e-3, 2.0, pts(60), Spacing::Log)],
                    st,
                    Pipeline::Ideal,
                    vec![2, 3, 4],
                    tail_tol,
                ),
            });
        }
        FigurePreset::Fig3 => {
            for pipeline in [Pipeline::Ideal, Pipeline::Click] {
                for r in [0.001, 0.01, 0.1] {
                    out.push(Dataset {
                        name: format!("alpha_r{r}_{}", pipeline_tag(pipeline)),
                        note: format!("g(n) versus alpha at theta = 0, r = {r}"),
                        spec: spec(
                            vec![axis(Parameter::Alpha, 1e-3, 1.0, pts(200), Spacing::Log)],
                            StateParams {
                                r,
                                theta: 0.0,
                                alpha: 0.0,
                            },
                            pipeline,
                            vec![2, 3, 4],
                            tail_tol,
                        ),
                    });
                }
                for alpha in [0.032, 0.055, 0.074] {
                    out.push(Dataset {
                        name: format!("r_alpha{alpha}_{}", pipeline_tag(pipeline)),
                        note: format!(
                            "g(n) versus r at theta = 0, alpha = {alpha}; the figure does not list its alpha values, these are the anti-bunching optima at r = 0.001"
                        ),
                        spec: spec(
                            vec![axis(Parameter::R, 1e-4, 1.0, pts(200), Spacing::Log)],
                            StateParams { r: 0.0, theta: 0.0, alpha },
                            pipeline,
                            vec![2, 3, 4],
                            tail_tol,
                        ),
                    });
                }
            }
        }
        FigurePreset::Fig4 => {
            let mut s = spec(
                vec![
                    axis(Parameter::Gamma, 1e-9, 1e-2, pts(15), Spacing::Log),
                    axis(Parameter::Eta, 0.1, 1.0, pts(10), Spacing::Linear),
                ],
                StateParams {
                    r: 0.001,
                    theta: 0.0,
                    alpha: 0.032,
                },
                Pipeline::Click,
                vec![2, 3, 4],
                tail_tol,
            );
            s.optimize = Some(Optimize {
                param: Parameter::Alpha,
                min: 1e-3,
                max: 1.0,
                mode: Mode::Min,
                grid_points: DEFAULT_GRID_POINTS,
                rel_tol: DEFAULT_REL_TOL,
            });
            out.push(Dataset {
                name: "gmin_gamma_eta".into(),
                note: "minimum over alpha of the click-chain g(n) at r = 0.001, theta = 0, alpha re-optimized in every cell; the minimizing alpha is recorded in diagnostics".into(),
                spec: s,
            });
        }
        FigurePreset::Fig5 => {
            for pipeline in [Pipeline::Ideal, Pipeline::Click] {
                for alpha in [0.01, 0.1, 1.0] {
                    out.push(Dataset {
                        name: format!("r_alpha{alpha}_{}", pipeline_tag(pipeline)),
                        note: format!("g(n) versus r at theta = pi, alpha = {alpha}"),
                        spec: spec(
                            vec![axis(Parameter::R, 1e-4, 1.0, pts(200), Spacing::Log)],
                            StateParams {
                                r: 0.0,
                                theta: PI,
                                alpha,
                            },
                            pipeline,
                            vec![2, 3, 4],
                            tail_tol,
                        ),
                    });
                }
            }
        }
        FigurePreset::Fig6 => {
            let settings: [(&str, u8, f64, f64, &str); 4] = [
                ("g2", 2, 0.001, 0.032, "g2 at r = 0.001, alpha = 0.032"),
                ("g3", 3, 0.002, 0.063, "g3 at r = 0.002, alpha = 0.063"),
                ("g4", 4, 5e-4, 0.017, "g4 at r = 5e-4, alpha = 0.017 (figure caption)"),
                (
                    "g4alt",
                    4,
                    r_from_db(0.004),
                    0.016,
                    "g4 at r = 0.004 dB, alpha = 0.016 (text value; differs from the caption)",
                ),
            ];
            for (tag, order, r, alpha, note) in settings {
                for gamma in [0.0, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3] {
                    let mut s = spec(
                        vec![axis(Parameter::Theta, 0.0, 2.0 * PI, pts(181), Spacing::Linear)],
                        StateParams { r, theta: 0.0, alpha },
                        Pipeline::Click,
                        vec![order],
                        tail_tol,
                    );
                    s.detection = DetectionParams { eta: 0.5, gamma };
                    out.push(Dataset {
                        name: format!("theta_{tag}_gamma{gamma:e}"),
                        note: format!("{note}, eta = 0.5, gamma = {gamma:e}"),
                        spec: s,
                    });
                }
            }
        }
    }
    for ds in &mut out {
        for axis in ds.spec.axes.iter_mut() {
            if let Some(o) = axis_overrides.iter().find(|o| o.param == axis.param) {
                *axis = o.clone();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::DEFAULT_TAIL_TOL;

    #[test]
    fn presets_are_valid_and_uniquely_named() {
        for preset in FigurePreset::ALL {
            let ds = datasets(preset, Some(3), &[], DEFAULT_TAIL_TOL);
            assert!(!ds.is_empty());
            let mut stems: Vec<String> = ds.iter().map(|d| d.file_stem(preset)).collect();
            for d in &ds {
                d.spec.validate().unwrap();
            }
            let n = stems.len();
            stems.sort();
            stems.dedup();
            assert_eq!(stems.len(), n, "{}", preset.id());
        }
    }

    #[test]
    fn hash_tracks_parameters() {
        let a = datasets(FigurePreset::Fig5, Some(5), &[], DEFAULT_TAIL_TOL);
        let b = datasets(FigurePreset::Fig5, Some(6), &[], DEFAULT_TAIL_TOL);
        assert_eq!(
            a[0].hash(),
            datasets(FigurePreset::Fig5, Some(5), &[], DEFAULT_TAIL_TOL)[0].hash()
        );
        assert_ne!(a[0].hash(), b[0].hash());
        assert_eq!(a[0].hash().len(), 12);
    }

    #[test]
    fn fig5_caption_parameters() {
        let ds = datasets(FigurePreset::Fig5, None, &[], DEFAULT_TAIL_TOL);
        assert_eq!(ds.len(), 6);
        for d in &ds {
            assert_eq!(d.spec.state.theta, PI);
            assert_eq!((d.spec.axes[0].min, d.spec.axes[0].max), (1e-4, 1.0));
        }
        let click: Vec<_> = ds.iter().filter(|d| d.spec.pipeline == Pipeline::Click).collect();
        assert!(click.iter().all(|d| d.spec.detection == FEASIBLE));
    }
}
