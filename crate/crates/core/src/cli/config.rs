//! Fully resolved run configuration, read from and written as JSON.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::detection::DetectionParams;
use crate::error::{CoherenceError, Result};
use crate::mc::Sampling;
use crate::state::{StateParams, DEFAULT_TAIL_TOL};
use crate::sweep::{
    validate_orders, Axis, Mode, Optimize, Parameter, Pipeline, Spacing, DEFAULT_GRID_POINTS, DEFAULT_REL_TOL,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Point,
    Sweep,
    Extremum,
    Figure,
    Mc,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Point => "point",
            Command::Sweep => "sweep",
            Command::Extremum => "extremum",
            Command::Figure => "figure",
            Command::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigurePreset {
    Fig2map,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl FigurePreset {
    pub const ALL: [FigurePreset; 5] = [
        FigurePreset::Fig2map,
        FigurePreset::Fig3,
        FigurePreset::Fig4,
        FigurePreset::Fig5,
        FigurePreset::Fig6,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            FigurePreset::Fig2map => "fig2map",
            FigurePreset::Fig3 => "fig3",
            FigurePreset::Fig4 => "fig4",
            FigurePreset::Fig5 => "fig5",
            FigurePreset::Fig6 => "fig6",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremumConfig {
    pub param: Parameter,
    pub min: f64,
    pub max: f64,
    pub mode: Mode,
    pub grid_points: usize,
    pub spacing: Option<Spacing>,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    pub trials: u64,
    pub seed: u64,
    /// Deterministic photon-number source instead of the squeezed state.
    pub fock: Option<usize>,
    pub sampling: Sampling,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            trials: 1_000_000,
            seed: 0,
            fock: None,
            sampling: Sampling::Direct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSettings {
    pub preset: FigurePreset,
    /// Points per swept axis; `None` keeps each preset's own resolution.
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub command: Command,
    pub state: StateParams,
    pub detection: DetectionParams,
    /// `None` on `point` reports both pipelines.
    pub pipeline: Option<Pipeline>,
    pub orders: Vec<u8>,
    pub tail_tol: f64,
    pub format: Format,
    /// Output file (directory for `figure`); stdout when absent.
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub optimize: Option<Optimize>,
    #[serde(default)]
    pub extremum: Option<ExtremumConfig>,
    #[serde(default)]
    pub mc: Option<McSettings>,
    #[serde(default)]
    pub figure: Option<FigureSettings>,
}

impl RunConfig {
    /// Defaults for a command before any file or flag is applied.
    pub fn defaults(command: Command) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            state: StateParams {
                r: 0.001,
                theta: 0.0,
                alpha: 0.032,
            },
            detection: DetectionParams::IDEAL,
            pipeline: match command {
                Command::Point | Command::Figure | Command::Mc => None,
                Command::Sweep | Command::Extremum => Some(Pipeline::Ideal),
            },
            orders: vec![2, 3, 4],
            tail_tol: DEFAULT_TAIL_TOL,
            format: Format::Csv,
            out: None,
            axes: Vec::new(),
            optimize: None,
            extremum: match command {
                Command::Extremum => Some(ExtremumConfig {
                    param: Parameter::Alpha,
                    min: 1e-3,
                    max: 1.0,
                    mode: Mode::Min,
                    grid_points: DEFAULT_GRID_POINTS,
                    spacing: None,
                    rel_tol: DEFAULT_REL_TOL,
                }),
                _ => None,
            },
            mc: match command {
                Command::Mc => Some(McSettings::default()),
                _ => None,
            },
            figure: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CoherenceError::invalid("config", e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CoherenceError::invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.state.validate()?;
        self.detection.validate()?;
        validate_orders(&self.orders)?;
        if !(self.tail_tol > 0.0 && self.tail_tol <= 1e-6) {
            return Err(CoherenceError::invalid("tol", "must lie in (0, 1e-6]"));
        }
        let need = |ok: bool, field: &str| {
            if ok {
                Ok(())
            } else {
                Err(CoherenceError::invalid(
                    field,
                    format!("required by `{}`", self.command.name()),
                ))
            }
        };
        match self.command {
            Command::Point => Ok(()),
            Command::Sweep => {
                need(!self.axes.is_empty(), "axes")?;
                need(self.pipeline.is_some(), "pipeline")
            }
            Command::Extremum => {
                need(self.extremum.is_some(), "extremum")?;
                need(self.pipeline.is_some(), "pipeline")
            }
            Command::Mc => {
                need(self.mc.is_some(), "mc")?;
                let mc = self.mc.as_ref().expect("checked");
                if mc.trials == 0 {
                    return Err(CoherenceError::invalid("trials", "must be >= 1"));
                }
                Ok(())
            }
            Command::Figure => need(self.figure.is_some(), "figure"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for cmd in [
            Command::Point,
            Command::Sweep,
            Command::Extremum,
            Command::Figure,
            Command::Mc,
        ] {
            let cfg = RunConfig::defaults(cmd);
            let back = RunConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_json(), cfg.to_json());
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&RunConfig::defaults(Command::Point).to_json()).unwrap();
        v["bogus"] = serde_json::json!(1);
        let err = RunConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("bogus"));
        let mut v: serde_json::Value = serde_json::from_str(&RunConfig::defaults(Command::Point).to_json()).unwrap();
        v["state"]["beta"] = serde_json::json!(1);
        assert!(RunConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn wrong_schema_version() {
        let mut cfg = RunConfig::defaults(Command::Point);
        cfg.schema_version = 99;
        let err = RunConfig::from_json(&cfg.to_json()).unwrap_err();
        assert!(err.to_string().contains("schema_version"));
    }
}
