//! Command-line front end: flag and config-file resolution, dispatch, and
//! export. Exit codes: 0 success, 2 configuration error, 3 I/O error,
//! 4 no signal, 5 internal invariant violation.

pub mod config;
pub mod export;
pub mod figures;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::analytic::ideal_coherence;
use crate::clicks::{click_probabilities, coherence_from_clicks};
use crate::detection::detect;
use crate::error::CoherenceError;
use crate::mc::{run_mc, McConfig, McError, Sampling, Source};
use crate::sweep::{
    find_extremum, squeezing_db, sweep, Axis, ExtremumSpec, Mode, Optimize, Parameter, Pipeline, Spacing, SweepSpec,
    DEFAULT_GRID_POINTS, DEFAULT_REL_TOL,
};

use config::{Command, ExtremumConfig, FigurePreset, FigureSettings, Format, McSettings, RunConfig};
use export::{coherence_header, coherence_row, sweep_table, Cell, Table};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "COHERENCE_OUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Io(String),
    NoSignal(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::NoSignal(_) => 4,
            CliError::Internal(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::NoSignal(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<CoherenceError> for CliError {
    fn from(e: CoherenceError) -> Self {
        match e {
            CoherenceError::InvalidParameter { .. } | CoherenceError::Truncation { .. } => {
                CliError::Config(e.to_string())
            }
            CoherenceError::NoSignal | CoherenceError::UndefinedCoherence => CliError::NoSignal(e.to_string()),
            CoherenceError::Invariant(_) => CliError::Internal(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "coherence",
    version,
    about = "High-order coherence of squeezed coherent states under click detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Top,
}

#[derive(Debug, Subcommand)]
pub enum Top {
    #[command(flatten)]
    Run(Run),
    /// Print the fully resolved configuration of a command without running it.
    DumpConfig {
        #[command(subcommand)]
        target: Run,
    },
}

#[derive(Debug, Subcommand)]
pub enum Run {
    /// Coherences at a single parameter point from both pipelines.
    Point(CommonArgs),
    /// One- or two-axis parameter grid.
    Sweep(SweepArgs),
    /// Minimum or maximum of g(m) over one parameter.
    Extremum(ExtremumArgs),
    /// Datasets behind a figure preset.
    Figure(FigureArgs),
    /// Monte-Carlo simulation compared against the deterministic chain.
    Mc(McArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Squeezing parameter r.
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<f64>,
    /// Squeezing phase θ in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Displacement α.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Detection efficiency η.
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    /// Mean background-noise photon number γ.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// ideal | click
    #[arg(long)]
    pub pipeline: Option<String>,
    /// Coherence orders, e.g. 2,3,4.
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<u8>>,
    /// Output path (directory for `figure`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
    /// Bound on truncated photon-number mass.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Print the resolved configuration instead of running.
    #[arg(long)]
    pub dump_config: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// param:min:max:points[:linear|log], given once or twice.
    #[arg(long = "axis")]
    pub axes: Vec<String>,
    /// Re-optimize a parameter at every grid point: param:min:max:min|max[:grid_points].
    #[arg(long)]
    pub optimize: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ExtremumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Free parameter.
    #[arg(long)]
    pub param: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub max: Option<f64>,
    /// min | max
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// linear | log
    #[arg(long)]
    pub spacing: Option<String>,
    /// Relative bracket width at which refinement stops.
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    /// fig2map | fig3 | fig4 | fig5 | fig6
    pub preset: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Points per swept axis.
    #[arg(long)]
    pub points: Option<usize>,
    /// Replace a preset axis: param:min:max:points[:linear|log].
    #[arg(long = "axis")]
    pub axes: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use a deterministic n-photon source instead of the squeezed state.
    #[arg(long)]
    pub fock: Option<usize>,
    /// Stratify trials by source photon number.
    #[arg(long)]
    pub stratified: bool,
}

/// Parses arguments, runs, reports errors on stderr, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(cli, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (run, dump_only) = match cli.command {
        Top::Run(r) => (r, false),
        Top::DumpConfig { target } => (target, true),
    };
    let cfg = resolve(&run)?;
    if dump_only || common(&run).dump_config {
        return stdout
            .write_all(cfg.to_json().as_bytes())
            .map_err(|e| CliError::Io(e.to_string()));
    }
    run_config(&cfg, stdout)
}

fn common(run: &Run) -> &CommonArgs {
    match run {
        Run::Point(c) => c,
        Run::Sweep(a) => &a.common,
        Run::Extremum(a) => &a.common,
        Run::Figure(a) => &a.common,
        Run::Mc(a) => &a.common,
    }
}

fn command_of(run: &Run) -> Command {
    match run {
        Run::Point(_) => Command::Point,
        Run::Sweep(_) => Command::Sweep,
        Run::Extremum(_) => Command::Extremum,
        Run::Figure(_) => Command::Figure,
        Run::Mc(_) => Command::Mc,
    }
}

fn config_err(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid parameter `{field}`: {reason}"))
}

fn parse_named<T: std::str::FromStr>(field: &str, s: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| config_err(field, e))
}

fn parse_spacing(s: &str) -> Result<Spacing, CliError> {
    match s {
        "linear" | "lin" => Ok(Spacing::Linear),
        "log" => Ok(Spacing::Log),
        other => Err(config_err("spacing", format!("expected linear or log, got `{other}`"))),
    }
}

fn parse_mode(s: &str) -> Result<Mode, CliError> {
    match s {
        "min" => Ok(Mode::Min),
        "max" => Ok(Mode::Max),
        other => Err(config_err("mode", format!("expected min or max, got `{other}`"))),
    }
}

/// `param:min:max:points[:spacing]`
pub fn parse_axis(s: &str) -> Result<Axis, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(4..=5).contains(&parts.len()) {
        return Err(config_err(
            "axis",
            format!("expected param:min:max:points[:spacing], got `{s}`"),
        ));
    }
    let param: Parameter = parse_named("axis", parts[0])?;
    let min: f64 = parse_named("axis.min", parts[1])?;
    let max: f64 = parse_named("axis.max", parts[2])?;
    let points: usize = parse_named("axis.points", parts[3])?;
    let spacing = match parts.get(4) {
        Some(sp) => parse_spacing(sp)?,
        None => param.default_spacing(min),
    };
    Ok(Axis {
        param,
        min,
        max,
        points,
        spacing,
    })
}

/// `param:min:max:mode[:grid_points]`
fn parse_optimize(s: &str) -> Result<Optimize, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(4..=5).contains(&parts.len()) {
        return Err(config_err(
            "optimize",
            format!("expected param:min:max:min|max[:grid_points], got `{s}`"),
        ));
    }
    Ok(Optimize {
        param: parse_named("optimize", parts[0])?,
        min: parse_named("optimize.min", parts[1])?,
        max: parse_named("optimize.max", parts[2])?,
        mode: parse_mode(parts[3])?,
        grid_points: match parts.get(4) {
            Some(p) => parse_named("optimize.grid_points", p)?,
            None => DEFAULT_GRID_POINTS,
        },
        rel_tol: DEFAULT_REL_TOL,
    })
}

/// Builds the resolved configuration: defaults or config file, then flags.
pub fn resolve(run: &Run) -> Result<RunConfig, CliError> {
    let command = command_of(run);
    let c = common(run);
    let mut cfg = match &c.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let cfg = RunConfig::from_json(&text)?;
            if cfg.command != command {
                return Err(config_err(
                    "command",
                    format!("config is for `{}`, not `{}`", cfg.command.name(), command.name()),
                ));
            }
            cfg
        }
        None => RunConfig::defaults(command),
    };

    if let Some(v) = c.r {
        cfg.state.r = v;
    }
    if let Some(v) = c.theta {
        cfg.state.theta = v;
    }
    if let Some(v) = c.alpha {
        cfg.state.alpha = v;
    }
    if let Some(v) = c.eta {
        cfg.detection.eta = v;
    }
    if let Some(v) = c.gamma {
        cfg.detection.gamma = v;
    }
    if let Some(p) = &c.pipeline {
        cfg.pipeline = Some(parse_named("pipeline", p)?);
    }
    if let Some(o) = &c.orders {
        cfg.orders = o.clone();
    }
    if let Some(f) = &c.format {
        cfg.format = match f.as_str() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(config_err("format", format!("expected csv or json, got `{other}`"))),
        };
    }
    if let Some(t) = c.tol {
        cfg.tail_tol = t;
    }
    if let Some(o) = &c.out {
        cfg.out = Some(o.clone());
    }

    match run {
        Run::Point(_) => {}
        Run::Sweep(a) => {
            if !a.axes.is_empty() {
                cfg.axes = a.axes.iter().map(|s| parse_axis(s)).collect::<Result<_, _>>()?;
            }
            if let Some(o) = &a.optimize {
                cfg.optimize = Some(parse_optimize(o)?);
            }
        }
        Run::Extremum(a) => {
            let ex = cfg.extremum.get_or_insert(ExtremumConfig {
                param: Parameter::Alpha,
                min: 1e-3,
                max: 1.0,
                mode: Mode::Min,
                grid_points: DEFAULT_GRID_POINTS,
                spacing: None,
                rel_tol: DEFAULT_REL_TOL,
            });
            if let Some(p) = &a.param {
                ex.param = parse_named("param", p)?;
            }
            if let Some(v) = a.min {
                ex.min = v;
            }
            if let Some(v) = a.max {
                ex.max = v;
            }
            if let Some(m) = &a.mode {
                ex.mode = parse_mode(m)?;
            }
            if let Some(g) = a.grid_points {
                ex.grid_points = g;
            }
            if let Some(s) = &a.spacing {
                ex.spacing = Some(parse_spacing(s)?);
            }
            if let Some(t) = a.rel_tol {
                ex.rel_tol = t;
            }
        }
        Run::Figure(a) => {
            let preset = match (&a.preset, &cfg.figure) {
                (Some(p), _) => parse_preset(p)?,
                (None, Some(f)) => f.preset,
                (None, None) => return Err(config_err("preset", "a figure preset is required")),
            };
            let points = a.points.or(cfg.figure.as_ref().and_then(|f| f.points));
            cfg.figure = Some(FigureSettings { preset, points });
            if !a.axes.is_empty() {
                cfg.axes = a.axes.iter().map(|s| parse_axis(s)).collect::<Result<_, _>>()?;
            }
            if cfg.out.is_none() {
                cfg.out = Some(std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from));
            }
        }
        Run::Mc(a) => {
            let mc = cfg.mc.get_or_insert_with(McSettings::default);
            if let Some(t) = a.trials {
                mc.trials = t;
            }
            if let Some(s) = a.seed {
                mc.seed = s;
            }
            if a.fock.is_some() {
                mc.fock = a.fock;
            }
            if a.stratified {
                mc.sampling = Sampling::Stratified;
            }
        }
    }

    // relative output files land in the default output directory when it is set
    if command != Command::Figure {
        if let (Some(out), Some(dir)) = (&cfg.out, std::env::var_os(OUT_DIR_ENV)) {
            if out.is_relative() {
                cfg.out = Some(PathBuf::from(dir).join(out));
            }
        }
    }

    cfg.validate()?;
    Ok(cfg)
}

fn parse_preset(s: &str) -> Result<FigurePreset, CliError> {
    FigurePreset::ALL.into_iter().find(|p| p.id() == s).ok_or_else(|| {
        config_err(
            "preset",
            format!("unknown preset `{s}` (expected fig2map, fig3, fig4, fig5 or fig6)"),
        )
    })
}

/// Executes a resolved configuration.
pub fn run_config(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Point => emit(cfg, &point_table(cfg)?, stdout),
        Command::Sweep => {
            let spec = SweepSpec {
                axes: cfg.axes.clone(),
                state: cfg.state,
                detection: cfg.detection,
                pipeline: cfg.pipeline.expect("validated"),
                orders: cfg.orders.clone(),
                optimize: cfg.optimize.clone(),
                tail_tol: cfg.tail_tol,
            };
            emit(cfg, &sweep_table(&sweep(&spec)?), stdout)
        }
        Command::Extremum => emit(cfg, &extremum_table(cfg)?, stdout),
        Command::Mc => emit(cfg, &mc_table(cfg)?, stdout),
        Command::Figure => run_figure(cfg, stdout),
    }
}

fn emit(cfg: &RunConfig, table: &Table, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cfg.out {
        None => table.write(cfg.format, stdout).map_err(|e| CliError::Io(e.to_string())),
        Some(path) => write_file(path, &table.to_bytes(cfg.format)),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

const POINT_AXES: [&str; 5] = ["r", "theta", "alpha", "eta", "gamma"];

fn point_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let s = &cfg.state;
    let coords = [s.r, s.theta, s.alpha, cfg.detection.eta, cfg.detection.gamma];
    let common = format!(
        "mean_photons={:e};squeezing_db={:e}",
        s.mean_photons(),
        squeezing_db(s.r)
    );
    let pick = |t: [f64; 3]| {
        let mut v = [None; 3];
        for &m in &cfg.orders {
            v[(m - 2) as usize] = Some(t[(m - 2) as usize]);
        }
        v
    };
    let mut table = Table::new(coherence_header(&POINT_AXES));
    let pipelines: Vec<Pipeline> = match cfg.pipeline {
        Some(p) => vec![p],
        None => vec![Pipeline::Ideal, Pipeline::Click],
    };
    let mut errors = Vec::new();
    for p in &pipelines {
        match p {
            Pipeline::Ideal => match ideal_coherence(s) {
                Ok(rep) => {
                    let mut diag = vec![common.clone(), format!("imag_residue={:e}", rep.imag_residue)];
                    for m in rep.flagged_orders() {
                        diag.push(format!(
                            "printed_g{m}_rel_diff={:.3e}",
                            rep.rel_discrepancy[(m - 2) as usize]
                        ));
                    }
                    let e = rep.exact;
                    table.push(coherence_row(
                        &coords,
                        pick(e.as_array()),
                        Some(e.mean_clicks),
                        "ideal",
                        &diag.join(";"),
                    ));
                    table.push(coherence_row(
                        &coords,
                        pick(rep.printed.as_array()),
                        Some(rep.printed.mean_clicks),
                        "ideal-printed",
                        "closed form as printed; not used downstream",
                    ));
                }
                Err(e) => errors.push(("ideal", e)),
            },
            Pipeline::Click => {
                let run = || -> Result<_, CoherenceError> {
                    let source = crate::state::squeezed_distribution(s, cfg.tail_tol)?;
                    let detected = detect(&source, &cfg.detection)?;
                    let clicks = click_probabilities(&detected);
                    Ok((source, detected, clicks, coherence_from_clicks(&clicks)))
                };
                match run() {
                    Ok((source, detected, clicks, coh)) => {
                        let diag = format!(
                            "{common};source_terms={};source_tail={:e};detected_terms={};truncation_defect={:e};gamma_click={}",
                            source.len(),
                            source.tail_mass(),
                            detected.len(),
                            clicks.truncation_defect,
                            clicks.gamma_click.map(|g| format!("{g:e}")).join("|"),
                        );
                        match coh {
                            Ok(c) => table.push(coherence_row(
                                &coords,
                                pick(c.as_array()),
                                Some(c.mean_clicks),
                                "click",
                                &diag,
                            )),
                            Err(e) => {
                                table.push(coherence_row(
                                    &coords,
                                    [None; 3],
                                    Some(clicks.mean_clicks),
                                    "click",
                                    &format!("{diag};error: {e}"),
                                ));
                                errors.push(("click", e));
                            }
                        }
                    }
                    Err(e) => errors.push(("click", e)),
                }
            }
        }
    }
    if errors.len() == pipelines.len() {
        let (_, e) = errors.swap_remove(0);
        return Err(e.into());
    }
    Ok(table)
}

fn extremum_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let ex = cfg.extremum.as_ref().expect("validated");
    let pipeline = cfg.pipeline.expect("validated");
    let mut table = Table::new(coherence_header(&[ex.param.name()]));
    for &order in &cfg.orders {
        let spec = ExtremumSpec {
            order,
            param: ex.param,
            min: ex.min,
            max: ex.max,
            mode: ex.mode,
            pipeline,
            state: cfg.state,
            detection: cfg.detection,
            grid_points: ex.grid_points,
            spacing: ex.spacing,
            rel_tol: ex.rel_tol,
            tail_tol: cfg.tail_tol,
        };
        let res = find_extremum(&spec)?;
        let mut values = [None; 3];
        values[(order - 2) as usize] = Some(res.value);
        let mut diag = format!(
            "order={order};mode={};bracket_width={:e};evaluations={}",
            if res.mode == Mode::Min { "min" } else { "max" },
            res.bracket_width,
            res.evaluations
        );
        if res.at_boundary {
            diag.push_str(";boundary_extremum");
        }
        table.push(coherence_row(
            &[res.location],
            values,
            Some(res.mean_clicks),
            &pipeline.to_string(),
            &diag,
        ));
    }
    Ok(table)
}

fn mc_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let settings = cfg.mc.as_ref().expect("validated");
    let source = match settings.fock {
        Some(n) => Source::Fock { n },
        None => Source::Squeezed(cfg.state),
    };
    let mc_cfg = McConfig {
        trials: settings.trials,
        seed: settings.seed,
        source,
        detection: cfg.detection,
        sampling: settings.sampling,
        tail_tol: cfg.tail_tol,
    };
    let res = match run_mc(&mc_cfg) {
        Ok(r) => r,
        Err(McError::NoSignal {
            trials,
            click_histogram,
        }) => {
            return Err(CliError::NoSignal(format!(
                "no clicks in {trials} trials (histogram {click_histogram:?})"
            )))
        }
        Err(McError::Invalid(e)) => return Err(e.into()),
    };
    let detected = detect(&source.distribution(cfg.tail_tol)?, &cfg.detection)?;
    let clicks = click_probabilities(&detected);
    let det = coherence_from_clicks(&clicks).ok();

    let mut table = Table::new(["quantity", "estimate", "std_error", "deterministic", "z_score", "flag"]);
    let mut flagged = 0;
    let mut push = |name: String, est: f64, se: f64, exact: Option<f64>| {
        let z = exact.map(|x| {
            if se > 0.0 {
                (est - x) / se
            } else if est == x {
                0.0
            } else {
                f64::INFINITY
            }
        });
        let flag = match z {
            Some(z) if z.abs() > 4.0 => {
                flagged += 1;
                "disagree_4sigma"
            }
            _ => "",
        };
        table.push(vec![
            Cell::Text(name),
            Cell::Num(est),
            Cell::Num(se),
            Cell::from(exact),
            Cell::from(z),
            Cell::Text(flag.into()),
        ]);
    };
    for i in 0..5 {
        push(
            format!("gamma_click_{i}"),
            res.gamma_hat[i],
            res.gamma_se[i],
            Some(clicks.gamma_click[i]),
        );
    }
    let est = res.estimated;
    let exact = [
        det.map(|d| d.g2),
        det.map(|d| d.g3),
        det.map(|d| d.g4),
        det.map(|d| d.mean_clicks),
    ];
    for (i, (name, v)) in [
        ("g2", est.g2),
        ("g3", est.g3),
        ("g4", est.g4),
        ("mean_clicks", est.mean_clicks),
    ]
    .into_iter()
    .enumerate()
    {
        push(name.to_string(), v, res.std_errors[i], exact[i]);
    }
    for (i, &c) in res.click_histogram.iter().enumerate() {
        table.push(vec![
            Cell::Text(format!("trials_with_{i}_clicks")),
            Cell::Int(c),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Text(String::new()),
        ]);
    }
    for (d, &c) in res.detector_clicks.iter().enumerate() {
        table.push(vec![
            Cell::Text(format!("detector_{}_clicks", d + 1)),
            Cell::Int(c),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Text(String::new()),
        ]);
    }
    if flagged > 0 {
        eprintln!("warning: {flagged} quantities differ from the deterministic chain by more than 4 standard errors");
    }
    Ok(table)
}

fn run_figure(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let fig = cfg.figure.as_ref().expect("validated");
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let ext = match cfg.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let mut entries = Vec::new();
    for ds in figures::datasets(fig.preset, fig.points, &cfg.axes, cfg.tail_tol) {
        let table = sweep(&ds.spec)?;
        let file = format!("{}.{ext}", ds.file_stem(fig.preset));
        write_file(&dir.join(&file), &sweep_table(&table).to_bytes(cfg.format))?;
        writeln!(stdout, "{}", dir.join(&file).display()).map_err(|e| CliError::Io(e.to_string()))?;
        entries.push(json!({
            "file": file,
            "name": ds.name,
            "hash": ds.hash(),
            "rows": table.rows.len(),
            "note": ds.note,
            "spec": ds.spec,
        }));
    }
    let manifest = json!({
        "preset": fig.preset.id(),
        "schema_version": config::SCHEMA_VERSION,
        "columns": "axis columns, g2, g3, g4, mean_clicks, pipeline, diagnostics",
        "feasible_detection": figures::FEASIBLE,
        "datasets": entries,
    });
    let path = dir.join(format!("{}_manifest.json", fig.preset.id()));
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(&path, text.as_bytes())?;
    writeln!(stdout, "{}", path.display()).map_err(|e| CliError::Io(e.to_string()))
}
