//! Batch front end: flag and config-file parsing, sweeps and CSV output.
//!
//! Only dimensionless groups are accepted. Internally the half flight time
//! is the unit of time, so T = 1, ω̄ = ω̄T, R = R/T, λ = 2π/ω̄,
//! V = λ³/(λ³/V) and t₀ = (t₀ω̄)/ω̄.
//!
//! Output is assembled in memory and written once, in grid order, so repeated
//! runs are byte-identical even though rows are computed in parallel.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::band::{band_w_r_exact_with, band_w_r_leading, mode_sum_oracle, BandBracket, BandSpec};
use crate::estimates::{
    cavity_estimate, empty_space_estimate, envelope_f_averaged, CavityScenario, EmptySpaceScenario,
};
use crate::oracle::{quad_w_r, QuadratureConfig, Scheme};
use crate::single_mode::{
    emission_window, g, long_time_average, max_recoherence, unitarity_sum, w_r_of_t0,
    windowed_average_g, windowed_average_w_r, PhaseFunctionParams,
};
use crate::squeezed::{ModeSpec, SqueezeState};
use crate::trajectory::Trajectory;
use crate::{Error, FINE_STRUCTURE};

/// Largest relative closed-form/quadrature mismatch accepted by `oracle`.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

/// At most this many swept dimensions.
pub const MAX_AXES: usize = 3;

#[derive(Debug, Parser)]
#[command(
    name = "recoherence",
    version,
    about = "Electron coherence in squeezed-vacuum fluctuations"
)]
pub struct Cli {
    /// Write CSV here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// key=value config file with [params], [quadrature], [sweep] and [run] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// W_R, g and the contrast factor over one period of emission times.
    SingleMode(SingleModeArgs),
    /// Band-integrated W_R against its leading order and a discrete mode sum.
    Band(BandArgs),
    /// Closed-form W_R against brute-force double quadrature.
    Oracle(OracleArgs),
    /// Order-of-magnitude scenario estimates.
    Estimate(EstimateArgs),
    /// Cartesian sweep over up to three parameters with derived columns.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SingleModeArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Number of emission times per period π/ω̄.
    #[arg(long = "t0-grid")]
    pub t0_grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BandArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
    /// Extra rows, each halving Δω/ω̄.
    #[arg(long)]
    pub halvings: Option<usize>,
    /// Modes in the discrete sum.
    #[arg(long = "n-modes")]
    pub n_modes: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleGrid {
    /// ω̄T ∈ {0.5, 1, 3.34, 10} × r ∈ {0, 0.5, 1, 2} × t₀ω̄ = kπ/8, k < 8.
    Default,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum, default_value = "default")]
    pub grid: OracleGrid,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    /// One mode in a cavity; ω̄T = 2π/(R/T) with the separation equal to λ.
    Cavity,
    /// A band of free-space modes.
    EmptySpace,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(value_enum)]
    pub scenario: Scenario,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Swept parameter as name=grid; grid is a comma list, lin:a:b:n or log:a:b:n.
    #[arg(long = "axis")]
    pub axes: Vec<String>,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
}

/// Physical inputs, all optional so that the config file can supply them.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Squeeze magnitude r ≥ 0.
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<f64>,
    /// Squeeze phase θ.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// ω̄T.
    #[arg(long = "omega-bar-T")]
    pub omega_bar_t: Option<f64>,
    /// R/T.
    #[arg(long = "ratio-RT")]
    pub ratio_rt: Option<f64>,
    /// λ³/V.
    #[arg(long = "lambda3-over-V")]
    pub lambda3_over_v: Option<f64>,
    /// Emission time in units of 1/ω̄.
    #[arg(long = "t0-omega", allow_hyphen_values = true)]
    pub t0_omega: Option<f64>,
    /// Δω/ω̄.
    #[arg(long = "bandwidth-ratio")]
    pub bandwidth_ratio: Option<f64>,
    /// ΔΩ in steradians.
    #[arg(long = "solid-angle")]
    pub solid_angle: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct QuadratureArgs {
    /// Quadrature nodes per oscillation period (≥ 16).
    #[arg(long = "nodes-per-period")]
    pub nodes_per_period: Option<usize>,
    /// Gauss–Legendre order per panel.
    #[arg(long = "gl-order")]
    pub gl_order: Option<usize>,
    /// Absolute refinement tolerance.
    #[arg(long = "abs-tol")]
    pub abs_tol: Option<f64>,
    /// Relative refinement tolerance.
    #[arg(long = "rel-tol")]
    pub rel_tol: Option<f64>,
}

/// A parameter that can be set from the config file or swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    R,
    Theta,
    OmegaBarT,
    RatioRt,
    Lambda3OverV,
    T0Omega,
    BandwidthRatio,
    SolidAngle,
}

impl Field {
    pub const ALL: [Field; 8] = [
        Field::R,
        Field::Theta,
        Field::OmegaBarT,
        Field::RatioRt,
        Field::Lambda3OverV,
        Field::T0Omega,
        Field::BandwidthRatio,
        Field::SolidAngle,
    ];

    /// Column and config-key name.
    pub fn name(self) -> &'static str {
        match self {
            Field::R => "r",
            Field::Theta => "theta",
            Field::OmegaBarT => "omega_bar_T",
            Field::RatioRt => "ratio_RT",
            Field::Lambda3OverV => "lambda3_over_V",
            Field::T0Omega => "t0_omega",
            Field::BandwidthRatio => "bandwidth_ratio",
            Field::SolidAngle => "solid_angle",
        }
    }
}

impl FromStr for Field {
    type Err = String;

    /// Case-insensitive; `-` and `_` are interchangeable.
    fn from_str(s: &str) -> Result<Self, String> {
        let key = normalize_key(s);
        Field::ALL
            .into_iter()
            .find(|f| normalize_key(f.name()) == key)
            .ok_or_else(|| {
                let known: Vec<_> = Field::ALL.iter().map(|f| f.name()).collect();
                format!("unknown parameter '{s}' (known: {})", known.join(", "))
            })
    }
}

fn normalize_key(s: &str) -> String {
    s.trim().to_ascii_lowercase().replace('-', "_")
}

/// Resolved physical inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub r: f64,
    pub theta: f64,
    pub omega_bar_t: f64,
    pub ratio_rt: f64,
    pub lambda3_over_v: f64,
    pub t0_omega: f64,
    pub bandwidth_ratio: f64,
    pub solid_angle: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            r: 1.0,
            theta: 0.0,
            omega_bar_t: 3.34,
            ratio_rt: 0.1,
            lambda3_over_v: 1.0,
            t0_omega: 0.0,
            bandwidth_ratio: 0.1,
            solid_angle: 0.1,
        }
    }
}

impl Params {
    pub fn get(&self, field: Field) -> f64 {
        match field {
            Field::R => self.r,
            Field::Theta => self.theta,
            Field::OmegaBarT => self.omega_bar_t,
            Field::RatioRt => self.ratio_rt,
            Field::Lambda3OverV => self.lambda3_over_v,
            Field::T0Omega => self.t0_omega,
            Field::BandwidthRatio => self.bandwidth_ratio,
            Field::SolidAngle => self.solid_angle,
        }
    }

    pub fn set(&mut self, field: Field, value: f64) {
        let slot = match field {
            Field::R => &mut self.r,
            Field::Theta => &mut self.theta,
            Field::OmegaBarT => &mut self.omega_bar_t,
            Field::RatioRt => &mut self.ratio_rt,
            Field::Lambda3OverV => &mut self.lambda3_over_v,
            Field::T0Omega => &mut self.t0_omega,
            Field::BandwidthRatio => &mut self.bandwidth_ratio,
            Field::SolidAngle => &mut self.solid_angle,
        };
        *slot = value;
    }

    fn apply_flags(&mut self, a: &ParamArgs) {
        let flags = [
            (Field::R, a.r),
            (Field::Theta, a.theta),
            (Field::OmegaBarT, a.omega_bar_t),
            (Field::RatioRt, a.ratio_rt),
            (Field::Lambda3OverV, a.lambda3_over_v),
            (Field::T0Omega, a.t0_omega),
            (Field::BandwidthRatio, a.bandwidth_ratio),
            (Field::SolidAngle, a.solid_angle),
        ];
        for (field, value) in flags {
            if let Some(v) = value {
                self.set(field, v);
            }
        }
    }

    pub fn state(&self) -> crate::Result<SqueezeState> {
        SqueezeState::new(self.r, self.theta)
    }

    /// ω̄ = ω̄T, V = λ³/(λ³/V) with λ = 2π/ω̄.
    pub fn mode(&self) -> crate::Result<ModeSpec> {
        if !(self.lambda3_over_v.is_finite() && self.lambda3_over_v > 0.0) {
            return Err(Error::Domain(format!(
                "lambda3_over_V must be positive, got {}",
                self.lambda3_over_v
            )));
        }
        let lambda = TAU / self.omega_bar_t;
        ModeSpec::new(self.omega_bar_t, lambda.powi(3) / self.lambda3_over_v)
    }

    pub fn trajectory(&self) -> crate::Result<Trajectory> {
        Trajectory::new(self.ratio_rt, 1.0)
    }

    pub fn band(&self) -> crate::Result<BandSpec> {
        BandSpec::new(
            self.omega_bar_t,
            self.bandwidth_ratio * self.omega_bar_t,
            self.solid_angle,
        )
    }

    pub fn t0(&self) -> f64 {
        self.t0_omega / self.omega_bar_t
    }
}

/// Integer run settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Settings {
    pub t0_grid: usize,
    pub n_modes: usize,
    pub halvings: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            t0_grid: 32,
            n_modes: 256,
            halvings: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub field: Field,
    pub values: Vec<f64>,
}

impl FromStr for Axis {
    type Err = String;

    /// `name=grid`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (name, grid) = s
            .split_once('=')
            .ok_or_else(|| format!("axis '{s}' is not of the form name=grid"))?;
        Ok(Axis {
            field: name.parse()?,
            values: parse_grid(grid)?,
        })
    }
}

/// Comma list, `lin:a:b:n` (n points, both ends included) or `log:a:b:n`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("'{t}' is not a finite number"))
    };
    let values = if let Some(bounds) = s.strip_prefix("lin:").or_else(|| s.strip_prefix("log:")) {
        let parts: Vec<&str> = bounds.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("grid '{s}' needs the form kind:start:stop:count"));
        };
        let (a, b) = (num(a)?, num(b)?);
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| format!("'{n}' is not a point count"))?;
        let log = s.starts_with("log:");
        if log && (a <= 0.0 || b <= 0.0) {
            return Err(format!("log grid '{s}' needs positive end points"));
        }
        let (a, b) = if log { (a.ln(), b.ln()) } else { (a, b) };
        (0..n)
            .map(|i| {
                let v = if n == 1 {
                    a
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                };
                if log {
                    v.exp()
                } else {
                    v
                }
            })
            .collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(format!("grid '{s}' is empty"));
    }
    Ok(values)
}

/// Everything a run needs after defaults, config file and flags are merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub settings: Settings,
    pub quadrature: QuadratureConfig,
    pub axes: Vec<Axis>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Applies a config file's contents; `origin` labels diagnostics.
    pub fn apply_file(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        let mut section = String::from("params");
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let err = |msg: String| CliError::Config(format!("{origin}:{lineno}: {msg}"));
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("malformed section header '{line}'")))?;
                section = normalize_key(name);
                if !["params", "quadrature", "sweep", "run"].contains(&section.as_str()) {
                    return Err(err(format!("unknown section [{name}]")));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            self.apply_entry(&section, key, value)
                .map_err(|msg| err(format!("[{section}] {key}: {msg}")))?;
        }
        Ok(())
    }

    fn apply_entry(&mut self, section: &str, key: &str, value: &str) -> Result<(), String> {
        let real = || {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{value}' is not a finite number"))
        };
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| format!("'{value}' is not a count"))
        };
        match section {
            "params" => self.params.set(key.parse()?, real()?),
            "sweep" => self.set_axis(Axis {
                field: key.parse()?,
                values: parse_grid(value)?,
            }),
            "quadrature" => match normalize_key(key).as_str() {
                "nodes_per_period" => self.quadrature.nodes_per_period = count()?,
                "gl_order" | "order" => {
                    self.quadrature.scheme = Scheme::GaussLegendre { order: count()? }
                }
                "abs_tol" => self.quadrature.abs_tol = real()?,
                "rel_tol" => self.quadrature.rel_tol = real()?,
                _ => return Err("unknown key".into()),
            },
            "run" => match normalize_key(key).as_str() {
                "t0_grid" => self.settings.t0_grid = count()?,
                "n_modes" => self.settings.n_modes = count()?,
                "halvings" => self.settings.halvings = count()?,
                "output" => self.output = Some(PathBuf::from(value)),
                _ => return Err("unknown key".into()),
            },
            _ => unreachable!("section names are checked on entry"),
        }
        Ok(())
    }

    /// Replaces an axis of the same parameter in place, else appends.
    fn set_axis(&mut self, axis: Axis) {
        match self.axes.iter_mut().find(|a| a.field == axis.field) {
            Some(slot) => *slot = axis,
            None => self.axes.push(axis),
        }
    }

    fn apply_quadrature_flags(&mut self, q: &QuadratureArgs) {
        if let Some(n) = q.nodes_per_period {
            self.quadrature.nodes_per_period = n;
        }
        if let Some(order) = q.gl_order {
            self.quadrature.scheme = Scheme::GaussLegendre { order };
        }
        if let Some(t) = q.abs_tol {
            self.quadrature.abs_tol = t;
        }
        if let Some(t) = q.rel_tol {
            self.quadrature.rel_tol = t;
        }
    }

    /// Merges defaults, the optional config file and the flags of `cli`.
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &cli.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            cfg.apply_file(&text, &path.display().to_string())?;
        }
        match &cli.command {
            Command::SingleMode(a) => {
                cfg.params.apply_flags(&a.params);
                if let Some(n) = a.t0_grid {
                    cfg.settings.t0_grid = n;
                }
            }
            Command::Band(a) => {
                cfg.params.apply_flags(&a.params);
                cfg.apply_quadrature_flags(&a.quadrature);
                if let Some(h) = a.halvings {
                    cfg.settings.halvings = h;
                }
                if let Some(n) = a.n_modes {
                    cfg.settings.n_modes = n;
                }
            }
            Command::Oracle(a) => {
                cfg.params.apply_flags(&a.params);
                cfg.apply_quadrature_flags(&a.quadrature);
            }
            Command::Estimate(a) => cfg.params.apply_flags(&a.params),
            Command::Sweep(a) => {
                cfg.params.apply_flags(&a.params);
                cfg.apply_quadrature_flags(&a.quadrature);
                for text in &a.axes {
                    let axis = text
                        .parse()
                        .map_err(|e| CliError::Config(format!("--axis: {e}")))?;
                    cfg.set_axis(axis);
                }
            }
        }
        if cli.output.is_some() {
            cfg.output = cli.output.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.quadrature
            .validate()
            .map_err(|e| CliError::Config(format!("quadrature: {e}")))?;
        if self.axes.len() > MAX_AXES {
            return Err(CliError::Config(format!(
                "at most {MAX_AXES} sweep axes, got {}",
                self.axes.len()
            )));
        }
        if self.settings.t0_grid == 0 {
            return Err(CliError::Config("t0_grid must be at least 1".into()));
        }
        if self.settings.n_modes == 0 {
            return Err(CliError::Config("n_modes must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    /// Domain errors come from bad inputs; everything else is numerical.
    fn from_lib(context: &str, e: Error) -> Self {
        match e {
            Error::Domain(_) => CliError::Config(format!("{context}: {e}")),
            _ => CliError::Numerical(format!("{context}: {e}")),
        }
    }
}

/// Finished run: CSV text, stderr notes and the exit code to report.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub csv: String,
    pub notes: Vec<String>,
    pub exit_code: i32,
}

impl Report {
    fn ok(csv: String, notes: Vec<String>) -> Self {
        Self {
            csv,
            notes,
            exit_code: 0,
        }
    }
}

/// Shortest round-trip decimal.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn push_row(csv: &mut String, cells: &[String]) {
    csv.push_str(&cells.join(","));
    csv.push('\n');
}

fn speed_note(traj: &Trajectory) -> Option<String> {
    traj.is_superluminal().then(|| {
        format!(
            "warning: peak path speed {} exceeds c; the non-relativistic path is unphysical",
            fmt(traj.peak_speed())
        )
    })
}

/// Runs the subcommand of `cli` and returns the CSV without writing it.
pub fn run(cli: &Cli) -> Result<Report, CliError> {
    run_with(&RunConfig::from_cli(cli)?, &cli.command)
}

fn run_with(cfg: &RunConfig, command: &Command) -> Result<Report, CliError> {
    match command {
        Command::SingleMode(_) => run_single_mode(cfg),
        Command::Band(_) => run_band(cfg),
        Command::Oracle(a) => run_oracle(cfg, a.grid),
        Command::Estimate(a) => run_estimate(cfg, a.scenario),
        Command::Sweep(_) => run_sweep(cfg),
    }
}

/// Runs `cli`, writes the CSV to the configured destination and returns the
/// report (whose CSV has already been written).
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let cfg = RunConfig::from_cli(cli)?;
    let report = run_with(&cfg, &cli.command)?;
    match cfg.output {
        Some(path) => write_file(&path, &report.csv)?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(report.csv.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
        }
    }
    Ok(report)
}

fn write_file(path: &Path, csv: &str) -> Result<(), CliError> {
    std::fs::write(path, csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run_single_mode(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = &cfg.params;
    let lib = |e| CliError::from_lib("single-mode", e);
    let state = p.state().map_err(lib)?;
    let mode = p.mode().map_err(lib)?;
    let traj = p.trajectory().map_err(lib)?;
    let phase = PhaseFunctionParams::for_mode(&state, &mode);
    let n = cfg.settings.t0_grid;
    let mut csv = String::from("t0,g,W_R,contrast_factor\n");
    for k in 0..n {
        let t0 = (p.t0_omega + PI * k as f64 / n as f64) / p.omega_bar_t;
        let res = w_r_of_t0(&state, &mode, &traj, t0)
            .map_err(|e| CliError::from_lib(&format!("row {k} (t0 = {t0})"), e))?;
        push_row(
            &mut csv,
            &[
                fmt(t0),
                fmt(g(&state, &phase, t0)),
                fmt(res.w_r),
                fmt(res.contrast_factor),
            ],
        );
    }
    Ok(Report::ok(csv, speed_note(&traj).into_iter().collect()))
}

fn run_band(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = cfg.params;
    let lib = |e| CliError::from_lib("band", e);
    let state = p.state().map_err(lib)?;
    let traj = p.trajectory().map_err(lib)?;
    let t0 = p.t0();
    let mut notes: Vec<String> = speed_note(&traj).into_iter().collect();
    let rows: Vec<Params> = (0..=cfg.settings.halvings)
        .map(|h| Params {
            bandwidth_ratio: p.bandwidth_ratio / 2f64.powi(h as i32),
            ..p
        })
        .collect();
    let computed: Vec<Result<Vec<f64>, CliError>> = rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let ctx = |e| {
                CliError::from_lib(
                    &format!("row {i} (bandwidth_ratio = {})", row.bandwidth_ratio),
                    e,
                )
            };
            let band = row.band().map_err(ctx)?;
            let exact = band_w_r_exact_with(
                &state,
                &band,
                &traj,
                BandBracket::WindowAveraged,
                &cfg.quadrature,
            )
            .map_err(ctx)?;
            let leading = band_w_r_leading(&state, &band, &traj).map_err(ctx)?;
            let exact_t0 = band_w_r_exact_with(
                &state,
                &band,
                &traj,
                BandBracket::AtEmissionTime(t0),
                &cfg.quadrature,
            )
            .map_err(ctx)?;
            let sum =
                mode_sum_oracle(&state, &band, &traj, cfg.settings.n_modes, t0).map_err(ctx)?;
            Ok(vec![
                row.bandwidth_ratio,
                exact,
                leading,
                relative_error(exact, leading),
                exact_t0,
                sum,
                relative_error(sum, exact_t0),
            ])
        })
        .collect();
    let mut csv =
        String::from("bandwidth_ratio,exact,leading,rel_err,exact_t0,mode_sum,mode_sum_rel_err\n");
    for row in computed {
        push_row(&mut csv, &row?.into_iter().map(fmt).collect::<Vec<_>>());
    }
    if let Some(flag) = rows
        .first()
        .and_then(|r| r.band().ok())
        .map(|b| b.flags(&traj))
    {
        if flag.any() {
            notes.push(format!(
                "warning: band outside the small-parameter regime: {flag:?}"
            ));
        }
    }
    Ok(Report::ok(csv, notes))
}

/// |a − b| / max(1e−30, |b|).
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-30)
}

/// One point of the oracle grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub omega_bar_t: f64,
    pub r: f64,
    pub t0: f64,
    pub closed: f64,
    pub quad: f64,
    pub rel_err: f64,
}

/// Grid points (ω̄T, r, t₀) of the default oracle run, row-major.
pub fn default_oracle_grid() -> Vec<(f64, f64, f64)> {
    let mut pts = Vec::new();
    for &x in &[0.5, 1.0, 3.34, 10.0] {
        for &r in &[0.0, 0.5, 1.0, 2.0] {
            for k in 0..8 {
                pts.push((x, r, k as f64 * PI / (8.0 * x)));
            }
        }
    }
    pts
}

/// Evaluates the oracle grid around the base parameters (θ, R/T, λ³/V).
pub fn oracle_rows(base: &Params, cfg: &QuadratureConfig) -> Result<Vec<OracleRow>, CliError> {
    default_oracle_grid()
        .par_iter()
        .enumerate()
        .map(|(i, &(x, r, t0))| {
            let ctx = |e| {
                CliError::from_lib(
                    &format!("row {i} (omega_bar_T = {x}, r = {r}, t0 = {t0})"),
                    e,
                )
            };
            let p = Params {
                omega_bar_t: x,
                r,
                ..*base
            };
            let state = p.state().map_err(ctx)?;
            let mode = p.mode().map_err(ctx)?;
            let traj = p.trajectory().map_err(ctx)?;
            let closed = w_r_of_t0(&state, &mode, &traj, t0).map_err(ctx)?.w_r;
            let quad = quad_w_r(&state, &mode, &traj, t0, cfg).map_err(ctx)?;
            Ok(OracleRow {
                omega_bar_t: x,
                r,
                t0,
                closed,
                quad,
                rel_err: relative_error(quad, closed),
            })
        })
        .collect()
}

fn run_oracle(cfg: &RunConfig, grid: OracleGrid) -> Result<Report, CliError> {
    let OracleGrid::Default = grid;
    let rows = oracle_rows(&cfg.params, &cfg.quadrature)?;
    let mut csv = String::from("omega_bar_T,r,t0,closed,quad,rel_err\n");
    for row in &rows {
        push_row(
            &mut csv,
            &[
                row.omega_bar_t,
                row.r,
                row.t0,
                row.closed,
                row.quad,
                row.rel_err,
            ]
            .map(fmt),
        );
    }
    let max = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let pass = max <= ORACLE_TOLERANCE;
    Ok(Report {
        csv,
        notes: vec![format!(
            "max rel_err = {} ({})",
            fmt(max),
            if pass { "ok" } else { "exceeds tolerance" }
        )],
        exit_code: if pass { 0 } else { 2 },
    })
}

fn run_estimate(cfg: &RunConfig, scenario: Scenario) -> Result<Report, CliError> {
    let p = &cfg.params;
    let lib = |e| CliError::from_lib("estimate", e);
    match scenario {
        Scenario::Cavity => {
            // λ = 1, R = λ, T = λ/(R/T)
            let scn = CavityScenario::new(1.0, 1.0 / p.lambda3_over_v, 1.0, 1.0 / p.ratio_rt)
                .map_err(lib)?;
            let est = cavity_estimate(&scn).map_err(lib)?;
            let mut csv =
                String::from("ratio_RT,lambda3_over_V,omega_bar_T,averaged,exact,large_x\n");
            push_row(
                &mut csv,
                &[
                    p.ratio_rt,
                    p.lambda3_over_v,
                    scn.omega_bar_t(),
                    est.averaged,
                    est.exact,
                    est.large_x,
                ]
                .map(fmt),
            );
            Ok(Report::ok(csv, Vec::new()))
        }
        Scenario::EmptySpace => {
            let scn = EmptySpaceScenario::new(
                p.ratio_rt,
                p.bandwidth_ratio,
                p.solid_angle,
                p.omega_bar_t,
            )
            .map_err(lib)?;
            let exact = empty_space_estimate(&scn).map_err(lib)?;
            let averaged = FINE_STRUCTURE / (6.0 * PI * PI)
                * p.ratio_rt
                * p.ratio_rt
                * p.bandwidth_ratio
                * p.solid_angle
                * envelope_f_averaged(p.omega_bar_t);
            let mut csv =
                String::from("ratio_RT,bandwidth_ratio,solid_angle,omega_bar_T,averaged,exact\n");
            push_row(
                &mut csv,
                &[
                    p.ratio_rt,
                    p.bandwidth_ratio,
                    p.solid_angle,
                    p.omega_bar_t,
                    averaged,
                    exact,
                ]
                .map(fmt),
            );
            let flags = scn.flags();
            let notes = if flags == Default::default() {
                Vec::new()
            } else {
                vec![format!("warning: factors not small: {flags:?}")]
            };
            Ok(Report::ok(csv, notes))
        }
    }
}

/// Derived columns of a sweep row, after the axis values and status.
pub const SWEEP_COLUMNS: [&str; 11] = [
    "delta_t",
    "g_avg",
    "W_R_window",
    "max_bound",
    "unitarity_total",
    "W_R_t0",
    "contrast_factor",
    "W_R_long",
    "band_exact",
    "band_leading",
    "band_rel_err",
];

/// Row-major Cartesian product of the axes applied to `base`.
pub fn sweep_points(base: &Params, axes: &[Axis]) -> Vec<Params> {
    let mut points = vec![*base];
    for axis in axes {
        points = points
            .iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = *p;
                    q.set(axis.field, v);
                    q
                })
            })
            .collect();
    }
    points
}

fn sweep_row(p: &Params, cfg: &QuadratureConfig) -> crate::Result<[f64; 11]> {
    let state = p.state()?;
    let mode = p.mode()?;
    let traj = p.trajectory()?;
    let window = emission_window(&state, &PhaseFunctionParams::for_mode(&state, &mode));
    let at_t0 = w_r_of_t0(&state, &mode, &traj, p.t0())?;
    let band = p.band()?;
    let exact = band_w_r_exact_with(&state, &band, &traj, BandBracket::WindowAveraged, cfg)?;
    let leading = band_w_r_leading(&state, &band, &traj)?;
    let row = [
        window.width,
        windowed_average_g(&state),
        windowed_average_w_r(&state, &mode, &traj)?,
        max_recoherence(&mode, &traj)?,
        unitarity_sum(&state, &mode, &traj)?.total,
        at_t0.w_r,
        at_t0.contrast_factor,
        long_time_average(&state, &mode, &traj)?,
        exact,
        leading,
        relative_error(exact, leading),
    ];
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::Range("non-finite derived quantity".into()));
    }
    Ok(row)
}

fn run_sweep(cfg: &RunConfig) -> Result<Report, CliError> {
    let points = sweep_points(&cfg.params, &cfg.axes);
    let rows: Vec<crate::Result<[f64; 11]>> = points
        .par_iter()
        .map(|p| sweep_row(p, &cfg.quadrature))
        .collect();

    let mut csv = String::new();
    let mut header: Vec<&str> = cfg.axes.iter().map(|a| a.field.name()).collect();
    header.push("status");
    header.extend(SWEEP_COLUMNS);
    push_row(
        &mut csv,
        &header.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
    );

    let mut notes = Vec::new();
    for (i, (p, row)) in points.iter().zip(rows).enumerate() {
        let mut cells: Vec<String> = cfg.axes.iter().map(|a| fmt(p.get(a.field))).collect();
        match row {
            Ok(values) => {
                cells.push("ok".into());
                cells.extend(values.map(fmt));
            }
            // marked, never dropped
            Err(e @ Error::Range(_)) => {
                notes.push(format!("row {i}: {e}"));
                cells.push("range_error".into());
                cells.extend(std::iter::repeat_n(String::new(), SWEEP_COLUMNS.len()));
            }
            Err(e) => {
                let at: Vec<String> = cfg
                    .axes
                    .iter()
                    .map(|a| format!("{} = {}", a.field.name(), fmt(p.get(a.field))))
                    .collect();
                return Err(CliError::from_lib(
                    &format!("row {i} ({})", at.join(", ")),
                    e,
                ));
            }
        }
        push_row(&mut csv, &cells);
    }
    if let Ok(traj) = cfg.params.trajectory() {
        notes.extend(speed_note(&traj));
    }
    Ok(Report::ok(csv, notes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("recoherence").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn grid_syntax() {
        assert_eq!(parse_grid("1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(
            parse_grid("lin:0:1:5").unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        let lg = parse_grid("log:0.1:10:3").unwrap();
        assert!((lg[1] - 1.0).abs() < 1e-15 && (lg[2] - 10.0).abs() < 1e-14);
        assert_eq!(parse_grid("lin:2:3:1").unwrap(), vec![2.0]);
        assert!(parse_grid("lin:0:1:0").is_err());
        assert!(parse_grid("log:0:1:3").is_err());
        assert!(parse_grid("1,x").is_err());
        assert!(parse_grid("lin:0:1").is_err());
        assert!(parse_grid("nan").is_err());
    }

    #[test]
    fn field_names_round_trip() {
        for f in Field::ALL {
            assert_eq!(f.name().parse::<Field>().unwrap(), f);
        }
        assert_eq!("omega-bar-t".parse::<Field>().unwrap(), Field::OmegaBarT);
        assert!("omega".parse::<Field>().is_err());
    }

    #[test]
    fn sweep_points_are_row_major() {
        let axes = vec![
            Axis {
                field: Field::R,
                values: vec![1.0, 2.0],
            },
            Axis {
                field: Field::Theta,
                values: vec![0.0, 0.5, 1.0],
            },
        ];
        let pts = sweep_points(&Params::default(), &axes);
        let pairs: Vec<(f64, f64)> = pts.iter().map(|p| (p.r, p.theta)).collect();
        assert_eq!(
            pairs,
            vec![
                (1.0, 0.0),
                (1.0, 0.5),
                (1.0, 1.0),
                (2.0, 0.0),
                (2.0, 0.5),
                (2.0, 1.0)
            ]
        );
        assert_eq!(sweep_points(&Params::default(), &[]).len(), 1);
    }

    #[test]
    fn config_file_and_precedence() {
        let text = "\
# comment
[params]
r = 2.0
omega_bar_T = 1.5   # trailing comment
[quadrature]
nodes_per_period = 48
[sweep]
theta = 0,1
[run]
t0_grid = 4
";
        let mut cfg = RunConfig::default();
        cfg.apply_file(text, "test.cfg").unwrap();
        assert_eq!(cfg.params.r, 2.0);
        assert_eq!(cfg.params.omega_bar_t, 1.5);
        assert_eq!(cfg.quadrature.nodes_per_period, 48);
        assert_eq!(cfg.settings.t0_grid, 4);
        assert_eq!(
            cfg.axes,
            vec![Axis {
                field: Field::Theta,
                values: vec![0.0, 1.0]
            }]
        );

        let flags = ParamArgs {
            r: Some(0.5),
            ..Default::default()
        };
        cfg.params.apply_flags(&flags);
        assert_eq!(cfg.params.r, 0.5);
        assert_eq!(cfg.params.omega_bar_t, 1.5);
    }

    #[test]
    fn config_diagnostics_name_line_and_field() {
        let cases = [
            ("[params]\nr = abc\n", "test.cfg:2: [params] r"),
            ("[params]\nbogus = 1\n", "test.cfg:2: [params] bogus"),
            ("[nowhere]\n", "test.cfg:1: unknown section"),
            ("[params]\nr 1\n", "test.cfg:2: expected key = value"),
            (
                "[quadrature]\nnodes = 3\n",
                "test.cfg:2: [quadrature] nodes",
            ),
            ("[sweep]\nr = lin:1:2\n", "test.cfg:2: [sweep] r"),
        ];
        for (text, want) in cases {
            let err = RunConfig::default()
                .apply_file(text, "test.cfg")
                .unwrap_err();
            assert_eq!(err.exit_code(), 1);
            let msg = err.to_string();
            assert!(msg.contains(want), "{msg} lacks {want}");
        }
    }

    #[test]
    fn too_many_axes_rejected() {
        let cli = parse(&[
            "sweep",
            "--axis",
            "r=1",
            "--axis",
            "theta=0",
            "--axis",
            "ratio_RT=0.1",
            "--axis",
            "t0_omega=0",
        ]);
        assert!(matches!(run(&cli), Err(CliError::Config(_))));
    }

    #[test]
    fn single_mode_csv_shape() {
        let cli = parse(&[
            "single-mode",
            "--r",
            "1",
            "--theta",
            "0",
            "--omega-bar-T",
            "3.34",
            "--ratio-RT",
            "0.1",
            "--t0-grid",
            "8",
        ]);
        let rep = run(&cli).unwrap();
        let lines: Vec<&str> = rep.csv.lines().collect();
        assert_eq!(lines[0], "t0,g,W_R,contrast_factor");
        assert_eq!(lines.len(), 9);
        assert!(rep.csv.ends_with('\n') && !rep.csv.contains('\r'));
        // g(t0 = 0) at θ = 0 is the maximum, so W_R < 0 and contrast < 1
        let first: Vec<f64> = lines[1].split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(first[0], 0.0);
        assert!(first[1] > 0.0 && first[2] < 0.0 && first[3] < 1.0);
    }

    #[test]
    fn domain_errors_exit_one() {
        let cli = parse(&["single-mode", "--r", "-1"]);
        assert_eq!(run(&cli).unwrap_err().exit_code(), 1);
        let cli = parse(&["band", "--bandwidth-ratio", "1.5"]);
        assert_eq!(run(&cli).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn non_convergence_exits_two() {
        let cli = parse(&[
            "band",
            "--gl-order",
            "1",
            "--nodes-per-period",
            "16",
            "--rel-tol",
            "1e-14",
            "--abs-tol",
            "1e-300",
        ]);
        let err = run(&cli).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
        assert!(err.to_string().contains("row 0"));
    }

    #[test]
    fn range_errors_are_marked_not_dropped() {
        let cli = parse(&["sweep", "--axis", "r=1,360"]);
        let rep = run(&cli).unwrap();
        let lines: Vec<&str> = rep.csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1.0,ok,"));
        assert!(lines[2].starts_with("360.0,range_error,"));
        assert_eq!(lines[2].split(',').count(), 2 + SWEEP_COLUMNS.len());
        assert!(!rep.notes.is_empty());
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert_eq!(relative_error(1e-31, 0.0), 0.1);
        assert_eq!(relative_error(1.1, 1.0), (1.1f64 - 1.0).abs());
    }
}
