//! Command-line surface of the `dce` binary.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::breathing::{resonance_scan_many, ScenarioTag, RESONANCE_PREFACTOR};
use crate::coupling::raw_couplings;
use crate::dynamics::{beta_first_order_series, evolve_series, row_number, CavityDynamics, DynamicsOptions};
use crate::error::Error;
use crate::motion::{parse_trajectory, MotionLaw, TABLE_VELOCITY_REL};
use crate::spectrum::{find_eigenfrequencies_with, RootOptions, ShellGeometry, MAX_L};

pub const ENV_TOL: &str = "DCE_TOL";

#[derive(Debug, Parser)]
#[command(name = "dce", version, about = "Particle creation between two moving concentric spherical shells")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalized eigenfrequencies omega (r_o - r_i) / (pi c) over a grid of r_o/r_i.
    Spectrum(SpectrumArgs),
    /// Scaled coupling coefficients (r_o - r_i) |c^alpha_{l s s'}| over a grid of r_o/r_i.
    Coefficients(CoefficientsArgs),
    /// Particle number per mode on a time grid.
    Simulate(SimulateArgs),
    /// Resonant frequencies and quadratic-growth coefficients of the breathing scenarios.
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    #[arg(long, default_value_t = 1.0)]
    pub r_inner: f64,
    /// Defaults to 2 r_inner.
    #[arg(long, conflicts_with = "ratio")]
    pub r_outer: Option<f64>,
    /// r_o/r_i as a single value or a grid `min:max:n`.
    #[arg(long)]
    pub ratio: Option<String>,
    /// Wave speed.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ModeArgs {
    #[arg(long, default_value_t = 2)]
    pub l_max: u32,
    #[arg(long, default_value_t = 3)]
    pub s_max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioArg {
    A,
    B,
    C,
    D,
}

impl From<ScenarioArg> for ScenarioTag {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::A => ScenarioTag::A,
            ScenarioArg::B => ScenarioTag::B,
            ScenarioArg::C => ScenarioTag::C,
            ScenarioArg::D => ScenarioTag::D,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Perturbative,
    Full,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CoefficientsArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    /// First radial index of the pair; s' runs up to --s-max.
    #[arg(long, default_value_t = 1)]
    pub s: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    #[arg(long, value_enum, conflicts_with = "trajectory")]
    pub scenario: Option<ScenarioArg>,
    /// Relative oscillation amplitude; 0 keeps the shells static.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Drive frequency; defaults to twice the lowest l=0 frequency.
    #[arg(long)]
    pub varpi: Option<f64>,
    /// Tabulated motion with columns t, r_i, r_o, v_i, v_o.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Defaults to 0.05/(eps varpi) for harmonic motion and to the last row of a trajectory.
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub steps: u32,
    #[arg(long, value_enum, default_value_t = MethodArg::Perturbative)]
    pub method: MethodArg,
    /// Number of radial modes kept per l.
    #[arg(long, default_value_t = 8)]
    pub truncation: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    /// All four scenarios when absent.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Failure classes and their exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
        }
    }

    fn field(field: &str, e: Error) -> Self {
        match e {
            Error::Argument(m) | Error::Domain(m) | Error::Precondition(m) => Self::Config(format!("{field}: {m}")),
            Error::VacuouslyExtreme => Self::Config(format!("{field}: {e}")),
            other => Self::Numerical(other),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(m) | Error::Domain(m) | Error::Precondition(m) => Self::Config(m),
            Error::VacuouslyExtreme => Self::Config(e.to_string()),
            other => Self::Numerical(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn config_err<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

/// Tolerances that `DCE_TOL` may override.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub root_rel: f64,
    pub scan_subdivisions: u32,
    pub unitarity: f64,
    pub points_per_period: f64,
    pub panels_per_period: f64,
    pub table_tol: f64,
    pub velocity_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let r = RootOptions::default();
        let d = DynamicsOptions::default();
        Self {
            root_rel: r.root_rel,
            scan_subdivisions: r.subdivisions,
            unitarity: d.unitarity_budget,
            points_per_period: d.points_per_period,
            panels_per_period: d.panels_per_period,
            table_tol: d.table_tol,
            velocity_rel: TABLE_VELOCITY_REL,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 7] = [
        "root_rel",
        "scan_subdivisions",
        "unitarity",
        "points_per_period",
        "panels_per_period",
        "table_tol",
        "velocity_rel",
    ];

    /// Parses `key=value[,key=value...]`; an empty string keeps the defaults.
    pub fn parse(spec: &str) -> CliResult<Self> {
        let mut t = Self::default();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let Some((k, v)) = item.split_once('=') else {
                return config_err(format!("{ENV_TOL}: expected key=value, got '{item}'"));
            };
            let (k, v) = (k.trim(), v.trim());
            let num: f64 = v
                .parse()
                .map_err(|_| CliError::Config(format!("{ENV_TOL}: {k}: cannot parse '{v}'")))?;
            if !(num.is_finite() && num > 0.0) {
                return config_err(format!("{ENV_TOL}: {k} must be positive, got {v}"));
            }
            match k {
                "root_rel" => t.root_rel = num,
                "scan_subdivisions" => {
                    if num.fract() != 0.0 || num > u32::MAX as f64 {
                        return config_err(format!("{ENV_TOL}: scan_subdivisions must be a positive integer, got {v}"));
                    }
                    t.scan_subdivisions = num as u32;
                }
                "unitarity" => t.unitarity = num,
                "points_per_period" => t.points_per_period = num,
                "panels_per_period" => t.panels_per_period = num,
                "table_tol" => t.table_tol = num,
                "velocity_rel" => t.velocity_rel = num,
                _ => {
                    return config_err(format!(
                        "{ENV_TOL}: unknown key '{k}' (known: {})",
                        Self::KEYS.join(", ")
                    ))
                }
            }
        }
        Ok(t)
    }

    pub fn from_env() -> CliResult<Self> {
        match std::env::var(ENV_TOL) {
            Ok(s) => Self::parse(&s),
            Err(std::env::VarError::NotPresent) => Ok(Self::default()),
            Err(e) => config_err(format!("{ENV_TOL}: {e}")),
        }
    }

    pub fn roots(&self) -> RootOptions {
        RootOptions {
            subdivisions: self.scan_subdivisions,
            root_rel: self.root_rel,
        }
    }

    pub fn dynamics(&self) -> DynamicsOptions {
        DynamicsOptions {
            points_per_period: self.points_per_period,
            unitarity_budget: self.unitarity,
            table_tol: self.table_tol,
            panels_per_period: self.panels_per_period,
        }
    }
}

/// One cell of an output row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Missing,
}

impl Cell {
    fn csv(&self, out: &mut String) {
        match self {
            Cell::Int(i) => write!(out, "{i}").unwrap(),
            Cell::Num(x) => write!(out, "{}", format_number(*x)).unwrap(),
            Cell::Text(s) => out.push_str(s),
            Cell::Missing => {}
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(format_number(*x)),
            Cell::Text(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Num(x) => Some(*x),
            _ => None,
        }
    }
}

/// 17 significant digits in scientific notation.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column-ordered rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Dataset {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.csv(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, meta: &Value) -> String {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = json!({ "meta": meta, "columns": self.columns, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

/// Reads the CSV written by [`Dataset::to_csv`] back as header plus raw fields.
pub fn read_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines
        .next()
        .map(|h| h.split(',').map(str::to_string).collect())
        .unwrap_or_default();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn check_positive(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        config_err(format!("{name} must be positive and finite, got {v}"))
    }
}

/// Parses `x` or `min:max:n` (n evenly spaced values including both ends).
pub fn parse_ratio_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> CliResult<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("--ratio: cannot parse '{s}'")))
    };
    let values = match parts.as_slice() {
        [x] => vec![num(x)?],
        [a, b, n] => {
            let (lo, hi) = (num(a)?, num(b)?);
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("--ratio: grid size '{n}' is not a count")))?;
            if hi < lo {
                return config_err(format!("--ratio: max {hi} is below min {lo}"));
            }
            match n {
                0 => Vec::new(),
                1 => vec![lo],
                _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
            }
        }
        _ => return config_err(format!("--ratio: expected 'x' or 'min:max:n', got '{spec}'")),
    };
    for &v in &values {
        if !(v.is_finite() && v > 1.0) {
            return config_err(format!("--ratio: every r_o/r_i must exceed 1, got {v}"));
        }
    }
    Ok(values)
}

/// Validated shell geometries, one per grid point.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryGrid {
    pub r_inner: f64,
    pub c: f64,
    pub ratios: Vec<f64>,
}

impl GeometryGrid {
    pub fn from_args(a: &GeometryArgs) -> CliResult<Self> {
        check_positive("--r-inner", a.r_inner)?;
        check_positive("--c", a.c)?;
        let ratios = match (&a.ratio, a.r_outer) {
            (Some(spec), _) => parse_ratio_grid(spec)?,
            (None, Some(ro)) => {
                check_positive("--r-outer", ro)?;
                if ro <= a.r_inner {
                    return config_err(format!("--r-outer ({ro}) must exceed --r-inner ({})", a.r_inner));
                }
                vec![ro / a.r_inner]
            }
            (None, None) => vec![2.0],
        };
        let grid = Self {
            r_inner: a.r_inner,
            c: a.c,
            ratios,
        };
        for g in grid.geometries() {
            g.map_err(|e| CliError::field("--ratio", e))?;
        }
        Ok(grid)
    }

    fn geometry(&self, ratio: f64) -> crate::Result<ShellGeometry> {
        ShellGeometry::new(self.r_inner, self.r_inner * ratio, self.c)
    }

    fn geometries(&self) -> impl Iterator<Item = crate::Result<ShellGeometry>> + '_ {
        self.ratios.iter().map(|&r| self.geometry(r))
    }

    fn single(&self) -> CliResult<ShellGeometry> {
        match self.ratios.as_slice() {
            [r] => Ok(self.geometry(*r)?),
            _ => config_err("--ratio: this command takes a single r_o/r_i, not a grid"),
        }
    }
}

fn check_modes(m: &ModeArgs) -> CliResult<()> {
    if m.l_max > MAX_L {
        return config_err(format!("--l-max: {} exceeds the supported maximum {MAX_L}", m.l_max));
    }
    Ok(())
}

/// Validated configuration of one run, echoed into the metadata.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub geometry: GeometryGrid,
    pub l_max: u32,
    pub s_max: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub motion: Option<MotionSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<u32>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MotionSpec {
    Scenario {
        scenarios: Vec<ScenarioTag>,
        eps: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        varpi: Option<f64>,
    },
    Trajectory {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub steps: u32,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| self.t_final * k as f64 / self.steps as f64)
            .collect()
    }
}

/// Output of one command before serialization.
#[derive(Debug, Clone)]
pub struct ResultRecord {
    pub config: RunConfig,
    pub data: Dataset,
}

impl ResultRecord {
    pub fn meta(&self) -> Value {
        json!({
            "tool": "dce",
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "columns": self.data.columns,
            "rows": self.data.rows.len(),
            "resonance_prefactor": RESONANCE_PREFACTOR,
            "resonance_prefactor_applied": false,
        })
    }

    /// Writes the dataset, plus a `<out>.meta.json` sidecar for CSV files.
    pub fn emit(&self, stdout: &mut dyn Write) -> CliResult<()> {
        let meta = self.meta();
        let body = match self.config.format {
            Format::Csv => self.data.to_csv(),
            Format::Json => self.data.to_json(&meta),
        };
        match &self.config.out {
            None => stdout.write_all(body.as_bytes())?,
            Some(path) => {
                fs::write(path, body)?;
                if self.config.format == Format::Csv {
                    let mut m = serde_json::to_string_pretty(&meta).expect("serializable");
                    m.push('\n');
                    fs::write(sidecar_path(path), m)?;
                }
            }
        }
        Ok(())
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn base_config(
    command: &'static str,
    geometry: GeometryGrid,
    modes: &ModeArgs,
    output: &OutputArgs,
    tolerances: Tolerances,
) -> RunConfig {
    RunConfig {
        command,
        geometry,
        l_max: modes.l_max,
        s_max: modes.s_max,
        s: None,
        motion: None,
        time: None,
        method: None,
        truncation: None,
        out: output.out.clone(),
        format: output.format,
        tolerances,
    }
}

fn grid_cells(g: &ShellGeometry) -> [Cell; 4] {
    [
        Cell::Num(g.ratio()),
        Cell::Num(g.r_inner),
        Cell::Num(g.r_outer),
        Cell::Num(g.c),
    ]
}

pub fn cmd_spectrum(args: &SpectrumArgs, tol: Tolerances) -> CliResult<ResultRecord> {
    check_modes(&args.modes)?;
    let grid = GeometryGrid::from_args(&args.geometry)?;
    let config = base_config("spectrum", grid, &args.modes, &args.output, tol);
    let mut data = Dataset::new(vec!["ratio", "r_inner", "r_outer", "c", "l", "s", "omega", "normalized"]);
    let s_max = config.s_max as usize;
    if s_max > 0 {
        let jobs: Vec<(f64, u32)> = config
            .geometry
            .ratios
            .iter()
            .flat_map(|&r| (0..=config.l_max).map(move |l| (r, l)))
            .collect();
        let opts = tol.roots();
        let blocks: Vec<Vec<Vec<Cell>>> = jobs
            .par_iter()
            .map(|&(ratio, l)| -> CliResult<Vec<Vec<Cell>>> {
                let g = config.geometry.geometry(ratio)?;
                let w = find_eigenfrequencies_with(&g, l, s_max, &opts)?;
                let scale = g.gap() / (std::f64::consts::PI * g.c);
                Ok(w
                    .iter()
                    .enumerate()
                    .map(|(i, &om)| {
                        let mut row = grid_cells(&g).to_vec();
                        row.extend([
                            Cell::Int(l as i64),
                            Cell::Int(i as i64 + 1),
                            Cell::Num(om),
                            Cell::Num(om * scale),
                        ]);
                        row
                    })
                    .collect())
            })
            .collect::<CliResult<_>>()?;
        data.rows = blocks.into_iter().flatten().collect();
    }
    Ok(ResultRecord { config, data })
}

pub fn cmd_coefficients(args: &CoefficientsArgs, tol: Tolerances) -> CliResult<ResultRecord> {
    check_modes(&args.modes)?;
    if args.s == 0 {
        return config_err("--s: radial index starts at 1");
    }
    let grid = GeometryGrid::from_args(&args.geometry)?;
    let mut config = base_config("coefficients", grid, &args.modes, &args.output, tol);
    config.s = Some(args.s);
    let mut data = Dataset::new(vec![
        "ratio", "r_inner", "r_outer", "c", "l", "s", "s_prime", "alpha", "coefficient", "scaled",
    ]);
    let s_max = config.s_max as usize;
    if s_max > 0 {
        let s = args.s as usize;
        let n = s_max.max(s);
        let jobs: Vec<(f64, u32)> = config
            .geometry
            .ratios
            .iter()
            .flat_map(|&r| (0..=config.l_max).map(move |l| (r, l)))
            .collect();
        let blocks: Vec<Vec<Vec<Cell>>> = jobs
            .par_iter()
            .map(|&(ratio, l)| -> CliResult<Vec<Vec<Cell>>> {
                let g = config.geometry.geometry(ratio)?;
                let raw = raw_couplings(&g, l, n)?;
                let mut rows = Vec::new();
                for b in 0..s_max {
                    for (alpha, m) in [("i", &raw.inner), ("o", &raw.outer)] {
                        let cval = 0.5 * (m[(s - 1, b)] + m[(b, s - 1)]);
                        let mut row = grid_cells(&g).to_vec();
                        row.extend([
                            Cell::Int(l as i64),
                            Cell::Int(s as i64),
                            Cell::Int(b as i64 + 1),
                            Cell::Text(alpha.into()),
                            Cell::Num(cval),
                            Cell::Num(g.gap() * cval.abs()),
                        ]);
                        rows.push(row);
                    }
                }
                Ok(rows)
            })
            .collect::<CliResult<_>>()?;
        data.rows = blocks.into_iter().flatten().collect();
    }
    Ok(ResultRecord { config, data })
}

struct SimMotion {
    law: MotionLaw,
    scenario: Cell,
    trajectory: Cell,
    eps_inner: Cell,
    eps_outer: Cell,
    varpi: Cell,
}

pub fn cmd_simulate(args: &SimulateArgs, tol: Tolerances) -> CliResult<ResultRecord> {
    check_modes(&args.modes)?;
    if args.steps == 0 {
        return config_err("--steps must be at least 1");
    }
    if args.truncation == 0 {
        return config_err("--truncation must be at least 1");
    }
    if args.truncation < args.modes.s_max {
        return config_err(format!(
            "--truncation ({}) must be at least --s-max ({})",
            args.truncation, args.modes.s_max
        ));
    }
    if args.method != MethodArg::Perturbative && args.truncation < 2 {
        return config_err("--truncation: the full evolution needs at least 2 modes");
    }
    let grid = GeometryGrid::from_args(&args.geometry)?;
    let mut config = base_config("simulate", grid, &args.modes, &args.output, tol);

    let (sim, spec, default_t) = match (&args.trajectory, args.scenario) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("--trajectory: cannot read {}: {e}", path.display())))?;
            let rows = parse_trajectory(&text).map_err(|e| CliError::field("--trajectory", e))?;
            let law = MotionLaw::tabulated(config.geometry.c, rows, tol.velocity_rel)
                .map_err(|e| CliError::field("--trajectory", e))?;
            let horizon = law.horizon();
            let sim = SimMotion {
                law,
                scenario: Cell::Text("trajectory".into()),
                trajectory: Cell::Text(path.display().to_string()),
                eps_inner: Cell::Missing,
                eps_outer: Cell::Missing,
                varpi: Cell::Missing,
            };
            (sim, MotionSpec::Trajectory { path: path.clone() }, Some(horizon))
        }
        (None, Some(tag)) => {
            let g = config.geometry.single()?;
            if !(args.eps.is_finite() && args.eps.abs() <= crate::breathing::MAX_EPS) {
                return config_err(format!("--eps must satisfy |eps| <= {}, got {}", crate::breathing::MAX_EPS, args.eps));
            }
            let varpi = match args.varpi {
                Some(v) => {
                    check_positive("--varpi", v)?;
                    v
                }
                None => 2.0 * find_eigenfrequencies_with(&g, 0, 1, &tol.roots())?[0],
            };
            let tag: ScenarioTag = tag.into();
            let (ei, eo) = crate::breathing::Scenario::new(tag, args.eps).amplitudes();
            let law = if args.eps == 0.0 {
                MotionLaw::fixed(g)?
            } else {
                crate::breathing::BreathingMotion::new(g, ei, eo, varpi)
                    .and_then(|m| m.motion_law())
                    .map_err(|e| CliError::field("--eps", e))?
            };
            let default_t = (args.eps != 0.0).then(|| 0.05 / (args.eps.abs() * varpi));
            let sim = SimMotion {
                law,
                scenario: Cell::Text(tag.letter().to_string()),
                trajectory: Cell::Missing,
                eps_inner: Cell::Num(ei),
                eps_outer: Cell::Num(eo),
                varpi: Cell::Num(varpi),
            };
            let spec = MotionSpec::Scenario {
                scenarios: vec![tag],
                eps: args.eps,
                varpi: Some(varpi),
            };
            (sim, spec, default_t)
        }
        (None, None) => return config_err("simulate needs exactly one of --scenario or --trajectory"),
        (Some(_), Some(_)) => return config_err("--scenario and --trajectory are mutually exclusive"),
    };
    let t_final = match (args.t_final, default_t) {
        (Some(t), _) => {
            check_positive("--t-final", t)?;
            t
        }
        (None, Some(t)) => t,
        (None, None) => return config_err("--t-final is required when --eps is 0"),
    };
    if t_final > sim.law.horizon() {
        return config_err(format!(
            "--t-final ({t_final}) is beyond the last trajectory row ({})",
            sim.law.horizon()
        ));
    }
    let time = TimeGrid {
        t_final,
        steps: args.steps,
    };
    config.motion = Some(spec);
    config.time = Some(time);
    config.method = Some(args.method);
    config.truncation = Some(args.truncation);

    let times = time.times();
    let trunc = args.truncation as usize;
    let s_max = args.modes.s_max;
    let opts = tol.dynamics();
    let reference = sim.law.reference();
    let mut data = Dataset::new(vec![
        "method",
        "scenario",
        "trajectory",
        "r_inner",
        "r_outer",
        "c",
        "eps_inner",
        "eps_outer",
        "varpi",
        "truncation",
        "l",
        "s",
        "t",
        "n",
        "unitarity",
    ]);
    if s_max == 0 {
        return Ok(ResultRecord { config, data });
    }
    let echo = |method: &str, l: u32, s: u32, t: f64, n: f64, unitarity: Cell| -> Vec<Cell> {
        vec![
            Cell::Text(method.into()),
            sim.scenario.clone(),
            sim.trajectory.clone(),
            Cell::Num(reference.r_inner),
            Cell::Num(reference.r_outer),
            Cell::Num(reference.c),
            sim.eps_inner.clone(),
            sim.eps_outer.clone(),
            sim.varpi.clone(),
            Cell::Int(trunc as i64),
            Cell::Int(l as i64),
            Cell::Int(s as i64),
            Cell::Num(t),
            Cell::Num(n),
            unitarity,
        ]
    };
    let want_pert = args.method != MethodArg::Full;
    let want_full = args.method != MethodArg::Perturbative;
    for l in 0..=args.modes.l_max {
        if sim.law.is_static() {
            for method in [(want_pert, "perturbative"), (want_full, "full")]
                .iter()
                .filter(|m| m.0)
                .map(|m| m.1)
            {
                for s in 1..=s_max {
                    for &t in &times {
                        let u = if method == "full" { Cell::Num(0.0) } else { Cell::Missing };
                        data.rows.push(echo(method, l, s, t, 0.0, u));
                    }
                }
            }
            continue;
        }
        let dyns = CavityDynamics::with_options(l, trunc, &sim.law, &opts)?;
        if want_pert {
            let betas = beta_first_order_series(&dyns, &times, &opts)?;
            for s in 1..=s_max {
                for (&t, b) in times.iter().zip(&betas) {
                    data.rows.push(echo("perturbative", l, s, t, row_number(b, s, trunc), Cell::Missing));
                }
            }
        }
        if want_full {
            let samples = evolve_series(&dyns, l, &times, &opts)?;
            for s in 1..=s_max {
                for (&t, sample) in times.iter().zip(&samples) {
                    let n: f64 = sample.state.beta.row(s as usize - 1).iter().map(|z| z.norm_sqr()).sum();
                    data.rows.push(echo("full", l, s, t, n, Cell::Num(sample.max_deviation)));
                }
            }
        }
    }
    Ok(ResultRecord { config, data })
}

pub fn cmd_scan(args: &ScanArgs, tol: Tolerances) -> CliResult<ResultRecord> {
    check_modes(&args.modes)?;
    if !(args.eps.is_finite() && args.eps != 0.0 && args.eps.abs() <= crate::breathing::MAX_EPS) {
        return config_err(format!(
            "--eps must be nonzero with |eps| <= {}, got {}",
            crate::breathing::MAX_EPS,
            args.eps
        ));
    }
    let grid = GeometryGrid::from_args(&args.geometry)?;
    let tags: Vec<ScenarioTag> = match args.scenario {
        Some(s) => vec![s.into()],
        None => ScenarioTag::ALL.to_vec(),
    };
    let mut config = base_config("scan", grid, &args.modes, &args.output, tol);
    config.motion = Some(MotionSpec::Scenario {
        scenarios: tags.clone(),
        eps: args.eps,
        varpi: None,
    });
    let mut data = Dataset::new(vec![
        "ratio",
        "r_inner",
        "r_outer",
        "c",
        "scenario",
        "eps",
        "l",
        "s",
        "s_prime",
        "varpi",
        "abscissa",
        "coefficient",
    ]);
    for g in config.geometry.geometries().collect::<crate::Result<Vec<_>>>()? {
        for r in resonance_scan_many(args.modes.l_max, args.modes.s_max as usize, &tags, args.eps, &g)? {
            let mut row = grid_cells(&g).to_vec();
            row.extend([
                Cell::Text(r.scenario.letter().to_string()),
                Cell::Num(args.eps),
                Cell::Int(r.l as i64),
                Cell::Int(r.s as i64),
                Cell::Int(r.s_prime as i64),
                Cell::Num(r.varpi),
                Cell::Num(r.abscissa),
                Cell::Num(r.coefficient),
            ]);
            data.rows.push(row);
        }
    }
    Ok(ResultRecord { config, data })
}

/// Runs one parsed command.
pub fn execute(cli: &Cli, tol: Tolerances) -> CliResult<ResultRecord> {
    match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(a, tol),
        Command::Coefficients(a) => cmd_coefficients(a, tol),
        Command::Simulate(a) => cmd_simulate(a, tol),
        Command::Scan(a) => cmd_scan(a, tol),
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = Tolerances::from_env()
        .and_then(|tol| execute(&cli, tol))
        .and_then(|rec| rec.emit(&mut io::stdout().lock()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dce: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
