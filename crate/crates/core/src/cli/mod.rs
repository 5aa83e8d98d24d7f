//! Configuration, command dispatch and reporting for the `rcpos` binary.
//!
//! A run reads an optional JSON configuration, applies command-line
//! overrides, executes one command and writes `report.json` (the report
//! body, free of timestamps so that reruns are byte-identical),
//! `margins.csv` and `timing.json` into the output directory.

mod commands;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::directimage::{FdOptions, QuadratureOptions, Twist};
use crate::expr::{Dims, MetricExpr};
use crate::geometry::CatalogParams;
use crate::optimize::SearchOptions;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "RCPOS_OUT_DIR";
/// Output directory when neither flag, config nor environment set one.
pub const DEFAULT_OUT_DIR: &str = "rcpos-out";

pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_COMPUTATION: i32 = 3;
pub const EXIT_IO: i32 = 1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Schema(String),
    #[error("computation failed in check `{check}`: {message}")]
    Computation { check: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Schema(_) => EXIT_SCHEMA,
            RunError::Computation { .. } => EXIT_COMPUTATION,
            RunError::Io(_) => EXIT_IO,
        }
    }

    pub(crate) fn computation(check: &str, err: impl std::fmt::Display) -> RunError {
        RunError::Computation {
            check: check.to_string(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Four positivity notions of a bundle metric at sample points.
    Classify,
    /// Horizontal/vertical split, lift minimization and the eigenvalue-count
    /// conditions on the induced weight.
    FibrationCheck,
    /// Algebraic identities on seeded random data.
    Identities,
    /// Direct-image Gram metric, its curvature and the hypothesis/conclusion
    /// comparison over a sweep of twists `k`.
    DirectImage,
    /// Catalog listing.
    Examples,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::FibrationCheck => "fibration-check",
            Command::Identities => "identities",
            Command::DirectImage => "direct-image",
            Command::Examples => "examples",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleSpec {
    pub name: String,
    #[serde(default)]
    pub params: CatalogParams,
}

impl Default for ExampleSpec {
    fn default() -> Self {
        ExampleSpec {
            name: "split".into(),
            params: CatalogParams {
                a: Some(vec![1, 2]),
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Also write `margins.csv`.
    pub csv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub example: ExampleSpec,
    /// Explicit base points as lists of `[re, im]` coordinates.
    pub points: Vec<Vec<Complex64>>,
    /// Number of seeded base points when `points` is empty; the origin is
    /// always the first.
    pub point_count: usize,
    pub seed: u64,
    /// Eigenvalue count for the fibration check (default 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Twists swept by `direct-image`; `k` overrides with a single value.
    pub k_values: Vec<usize>,
    pub twist: Twist,
    /// Relative tolerance of the identity checks.
    pub tol: f64,
    /// Random instances per identity.
    pub trials: usize,
    pub search: SearchOptions,
    pub quadrature: QuadratureOptions,
    pub fd: FdOptions,
    /// Fiber samples per fiber chart for the weak notions.
    pub fiber_samples: usize,
    #[serde(skip_serializing)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            example: ExampleSpec::default(),
            points: vec![],
            point_count: 3,
            seed: 0,
            k: None,
            k_values: vec![0, 1, 2],
            twist: Twist::WithDet,
            tol: 1e-9,
            trials: 100,
            search: SearchOptions::default(),
            quadrature: QuadratureOptions::default(),
            fd: FdOptions::default(),
            fiber_samples: 256,
            output: OutputConfig {
                dir: None,
                csv: true,
            },
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Schema(e.to_string()))
    }

    /// Range checks beyond the JSON shape.
    pub fn validate(&self) -> Result<(), RunError> {
        let positive = [
            ("tol", self.tol),
            ("search.tol", self.search.tol),
            ("quadrature.tol", self.quadrature.tol),
            ("fd.step", self.fd.step),
            ("fd.tol", self.fd.tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RunError::Schema(format!(
                    "`{name}` must be a positive number, got {v}"
                )));
            }
        }
        let counts = [
            ("search.grid", self.search.grid),
            ("search.starts", self.search.starts),
            ("fiber_samples", self.fiber_samples),
            ("trials", self.trials),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(RunError::Schema(format!("`{name}` must be at least 1")));
            }
        }
        if self.quadrature.nodes < 2 {
            return Err(RunError::Schema(
                "`quadrature.nodes` must be at least 2".into(),
            ));
        }
        if self.points.is_empty() && self.point_count == 0 {
            return Err(RunError::Schema(
                "either `points` or a positive `point_count` is required".into(),
            ));
        }
        if !crate::geometry::CATALOG
            .iter()
            .any(|(n, _)| *n == self.example.name)
        {
            return Err(RunError::Schema(format!(
                "unknown example `{}`",
                self.example.name
            )));
        }
        if self.k == Some(0) && self.command == Some(Command::FibrationCheck) {
            return Err(RunError::Schema(
                "`k` must be at least 1 for fibration-check".into(),
            ));
        }
        Ok(())
    }

    /// The twists swept by `direct-image`.
    pub fn sweep(&self) -> Vec<usize> {
        match self.k {
            Some(k) => vec![k],
            None => self.k_values.clone(),
        }
    }
}

/// Command-line interface; flags override configuration-file values.
#[derive(Debug, Parser)]
#[command(
    name = "rcpos",
    version,
    about = "Curvature positivity checks for Hermitian holomorphic bundles"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Catalog example name.
    #[arg(long)]
    pub example: Option<String>,
    /// Twist / eigenvalue count.
    #[arg(long)]
    pub k: Option<usize>,
    /// A point count, or explicit points: coordinates separated by `,`,
    /// points by `;`, e.g. `0;0.3+0.1i`.
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Seed for sampled points, random data and searches.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative tolerance of the identity checks.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_complex(text: &str) -> Result<Complex64, RunError> {
    let e = MetricExpr::parse(text.trim(), Dims::new(0, 0), &[])
        .map_err(|e| RunError::Schema(format!("bad coordinate `{text}`: {e}")))?;
    e.as_const()
        .ok_or_else(|| RunError::Schema(format!("coordinate `{text}` is not a number")))
}

/// Parses `--points`: either a count or explicit points.
pub fn parse_points(spec: &str) -> Result<Result<usize, Vec<Vec<Complex64>>>, RunError> {
    if let Ok(n) = spec.trim().parse::<usize>() {
        return Ok(Ok(n));
    }
    let points = spec
        .split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split(',')
                .map(parse_complex)
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Err(points))
}

/// Loads the configuration file (if any) and applies flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, RunError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::Schema(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    cfg.command = Some(cli.command);
    if let Some(name) = &cli.example {
        if *name != cfg.example.name {
            cfg.example = ExampleSpec {
                name: name.clone(),
                params: CatalogParams::default(),
            };
        }
    }
    if let Some(k) = cli.k {
        cfg.k = Some(k);
    }
    if let Some(spec) = &cli.points {
        match parse_points(spec)? {
            Ok(n) => {
                cfg.points.clear();
                cfg.point_count = n;
            }
            Err(points) => cfg.points = points,
        }
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = cli.tol {
        cfg.tol = tol;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One per-check line of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub check: String,
    pub index: usize,
    pub point: Vec<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notion: Option<String>,
    pub value: f64,
    pub margin: f64,
    pub positive: bool,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub records: Vec<Record>,
    pub summary: BTreeMap<String, serde_json::Value>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Executes the configured command.
pub fn run(cfg: &RunConfig) -> Result<Report, RunError> {
    cfg.validate()?;
    let command = cfg
        .command
        .ok_or_else(|| RunError::Schema("no command given".into()))?;
    let (records, summary) = match command {
        Command::Classify => commands::classify(cfg)?,
        Command::FibrationCheck => commands::fibration_check(cfg)?,
        Command::Identities => commands::identities(cfg)?,
        Command::DirectImage => commands::direct_image(cfg)?,
        Command::Examples => commands::examples(),
    };
    Ok(Report {
        tool: "rcpos".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.as_str().into(),
        config: cfg.clone(),
        records,
        summary,
    })
}

fn format_point(p: &[Complex64]) -> String {
    p.iter()
        .map(|z| format!("{}{:+}i", z.re, z.im))
        .collect::<Vec<_>>()
        .join(";")
}

/// Writes the margin table with a header row.
pub fn write_csv(path: &Path, records: &[Record]) -> Result<(), RunError> {
    let io = |e: csv::Error| RunError::Io(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record([
        "check", "index", "point", "notion", "value", "margin", "positive",
    ])
    .map_err(io)?;
    for r in records {
        w.write_record([
            r.check.clone(),
            r.index.to_string(),
            format_point(&r.point),
            r.notion.clone().unwrap_or_default(),
            r.value.to_string(),
            r.margin.to_string(),
            r.positive.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| RunError::Io(e.to_string()))
}

/// The output directory: flag or config, then environment, then default.
pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output
        .dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Runs and writes all outputs; returns the report.
pub fn run_and_write(cfg: &RunConfig) -> Result<(Report, PathBuf), RunError> {
    let start = Instant::now();
    let report = run(cfg)?;
    let dir = output_dir(cfg);
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(&dir).map_err(io)?;
    std::fs::write(dir.join("report.json"), report.to_json()).map_err(io)?;
    if cfg.output.csv {
        write_csv(&dir.join("margins.csv"), &report.records)?;
    }
    let timing = serde_json::json!({ "command": report.command, "wall_clock_seconds": start.elapsed().as_secs_f64() });
    std::fs::write(dir.join("timing.json"), format!("{timing:#}\n")).map_err(io)?;
    Ok((report, dir))
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_SCHEMA } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = resolve_config(&cli).and_then(|cfg| run_and_write(&cfg));
    match result {
        Ok((report, dir)) => {
            if report.command == "examples" {
                for r in &report.records {
                    println!(
                        "{:<20} {}",
                        r.check,
                        r.details["description"].as_str().unwrap_or("")
                    );
                }
            }
            for (k, v) in &report.summary {
                println!("{k}: {v}");
            }
            eprintln!("report written to {}", dir.join("report.json").display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
