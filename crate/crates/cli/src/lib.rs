//! Command-line driver: reads a run configuration, applies flag overrides,
//! runs one pipeline over the (σ, ℓ) grid and writes a JSON or CSV report.
//!
//! Exit codes: 0 when every record meets its targets, 2 when some record
//! misses a target, 1 on any error.

pub mod commands;
pub mod config;

use clap::{Args, Parser, Subcommand};
use commands::Record;
use config::{parse_profile, parse_sigma, parse_window, Format, RunConfig, Sigma, Which};
use lightcone::inverse::{ModeSource, Orientation};
use lightcone::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

/// Environment variable capping the worker threads.
pub const THREADS_VAR: &str = "LIGHTCONE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "lightcone", version, about = "Mode-level scattering, inverse and resonance checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Operator assembly and numerical hygiene per mode
    Validate(Overrides),
    /// Constituent and global scattering data per mode
    Smatrix(Overrides),
    /// Direct global scattering matrix against the constituent product
    VerifyProduct(Overrides),
    /// Smooth Taylor coefficients across the first light cone
    PoissonCheck(Overrides),
    /// Global inverse, direct and assembled, with equation residuals
    Invert(Overrides),
    /// Determinant zeros in a σ-window
    Resonances(Overrides),
    /// Large-ℓ limit of the cap scalars and boundedness of the belt matrix
    SymbolCheck(Overrides),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Smatrix(_) => "smatrix",
            Command::VerifyProduct(_) => "verify-product",
            Command::PoissonCheck(_) => "poisson-check",
            Command::Invert(_) => "invert",
            Command::Resonances(_) => "resonances",
            Command::SymbolCheck(_) => "symbol-check",
        }
    }

    fn overrides(&self) -> &Overrides {
        match self {
            Command::Validate(o)
            | Command::Smatrix(o)
            | Command::VerifyProduct(o)
            | Command::PoissonCheck(o)
            | Command::Invert(o)
            | Command::Resonances(o)
            | Command::SymbolCheck(o) => o,
        }
    }
}

/// Flags shared by all commands; each replaces the matching config field.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// n, with n + 1 ambient coordinates
    #[arg(long)]
    pub n: Option<usize>,
    /// exact, bump:EPS, poly:C0,C1,... or a JSON object
    #[arg(long, value_parser = parse_profile)]
    pub profile: Option<lightcone::RadialProfile>,
    /// spectral parameter such as 0.7+0.3i; repeatable
    #[arg(long, allow_hyphen_values = true, value_parser = parse_sigma)]
    pub sigma: Vec<Sigma>,
    /// add this many pseudo-random σ (|σ| ≤ 3, margin ≥ 0.05)
    #[arg(long)]
    pub sigma_count: Option<usize>,
    /// seed for the random σ
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lmin: Option<usize>,
    #[arg(long)]
    pub lmax: Option<usize>,
    /// refuse σ closer than this to iℤ (at least 1e-3)
    #[arg(long)]
    pub margin: Option<f64>,
    /// re_min:re_max:im_min:im_max
    #[arg(long, allow_hyphen_values = true, value_parser = parse_window)]
    pub window: Option<lightcone::inverse::Window>,
    /// x_plus, x_minus, global or all
    #[arg(long, value_parser = parse_which)]
    pub which: Option<Which>,
    /// quadtree depth of the pole search
    #[arg(long)]
    pub depth: Option<usize>,
    /// source as a JSON object, e.g. {"kind":"bump","center":1.6,"half_width":0.3}
    #[arg(long, value_parser = parse_source)]
    pub source: Option<ModeSource>,
    /// past (default) or future
    #[arg(long, value_parser = parse_orientation)]
    pub orientation: Option<Orientation>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// write the report here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// json or csv
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
}

fn parse_which(s: &str) -> Result<Which, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|_| format!("unknown determinant `{s}`"))
}

fn parse_orientation(s: &str) -> Result<Orientation, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown orientation `{s}`"))
}

fn parse_format(s: &str) -> Result<Format, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown format `{s}`"))
}

fn parse_source(s: &str) -> Result<ModeSource, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

impl Overrides {
    /// Loads the config file (or defaults) and applies the flags.
    pub fn resolve(&self) -> Result<RunConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p).map_err(|e| e.to_string())?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:expr),*) => {
                $(if let Some(v) = self.$flag.clone() { $field = v; })*
            };
        }
        set!(n => cfg.n, profile => cfg.profile, lmin => cfg.ell_min, margin => cfg.tolerances.margin, window => cfg.window,
             which => cfg.which, source => cfg.source, orientation => cfg.orientation, grid_points => cfg.grid_points, format => cfg.format);
        if let Some(d) = self.depth {
            cfg.poles.depth = d;
        }
        if self.lmax.is_some() {
            cfg.ell_max = self.lmax;
        }
        if self.output.is_some() {
            cfg.output = self.output.clone();
        }
        if !self.sigma.is_empty() {
            cfg.sigma = self.sigma.clone();
        }
        if self.sigma_count.is_some() || self.seed.is_some() {
            let mut g = cfg.sigma_grid.clone().unwrap_or_default();
            if let Some(c) = self.sigma_count {
                g.count = c;
            }
            if let Some(s) = self.seed {
                g.seed = s;
            }
            cfg.sigma_grid = Some(g);
        }
        cfg.check().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

/// A grid point whose pipeline failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub sigma: Option<[f64; 2]>,
    pub ell: Option<usize>,
    /// error variant, e.g. GlobalPole
    pub kind: String,
    pub message: String,
}

impl PointError {
    fn new(sigma: Option<Complex64>, ell: Option<usize>, e: &lightcone::Error) -> Self {
        Self { sigma: sigma.map(|s| [s.re, s.im]), ell, kind: error_kind(e), message: e.to_string() }
    }
}

/// Variant name of a library error.
pub fn error_kind(e: &lightcone::Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub records: usize,
    pub violations: usize,
    pub errors: usize,
}

/// Everything that may differ between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub program: String,
    pub version: String,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<R> {
    pub command: String,
    pub pass: bool,
    pub summary: Summary,
    pub config: RunConfig,
    pub results: Vec<R>,
    pub errors: Vec<PointError>,
    pub metadata: Metadata,
}

impl<R: Record> Report<R> {
    pub fn exit_code(&self) -> i32 {
        if !self.errors.is_empty() {
            EXIT_ERROR
        } else if self.pass {
            EXIT_PASS
        } else {
            EXIT_VIOLATION
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(R::CSV_HEADER);
        s.push('\n');
        for r in &self.results {
            for row in r.csv_rows() {
                s.push_str(&row);
                s.push('\n');
            }
        }
        s
    }
}

/// Worker count from LIGHTCONE_THREADS, or rayon's default.
pub fn thread_count() -> usize {
    std::env::var(THREADS_VAR).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0).unwrap_or_else(rayon::current_num_threads)
}

/// Runs `f` over the points in parallel and keeps the input order.
fn gather<P, R, F>(command: &str, cfg: &RunConfig, points: Vec<P>, locate: impl Fn(&P) -> (Option<Complex64>, Option<usize>), f: F) -> Report<R>
where
    P: Sync,
    R: Record,
    F: Fn(&P) -> lightcone::Result<R> + Sync,
{
    let outcomes: Vec<lightcone::Result<R>> = points.par_iter().map(&f).collect();
    let mut results = Vec::new();
    let mut errors = Vec::new();
    for (p, o) in points.iter().zip(outcomes) {
        match o {
            Ok(r) => results.push(r),
            Err(e) => {
                let (s, l) = locate(p);
                errors.push(PointError::new(s, l, &e));
            }
        }
    }
    let violations = results.iter().filter(|r| !r.pass()).count();
    Report {
        command: command.into(),
        pass: violations == 0 && errors.is_empty(),
        summary: Summary { records: results.len(), violations, errors: errors.len() },
        config: cfg.clone(),
        results,
        errors,
        metadata: Metadata { program: "lightcone".into(), version: env!("CARGO_PKG_VERSION").into(), threads: rayon::current_num_threads() },
    }
}

fn modes<R: Record>(command: &str, cfg: &RunConfig, default_ell_max: usize, f: fn(&RunConfig, Complex64, usize) -> lightcone::Result<R>) -> Report<R> {
    let points = commands::mode_grid(cfg, default_ell_max);
    gather(command, cfg, points, |&(s, l)| (Some(s), Some(l)), |&(s, l)| f(cfg, s, l))
}

/// Default ℓ range top for the per-mode commands.
pub const DEFAULT_ELL_MAX: usize = 5;
/// Default extrapolation range for symbol-check.
pub const DEFAULT_SYMBOL_ELL_MAX: usize = 40;

/// Rendered output of one command.
pub struct Outcome {
    pub json: String,
    pub csv: String,
    pub exit: i32,
    pub summary: Summary,
}

fn render<R: Record>(r: Report<R>) -> Outcome {
    Outcome { json: r.to_json(), csv: r.to_csv(), exit: r.exit_code(), summary: r.summary.clone() }
}

/// Runs one command with a resolved configuration.
pub fn execute(command: &str, cfg: &RunConfig) -> Result<Outcome, String> {
    if command != "resonances" && cfg.sigmas().is_empty() {
        return Err("no spectral parameter given (use --sigma, --sigma-count, `sigma` or `sigma_grid`)".into());
    }
    Ok(match command {
        "validate" => render(modes(command, cfg, DEFAULT_ELL_MAX, commands::validate)),
        "smatrix" => render(modes(command, cfg, DEFAULT_ELL_MAX, commands::smatrix)),
        "verify-product" => render(modes(command, cfg, DEFAULT_ELL_MAX, commands::verify_product)),
        "poisson-check" => render(modes(command, cfg, DEFAULT_ELL_MAX, commands::poisson_check)),
        "invert" => render(modes(command, cfg, DEFAULT_ELL_MAX, commands::invert)),
        "resonances" => {
            let ells: Vec<usize> = cfg.ells(DEFAULT_ELL_MAX).collect();
            render(gather(command, cfg, ells, |&l| (None, Some(l)), |&l| commands::resonances(cfg, l)))
        }
        "symbol-check" => {
            let ell_max = cfg.ell_max.unwrap_or(DEFAULT_SYMBOL_ELL_MAX);
            render(gather(command, cfg, cfg.sigmas(), |&s| (Some(s), None), |&s| commands::symbol_check(cfg, s, ell_max)))
        }
        other => return Err(format!("unknown command `{other}`")),
    })
}

/// Entry point: parses argv, runs the command, writes the report and returns
/// the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
        }
    };
    let name = cli.command.name();
    let cfg = match cli.command.overrides().resolve() {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_ERROR;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(thread_count()).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_ERROR;
        }
    };
    let out = match pool.install(|| execute(name, &cfg)) {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_ERROR;
        }
    };
    let body = match cfg.format {
        Format::Json => &out.json,
        Format::Csv => &out.csv,
    };
    let written = match &cfg.output {
        Some(path) => std::fs::write(path, body).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().write_all(body.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        eprintln!("error: {msg}");
        return EXIT_ERROR;
    }
    let s = &out.summary;
    eprintln!("{name}: {} records, {} violations, {} errors", s.records, s.violations, s.errors);
    out.exit
}
