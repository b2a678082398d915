//! `fracstab`: stability checks, boundaries, region maps, sweeps and
//! simulations for fractional-order systems described in a TOML file.

mod args;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use fracstab_core::dboundary::BoundaryError;
use fracstab_core::emit;
use fracstab_core::fracnum::{parse_system_with_view, ConfigError, ViewHints};
use fracstab_core::regions::{
    robust_intersection, sweep_order, sweep_parameter, OrderSweepMode, RegionError,
};
use fracstab_core::simulate::{simulate_system, Input, SimError};
use fracstab_core::stability::StabilityError;
use fracstab_core::{
    boundary_set, classify_window, matignon_check, Bindings, FracSystem, Plane, SimConfig,
    SimVerdict, TraceOptions, VerdictClass, Window,
};

use args::{OmegaSpec, SweepSpec};

const EXIT_UNREADABLE: u8 = 64;
const EXIT_INVALID: u8 = 65;
const EXIT_FAILED: u8 = 70;

#[derive(Debug, Error)]
enum CliError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Unreadable { .. } => EXIT_UNREADABLE,
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Failed(_) => EXIT_FAILED,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<StabilityError> for CliError {
    fn from(e: StabilityError) -> Self {
        match e {
            StabilityError::Root(_) => CliError::Failed(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        match e {
            RegionError::TooManyFailures { .. }
            | RegionError::AdjacentFailures(..)
            | RegionError::Geometry => CliError::Failed(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<BoundaryError> for CliError {
    fn from(e: BoundaryError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "fracstab", version, about = "Stability analysis of fractional-order systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the sector-test verdict of a fully bound system.
    Check(CheckArgs),
    /// Trace the real, infinite and complex root boundaries in a plane.
    Boundaries(BoundaryArgs),
    /// Classify a window of the parameter plane into regions.
    Region(RegionArgs),
    /// Region maps over a swept coefficient or order.
    Sweep(SweepArgs),
    /// Step or impulse response by Grünwald–Letnikov differences.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// System definition file.
    system: PathBuf,
    /// Bind a parameter, e.g. `-p b=-2`. Repeatable.
    #[arg(short = 'p', long = "fix", value_name = "NAME=VALUE", value_parser = args::binding, allow_hyphen_values = true)]
    fix: Vec<(String, f64)>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    sys: SystemArgs,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory.
    #[arg(long, default_value = "fracstab-out")]
    out: PathBuf,
    /// Comma-separated subset of csv, json, svg.
    #[arg(long, default_value = "csv,json,svg")]
    format: String,
}

#[derive(Args)]
struct PlaneArgs {
    /// Plane axes `p1,p2`; defaults to the file's view.
    #[arg(long, value_parser = args::plane)]
    plane: Option<(String, String)>,
    /// Window `x0:x1,y0:y1`; defaults to the file's view, else -10:10,-10:10.
    #[arg(long, value_parser = args::window, allow_hyphen_values = true)]
    window: Option<Window>,
}

#[derive(Args)]
struct BoundaryArgs {
    #[command(flatten)]
    sys: SystemArgs,
    #[command(flatten)]
    plane: PlaneArgs,
    /// Frequency grid `lo:hi:count`, log-spaced.
    #[arg(long, value_parser = args::omega, default_value = "1e-4:1e4:2000")]
    omega: OmegaSpec,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct RegionArgs {
    #[command(flatten)]
    sys: SystemArgs,
    #[command(flatten)]
    plane: PlaneArgs,
    /// Grid `n1xn2`; defaults to the file's view, else 256x256.
    #[arg(long, value_parser = args::resolution)]
    res: Option<(usize, usize)>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    /// Orders (alpha, 1).
    Basset,
    /// Orders (alpha, 2 alpha).
    Commensurate,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    sys: SystemArgs,
    #[command(flatten)]
    plane: PlaneArgs,
    /// `name:start:stop:step`; the name `alpha` sweeps the fractional order.
    #[arg(long, value_parser = args::sweep, allow_hyphen_values = true)]
    sweep: SweepSpec,
    /// Order layout for `alpha` sweeps.
    #[arg(long, value_enum, default_value = "basset")]
    mode: Mode,
    /// Also emit the cells stable in every layer.
    #[arg(long)]
    robust: bool,
    /// Grid `n1xn2` per layer; defaults to the file's view, else 256x256.
    #[arg(long, value_parser = args::resolution)]
    res: Option<(usize, usize)>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum InputKind {
    Step,
    Impulse,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    sys: SystemArgs,
    /// Time step.
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    /// Final time.
    #[arg(long, default_value_t = 50.0)]
    horizon: f64,
    #[arg(long, value_enum, default_value = "step")]
    input: InputKind,
    /// Step height or impulse area.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    amplitude: f64,
    /// Divergence threshold on |y|.
    #[arg(long, default_value_t = 1e6)]
    bound: f64,
    /// Output directory.
    #[arg(long, default_value = "fracstab-out")]
    out: PathBuf,
    /// Comma-separated subset of csv, json.
    #[arg(long, default_value = "csv,json")]
    format: String,
}

struct Loaded {
    system: FracSystem,
    view: ViewHints,
    path: String,
    sha256: String,
    bindings: Bindings,
}

fn load(args: &SystemArgs) -> Result<Loaded, CliError> {
    let path = args.system.display().to_string();
    let bytes = fs::read(&args.system).map_err(|source| CliError::Unreadable {
        path: path.clone(),
        source,
    })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Invalid(format!("{path}: not valid UTF-8")))?;
    let (system, view) = parse_system_with_view(&text)
        .map_err(|e| CliError::Invalid(format!("{path}: {e}")))?;
    let known: BTreeSet<String> = system.unknowns().into_iter().collect();
    let mut bindings = Bindings::new();
    for (name, value) in &args.fix {
        if !known.contains(name) {
            return Err(CliError::Invalid(format!(
                "parameter {name} is not in {path} (parameters: {})",
                known.iter().cloned().collect::<Vec<_>>().join(", ")
            )));
        }
        bindings.insert(name.clone(), *value);
    }
    Ok(Loaded {
        system,
        view,
        path,
        sha256: hex::encode(Sha256::digest(&bytes)),
        bindings,
    })
}

fn resolve_plane(args: &PlaneArgs, view: &ViewHints) -> Result<(Plane, Window), CliError> {
    let (p1, p2) = args
        .plane
        .clone()
        .or_else(|| view.plane.clone())
        .ok_or_else(|| CliError::Invalid("no plane given; pass --plane p1,p2".into()))?;
    if p1 == p2 {
        return Err(CliError::Invalid("plane axes must differ".into()));
    }
    let window = match (args.window, view.window) {
        (Some(w), _) => w,
        (None, Some([x, y])) => Window::new((x[0], x[1]), (y[0], y[1]))
            .ok_or_else(|| CliError::Invalid("view window needs lo < hi on both axes".into()))?,
        (None, None) => Window::square(10.0),
    };
    Ok((Plane::new(p1, p2), window))
}

fn formats(spec: &str, allowed: &[&str]) -> Result<BTreeSet<String>, CliError> {
    let set: BTreeSet<String> = spec
        .split(',')
        .map(|s| s.trim().to_lowercase())
        .filter(|s| !s.is_empty())
        .collect();
    if let Some(bad) = set.iter().find(|f| !allowed.contains(&f.as_str())) {
        return Err(CliError::Invalid(format!(
            "unknown format {bad}; choose from {}",
            allowed.join(", ")
        )));
    }
    Ok(set)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::Failed(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(&path, contents)
        .map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config: serde_json::Value,
    input: InputDigest<'a>,
    version: &'a str,
    elapsed_seconds: f64,
}

#[derive(Serialize)]
struct InputDigest<'a> {
    path: &'a str,
    sha256: &'a str,
}

fn write_manifest(
    dir: &Path,
    command: &str,
    loaded: &Loaded,
    config: serde_json::Value,
    started: Instant,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        command,
        config,
        input: InputDigest {
            path: &loaded.path,
            sha256: &loaded.sha256,
        },
        version: env!("CARGO_PKG_VERSION"),
        elapsed_seconds: started.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(dir, "manifest.json", &(text + "\n"))
}

fn plane_json(plane: &Plane, window: &Window) -> serde_json::Value {
    json!({
        "plane": [plane.p1, plane.p2],
        "window": [[window.p1.0, window.p1.1], [window.p2.0, window.p2.1]],
    })
}

fn run_check(args: &CheckArgs) -> Result<u8, CliError> {
    let loaded = load(&args.sys)?;
    let qp = loaded
        .system
        .denominator()
        .substitute(&loaded.bindings)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let verdict = matignon_check(&qp)?;
    say(&verdict.to_json());
    Ok(match verdict.class {
        VerdictClass::Stable => 0,
        VerdictClass::Unstable => 1,
        VerdictClass::Marginal => 2,
    })
}

fn run_boundaries(args: &BoundaryArgs, started: Instant) -> Result<u8, CliError> {
    let loaded = load(&args.sys)?;
    let (plane, window) = resolve_plane(&args.plane, &loaded.view)?;
    let fmts = formats(&args.output.format, &["csv", "json", "svg"])?;
    let opts = TraceOptions {
        omega_lo: args.omega.lo,
        omega_hi: args.omega.hi,
        samples: args.omega.count,
        ..TraceOptions::default()
    };
    let set = boundary_set(loaded.system.denominator(), &plane, &loaded.bindings, &window, &opts)?;
    for note in &set.notes {
        eprintln!("warning: {note}");
    }
    let dir = &args.output.out;
    if fmts.contains("csv") {
        write(dir, "boundaries.csv", &set.to_csv(&window))?;
    }
    if fmts.contains("svg") {
        write(dir, "boundaries.svg", &emit::boundary_svg(&plane, &window, &set))?;
    }
    let mut config = plane_json(&plane, &window);
    config["bindings"] = json!(loaded.bindings);
    config["trace"] = json!(opts);
    config["format"] = json!(fmts);
    write_manifest(dir, "boundaries", &loaded, config, started)?;
    Ok(0)
}

fn overlay(loaded: &Loaded, plane: &Plane, window: &Window) -> Option<fracstab_core::BoundarySet> {
    match boundary_set(
        loaded.system.denominator(),
        plane,
        &loaded.bindings,
        window,
        &TraceOptions::default(),
    ) {
        Ok(set) => Some(set),
        Err(e) => {
            eprintln!("warning: boundaries not drawn: {e}");
            None
        }
    }
}

fn run_region(args: &RegionArgs, started: Instant) -> Result<u8, CliError> {
    let loaded = load(&args.sys)?;
    let (plane, window) = resolve_plane(&args.plane, &loaded.view)?;
    let res = args.res.or(loaded.view.resolution).unwrap_or((256, 256));
    let fmts = formats(&args.output.format, &["csv", "json", "svg"])?;
    let map = classify_window(loaded.system.denominator(), &plane, &loaded.bindings, &window, res)?;
    let dir = &args.output.out;
    let summary = map.to_json();
    if fmts.contains("csv") {
        write(dir, "region.csv", &map.to_csv())?;
    }
    if fmts.contains("json") {
        write(dir, "region.json", &format!("{summary}\n"))?;
    }
    if fmts.contains("svg") {
        let set = overlay(&loaded, &plane, &window);
        write(dir, "region.svg", &emit::region_svg(&map, set.as_ref()))?;
    }
    say(&summary);
    let mut config = plane_json(&plane, &window);
    config["bindings"] = json!(loaded.bindings);
    config["resolution"] = json!(res);
    config["format"] = json!(fmts);
    write_manifest(dir, "region", &loaded, config, started)?;
    Ok(0)
}

fn run_sweep(args: &SweepArgs, started: Instant) -> Result<u8, CliError> {
    let loaded = load(&args.sys)?;
    let (plane, window) = resolve_plane(&args.plane, &loaded.view)?;
    let res = args.res.or(loaded.view.resolution).unwrap_or((256, 256));
    let fmts = formats(&args.output.format, &["csv", "json", "svg"])?;
    let den = loaded.system.denominator();
    let spec = &args.sweep;
    let (stack, values) = if spec.name == "alpha" {
        let alphas = spec.orders().map_err(CliError::Invalid)?;
        let mode = match args.mode {
            Mode::Basset => OrderSweepMode::Basset,
            Mode::Commensurate => OrderSweepMode::Commensurate,
        };
        let labels: Vec<String> = alphas.iter().map(|a| a.to_string()).collect();
        let stack = sweep_order(den, &plane, &loaded.bindings, &alphas, mode, &window, res)?;
        (stack, json!(labels))
    } else {
        if loaded.bindings.contains_key(&spec.name) {
            return Err(CliError::Invalid(format!(
                "{} is both swept and fixed",
                spec.name
            )));
        }
        let values = spec.values().map_err(CliError::Invalid)?;
        let stack = sweep_parameter(den, &plane, &loaded.bindings, &spec.name, &values, &window, res)?;
        (stack, json!(values))
    };

    let dir = &args.output.out;
    let width = stack.layers.len().saturating_sub(1).to_string().len().max(3);
    let stems: Vec<String> = (0..stack.layers.len())
        .map(|k| format!("layers/layer-{k:0width$}"))
        .collect();
    for (layer, stem) in stack.layers.iter().zip(&stems) {
        if fmts.contains("csv") {
            write(dir, &format!("{stem}.csv"), &layer.map.to_csv())?;
        }
        if fmts.contains("json") {
            write(dir, &format!("{stem}.json"), &format!("{}\n", layer.map.to_json()))?;
        }
        if fmts.contains("svg") {
            write(dir, &format!("{stem}.svg"), &emit::region_svg(&layer.map, None))?;
        }
    }
    let index = stack.index_json(&stems);
    write(dir, "index.json", &format!("{index}\n"))?;
    if fmts.contains("svg") {
        write(dir, "stack.svg", &emit::stack_svg(&stack))?;
    }
    if args.robust {
        let robust = robust_intersection(&stack)?;
        if fmts.contains("csv") {
            write(dir, "robust.csv", &robust.to_csv())?;
        }
        if fmts.contains("json") {
            write(dir, "robust.json", &format!("{}\n", robust.to_json()))?;
        }
        if fmts.contains("svg") {
            write(dir, "robust.svg", &emit::robust_svg(&robust, None))?;
        }
        say(&robust.to_json());
    } else {
        say(&index);
    }
    let mut config = plane_json(&plane, &window);
    config["bindings"] = json!(loaded.bindings);
    config["resolution"] = json!(res);
    config["sweep"] = json!({ "name": spec.name, "values": values });
    config["mode"] = json!(args.mode);
    config["robust"] = json!(args.robust);
    config["format"] = json!(fmts);
    write_manifest(dir, "sweep", &loaded, config, started)?;
    Ok(0)
}

fn run_simulate(args: &SimulateArgs, started: Instant) -> Result<u8, CliError> {
    let loaded = load(&args.sys)?;
    let fmts = formats(&args.format, &["csv", "json"])?;
    let cfg = SimConfig {
        step: args.step,
        horizon: args.horizon,
        input: match args.input {
            InputKind::Step => Input::Step(args.amplitude),
            InputKind::Impulse => Input::Impulse(args.amplitude),
        },
        bound: args.bound,
    };
    let result = simulate_system(&loaded.system, &loaded.bindings, &cfg)?;
    let summary = result.to_json(&cfg);
    let dir = &args.out;
    if fmts.contains("csv") {
        write(dir, "trajectory.csv", &result.to_csv())?;
    }
    if fmts.contains("json") {
        write(dir, "simulation.json", &format!("{summary}\n"))?;
    }
    say(&summary);
    let config = json!({
        "bindings": loaded.bindings,
        "simulation": cfg,
        "format": fmts,
    });
    write_manifest(dir, "simulate", &loaded, config, started)?;
    Ok(match result.verdict {
        SimVerdict::Bounded => 0,
        SimVerdict::Diverged { .. } => 1,
        SimVerdict::Inconclusive => 2,
    })
}

/// Prints a line to stdout; a closed pipe is not an error.
fn say(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn init_threads() {
    let Ok(text) = std::env::var("FRACSTAB_THREADS") else {
        return;
    };
    match text.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: FRACSTAB_THREADS ignored: {e}");
            }
        }
        _ => eprintln!("warning: FRACSTAB_THREADS={text:?} is not a positive integer; ignored"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_threads();
    let started = Instant::now();
    let outcome = match &cli.command {
        Command::Check(a) => run_check(a),
        Command::Boundaries(a) => run_boundaries(a, started),
        Command::Region(a) => run_region(a, started),
        Command::Sweep(a) => run_sweep(a, started),
        Command::Simulate(a) => run_simulate(a, started),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
