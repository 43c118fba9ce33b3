//! The `coflow` command-line application.
//!
//! Four commands share one resolved [`RunConfig`]: values given as flags win
//! over values from the `--config` file, which win over built-in defaults.
//! The config file is a flat TOML table whose keys are the long flag names
//! with `-` replaced by `_`:
//!
//! ```toml
//! n = 3
//! z = 0.3
//! hamiltonian = "superintegrable"
//! q = [0.3, 0.2, -0.4]
//! p = [0.2, 0.15, -0.1]
//! t_end = 10.0
//! dt = 0.001
//! ```
//!
//! Exit codes: `0` success, `1` configuration error, `2` numerical or
//! verification failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coalgebra::{casimir_one, Catalog, Sites};
use crate::coordinates::{
    cart_to_polar, check_canonicity, check_polar_interior, hamiltonian_polar_integrable, hamiltonian_polar_super,
    momentum_transform, polar_scalar_closed_form, polar_sectional_closed_form, relation_residuals, rho_to_r, Direction,
    MomentumScale, Radial, SpaceSignature,
};
use crate::error::{Error, Result};
use crate::function::{PhaseFunction, PhasePoint};
use crate::geometry::{self, closed_form, curvature_sample, metric_from_hamiltonian, COALGEBRA_LINE_ELEMENT_SCALE};
use crate::integrator::{self, conservation_report, write_csv, Method, Options};
use crate::poisson::{
    check_algebra, check_commuting, check_involution, independence_rank, sample_points, BRACKET_TOLERANCE,
    RANK_TOLERANCE, SAMPLE_BOUND,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "coflow", version, about = "Geodesic flows of a deformed sl(2) Poisson coalgebra")]
pub struct Cli {
    /// TOML file with default values for any flag
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check bracket relations, Casimir centrality, involution and independence
    Verify(VerifyArgs),
    /// Integrate a geodesic flow and monitor its constants of motion
    Simulate(SimulateArgs),
    /// Sectional and scalar curvature of a metric on a grid
    Curvature(CurvatureArgs),
    /// Map a phase point between the Cartesian and polar charts
    Transform(TransformArgs),
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// Number of sites (dimension)
    #[arg(long)]
    pub n: Option<usize>,
    /// Deformation parameter
    #[arg(long, allow_negative_numbers = true)]
    pub z: Option<f64>,
    /// Second curvature label of the polar charts (nonzero)
    #[arg(long, allow_negative_numbers = true)]
    pub kappa2: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (stdout when absent)
    #[arg(long, short)]
    pub output: Option<String>,
    /// csv, json or text
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Random phase-space samples per check
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// integrable, superintegrable, family:<one|exp|linear>, polar-integrable, polar-superintegrable
    #[arg(long)]
    pub hamiltonian: Option<String>,
    /// Initial positions, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub q: Option<Vec<f64>>,
    /// Initial momenta, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub p: Option<Vec<f64>>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// implicit-midpoint, gauss4 or rk4-check
    #[arg(long)]
    pub method: Option<String>,
    /// Store every k-th step
    #[arg(long)]
    pub keep_every: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CurvatureArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// integrable or superintegrable
    #[arg(long)]
    pub metric: Option<String>,
    /// cartesian or polar
    #[arg(long)]
    pub chart: Option<String>,
    /// Grid points per axis
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Cartesian grid half-width, or the largest radius in the polar chart
    #[arg(long)]
    pub grid_bound: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Input positions, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub q: Option<Vec<f64>>,
    /// Input momenta, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub p: Option<Vec<f64>>,
    /// to-polar or to-cartesian
    #[arg(long)]
    pub direction: Option<String>,
    /// rho or r
    #[arg(long)]
    pub radial: Option<String>,
    /// canonical or doubled
    #[arg(long)]
    pub momenta: Option<String>,
    /// Map back and report the recovered point
    #[arg(long)]
    pub round_trip: bool,
}

/// Every configurable value, as read from a config file or from flags.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Partial {
    pub n: Option<usize>,
    pub z: Option<f64>,
    pub kappa2: Option<f64>,
    pub hamiltonian: Option<String>,
    pub q: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub method: Option<String>,
    pub keep_every: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub grid_points: Option<usize>,
    pub grid_bound: Option<f64>,
    pub metric: Option<String>,
    pub chart: Option<String>,
    pub direction: Option<String>,
    pub radial: Option<String>,
    pub momenta: Option<String>,
    pub round_trip: Option<bool>,
    pub output: Option<String>,
    pub format: Option<String>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Partial { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl Partial {
    /// Field-wise `self` if set, else `lower`.
    pub fn over(self, lower: Partial) -> Partial {
        overlay!(
            self,
            lower,
            n,
            z,
            kappa2,
            hamiltonian,
            q,
            p,
            t_end,
            dt,
            method,
            keep_every,
            samples,
            seed,
            grid_points,
            grid_bound,
            metric,
            chart,
            direction,
            radial,
            momenta,
            round_trip,
            output,
            format
        )
    }

    fn from_common(c: CommonArgs) -> Partial {
        Partial {
            n: c.n,
            z: c.z,
            kappa2: c.kappa2,
            seed: c.seed,
            output: c.output,
            format: c.format,
            ..Default::default()
        }
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify(_) => "verify",
            Command::Simulate(_) => "simulate",
            Command::Curvature(_) => "curvature",
            Command::Transform(_) => "transform",
        }
    }

    fn into_partial(self) -> Partial {
        match self {
            Command::Verify(a) => Partial { samples: a.samples, ..Partial::from_common(a.common) },
            Command::Simulate(a) => Partial {
                hamiltonian: a.hamiltonian,
                q: a.q,
                p: a.p,
                t_end: a.t_end,
                dt: a.dt,
                method: a.method,
                keep_every: a.keep_every,
                ..Partial::from_common(a.common)
            },
            Command::Curvature(a) => Partial {
                metric: a.metric,
                chart: a.chart,
                grid_points: a.grid_points,
                grid_bound: a.grid_bound,
                ..Partial::from_common(a.common)
            },
            Command::Transform(a) => Partial {
                q: a.q,
                p: a.p,
                direction: a.direction,
                radial: a.radial,
                momenta: a.momenta,
                round_trip: a.round_trip.then_some(true),
                ..Partial::from_common(a.common)
            },
        }
    }
}

/// Fully resolved configuration, embedded in every output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub n: usize,
    pub z: f64,
    pub kappa2: f64,
    pub hamiltonian: String,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
    pub method: String,
    pub keep_every: usize,
    pub samples: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub grid_bound: f64,
    pub metric: String,
    pub chart: String,
    pub direction: String,
    pub radial: String,
    pub momenta: String,
    pub round_trip: bool,
    pub output: Option<String>,
    pub format: String,
}

const DEFAULT_Q: [f64; 5] = [0.3, 0.2, -0.4, 0.25, -0.15];
const DEFAULT_P: [f64; 5] = [0.08, -0.06, 0.1, -0.05, 0.07];

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn one_of(what: &str, value: String, allowed: &[&str]) -> Result<String> {
    if allowed.contains(&value.as_str()) {
        Ok(value)
    } else {
        Err(config_error(format!("{what} must be one of {} (got '{value}')", allowed.join(", "))))
    }
}

impl RunConfig {
    /// Applies defaults and validates.
    pub fn resolve(command: &str, p: Partial) -> Result<RunConfig> {
        let polar = matches!(p.hamiltonian.as_deref(), Some(h) if h.starts_with("polar"));
        let transform = command == "transform";
        let n = p.n.unwrap_or(3);
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let cycle = |src: &[f64; 5]| -> Vec<f64> { (0..n).map(|i| src[i % 5]).collect() };
        let (q_default, p_default) = if transform {
            (vec![0.4, 0.5, 0.6], vec![0.0; 3])
        } else if polar {
            (vec![0.8, 0.6, 0.7], vec![0.2, -0.3, 0.1])
        } else {
            (cycle(&DEFAULT_Q), cycle(&DEFAULT_P))
        };
        let default_format = match command {
            "simulate" | "curvature" => "csv",
            _ => "json",
        };
        let cfg = RunConfig {
            command: command.to_string(),
            n,
            z: p.z.unwrap_or(0.3),
            kappa2: p.kappa2.unwrap_or(1.0),
            hamiltonian: p.hamiltonian.unwrap_or_else(|| "integrable".into()),
            q: p.q.unwrap_or(q_default),
            p: p.p.unwrap_or(p_default),
            t_end: p.t_end.unwrap_or(10.0),
            dt: p.dt.unwrap_or(1e-3),
            method: p.method.unwrap_or_else(|| "implicit-midpoint".into()),
            keep_every: p.keep_every.unwrap_or(1),
            samples: p.samples.unwrap_or(200),
            seed: p.seed.unwrap_or(42),
            grid_points: p.grid_points.unwrap_or(5),
            grid_bound: p.grid_bound.unwrap_or(1.0),
            metric: one_of(
                "metric",
                p.metric.unwrap_or_else(|| "integrable".into()),
                &["integrable", "superintegrable"],
            )?,
            chart: one_of("chart", p.chart.unwrap_or_else(|| "cartesian".into()), &["cartesian", "polar"])?,
            direction: one_of(
                "direction",
                p.direction.unwrap_or_else(|| "to-polar".into()),
                &["to-polar", "to-cartesian"],
            )?,
            radial: one_of("radial", p.radial.unwrap_or_else(|| "rho".into()), &["rho", "r"])?,
            momenta: one_of("momenta", p.momenta.unwrap_or_else(|| "canonical".into()), &["canonical", "doubled"])?,
            round_trip: p.round_trip.unwrap_or(false),
            output: p.output,
            format: one_of("format", p.format.unwrap_or_else(|| default_format.into()), &["csv", "json", "text"])?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let reals = [
            ("z", self.z),
            ("kappa2", self.kappa2),
            ("t_end", self.t_end),
            ("dt", self.dt),
            ("grid_bound", self.grid_bound),
        ];
        for (name, v) in reals {
            if !v.is_finite() {
                return Err(config_error(format!("{name} must be finite")));
            }
        }
        if let Some(v) = self.q.iter().chain(&self.p).find(|v| !v.is_finite()) {
            return Err(config_error(format!("initial state must be finite (got {v})")));
        }
        if self.kappa2 == 0.0 {
            return Err(config_error("kappa2 must be nonzero"));
        }
        match self.command.as_str() {
            "verify" => {
                if self.samples == 0 {
                    return Err(config_error("samples must be ≥ 1"));
                }
            }
            "simulate" => {
                if !(self.dt > 0.0) {
                    return Err(config_error("dt must be positive"));
                }
                if !(self.t_end > 0.0) {
                    return Err(config_error("t_end must be positive"));
                }
                if self.keep_every == 0 {
                    return Err(config_error("keep_every must be ≥ 1"));
                }
                self.method.parse::<Method>()?;
                self.selector()?;
                let dim = if self.selector()?.is_polar() { 3 } else { self.n };
                if self.q.len() != dim || self.p.len() != dim {
                    return Err(config_error(format!(
                        "initial state must have {dim} positions and momenta (got {} and {})",
                        self.q.len(),
                        self.p.len()
                    )));
                }
                if self.format == "text" {
                    return Err(config_error("simulate writes csv or json"));
                }
            }
            "curvature" => {
                if !(2..=3).contains(&self.n) {
                    return Err(config_error(format!("curvature maps need n = 2 or 3 (got {})", self.n)));
                }
                if self.chart == "polar" && self.n != 3 {
                    return Err(config_error("the polar chart is three-dimensional (n = 3)"));
                }
                if self.grid_points == 0 || !(self.grid_bound > 0.0) {
                    return Err(config_error("grid needs ≥ 1 point per axis and a positive bound"));
                }
            }
            "transform" if self.q.len() != 3 || self.p.len() != 3 => {
                return Err(config_error("transform needs three positions and three momenta"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn signature(&self) -> Result<SpaceSignature> {
        SpaceSignature::new(self.z, self.kappa2)
    }

    pub fn selector(&self) -> Result<Selector> {
        let h = self.hamiltonian.as_str();
        match h {
            "integrable" => Ok(Selector::Integrable),
            "superintegrable" => Ok(Selector::Superintegrable),
            "polar-integrable" => Ok(Selector::PolarIntegrable),
            "polar-superintegrable" => Ok(Selector::PolarSuperintegrable),
            _ => match h.strip_prefix("family:") {
                Some(id) => Catalog::from_name(id)
                    .map(Selector::Family)
                    .ok_or_else(|| config_error(format!("unknown profile '{id}' (one, exp, linear)"))),
                None => Err(config_error(format!(
                    "unknown hamiltonian '{h}' (integrable, superintegrable, family:<id>, polar-integrable, polar-superintegrable)"
                ))),
            },
        }
    }

    fn to_text(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut s = String::new();
        if let Value::Object(map) = v {
            for (k, v) in map {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selector {
    Integrable,
    Superintegrable,
    Family(Catalog),
    PolarIntegrable,
    PolarSuperintegrable,
}

impl Selector {
    pub fn is_polar(self) -> bool {
        matches!(self, Selector::PolarIntegrable | Selector::PolarSuperintegrable)
    }
}

/// Hamiltonian plus the constants of motion monitored along its flow.
pub fn system(cfg: &RunConfig) -> Result<(PhaseFunction, Vec<(String, PhaseFunction)>)> {
    let sel = cfg.selector()?;
    if sel.is_polar() {
        let sig = cfg.signature()?;
        return Ok(match sel {
            Selector::PolarIntegrable => {
                let s = hamiltonian_polar_integrable(sig);
                let h = s.hamiltonian.clone();
                (h.clone(), vec![("H".into(), h), ("C2".into(), s.c2), ("C3".into(), s.c3)])
            }
            _ => {
                let s = hamiltonian_polar_super(sig);
                let h = s.hamiltonian.clone();
                let m = vec![
                    ("H".into(), h.clone()),
                    ("C2".into(), s.c2),
                    ("C3".into(), s.c3),
                    ("I2".into(), s.i2),
                    ("I3".into(), s.i3),
                ];
                (h, m)
            }
        });
    }
    let sites = Sites::new(cfg.n, cfg.z)?;
    let h = match sel {
        Selector::Integrable => sites.hamiltonian_integrable(),
        Selector::Superintegrable => sites.hamiltonian_superintegrable(),
        Selector::Family(c) => sites.hamiltonian_family(c)?,
        _ => unreachable!(),
    };
    let mut monitors = vec![("H".to_string(), h.clone())];
    for m in 2..=cfg.n {
        monitors.push((format!("C{m}"), sites.casimir(m)?));
    }
    if sel == Selector::Superintegrable {
        if cfg.n >= 2 {
            monitors.push(("I2".into(), sites.integral_i2()?));
        }
        if cfg.n >= 3 {
            monitors.push(("I3".into(), sites.integral_i3()?));
        }
    }
    Ok((h, monitors))
}

/// Outcome of one command: the serialized artifact plus a failure, if any.
pub struct Outcome {
    pub body: String,
    pub failure: Option<String>,
}

/// Runs the CLI on `args`, writing artifacts to `stdout` or the configured
/// file and diagnostics to `stderr`; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_CONFIG
                }
            };
        }
    };
    let cfg = match load(cli) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let written = match &cfg.output {
        Some(path) => std::fs::write(path, &outcome.body).map_err(|e| format!("cannot write {path}: {e}")),
        None => stdout.write_all(outcome.body.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_CONFIG;
    }
    match outcome.failure {
        Some(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_FAILURE
        }
        None => EXIT_OK,
    }
}

fn load(cli: Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
            toml::from_str::<Partial>(&text).map_err(|e| config_error(format!("config {}: {e}", path.display())))?
        }
        None => Partial::default(),
    };
    let name = cli.command.name();
    RunConfig::resolve(name, cli.command.into_partial().over(file))
}

/// Runs a resolved configuration.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command.as_str() {
        "verify" => cmd_verify(cfg),
        "simulate" => cmd_simulate(cfg),
        "curvature" => cmd_curvature(cfg),
        "transform" => cmd_transform(cfg),
        other => Err(config_error(format!("unknown command {other}"))),
    }
}

fn envelope(cfg: &RunConfig, results: Value, residuals: Value) -> String {
    let doc = json!({ "config": cfg, "results": results, "residuals": residuals, "version": VERSION });
    let mut s = serde_json::to_string_pretty(&doc).expect("json");
    s.push('\n');
    s
}

fn flatten_json(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_json(&key, v, out);
            }
        }
        other => {
            let _ = writeln!(out, "{prefix} = {other}");
        }
    }
}

fn text_report(cfg: &RunConfig, results: &Value, residuals: &Value) -> String {
    let mut s = format!("# coflow {VERSION}\n[config]\n{}", cfg.to_text());
    s.push_str("[results]\n");
    flatten_json("", results, &mut s);
    s.push_str("[residuals]\n");
    flatten_json("", residuals, &mut s);
    s
}

fn render(cfg: &RunConfig, results: Value, residuals: Value) -> String {
    if cfg.format == "json" {
        envelope(cfg, results, residuals)
    } else {
        text_report(cfg, &results, &residuals)
    }
}

fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    let (n, z, samples, seed) = (cfg.n, cfg.z, cfg.samples, cfg.seed);
    let sites = Sites::new(n, z)?;
    let mut failures: Vec<String> = Vec::new();
    fn check(failures: &mut Vec<String>, name: &str, value: f64, tol: f64, detail: String) {
        if !(value < tol) {
            failures.push(format!("{name}: residual {value:e} ≥ {tol:e} {detail}"));
        }
    }

    let algebra = check_algebra(n, z, samples, seed)?;
    check(
        &mut failures,
        "bracket relations",
        algebra.max_residual(),
        BRACKET_TOLERANCE,
        format!("at {:?}", algebra.worst_point),
    );

    let c1 = casimir_one(z)?;
    let c1_max = sample_points(1, samples, seed, SAMPLE_BOUND).iter().map(|x| c1.value(x).abs()).fold(0.0, f64::max);
    check(&mut failures, "first-order Casimir", c1_max, 1e-12, String::new());

    let r = sites.realize();
    let generators = [r.j_minus.clone(), r.j_plus.clone(), r.j_three.clone()];
    let casimirs = (2..=n).map(|m| sites.casimir(m)).collect::<Result<Vec<_>>>()?;
    let centrality = if casimirs.is_empty() {
        Value::Null
    } else {
        let rep = check_commuting(&casimirs, &generators, samples, seed, SAMPLE_BOUND)?;
        check(
            &mut failures,
            "Casimir centrality",
            rep.max_residual,
            BRACKET_TOLERANCE,
            format!("{{{}, {}}} at {:?}", rep.worst_pair.0, rep.worst_pair.1, rep.worst_point),
        );
        serde_json::to_value(&rep).expect("json")
    };

    let mut integrable = vec![sites.hamiltonian_integrable()];
    integrable.extend(casimirs.iter().cloned());
    let mut superint = vec![sites.hamiltonian_superintegrable()];
    superint.extend(casimirs.iter().cloned());
    if n >= 2 {
        superint.push(sites.integral_i2()?);
    }
    if n >= 3 {
        superint.push(sites.integral_i3()?);
    }
    let mut involution = serde_json::Map::new();
    let mut ranks = serde_json::Map::new();
    let rank_points = sample_points(n, 10, seed ^ 0x5eed, 1.0);
    for (name, set, hamiltonian_pairs_only) in
        [("integrable", &integrable, false), ("superintegrable", &superint, true)]
    {
        let rep = check_involution(set, samples, seed)?;
        // {I², I³} and {Cᵐ, Iᵏ} need not vanish; only brackets with H do
        let worst = if hamiltonian_pairs_only {
            (1..set.len()).map(|j| rep.matrix[0][j]).fold(0.0, f64::max)
        } else {
            rep.max_residual()
        };
        check(
            &mut failures,
            &format!("{name} involution"),
            worst,
            BRACKET_TOLERANCE,
            format!("{:?}", rep.violations(BRACKET_TOLERANCE)),
        );
        let mut r = Vec::new();
        for x in &rank_points {
            r.push(independence_rank(set, x, RANK_TOLERANCE)?);
        }
        let min = *r.iter().min().expect("10 points");
        if min != set.len() {
            failures.push(format!("{name} independence: rank {min} < {} at some sample point", set.len()));
        }
        involution.insert(name.into(), json!({ "labels": rep.labels, "max_residual": worst, "matrix": rep.matrix }));
        ranks.insert(name.into(), json!({ "expected": set.len(), "min": min, "max": r.iter().max() }));
    }

    let results = json!({
        "passed": failures.is_empty(),
        "failures": failures,
        "rank": ranks,
    });
    let residuals = json!({
        "algebra": algebra,
        "casimir_one": c1_max,
        "centrality": centrality,
        "involution": involution,
    });
    let failure = if failures.is_empty() { None } else { Some(failures.join("; ")) };
    Ok(Outcome { body: render(cfg, results, residuals), failure })
}

fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let (h, monitors) = system(cfg)?;
    let sel = cfg.selector()?;
    let x0 = PhasePoint::new(cfg.q.clone(), cfg.p.clone())?;
    let opts = Options { method: cfg.method.parse()?, t_end: cfg.t_end, dt: cfg.dt, keep_every: cfg.keep_every };
    let (traj, truncation) = if sel.is_polar() {
        let sig = cfg.signature()?;
        let radial = if sel == Selector::PolarIntegrable { Radial::Rho } else { Radial::R };
        check_polar_interior(sig, radial, &x0.q)?;
        match integrator::integrate_in(&h, &x0, &opts, |x| check_polar_interior(sig, radial, &x.q)) {
            Ok(t) => (t, None),
            Err(e) => (*e.partial, Some(e.error)),
        }
    } else {
        match integrator::integrate(&h, &x0, &opts) {
            Ok(t) => (t, None),
            Err(e) => (*e.partial, Some(e.error)),
        }
    };
    let report = conservation_report(&traj, &monitors)?;
    let drifts: serde_json::Map<String, Value> =
        report.drifts.iter().map(|d| (d.label.clone(), json!(d.max_drift))).collect();
    let truncated = truncation.as_ref().map(|e| e.to_string());
    let body = if cfg.format == "json" {
        let states: Vec<Vec<f64>> = traj.states.iter().map(|x| x.flat()).collect();
        let results = json!({
            "hamiltonian": traj.hamiltonian,
            "method": traj.method,
            "step": traj.step,
            "stored_states": traj.len(),
            "final_time": traj.times.last(),
            "truncated": truncated,
            "monitors": monitors.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
            "initial_values": report.drifts.iter().map(|d| (d.label.clone(), json!(d.initial))).collect::<serde_json::Map<_, _>>(),
            "times": traj.times,
            "states": states,
        });
        envelope(cfg, results, json!({ "drift": drifts }))
    } else {
        let mut buf = Vec::new();
        let cfg_json = serde_json::to_string(cfg).expect("json");
        let _ = writeln!(buf, "# coflow {VERSION}");
        let _ = writeln!(buf, "# config {cfg_json}");
        let _ = writeln!(buf, "# drift {}", serde_json::to_string(&drifts).expect("json"));
        write_csv(&mut buf, &traj, &monitors)?;
        if let Some(t) = &truncated {
            let _ = writeln!(buf, "# truncated: {t}");
        }
        String::from_utf8(buf).expect("utf8")
    };
    Ok(Outcome { body, failure: truncated })
}

fn curvature_rows(cfg: &RunConfig) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let (n, z) = (cfg.n, cfg.z);
    let superint = cfg.metric == "superintegrable";
    let polar = cfg.chart == "polar";
    let (h, points, radial) = if polar {
        let sig = cfg.signature()?;
        let b = cfg.grid_bound;
        let theta_max =
            if cfg.kappa2 > 0.0 { (0.9 * std::f64::consts::FRAC_PI_2 / cfg.kappa2.sqrt()).min(1.2) } else { 1.2 };
        let radial = if superint { Radial::R } else { Radial::Rho };
        let ranges = [(0.2 * b, b), (0.2f64.min(theta_max / 2.0), theta_max), (0.2, 1.2)];
        let h = if superint {
            hamiltonian_polar_super(sig).hamiltonian
        } else {
            hamiltonian_polar_integrable(sig).hamiltonian
        };
        (h, geometry::grid_in(&ranges, cfg.grid_points), Some(radial))
    } else {
        let sites = Sites::new(n, z)?;
        let h = if superint { sites.hamiltonian_superintegrable() } else { sites.hamiltonian_integrable() };
        (h, geometry::grid(n, cfg.grid_bound, cfg.grid_points), None)
    };
    let scale = if polar { 1.0 } else { COALGEBRA_LINE_ELEMENT_SCALE };
    let checks: Vec<PhasePoint> = points
        .iter()
        .take(3)
        .map(|q| PhasePoint { q: q.clone(), p: (0..n).map(|i| 0.3 + 0.1 * i as f64).collect() })
        .collect();
    let g = metric_from_hamiltonian(&h, &checks, scale)?;
    if let Some(radial) = radial {
        for q in &points {
            check_polar_interior(cfg.signature()?, radial, q)?;
        }
    }
    let coord_names: Vec<String> = match radial {
        Some(r) => vec![r.name().into(), "theta".into(), "phi".into()],
        None => (1..=n).map(|i| format!("q{i}")).collect(),
    };
    let planes: Vec<String> = if n == 2 { vec!["K12".into()] } else { vec!["K12".into(), "K13".into(), "K23".into()] };
    let mut header = coord_names;
    header.extend(planes.iter().cloned());
    header.push("K".into());
    header.extend(planes.iter().map(|p| format!("ref_{p}")));
    header.push("ref_K".into());
    header.extend(planes.iter().map(|p| format!("res_{p}")));
    header.push("res_K".into());
    let mut rows = Vec::new();
    for q in &points {
        let s = curvature_sample(&g, q)?;
        let mut numeric = s.sectional.clone();
        numeric.push(s.scalar);
        let reference: Vec<f64> = match (n, superint, polar) {
            (_, true, _) => {
                let mut r = vec![z; planes.len()];
                r.push(z * (n * (n - 1)) as f64);
                r
            }
            (2, false, _) => {
                let k = closed_form::variable_gaussian_2d(z, q);
                vec![k, 2.0 * k]
            }
            (_, false, false) => {
                let mut r = closed_form::variable_sectional_3d(z, q).to_vec();
                r.push(closed_form::variable_scalar_3d(z, q));
                r
            }
            (_, false, true) => {
                let mut r = polar_sectional_closed_form(z, q[0]).to_vec();
                r.push(polar_scalar_closed_form(z, q[0]));
                r
            }
        };
        let residual: Vec<f64> = numeric.iter().zip(&reference).map(|(a, b)| relative_error(*a, *b)).collect();
        let mut row = q.clone();
        row.extend(numeric);
        row.extend(reference);
        row.extend(residual);
        rows.push(row);
    }
    Ok((header, rows))
}

/// `|a − b|/|b|`, or `|a − b|` when `|b| ≤ 1e-12`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if b.abs() > 1e-12 {
        d / b.abs()
    } else {
        d
    }
}

fn cmd_curvature(cfg: &RunConfig) -> Result<Outcome> {
    let (header, rows) = curvature_rows(cfg)?;
    let k = header.iter().position(|h| h == "res_K12").expect("residual columns");
    let max_res = rows.iter().flat_map(|r| r[k..].iter().copied()).fold(0.0, f64::max);
    let body = if cfg.format == "csv" {
        let mut s = format!("# coflow {VERSION}\n# config {}\n", serde_json::to_string(cfg).expect("json"));
        s.push_str(&header.join(","));
        s.push('\n');
        for r in &rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    } else {
        let table: Vec<serde_json::Map<String, Value>> =
            rows.iter().map(|r| header.iter().cloned().zip(r.iter().map(|v| json!(v))).collect()).collect();
        render(
            cfg,
            json!({ "points": rows.len(), "columns": header, "rows": table }),
            json!({ "max_relative": max_res }),
        )
    };
    Ok(Outcome { body, failure: None })
}

fn cmd_transform(cfg: &RunConfig) -> Result<Outcome> {
    let sig = cfg.signature()?;
    let radial = if cfg.radial == "r" { Radial::R } else { Radial::Rho };
    let scale = if cfg.momenta == "doubled" { MomentumScale::Doubled } else { MomentumScale::Canonical };
    let to_polar = cfg.direction == "to-polar";
    let direction = if to_polar { Direction::CartesianToPolar } else { Direction::PolarToCartesian };
    let input = PhasePoint::new(cfg.q.clone(), cfg.p.clone())?;
    let zero_momenta = input.p.iter().all(|v| *v == 0.0);

    let mapped = match momentum_transform(&input, sig, radial, direction, scale) {
        Ok(y) => y,
        // momenta are linear in p, so p = 0 maps to 0 even where the Jacobian degenerates
        Err(Error::SingularJacobian(_)) if zero_momenta => {
            let q = if to_polar {
                crate::coordinates::cart_to_chart(sig, radial, &input.q)?.to_vec()
            } else {
                crate::coordinates::chart_to_cart(sig, radial, &input.q)?.to_vec()
            };
            PhasePoint { q, p: vec![0.0; 3] }
        }
        Err(e) => return Err(e),
    };
    let (cart, polar) = if to_polar { (&input, &mapped) } else { (&mapped, &input) };
    let rho = match radial {
        Radial::Rho => polar.q[0],
        Radial::R => cart_to_polar(sig, &cart.q)?[0],
    };
    let relations = relation_residuals(sig, &cart.q, &[rho, polar.q[1], polar.q[2]])?;
    let canonicity = match check_canonicity(sig, radial, scale, std::slice::from_ref(cart)) {
        Ok(rep) => json!(rep.max_residual()),
        Err(_) => Value::Null,
    };
    let mut results = json!({
        "direction": cfg.direction,
        "radial": radial.name(),
        "momenta": cfg.momenta,
        "input": { "position": input.q, "momenta": input.p },
        "output": { "position": mapped.q, "momenta": mapped.p },
    });
    if radial == Radial::Rho {
        results["r"] = json!(rho_to_r(rho, sig.kappa1)?);
    }
    if cfg.round_trip {
        let back_dir = if to_polar { Direction::PolarToCartesian } else { Direction::CartesianToPolar };
        let back = if zero_momenta && mapped.q.iter().all(|v| *v == 0.0) {
            input.clone()
        } else {
            momentum_transform(&mapped, sig, radial, back_dir, scale)?
        };
        let err = back.flat().iter().zip(input.flat()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        results["round_trip"] = json!({ "recovered": back.flat(), "max_error": err });
    }
    let mut failure = None;
    if let Value::Number(c) = &canonicity {
        if !(c.as_f64().unwrap_or(f64::NAN) < BRACKET_TOLERANCE) {
            failure = Some(format!("canonicity residual {c} ≥ {BRACKET_TOLERANCE:e}"));
        }
    }
    let residuals = json!({ "relations": relations, "canonicity": canonicity });
    let body = if cfg.format == "csv" {
        let mut s = format!("# coflow {VERSION}\n# config {}\n", serde_json::to_string(cfg).expect("json"));
        s.push_str("x1,x2,x3,p1,p2,p3\n");
        let cells: Vec<String> = mapped.flat().iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
        s
    } else {
        render(cfg, results, residuals)
    };
    Ok(Outcome { body, failure })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("coflow").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn precedence_flags_over_file_over_defaults() {
        let file = Partial { z: Some(0.7), n: Some(2), ..Default::default() };
        let flags = Partial { z: Some(0.1), ..Default::default() };
        let cfg = RunConfig::resolve("verify", flags.over(file)).unwrap();
        assert_eq!((cfg.n, cfg.z, cfg.samples), (2, 0.1, 200));
    }

    #[test]
    fn config_errors_exit_one() {
        let (code, _, err) = run_capture(&["verify", "--n", "0"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("dimension must be ≥ 1"), "{err}");
        assert_eq!(run_capture(&["verify", "--bogus"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["simulate", "--hamiltonian", "family:sin"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["simulate", "--dt", "0"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn transform_origin() {
        let (code, out, err) = run_capture(&["transform", "--q", "0,0,0"]);
        assert_eq!(code, EXIT_OK, "{err}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["results"]["output"]["position"][0], 0.0);
        assert_eq!(v["results"]["r"], 0.0);
    }

    #[test]
    fn transform_outside_relativistic_chart() {
        let (code, _, err) = run_capture(&["transform", "--kappa2", "-1", "--q", "0.5,0.5,0.3"]);
        assert_eq!(code, EXIT_FAILURE);
        assert!(err.contains("relation 1"), "{err}");
    }

    #[test]
    fn verify_undeformed() {
        let (code, out, err) = run_capture(&["verify", "--n", "2", "--z", "0", "--samples", "20"]);
        assert_eq!(code, EXIT_OK, "{err}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v["residuals"]["algebra"]["j3_jplus"].as_f64().unwrap() < 1e-12);
        assert_eq!(v["version"], VERSION);
    }

    #[test]
    fn simulate_polar_boundary_exits_two() {
        let (code, _, err) =
            run_capture(&["simulate", "--hamiltonian", "polar-integrable", "--q", "0,0.5,0.5", "--p", "0.1,0.1,0.1"]);
        assert_eq!(code, EXIT_FAILURE);
        assert!(err.contains("chart boundary"), "{err}");
    }
}
