//! Command-line flags, the JSON config file and their resolution into a
//! fully specified run. Flags override file values; every subcommand fills
//! its remaining parameters from defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use trotterlab_core::bounds::Constants;
use trotterlab_core::hamiltonian::{Boundary, ModelKind, ModelSpec};
use trotterlab_core::product_formula::Order;
use trotterlab_core::scan::{ErrorScanConfig, TGrid};
use trotterlab_core::series::DEFAULT_K_MAX;

use crate::Failure;

/// Constants fitted on the n=4 Heisenberg training scan
/// (r=10000, t-grid log:0.5:1000:120) and inflated by 10%.
pub const DEFAULT_C1: f64 = 0.1829;
pub const DEFAULT_C2: f64 = 0.0275;

#[derive(Parser, Debug)]
#[command(name = "trotterlab", version, about = "Product-formula error scans, checks and gate-count planning")]
pub struct Cli {
    /// JSON config file; command-line flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Seed for sampled checks
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Error scan over a time grid, written as CSV plus a JSON sidecar
    Scan(ScanArgs),
    /// First-order error curve (n=8, r=10000 by default)
    Fig1(ScanArgs),
    /// First-, second- and fourth-order error curves
    Fig2(ScanArgs),
    /// Exact decomposition and term-count checks of the error series
    Verify(VerifyArgs),
    /// Quadrature checks of the interference identities
    IdentityChecks(IdentityArgs),
    /// Plan r and count gates for a target accuracy
    Gates(GatesArgs),
    /// Compare empirically minimal r with the planner and the t^(3/2) conjecture
    Conjecture(ConjectureArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Scan(_) => "scan",
            Command::Fig1(_) => "fig1",
            Command::Fig2(_) => "fig2",
            Command::Verify(_) => "verify",
            Command::IdentityChecks(_) => "identity-checks",
            Command::Gates(_) => "gates",
            Command::Conjecture(_) => "conjecture",
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct ModelArgs {
    /// Model family
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Number of sites
    #[arg(long)]
    pub n: Option<usize>,
    /// Boundary condition
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
    /// Seed for Heisenberg bond disorder in [0.5, 1.5]
    #[arg(long)]
    pub disorder_seed: Option<u64>,
    /// TFIM ZZ coupling
    #[arg(long, allow_hyphen_values = true)]
    pub jzz: Option<f64>,
    /// TFIM transverse field
    #[arg(long, allow_hyphen_values = true)]
    pub hx: Option<f64>,
    /// TFIM power-law exponent; all-pairs couplings when set
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelArg {
    Heisenberg,
    Tfim,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BoundaryArg {
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Full-size settings (n=8, r=10000)
    Full,
    /// Reduced settings for CI (n=6, r=2000)
    Ci,
}

#[derive(Args, Debug, Default)]
pub struct ScanArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of time segments
    #[arg(long)]
    pub r: Option<u64>,
    /// Time grid: log:a:b:N, lin:a:b:N or a comma list
    #[arg(long)]
    pub t_grid: Option<String>,
    /// Product-formula orders (1, 2, 4), repeatable or comma separated
    #[arg(long = "order", value_delimiter = ',')]
    pub orders: Option<Vec<u8>>,
    /// Truncation order of the series bound column
    #[arg(long)]
    pub k_max: Option<usize>,
    /// CSV output path (stdout when omitted for scan)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sidecar JSON path (default: the CSV path with a .json extension)
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Fit C1, C2 to the first-order points and write a constants file
    #[arg(long)]
    pub fit_out: Option<PathBuf>,
    /// Parameter preset for fig1 and fig2
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Args, Debug, Default)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Highest series order to check
    #[arg(long)]
    pub k_max: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct IdentityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Times for the integral identity, comma separated
    #[arg(long, value_delimiter = ',')]
    pub t_values: Option<Vec<f64>>,
    /// Number of sampled (a, tau) pairs for the recursion check
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct ConstantArgs {
    /// Constants file written by --fit-out
    #[arg(long)]
    pub constants: Option<PathBuf>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct GatesArgs {
    /// Number of sites
    #[arg(long)]
    pub n: Option<usize>,
    /// Evolution time in units of 1/J
    #[arg(long)]
    pub t: Option<f64>,
    /// Target spectral-norm error
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    pub constants: ConstantArgs,
}

#[derive(Args, Debug, Default)]
pub struct ConjectureArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Target spectral-norm error
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Time grid: log:a:b:N, lin:a:b:N or a comma list
    #[arg(long)]
    pub t_grid: Option<String>,
    /// JSON output path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub constants: ConstantArgs,
}

/// Flat config shared by the config file, the stderr echo and sidecars.
/// Keys a subcommand does not use are left out of its resolved form.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disorder_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jzz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sidecar: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<PathBuf>,
    #[serde(rename = "C1", skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(rename = "C2", skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A fully resolved run.
#[derive(Debug)]
pub struct RunConfig {
    /// Resolved values in file form, echoed to stderr and stored in sidecars.
    pub resolved: FileConfig,
    pub workers: Option<usize>,
    pub task: Task,
}

#[derive(Debug)]
pub enum Task {
    Scan {
        scan: ErrorScanConfig,
        out: Option<PathBuf>,
        sidecar: Option<PathBuf>,
        fit_out: Option<PathBuf>,
    },
    Verify {
        model: ModelSpec,
        k_max: usize,
    },
    IdentityChecks {
        model: ModelSpec,
        t_values: Vec<f64>,
        samples: usize,
        seed: u64,
    },
    Gates {
        n: usize,
        t: f64,
        epsilon: f64,
        constants: Constants,
    },
    Conjecture {
        model: ModelSpec,
        epsilon: f64,
        t_grid: TGrid,
        constants: Constants,
        out: Option<PathBuf>,
    },
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn load_file(path: &Path) -> Result<FileConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| usage(format!("invalid config {}: {e}", path.display()));
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
    // A sidecar carries its run's config under "config" and can be replayed.
    if let Some(inner) = value.get_mut("config").filter(|v| v.is_object()) {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(bad)
}

fn merge_model(f: &mut FileConfig, m: &ModelArgs) {
    if let Some(v) = m.model {
        f.model = Some(match v {
            ModelArg::Heisenberg => ModelKind::Heisenberg,
            ModelArg::Tfim => ModelKind::Tfim,
        });
    }
    if let Some(b) = m.boundary {
        f.boundary = Some(match b {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::Periodic => Boundary::Periodic,
        });
    }
    set(&mut f.n, m.n);
    set(&mut f.disorder_seed, m.disorder_seed);
    set(&mut f.jzz, m.jzz);
    set(&mut f.hx, m.hx);
    set(&mut f.alpha, m.alpha);
}

fn merge_constants(f: &mut FileConfig, c: &ConstantArgs) {
    set(&mut f.constants, c.constants.clone());
    set(&mut f.c1, c.c1);
    set(&mut f.c2, c.c2);
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

/// Applies the command-line flags on top of the file values.
fn merge(cli: &Cli, mut f: FileConfig) -> FileConfig {
    set(&mut f.workers, cli.workers);
    set(&mut f.seed, cli.seed);
    match &cli.command {
        Command::Scan(a) | Command::Fig1(a) | Command::Fig2(a) => {
            merge_model(&mut f, &a.model);
            if a.out.is_some() && a.sidecar.is_none() {
                f.sidecar = None;
            }
            set(&mut f.r, a.r);
            set(&mut f.t_grid, a.t_grid.clone());
            set(&mut f.orders, a.orders.clone());
            set(&mut f.k_max, a.k_max);
            set(&mut f.out, a.out.clone());
            set(&mut f.sidecar, a.sidecar.clone());
            set(&mut f.fit_out, a.fit_out.clone());
            set(&mut f.preset, a.preset);
        }
        Command::Verify(a) => {
            merge_model(&mut f, &a.model);
            set(&mut f.k_max, a.k_max);
        }
        Command::IdentityChecks(a) => {
            merge_model(&mut f, &a.model);
            set(&mut f.t_values, a.t_values.clone());
            set(&mut f.samples, a.samples);
        }
        Command::Gates(a) => {
            set(&mut f.n, a.n);
            set(&mut f.t, a.t);
            set(&mut f.epsilon, a.epsilon);
            merge_constants(&mut f, &a.constants);
        }
        Command::Conjecture(a) => {
            merge_model(&mut f, &a.model);
            set(&mut f.epsilon, a.epsilon);
            set(&mut f.t_grid, a.t_grid.clone());
            set(&mut f.out, a.out.clone());
            merge_constants(&mut f, &a.constants);
        }
    }
    f
}

/// Keeps only the model keys that apply to the chosen family.
fn model_spec(f: &mut FileConfig, default_n: usize) -> ModelSpec {
    let model = *f.model.get_or_insert(ModelKind::Heisenberg);
    let n = *f.n.get_or_insert(default_n);
    let boundary = *f.boundary.get_or_insert(Boundary::Open);
    let mut spec = ModelSpec::heisenberg(n);
    spec.model = model;
    spec.boundary = boundary;
    match model {
        ModelKind::Heisenberg => {
            spec.disorder_seed = f.disorder_seed;
            f.jzz = None;
            f.hx = None;
            f.alpha = None;
        }
        ModelKind::Tfim => {
            spec.jzz = *f.jzz.get_or_insert(1.0);
            spec.hx = *f.hx.get_or_insert(1.0);
            spec.alpha = f.alpha;
            f.disorder_seed = None;
        }
    }
    spec
}

fn check_writable(path: &Path) -> Result<(), Failure> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(usage(format!("output directory {} does not exist", parent.display())));
    }
    if path.is_dir() {
        return Err(usage(format!("output path {} is a directory", path.display())));
    }
    Ok(())
}

fn parse_orders(v: &[u8]) -> Result<Vec<Order>, Failure> {
    v.iter()
        .map(|&o| Order::try_from(o).map_err(|e| usage(e.to_string())))
        .collect()
}

fn resolve_constants(f: &mut FileConfig) -> Result<Constants, Failure> {
    if let Some(path) = &f.constants {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read constants {}: {e}", path.display())))?;
        let file: ConstantsFile = serde_json::from_str(&text)
            .map_err(|e| usage(format!("invalid constants file {}: {e}", path.display())))?;
        f.c1.get_or_insert(file.c1);
        f.c2.get_or_insert(file.c2);
    }
    let c1 = *f.c1.get_or_insert(DEFAULT_C1);
    let c2 = *f.c2.get_or_insert(DEFAULT_C2);
    Constants::new(c1, c2).map_err(|e| usage(e.to_string()))
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(usage(format!("{name} must be a positive number, got {v}")))
    }
}

/// On-disk constants as written by `--fit-out`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantsFile {
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub fit_model: String,
    pub training_scan: String,
}

/// Resolves flags and the optional config file into a run.
pub fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let file = match &cli.config {
        Some(p) => load_file(p)?,
        None => FileConfig::default(),
    };
    let name = cli.command.name();
    if let Some(c) = &file.command {
        if c != name {
            return Err(usage(format!("config file is for '{c}', not '{name}'")));
        }
    }
    let mut f = merge(cli, file);
    f.command = Some(name.to_string());
    let workers = f.workers;
    if workers == Some(0) {
        return Err(usage("--workers must be >= 1"));
    }

    let task = match &cli.command {
        Command::Scan(_) | Command::Fig1(_) | Command::Fig2(_) => {
            let ci = f.preset == Some(Preset::Ci);
            let (n, r, grid, orders, out) = match name {
                "fig1" => (if ci { 6 } else { 8 }, if ci { 2000 } else { 10_000 }, "log:0.5:1000:120", vec![1], Some("fig1.csv")),
                "fig2" => (if ci { 6 } else { 8 }, if ci { 2000 } else { 10_000 }, "log:10:3000:60", vec![1, 2, 4], Some("fig2.csv")),
                _ => {
                    if f.preset.is_some() {
                        return Err(usage("--preset applies to fig1 and fig2 only"));
                    }
                    if f.n.is_none() || f.r.is_none() || f.t_grid.is_none() {
                        return Err(usage("scan needs --n, --r and --t-grid"));
                    }
                    (0, 0, "", vec![1], None)
                }
            };
            if name != "scan" {
                f.preset.get_or_insert(Preset::Full);
            }
            let model = model_spec(&mut f, n);
            let r = *f.r.get_or_insert(r);
            let grid_text = f.t_grid.get_or_insert_with(|| grid.to_string()).clone();
            let t_grid: TGrid = grid_text.parse().map_err(|e: trotterlab_core::Error| usage(e.to_string()))?;
            let orders = parse_orders(f.orders.get_or_insert(orders))?;
            let k_max = *f.k_max.get_or_insert(DEFAULT_K_MAX);
            if f.out.is_none() {
                f.out = out.map(PathBuf::from);
            }
            if f.sidecar.is_none() {
                f.sidecar = f.out.as_ref().map(|p| p.with_extension("json"));
            }
            for p in [&f.out, &f.sidecar, &f.fit_out].into_iter().flatten() {
                check_writable(p)?;
            }
            let scan = ErrorScanConfig {
                model,
                r,
                t_grid,
                orders,
                k_max,
            };
            scan.validate().map_err(crate::classify)?;
            Task::Scan {
                scan,
                out: f.out.clone(),
                sidecar: f.sidecar.clone(),
                fit_out: f.fit_out.clone(),
            }
        }
        Command::Verify(_) => {
            let model = model_spec(&mut f, 4);
            let k_max = *f.k_max.get_or_insert(DEFAULT_K_MAX);
            Task::Verify { model, k_max }
        }
        Command::IdentityChecks(_) => {
            let model = model_spec(&mut f, 4);
            let t_values = f.t_values.get_or_insert_with(|| vec![0.5, 1.0, 2.0]).clone();
            if t_values.is_empty() || t_values.iter().any(|t| !t.is_finite()) {
                return Err(usage("--t-values must be a non-empty list of finite times"));
            }
            let samples = *f.samples.get_or_insert(20);
            let seed = *f.seed.get_or_insert(0);
            Task::IdentityChecks {
                model,
                t_values,
                samples,
                seed,
            }
        }
        Command::Gates(_) => {
            let n = f.n.ok_or_else(|| usage("gates needs --n"))?;
            let t = f.t.ok_or_else(|| usage("gates needs --t"))?;
            let epsilon = positive("--epsilon", f.epsilon.ok_or_else(|| usage("gates needs --epsilon"))?)?;
            if !t.is_finite() || t < 0.0 {
                return Err(usage(format!("--t must be finite and >= 0, got {t}")));
            }
            let constants = resolve_constants(&mut f)?;
            Task::Gates {
                n,
                t,
                epsilon,
                constants,
            }
        }
        Command::Conjecture(_) => {
            let model = model_spec(&mut f, 4);
            let epsilon = positive("--epsilon", *f.epsilon.get_or_insert(0.01))?;
            let grid_text = f.t_grid.get_or_insert_with(|| "log:1:20:8".to_string()).clone();
            let t_grid: TGrid = grid_text.parse().map_err(|e: trotterlab_core::Error| usage(e.to_string()))?;
            let constants = resolve_constants(&mut f)?;
            if let Some(p) = &f.out {
                check_writable(p)?;
            }
            Task::Conjecture {
                model,
                epsilon,
                t_grid,
                constants,
                out: f.out.clone(),
            }
        }
    };
    Ok(RunConfig {
        resolved: f,
        workers,
        task,
    })
}
