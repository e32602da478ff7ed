//! `zetawb`: build orbit catalogs, evaluate zeta objects on grids, estimate resonances,
//! tabulate prime counting functions and run the identity suite.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zetawb_core::{entropy_estimate, read_catalog_file, Complex64, OrbitCatalog, TruncationPolicy};

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

pub mod config;
mod count;
mod grid;
pub mod model;
mod orbits;
mod resonances;
mod verify;

use config::{overlay, CountConfig, FileConfig, GridConfig, JobConfig, ModelConfig, PolicyConfig, ResonanceConfig};

pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_MODEL: u8 = 2;
pub const EXIT_PARTIAL: u8 = 3;
pub const EXIT_NO_CONVERGENCE: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(EXIT_MODEL, message)
    }

    pub fn model(e: zetawb_core::Error) -> Self {
        Self::new(EXIT_MODEL, e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "zetawb", version, about = "Periodic orbit catalogs and truncated dynamical zeta functions")]
#[command(after_long_help = config::CONFIG_HELP)]
pub struct Cli {
    /// job configuration (TOML); see --help
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// worker threads
    #[arg(long, global = true, env = "ZETAWB_THREADS")]
    pub threads: Option<usize>,
    /// seed for randomized checks
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate prime orbits and write a catalog
    Orbits {
        #[command(flatten)]
        model: ModelConfig,
        #[command(flatten)]
        files: FileConfig,
    },
    /// Evaluate zeta quantities on a rectangular grid as CSV
    ZetaGrid {
        #[command(flatten)]
        policy: PolicyConfig,
        #[command(flatten)]
        grid: GridConfig,
        #[command(flatten)]
        files: FileConfig,
    },
    /// Ratio estimates, winding counts and refined zeros
    Resonances {
        #[command(flatten)]
        policy: PolicyConfig,
        #[command(flatten)]
        res: ResonanceConfig,
        #[command(flatten)]
        files: FileConfig,
    },
    /// Prime counting functions against li(e^{hT})
    Count {
        #[command(flatten)]
        count: CountConfig,
        #[command(flatten)]
        files: FileConfig,
    },
    /// Run the identity suite on a catalog
    Verify {
        #[command(flatten)]
        policy: PolicyConfig,
        #[command(flatten)]
        files: FileConfig,
    },
}

/// Effective configuration: the file (if any) overlaid by the command line.
pub fn resolve(cli: &Cli) -> Result<JobConfig, CliError> {
    let mut job = match &cli.config {
        Some(p) => JobConfig::load(p)?,
        None => JobConfig::default(),
    };
    job.threads = cli.threads.or(job.threads);
    job.seed = cli.seed.or(job.seed);
    match &cli.command {
        Command::Orbits { model, files } => {
            job.model = overlay(&job.model, model);
            job.files = overlay(&job.files, files);
        }
        Command::ZetaGrid { policy, grid, files } => {
            job.policy = overlay(&job.policy, policy);
            job.grid = overlay(&job.grid, grid);
            job.files = overlay(&job.files, files);
        }
        Command::Resonances { policy, res, files } => {
            job.policy = overlay(&job.policy, policy);
            job.resonances = overlay(&job.resonances, res);
            job.files = overlay(&job.files, files);
        }
        Command::Count { count, files } => {
            job.count = overlay(&job.count, count);
            job.files = overlay(&job.files, files);
        }
        Command::Verify { policy, files } => {
            job.policy = overlay(&job.policy, policy);
            job.files = overlay(&job.files, files);
        }
    }
    Ok(job)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let job = resolve(cli)?;
    let work = || match &cli.command {
        Command::Orbits { .. } => orbits::run(&job),
        Command::ZetaGrid { .. } => grid::run(&job),
        Command::Resonances { .. } => resonances::run(&job),
        Command::Count { .. } => count::run(&job),
        Command::Verify { .. } => verify::run(&job),
    };
    match job.threads {
        Some(0) => Err(CliError::input("threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::input(e.to_string()))?
            .install(work),
        None => work(),
    }
}

pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_MODEL } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zetawb: {e}");
            ExitCode::from(e.code)
        }
    }
}

pub(crate) fn load_catalog(files: &FileConfig) -> Result<OrbitCatalog, CliError> {
    let path = files.catalog.as_deref().ok_or_else(|| CliError::input("no catalog given (--catalog)"))?;
    read_catalog_file(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// The cutoff defaults to the certified length, or the longest orbit when that is unbounded.
pub(crate) fn policy_for(p: &PolicyConfig, catalog: &OrbitCatalog) -> Result<TruncationPolicy, CliError> {
    let default_t =
        if catalog.t_complete.is_finite() { catalog.t_complete } else { catalog.max_length().unwrap_or(1.0) };
    let mut policy = TruncationPolicy::new(p.t_max.unwrap_or(default_t));
    if let Some(n) = p.series_depth {
        policy.n_max = n;
    }
    if let Some(t) = p.abs_tol {
        policy.abs_tol = t;
    }
    policy.allow_partial = p.partial;
    policy.validate(catalog).map_err(CliError::model)?;
    Ok(policy)
}

/// Given entropy, or the counting fit.
pub(crate) fn entropy(given: Option<f64>, catalog: &OrbitCatalog) -> Result<(f64, &'static str), CliError> {
    match given {
        Some(h) if h > 0.0 && h.is_finite() => Ok((h, "given")),
        Some(h) => Err(CliError::input(format!("entropy {h} must be positive"))),
        None => entropy_estimate(catalog).map(|e| (e.h, "fit")).map_err(CliError::model),
    }
}

pub(crate) fn complex_arg(v: &Option<Vec<f64>>, what: &str) -> Result<Option<Complex64>, CliError> {
    match v.as_deref() {
        None => Ok(None),
        Some([re]) => Ok(Some(Complex64::new(*re, 0.0))),
        Some([re, im]) => Ok(Some(Complex64::new(*re, *im))),
        Some(_) => Err(CliError::input(format!("{what} must be re or re,im"))),
    }
}

pub(crate) fn create(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::create(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Writes to `path` or stdout.
pub(crate) fn sink(path: Option<&Path>) -> Result<Box<dyn std::io::Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

pub(crate) fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::input(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub(crate) fn cjson(z: Complex64) -> serde_json::Value {
    serde_json::json!([z.re, z.im])
}
