mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sunladder::lattice::Boundary;

/// SU(N) spin ladders: exact diagonalization, quantum Monte Carlo and
/// correlation-length analysis.
#[derive(Debug, Parser)]
#[command(name = "sunladder", version)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Output directory [default: <output root>/<command>]
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,

    /// Root for output directories not set explicitly.
    #[arg(long, global = true, env = "SUNLADDER_OUTPUT_ROOT", default_value = "runs")]
    output_root: PathBuf,

    /// Size of the worker pool [default: one per core]
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lowest two levels along the adiabatic ramp.
    Spectrum(SpectrumArgs),
    /// Dimerization after a quench from the false vacuum.
    Quench(QuenchArgs),
    /// Correlation lengths from Monte Carlo over a list of leg counts.
    Xi(XiArgs),
    /// Disorder-averaged correlation lengths over defect concentrations.
    DefectSweep(DefectArgs),
    /// Superexchange couplings over a (t, U, V, N) grid.
    Coupling(CouplingArgs),
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    legs: Option<usize>,
    #[arg(long)]
    boundary: Option<Boundary>,
    #[arg(long)]
    n_colors: Option<usize>,
    #[arg(long = "J")]
    j: Option<f64>,
    #[arg(long)]
    tau_points: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    tau_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    charge: Option<Vec<i32>>,
    #[arg(long, allow_hyphen_values = true)]
    mu3: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu8: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct QuenchArgs {
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    n_colors: Option<usize>,
    #[arg(long = "J")]
    j: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
}

#[derive(Debug, Args)]
struct XiArgs {
    #[arg(long)]
    length: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    legs: Option<Vec<usize>>,
    #[arg(long)]
    n_colors: Option<usize>,
    #[arg(long = "J")]
    j: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    measurements: Option<usize>,
    #[arg(long)]
    thermalization: Option<usize>,
    #[arg(long)]
    slices: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct DefectArgs {
    #[arg(long)]
    length: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    legs: Option<Vec<usize>>,
    #[arg(long)]
    n_colors: Option<usize>,
    #[arg(long = "J")]
    j: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    measurements: Option<usize>,
    #[arg(long)]
    thermalization: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    concentrations: Option<Vec<f64>>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct CouplingArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    u: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    v: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    n_colors: Option<Vec<usize>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<sunladder::Error> for CliError {
    fn from(e: sunladder::Error) -> Self {
        use sunladder::Error as E;
        if e.is_io() {
            CliError::Io(e.to_string())
        } else if e.is_numerical() || matches!(e, E::Analysis(_)) {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

macro_rules! set {
    ($cfg:ident, $args:ident: $($f:ident),+) => {
        $(if let Some(v) = $args.$f.clone() { $cfg.$f = v; })+
    };
}

fn run(cli: Cli) -> Result<(), CliError> {
    let src = config::Source::read(cli.config.as_deref())?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| CliError::Validation(format!("worker pool: {e}")))?;
    let threads = pool.current_num_threads();
    let out = |name: &str, file: &Option<PathBuf>| -> PathBuf {
        cli.out.clone().or_else(|| file.clone()).unwrap_or_else(|| cli.output_root.join(name))
    };

    match &cli.command {
        Command::Spectrum(a) => {
            let mut cfg: config::SpectrumConfig = src.parse()?;
            set!(cfg, a: length, legs, boundary, n_colors, j, tau_points, mu3, mu8, seed);
            if a.tau_grid.is_some() {
                cfg.tau_grid = a.tau_grid.clone();
            }
            if a.charge.is_some() {
                cfg.charge = a.charge.clone();
            }
            cfg.validate(&src)?;
            let dir = out("spectrum", &cfg.output);
            pool.install(|| commands::spectrum(&cfg, &commands::Output::create(&dir, "spectrum", threads)?))
        }
        Command::Quench(a) => {
            let mut cfg: config::QuenchConfig = src.parse()?;
            set!(cfg, a: length, n_colors, j, dt, t_max);
            cfg.validate(&src)?;
            let dir = out("quench", &cfg.output);
            pool.install(|| commands::quench(&cfg, &commands::Output::create(&dir, "quench", threads)?))
        }
        Command::Xi(a) => {
            let mut cfg: config::XiConfig = src.parse()?;
            set!(cfg, a: length, legs, n_colors, j, beta, measurements, slices, seed);
            if a.thermalization.is_some() {
                cfg.thermalization = a.thermalization;
            }
            cfg.validate(&src)?;
            let dir = out("xi", &cfg.output);
            pool.install(|| commands::xi(&cfg, &commands::Output::create(&dir, "xi", threads)?))
        }
        Command::DefectSweep(a) => {
            let mut cfg: config::DefectSweepConfig = src.parse()?;
            set!(cfg, a: length, legs, n_colors, j, beta, measurements, concentrations, realizations, seed);
            if a.thermalization.is_some() {
                cfg.thermalization = a.thermalization;
            }
            cfg.validate(&src)?;
            let dir = out("defect-sweep", &cfg.output);
            pool.install(|| commands::defect_sweep(&cfg, &commands::Output::create(&dir, "defect-sweep", threads)?))
        }
        Command::Coupling(a) => {
            let mut cfg: config::CouplingConfig = src.parse()?;
            set!(cfg, a: t, u, v, n_colors);
            cfg.validate(&src)?;
            let dir = out("coupling", &cfg.output);
            commands::coupling(&cfg, &commands::Output::create(&dir, "coupling", threads)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
