mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybrid_cnot::config::DeviceFile;
use hybrid_cnot::experiments::{Solver, SolverConfig, SweepVariable};
use hybrid_cnot::Error;

/// Bundled device preset, used when no parameter file is given.
pub const TABLE1_PRESET: &str = include_str!("../../../configs/table1.toml");

/// Worker-count override for the thread pool.
pub const WORKERS_ENV: &str = "HCNOT_WORKERS";

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_WARNING: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "hcnot",
    version,
    about = "Qutrit-controlled multi-target CNOT on cat-state cavity qubits"
)]
struct Cli {
    /// Parameter file (TOML; GHz, MHz and μs). Defaults to the bundled table1 preset.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Print the resolved parameter file and exit.
    #[arg(long)]
    dump_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the dispersive and decoupling conditions and print derived quantities.
    Diagnose {
        /// Minimum accepted ratio for every condition.
        #[arg(long, default_value_t = hybrid_cnot::device::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Evolve every logical word through the gate and compare with the truth table.
    VerifyGate {
        #[arg(long, default_value_t = hybrid_cnot::experiments::DEFAULT_CUTOFF)]
        cutoff: usize,
        /// Largest accepted infidelity per word.
        #[arg(long, default_value_t = hybrid_cnot::experiments::DEFAULT_GATE_THRESHOLD)]
        threshold: f64,
    },
    /// Fidelity over a grid of δ or c at several cavity lifetimes.
    Sweep {
        #[arg(long, value_parser = parse_variable)]
        var: SweepVariable,
        /// Comma-separated grid; defaults to the standard grid of the variable.
        #[arg(long, value_delimiter = ',', num_args = 0..=1, allow_hyphen_values = true)]
        grid: Option<Vec<f64>>,
        /// Comma-separated cavity lifetimes in μs.
        #[arg(long, value_delimiter = ',', default_values_t = hybrid_cnot::experiments::DEFAULT_KAPPA_INV_US)]
        kappa_inv: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Fidelity of the GHZ preparation at one operating point.
    Ghz {
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
        /// Cavity lifetime in μs; defaults to the parameter file.
        #[arg(long)]
        kappa_inv: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Fidelity change under cutoff and time-step refinement.
    Converge {
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 15, 20])]
        cutoffs: Vec<usize>,
        /// Steps per period of the fastest frequency.
        #[arg(long, value_delimiter = ',', default_values_t = [20.0, 40.0])]
        resolutions: Vec<f64>,
        #[arg(long)]
        kappa_inv: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = Solver::Trajectories, value_parser = parse_solver)]
    solver: Solver,
    #[arg(long, default_value_t = hybrid_cnot::experiments::DEFAULT_CUTOFF)]
    cutoff: usize,
    #[arg(long, default_value_t = hybrid_cnot::experiments::DEFAULT_N_TRAJ)]
    n_traj: usize,
    #[arg(long, default_value_t = hybrid_cnot::experiments::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = hybrid_cnot::evolve::DEFAULT_RESOLUTION)]
    steps_per_period: f64,
    /// Keep the weak |g>-|f> couplings (disables the exact block propagator).
    #[arg(long)]
    keep_gprime: bool,
}

impl SolverArgs {
    fn to_config(&self) -> SolverConfig {
        SolverConfig {
            solver: self.solver,
            cutoff: self.cutoff,
            steps_per_period: self.steps_per_period,
            n_traj: self.n_traj,
            seed: self.seed,
            drop_gprime: !self.keep_gprime,
            ..SolverConfig::default()
        }
    }
}

fn parse_variable(s: &str) -> Result<SweepVariable, String> {
    match s.parse::<SweepVariable>() {
        Ok(v @ (SweepVariable::Delta | SweepVariable::C)) => Ok(v),
        Ok(_) => Err("only delta and c can be swept from the command line".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_solver(s: &str) -> Result<Solver, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure with its exit code.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Instability { .. } | Error::ZeroNorm { .. } | Error::NotNormalized { .. } => {
                EXIT_NUMERICAL
            }
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<DeviceFile, Failure> {
    let (name, text) = match path {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => (p.display().to_string(), t),
            Err(e) => {
                return Err(Failure {
                    code: EXIT_USAGE,
                    message: format!("cannot read {}: {e}", p.display()),
                })
            }
        },
        None => ("table1 preset".to_string(), TABLE1_PRESET.to_string()),
    };
    let file = DeviceFile::from_toml(&text).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("{name}: {e}"),
    })?;
    file.to_params().map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("{name}: {e}"),
    })?;
    Ok(file)
}

fn init_workers() -> Result<(), Failure> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|n| *n > 0).ok_or_else(|| Failure {
        code: EXIT_USAGE,
        message: format!("{WORKERS_ENV} must be a positive integer, got '{v}'"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure {
            code: EXIT_USAGE,
            message: e.to_string(),
        })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    init_workers()?;
    let file = load_config(cli.config.as_ref())?;
    if cli.dump_config {
        print!("{}", file.to_toml());
        return Ok(EXIT_OK);
    }
    let Some(command) = cli.command else {
        return Err(Failure {
            code: EXIT_USAGE,
            message: "no subcommand given (try --help)".into(),
        });
    };
    match command {
        Command::Diagnose { threshold } => commands::diagnose(&file, threshold),
        Command::VerifyGate { cutoff, threshold } => {
            commands::verify_gate(&file, cutoff, threshold)
        }
        Command::Sweep {
            var,
            grid,
            kappa_inv,
            solver,
            out,
        } => commands::sweep(&file, var, grid, kappa_inv, solver.to_config(), &out),
        Command::Ghz {
            delta,
            c,
            kappa_inv,
            solver,
        } => commands::ghz(&file, delta, c, kappa_inv, solver.to_config()),
        Command::Converge {
            cutoffs,
            resolutions,
            kappa_inv,
            solver,
        } => commands::converge(&file, &cutoffs, &resolutions, kappa_inv, solver.to_config()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
