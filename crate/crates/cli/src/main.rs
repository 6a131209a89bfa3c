use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use squeezelab::C64;
use squeezelab_cli::commands::{self, Picture};
use squeezelab_cli::config;
use squeezelab_cli::error::CliError;

const EXIT_CODES: &str = "Exit codes: 0 success, 1 I/O error, 2 config error, 3 physicality violation, 4 numerical failure.
Every CSV starts with `# squeezelab <version> config_sha256=<hex> workers=1`, then a column row.";

#[derive(Parser)]
#[command(name = "squeezelab", version, about = "Quadratic dissipative master equations: Gaussian propagation, impurity filtering, squeezed-state qubits", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to `output.dir` from the config, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the w-system on [t_min, horizon] and tabulate it.
    #[command(after_help = "CSV columns: t, w1, w2, w3, w4, discriminant (w1 w2 − w3² − (e^{w4}−1)²/(16ħ²)), physical (1 if all positivity tests pass).
Exits with code 3 after writing the table if any solver node fails the positivity tests.")]
    SolveW {
        #[command(flatten)]
        common: Common,
        /// Number of equally spaced output times.
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Propagate the configured initial state with the factorized Gaussian maps.
    #[command(after_help = "CSV columns: t, w1, w2, w3, w4, mq, mp, sqq, sqp, spp (mean and symmetrized covariance), purity, S_W (Wehrl entropy; nan unless ħ = 1).")]
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated report times; defaults to `scenario.times`.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = Picture::Schrodinger)]
        picture: Picture,
    },
    /// Wehrl entropy of the deconvolution-picture state around t*, with window estimates.
    #[command(after_help = "CSV columns: t, S_W, S_W_minus_1, purity of the deconvolution-picture state started from |β⟩_C(t*).
The JSON summary (w4(t*), ∂²|ν|/∂t², quartic fit, windows per ε) goes to --summary, or stdout when the CSV goes to a file, else stderr.")]
    EntropyScan {
        #[command(flatten)]
        common: Common,
        /// Comma-separated thresholds for S_W − 1; defaults to `entropy.epsilon`.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Prime, evolve, filter at t* and apply parity; JSON report.
    NotDemo {
        #[command(flatten)]
        common: Common,
    },
    /// Two-mode CNOT on a position grid; JSON summary on stdout.
    #[command(after_help = "Grid CSV (written only with --out or `output.dir`): q1, q2, re, im, density (|ψ|²).")]
    CnotDemo {
        #[command(flatten)]
        common: Common,
        /// Target amplitude as `re,im`; defaults to `scenario.beta`.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        beta: Option<C64>,
    },
    /// Filter the transmitted state at t* and at each eavesdrop time.
    #[command(after_help = "CSV columns: filter_time (first row is t*), purity, S_W, theta_err, phi_err (decoded after rescaling the mean by e^{w4(t*)/2}, φ error wrapped to (−π, π]), fidelity_to_target (against |βe^{−w4(t*)/2}⟩_B(t*)), filter_status (physical | unphysical | nonexistent).")]
    SecureDemo {
        #[command(flatten)]
        common: Common,
    },
    /// Compare the Gaussian pipeline with the truncated-Fock oracle; JSON report.
    #[command(after_help = "Exits with code 4 if any check fails. Random test states honour SQUEEZELAB_SEED (default 0).")]
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_complex(s: &str) -> Result<C64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [re, im] => {
            let re = re.trim().parse::<f64>().map_err(|e| e.to_string())?;
            let im = im.trim().parse::<f64>().map_err(|e| e.to_string())?;
            Ok(C64::new(re, im))
        }
        _ => Err("expected `re,im`".into()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SolveW { common, points } => commands::solve_w_cmd(&config::load(&common.config)?, common.out.as_deref(), points),
        Command::Simulate { common, times, picture } => {
            commands::simulate(&config::load(&common.config)?, common.out.as_deref(), times, picture)
        }
        Command::EntropyScan { common, eps, summary } => {
            commands::entropy_scan(&config::load(&common.config)?, common.out.as_deref(), summary.as_deref(), eps)
        }
        Command::NotDemo { common } => commands::not_demo(&config::load(&common.config)?, common.out.as_deref()),
        Command::CnotDemo { common, beta } => commands::cnot_demo(&config::load(&common.config)?, common.out.as_deref(), beta),
        Command::SecureDemo { common } => commands::secure_demo(&config::load(&common.config)?, common.out.as_deref()),
        Command::Validate { common } => {
            if commands::validate(&config::load(&common.config)?, common.out.as_deref())? {
                Ok(())
            } else {
                Err(CliError::Numerical("validation checks failed; see report".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("squeezelab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
