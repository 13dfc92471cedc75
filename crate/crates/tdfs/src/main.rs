use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tdfs::cli::{cmd_figure, cmd_plan, cmd_simulate, cmd_synthesize, cmd_verify, CliError};
use tdfs::config::{parse_config, RunConfig};

/// Two-level open-system simulator and control synthesis along a
/// time-dependent decoherence-free subspace.
#[derive(Parser)]
#[command(name = "tdfs", version, about, max_term_width = 100)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured run and write a trajectory CSV.
    Simulate {
        /// Configuration file (`key = value` lines; defaults when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV path (overrides the config `output` key).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sample the configured control law and write a field CSV.
    Synthesize {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the dataset bundle for one figure (fig2 .. fig6).
    Figure {
        /// Figure name: fig2, fig3, fig4, fig5 or fig6.
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default: current directory).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the module invariant suites and print a pass/fail table.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Plan a schedule reaching a target excited population and phase.
    Plan {
        /// Target excited population, in [0, 0.5).
        target_p1: f64,
        /// Target relative phase in radians (default 0).
        #[arg(default_value_t = 0.0)]
        target_phase: f64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Optional path for the sampled control field.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>, output: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|source| CliError::Io { path: p.clone(), source })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if output.is_some() {
        cfg.output = output;
    }
    Ok(cfg)
}

fn run(args: Args) -> Result<i32, CliError> {
    match args.command {
        Command::Simulate { config, output } => {
            let cfg = load_config(&config, output)?;
            let path = cmd_simulate(&cfg)?;
            println!("trajectory written to {}", path.display());
            Ok(0)
        }
        Command::Synthesize { config, output } => {
            let cfg = load_config(&config, output)?;
            let path = cmd_synthesize(&cfg)?;
            println!("control field written to {}", path.display());
            Ok(0)
        }
        Command::Figure { name, config, output } => {
            let cfg = load_config(&config, output)?;
            let paths = cmd_figure(&name, &cfg)?;
            for p in paths {
                println!("wrote {}", p.display());
            }
            Ok(0)
        }
        Command::Verify { config } => {
            let cfg = load_config(&config, None)?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            if cmd_verify(&cfg, &mut lock)? {
                Ok(0)
            } else {
                Err(CliError::VerificationFailed)
            }
        }
        Command::Plan { target_p1, target_phase, config, output } => {
            let cfg = load_config(&config, output)?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            cmd_plan(target_p1, target_phase, &cfg, &mut lock)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // map argument-parsing problems onto the config/usage exit code
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let mut stderr = std::io::stderr().lock();
            let _ = writeln!(stderr, "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
