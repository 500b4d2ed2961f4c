use clap::{Parser, Subcommand};
use fracrothe_cli::commands;
use fracrothe_cli::config::{example51_config, parse_config, RunConfig};
use fracrothe_cli::exit_codes;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "fracrothe", version, about = "Rothe solver for multi-term time-fractional delay diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the time stepper and write trajectory plus diagnostics
    Solve {
        /// JSON problem configuration
        #[arg(long)]
        config: PathBuf,
        /// Output directory for files without explicit paths
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Override the configured RNG seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Temporal refinement study over successive step halvings
    Convergence {
        #[arg(long)]
        config: PathBuf,
        /// Number of study rows (runs levels + 1 solves)
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in verification checks against a configuration
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve the built-in reaction-diffusion example preset
    Example51 {
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Subdivisions of the delay interval
        #[arg(long, default_value_t = 128)]
        subdivisions: usize,
        /// Interior spatial nodes
        #[arg(long, default_value_t = 64)]
        interior_nodes: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: &PathBuf, seed: Option<u64>) -> Result<RunConfig, i32> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: reading {}: {e}", path.display());
        exit_codes::SOLVER_FAILURE
    })?;
    let mut cfg = parse_config(&text).map_err(|e| {
        eprintln!("error: {e}");
        exit_codes::SOLVER_FAILURE
    })?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve { config, out_dir, seed } => match load_config(&config, seed) {
            Ok(cfg) => commands::cmd_solve(&cfg, &out_dir),
            Err(c) => c,
        },
        Command::Convergence { config, levels, out_dir, seed } => {
            match load_config(&config, seed) {
                Ok(cfg) => commands::cmd_convergence(&cfg, levels, &out_dir),
                Err(c) => c,
            }
        }
        Command::Verify { config, out_dir, seed } => match load_config(&config, seed) {
            Ok(cfg) => commands::cmd_verify(&cfg, &out_dir),
            Err(c) => c,
        },
        Command::Example51 { out_dir, subdivisions, interior_nodes, seed } => {
            let mut cfg = example51_config(subdivisions, interior_nodes);
            if let Some(s) = seed {
                cfg.seed = s;
            }
            commands::cmd_solve(&cfg, &out_dir)
        }
    };
    std::process::exit(code);
}
