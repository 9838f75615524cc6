use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use pdirac::{config, parse_lambda, Command, RunConfig};

/// Floquet bands and eigenvalue-exclusion maps for 1-D periodic Dirac operators.
#[derive(Debug, Parser)]
#[command(name = "pdirac", version)]
struct Cli {
    /// JSON run configuration; the free case (m = 1, a = 1, q = 0) if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the effective configuration and exit.
    #[arg(long)]
    dump_config: bool,

    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Floquet data and F_p at one λ, as JSON on stdout.
    Probe {
        #[arg(long, value_name = "RE,IM", value_parser = parse_lambda, allow_hyphen_values = true)]
        lambda: Complex64,
    },
    /// Bands, gaps and edge kinds over the real window (bands.csv).
    Bands,
    /// Exclusion map over the window (map.csv, contours.csv, contours.svg).
    Map,
    /// Green's kernel G(x, t, λ), as JSON on stdout.
    Greens {
        #[arg(long, value_name = "RE,IM", value_parser = parse_lambda, allow_hyphen_values = true)]
        lambda: Complex64,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
    },
    /// Large-Im λ error table (asymptotics.csv).
    VerifyAsymptotics,
    /// Γ near every band edge against its limit (edge_limits.csv).
    EdgeLimits,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Probe { lambda } => Command::Probe { lambda },
            Cmd::Bands => Command::Bands,
            Cmd::Map => Command::Map,
            Cmd::Greens { lambda, x, t } => Command::Greens { lambda, x, t },
            Cmd::VerifyAsymptotics => Command::VerifyAsymptotics,
            Cmd::EdgeLimits => Command::EdgeLimits,
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, pdirac::ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_env(|k| std::env::var(k).ok())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.dump_config {
        print!("{}", cfg.to_json());
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cli.command else {
        eprintln!("error: no command given (try --help)");
        return ExitCode::from(2);
    };

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = pdirac::run(&cfg, cmd.into(), &mut out);
    let _ = out.flush();
    match result {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for p in &report.written {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
