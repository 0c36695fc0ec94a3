use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isps_cli::commands::{run, Command};
use isps_cli::config::ScenarioConfig;
use isps_cli::CliError;

/// Disturbed reaction-diffusion scenarios: simulation, attractors and
/// practical-stability checks.
#[derive(Parser)]
#[command(name = "isps", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Integrate one trajectory and write it as CSV.
    Simulate(Common),
    /// Newton search for steady states of the undisturbed system.
    Equilibria(Common),
    /// Sample the attractor of the system driven by the hull of the signal.
    Attractor(Common),
    /// Estimate the empirical asymptotic gain and its class-K majorant.
    GainCurve(Common),
    /// Check the practical-stability envelope on a random sweep.
    Envelope(Common),
    /// Print the certificate and audit its hypotheses.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario instead of a file.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding `rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

fn load(common: &Common) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            ScenarioConfig::parse(&text)?
        }
        (None, Some(name)) => ScenarioConfig::preset(name)?,
        (None, None) => return Err(CliError::Config("one of --config or --preset is required".into())),
    };
    if let Some(out) = &common.out {
        cfg.output.directory = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.rng_seed = seed;
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        isps_core::par::set_threads(n);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    let (cmd, common) = match &cli.command {
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::Equilibria(c) => (Command::Equilibria, c),
        Sub::Attractor(c) => (Command::Attractor, c),
        Sub::GainCurve(c) => (Command::GainCurve, c),
        Sub::Envelope(c) => (Command::Envelope, c),
        Sub::Verify(c) => (Command::Verify, c),
    };
    match load(common).and_then(|cfg| run(cmd, &cfg)) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let CliError::Verification { report, .. } = &e {
                print!("{report}");
            }
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
