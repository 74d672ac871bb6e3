use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use enskog_lab::{parse_config, run_scenario, ErrorRecord, Mode};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Simulate,
    Stability,
    Metrics,
    Audit,
}

impl From<Command> for Mode {
    fn from(c: Command) -> Mode {
        match c {
            Command::Simulate => Mode::Simulate,
            Command::Stability => Mode::Stability,
            Command::Metrics => Mode::Metrics,
            Command::Audit => Mode::Audit,
        }
    }
}

/// Particle simulations and stability diagnostics for the Enskog equation.
#[derive(Debug, Parser)]
#[command(name = "enskog-lab", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Parse and validate the config, then exit without running.
    #[arg(long)]
    validate_only: bool,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mode = Mode::from(args.command);
    let result = parse_config(&args.config).and_then(|loaded| {
        if args.validate_only {
            let mut cfg = loaded.config.clone();
            cfg.threads = enskog_lab::effective_threads(cfg.threads)?;
            cfg.validate(mode)?;
            println!("{{\"valid\":true}}");
            return Ok(());
        }
        let out = args
            .out
            .clone()
            .or_else(|| loaded.config.output.as_ref().map(|p| loaded.base_dir.join(p)))
            .unwrap_or_else(|| PathBuf::from("out"));
        let manifest = run_scenario(mode, &loaded, &out)?;
        for f in &manifest.files {
            println!("{}", out.join(f).display());
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let rec = ErrorRecord::from(&e);
            eprintln!("{}", serde_json::to_string(&rec).expect("serializable"));
            ExitCode::FAILURE
        }
    }
}
