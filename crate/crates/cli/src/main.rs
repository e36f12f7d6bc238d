//! `matryoshka`: runs sine-cosine chain experiments from a TOML config and
//! writes CSV tables plus a JSON manifest.
//!
//! Exit codes: 0 success, 2 usage or malformed config, 3 I/O, 4 invalid parameter,
//! 5 structure, 6 infeasible square root, 7 domain, 8 numeric, 9 integrator
//! failure, 10 missing edge state, 11 protocol.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use matryoshka::exec::{current_threads, with_threads, Execution};

use crate::error::{CliError, CliResult};
use crate::output::Run;

#[derive(Debug, Parser)]
#[command(name = "matryoshka", version, about = "Sine-cosine chain spectra, transfer, braiding and memory experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config, or a manifest.json from an earlier run to repeat it.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Output directory [default: $MATRYOSHKA_OUT, else ./matryoshka-out].
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,

    /// Worker thread cap for ensembles and band sweeps [default: all cores].
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Override a config field, e.g. `--set protocol.lambda=pi/8`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Master seed of the disorder streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Open-chain spectrum with edge-state flags.
    Spectrum,
    /// Bloch bands of the periodic chain.
    Bands,
    /// Checks that H² splits into 1 + t·H_parent, order by order.
    SqrtCheck,
    /// Adiabatic defect transfer across the seven-site chain.
    Transfer,
    /// Y-junction exchange of two defects and the resulting gate.
    Braid,
    /// Qubit stored in and retrieved from an edge state.
    Memory,
    /// Zero-energy channels of the 80-site chain.
    QuditMemory,
    /// Disorder ensembles over kinds and strengths.
    DisorderSweep,
    /// Bloch-sphere precession in a (ramped) field.
    Bloch,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Bands => "bands",
            Command::SqrtCheck => "sqrt-check",
            Command::Transfer => "transfer",
            Command::Braid => "braid",
            Command::Memory => "memory",
            Command::QuditMemory => "qudit-memory",
            Command::DisorderSweep => "disorder-sweep",
            Command::Bloch => "bloch",
        }
    }
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    let mut cfg = config::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(seed) = cli.seed {
        let d = cfg
            .disorder
            .as_mut()
            .ok_or_else(|| CliError::Usage("--seed needs a [disorder] section".into()))?;
        d.seed = seed;
    }
    let name = cli.command.name();
    commands::check(name, &cfg)?;
    let dir = output::resolve_dir(cli.out.as_deref(), &cfg);
    let exec = Execution::default();
    with_threads(cli.threads, || {
        let mut out = Run::new(dir, name, &cfg, current_threads())?;
        match cli.command {
            Command::Spectrum => commands::spectrum(&cfg, &mut out)?,
            Command::Bands => commands::bands(&cfg, &mut out, exec)?,
            Command::SqrtCheck => commands::sqrt_check(&cfg, &mut out)?,
            Command::Transfer => commands::transfer(&cfg, &mut out)?,
            Command::Braid => commands::braid(&cfg, &mut out)?,
            Command::Memory => commands::memory(&cfg, &mut out)?,
            Command::QuditMemory => commands::qudit_memory(&cfg, &mut out)?,
            Command::DisorderSweep => commands::disorder_sweep(&cfg, &mut out, exec)?,
            Command::Bloch => commands::bloch(&cfg, &mut out)?,
        }
        out.finish()
    })?
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => fail(CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    match run(cli) {
        Ok(manifest) => {
            println!("{}", serde_json::json!({"status": "ok", "manifest": manifest}));
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ! {
    eprintln!("{}", e.to_json());
    std::process::exit(e.exit_code())
}
