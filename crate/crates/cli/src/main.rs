//! `pbrp`: batch runner for Hopf self-tests, lifts, rough integrals, RDEs and Itô checks.

mod bundled;
mod commands;
mod config;
mod failure;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use log::LevelFilter;
use rayon::prelude::*;
use serde::Serialize;

use commands::Command;
use failure::{Failure, EXIT_CONFIG, EXIT_PASS, EXIT_VERDICT};

#[derive(Parser, Debug)]
#[command(name = "pbrp", version, about = "Planarly branched rough paths: exact Hopf checks and numerical Itô verification")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Experiment config: a JSON file or `bundled:NAME`.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<String>,
    /// Output directory; each experiment writes into `DIR/<name>/`.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads for running experiments in parallel.
    #[arg(long, global = true, value_name = "K", value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    /// Log more (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Exact checks of the coproduct table and ★.
    HopfSelftest,
    /// Lift a driver, probe Chen and character identities, dump the rough path.
    Lift,
    /// Rough integrals of F(X) on a mesh ladder.
    Integrate,
    /// Solve the RDE by the step-N scheme and report remainder rates.
    Rde,
    /// Verify the Itô formulas on a mesh ladder.
    Ito,
    /// Write coproduct, ★, rough-path and controlled-path tables.
    Dump,
}

impl Sub {
    fn command(self) -> Command {
        match self {
            Sub::HopfSelftest => Command::HopfSelftest,
            Sub::Lift => Command::Lift,
            Sub::Integrate => Command::Integrate,
            Sub::Rde => Command::Rde,
            Sub::Ito => Command::Ito,
            Sub::Dump => Command::Dump,
        }
    }

    fn default_config(self) -> Option<&'static str> {
        match self {
            Sub::HopfSelftest => Some("bundled:hopf-default"),
            Sub::Dump => Some("bundled:dump-default"),
            _ => None,
        }
    }
}

#[derive(Serialize)]
struct Outcome {
    name: String,
    status: &'static str,
    exit_code: i32,
    message: Option<String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'static str,
    config: &'a str,
    exit_code: i32,
    experiments: Vec<Outcome>,
}

fn outcome(name: &str, r: Result<bool, Failure>) -> Outcome {
    let (status, exit_code, message) = match r {
        Ok(true) => ("pass", EXIT_PASS, None),
        Ok(false) => ("fail", EXIT_VERDICT, None),
        Err(e) => {
            let status = match e {
                Failure::Config(_) => "config",
                Failure::Io(_) => "io",
                Failure::Divergence(_) => "divergence",
            };
            (status, e.exit_code(), Some(e.to_string()))
        }
    };
    Outcome {
        name: name.to_string(),
        status,
        exit_code,
        message,
    }
}

fn run(cli: &Cli) -> Result<i32, Failure> {
    let sub = cli.command;
    let command = sub.command();
    let source = cli
        .config
        .as_deref()
        .or(sub.default_config())
        .ok_or_else(|| Failure::Config(format!("`{}` needs --config", command.id())))?;
    let experiments = config::load(source)?;
    for c in &experiments {
        c.validate(command.id())?;
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| Failure::Io(format!("{}: {e}", cli.out.display())))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.jobs {
        pool = pool.num_threads(k as usize);
    }
    let pool = pool.build().map_err(|e| Failure::Io(e.to_string()))?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        experiments
            .par_iter()
            .map(|c| outcome(&c.name, commands::run(command, c, &cli.out.join(&c.name))))
            .collect()
    });
    let exit_code = outcomes.iter().map(|o| o.exit_code).max().unwrap_or(EXIT_PASS);
    for o in &outcomes {
        match &o.message {
            Some(m) => println!("{}: {} ({m})", o.name, o.status),
            None => println!("{}: {}", o.name, o.status),
        }
    }
    let summary = Summary {
        command: command.id(),
        config: source,
        exit_code,
        experiments: outcomes,
    };
    commands::write_json(&cli.out, "summary.json", &summary)?;
    Ok(exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        2 => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    let code = match run(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("pbrp: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
