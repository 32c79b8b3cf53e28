//! `dpgmarch <command> --config <path> [key=value ...]`
//!
//! Exit codes: 0 success, 1 heat-identity check failed, 2 invalid input,
//! 3 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use primal_dpg::config::{Command, RunConfig};
use primal_dpg::study::{execute, format_table, IDENTITY_TOL};
use primal_dpg::DpgError;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Run,
    ConvergeSpace,
    ConvergeTime,
    ConvergeProjection,
    HeatIdentity,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Run => Command::Run,
            Cmd::ConvergeSpace => Command::ConvergeSpace,
            Cmd::ConvergeTime => Command::ConvergeTime,
            Cmd::ConvergeProjection => Command::ConvergeProjection,
            Cmd::HeatIdentity => Command::HeatIdentity,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dpgmarch", version, about = "Backward Euler primal DPG convergence studies")]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides of configuration keys, e.g. `levels=4,8,16` or `p=1`.
    overrides: Vec<String>,
    /// Log verbosity (error, warn, info, debug).
    #[arg(long, default_value = "warn")]
    log_level: log::LevelFilter,
}

fn exit_code(err: &DpgError) -> u8 {
    if err.is_solver_failure() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level).init();

    let cfg = match RunConfig::from_path(&cli.config, Some(cli.command.into()), &cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    for w in &outcome.warnings {
        log::warn!("{w}");
    }
    if let Some(rep) = &outcome.identity {
        for (i, d) in rep.per_step.iter().enumerate() {
            println!("step {:>4}: max relative deviation {d:.3e}", i + 1);
        }
        let verdict = if rep.pass { "PASS" } else { "FAIL" };
        println!(
            "heat-identity: max relative DOF deviation {:.3e} (tolerance {IDENTITY_TOL:e}) {verdict}",
            rep.max_relative
        );
        println!("wrote {}", cfg.output_path.display());
        return if rep.pass { ExitCode::SUCCESS } else { ExitCode::from(1) };
    }
    print!("{}", format_table(&outcome.rows));
    println!("wrote {}", cfg.output_path.display());
    if let Some(p) = &outcome.snapshot {
        println!("wrote {}", p.display());
    }
    ExitCode::SUCCESS
}
