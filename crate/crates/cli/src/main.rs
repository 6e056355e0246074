//! `volterra-blowup classify|solve|rates|sweep --config scenario.conf`
//!
//! Exit codes: 0 success, 1 configuration error, 2 inconclusive, undecided
//! or inconsistent result, 3 solver abort.

mod commands;
mod scenario;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use commands::{SweepOptions, EXIT_CONFIG};
use scenario::{axis_target, Scenario};

#[derive(Parser)]
#[command(name = "volterra-blowup", version, about = "Blow-up and growth diagnostics for forced Volterra integro-differential equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Osgood test of the scenario's nonlinearity.
    Classify(Common),
    /// Integrate the scenario and write the trajectory.
    Solve(Common),
    /// Integrate and check the asymptotic rate laws.
    Rates(Common),
    /// Run every cell of a parameter grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Grid axis, e.g. `beta=1.5,2,3`; replaces the axis of the same name
        /// in the scenario's [sweep] section.
        #[arg(long, value_name = "AXIS=V1,V2,..")]
        grid: Vec<String>,
        /// Also write one scenario file per cell.
        #[arg(long)]
        emit_configs: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long, value_name = "R")]
    rel_tol: Option<f64>,
    #[arg(long, value_name = "T")]
    t_end: Option<f64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Accepted for scripting; every run is deterministic.
    #[arg(long)]
    seedless: bool,
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let mut s = Scenario::load(&self.config)?;
        if let Some(r) = self.rel_tol {
            s.solver.rel_tol = Some(r);
        }
        if let Some(t) = self.t_end {
            s.solver.t_end = Some(t);
        }
        Ok(s)
    }
}

fn apply_grid(s: &mut Scenario, grid: &[String]) -> Result<()> {
    for g in grid {
        let Some((axis, values)) = g.split_once('=') else {
            bail!("--grid expects AXIS=V1,V2,.., got `{g}`");
        };
        let axis = axis.trim();
        axis_target(axis)?;
        let values = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| v.parse::<f64>().map_err(|_| anyhow::anyhow!("--grid {axis}: `{v}` is not a number")))
            .collect::<Result<Vec<_>>>()?;
        match s.sweep.iter_mut().find(|(a, _)| a == axis) {
            Some(entry) => entry.1 = values,
            None => s.sweep.push((axis.to_string(), values)),
        }
    }
    Ok(())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<u8> {
    match cli.command {
        Command::Classify(c) => commands::classify(&c.scenario()?, out),
        Command::Solve(c) => commands::solve_cmd(&c.scenario()?, &c.out, out),
        Command::Rates(c) => commands::rates(&c.scenario()?, &c.out, out),
        Command::Sweep { common, grid, emit_configs } => {
            let mut s = common.scenario()?;
            apply_grid(&mut s, &grid)?;
            let opts = SweepOptions { threads: common.threads, emit_configs };
            commands::sweep(&s, &common.out, &opts, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match dispatch(cli, &mut lock) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
