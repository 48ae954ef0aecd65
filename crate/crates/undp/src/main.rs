use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use undp::{execute, Mode, RunConfig, RunError};

/// Joint signal-timing and capacity-expansion design on a road network.
///
/// Without --links/--od the bundled 13-node reference instance is used.
#[derive(Debug, Parser)]
#[command(name = "undp", version)]
struct Cli {
    /// Link file (CSV).
    #[arg(long, requires = "od")]
    links: Option<PathBuf>,
    /// Demand matrix (CSV).
    #[arg(long, requires = "links")]
    od: Option<PathBuf>,
    /// TOML configuration; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Expansion budget.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Independent annealing chains run in parallel.
    #[arg(long)]
    chains: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Equilibrium convergence tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn effective_config(cli: Cli) -> Result<RunConfig, RunError> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let (Some(links), Some(od)) = (cli.links, cli.od) {
        c.instance.links = Some(links);
        c.instance.od = Some(od);
    }
    if let Some(m) = cli.mode {
        c.run.mode = m;
    }
    if let Some(b) = cli.budget {
        c.instance.budget = b;
    }
    if let Some(s) = cli.seed {
        c.sa.seed = s;
    }
    if let Some(n) = cli.chains {
        c.sa.chains = n;
    }
    if let Some(o) = cli.out {
        c.run.out = o;
    }
    if let Some(t) = cli.tolerance {
        c.gp.tolerance = t;
    }
    Ok(c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match effective_config(cli).and_then(execute) {
        Ok(report) => {
            let objective = report
                .optimization
                .as_ref()
                .map(|o| o.best_objective)
                .or(report.assignment.as_ref().map(|a| a.total_travel_time));
            print!("{}: ok", report.mode);
            if let Some(e) = objective {
                print!(", total travel time {e:.1} s");
            }
            if let Some(o) = &report.optimization {
                print!(" ({:.2}% below base)", 100.0 * o.improvement);
            }
            println!(", {:.2} s, results in {}", report.wall_time_s, report.config.run.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
