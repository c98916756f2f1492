use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use duets::benchfns::ObjectiveKind;
use duets::experiment::{run_experiment, Algo, BetaMode, ExperimentConfig};
use duets::{Error, Result};

/// Simulate distributed kernel bandits and write regret and communication CSVs.
#[derive(Debug, Parser)]
#[command(name = "duets", version)]
struct Cli {
    /// Config file with one `key = value` per line.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    algo: Option<String>,
    #[arg(long, global = true)]
    objective: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Number of Monte Carlo runs.
    #[arg(long, global = true)]
    mc: Option<usize>,
    /// Any config key, e.g. `--set horizon=200`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured experiment (default).
    Run,
    /// Grid-search beta and print the per-beta table.
    GridSearch {
        /// Comma-separated values; defaults to the config's beta grid.
        #[arg(long)]
        betas: Option<String>,
    },
    /// Run both algorithms on all four benchmarks.
    Reproduce,
    /// Print the resolved config and exit.
    ShowConfig,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
    }
    if let Some(a) = &cli.algo {
        cfg.set("algo", a)?;
    }
    if let Some(o) = &cli.objective {
        cfg.set("objective", o)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = cli.mc {
        cfg.mc = m;
    }
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config { field: kv.clone(), message: "expected KEY=VALUE".into() })?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_one(cfg: &ExperimentConfig, out: &std::path::Path) -> Result<()> {
    let o = run_experiment(cfg, out)?;
    let last = o.aggregate.last().expect("horizon >= 1");
    let beta = match &o.beta {
        BetaMode::Fixed(b) => b.to_string(),
        other => format!("{other:?}"),
    };
    println!(
        "{} {}: beta={} final regret {:.4} (std {:.4}), comm {:.1} (std {:.1}) over {} runs",
        cfg.algo.name(),
        cfg.objective.name(),
        beta,
        last.mean_regret,
        last.std_regret,
        last.mean_comm,
        last.std_comm,
        o.runs.len()
    );
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = load(&cli)?;
    match &cli.command {
        None | Some(Command::Run) => run_one(&cfg, &cli.out),
        Some(Command::ShowConfig) => {
            print!("{}", cfg.to_text());
            Ok(())
        }
        Some(Command::GridSearch { betas }) => {
            let mut cfg = cfg;
            if let Some(b) = betas {
                cfg.set("beta", b)?;
            }
            let values = match &cfg.beta {
                BetaMode::Grid(v) => v.clone(),
                BetaMode::Fixed(b) => vec![*b],
                BetaMode::Theoretical => {
                    return Err(Error::Config { field: "beta".into(), message: "grid search needs numeric values".into() })
                }
            };
            let search = duets::experiment::grid_search_beta(&cfg, &values)?;
            std::fs::create_dir_all(&cli.out)?;
            let path = cli
                .out
                .join(format!("beta_search_{}_{}.csv", cfg.algo.name(), cfg.objective.name()));
            duets::experiment::write_beta_table(std::fs::File::create(&path)?, &search.table)?;
            println!("beta,mean_final_regret,std_final_regret");
            for r in &search.table {
                println!("{},{},{}", r.beta, r.mean_final_regret, r.std_final_regret);
            }
            println!("best beta = {}", search.best);
            Ok(())
        }
        Some(Command::Reproduce) => {
            for objective in ObjectiveKind::BENCHMARKS {
                for algo in Algo::ALL {
                    let mut c = cfg.clone();
                    c.algo = algo;
                    c.objective = objective;
                    c.dimension = None;
                    run_one(&c, &cli.out)?;
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
