//! Monte Carlo orchestration, beta search and CSV emission.
//!
//! Output layout under the chosen directory:
//!
//! ```text
//! runs/<algo>_<objective>_<seed>.csv        one per Monte Carlo run
//! runs/<algo>_<objective>_<seed>.epochs.txt with dump_epochs = true
//! aggregate_<algo>_<objective>.csv          mean and std per step
//! beta_search_<algo>_<objective>.csv        when beta is a grid
//! ```

mod config;
mod trace;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub use config::{Algo, BetaMode, ExperimentConfig, Scenario, DEFAULT_BETA_GRID, KEYS, NOISELESS_LAMBDA};
pub use trace::{
    aggregate_traces, write_aggregate_csv, AggregateRow, RunTrace, StepRecord, AGGREGATE_COLUMNS, RUN_COLUMNS,
};

use crate::baselines::run_nkernelucb;
use crate::error::{Error, Result};
use crate::protocol::run_duets;

/// Runs the configured algorithm once. `beta` must not be a grid.
pub fn run_single(cfg: &ExperimentConfig, run_seed: u64) -> Result<RunTrace> {
    match cfg.algo {
        Algo::Duets => run_duets(cfg, run_seed),
        Algo::NKernelUcb => run_nkernelucb(cfg, run_seed),
    }
}

/// All `mc` runs of a fixed-beta config, in seed order.
pub fn monte_carlo(cfg: &ExperimentConfig) -> Result<Vec<RunTrace>> {
    cfg.validate()?;
    cfg.execution()
        .map(cfg.mc, |k| run_single(cfg, cfg.run_seed(k)))
        .into_iter()
        .collect()
}

/// Mean and population std of final cumulative regret for one beta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaRow {
    pub beta: f64,
    pub mean_final_regret: f64,
    pub std_final_regret: f64,
}

#[derive(Debug, Clone)]
pub struct BetaSearch {
    pub best: f64,
    pub table: Vec<BetaRow>,
    /// The Monte Carlo runs at the best beta.
    pub best_runs: Vec<RunTrace>,
}

/// Runs the full Monte Carlo batch for every beta (same run seeds for all)
/// and keeps the one with the lowest mean final regret, smaller beta on ties.
pub fn grid_search_beta(cfg: &ExperimentConfig, betas: &[f64]) -> Result<BetaSearch> {
    if betas.is_empty() {
        return Err(Error::config("beta", "empty beta grid"));
    }
    let mut table = Vec::with_capacity(betas.len());
    let mut best: Option<(BetaRow, Vec<RunTrace>)> = None;
    for &beta in betas {
        let mut c = cfg.clone();
        c.beta = BetaMode::Fixed(beta);
        let runs = monte_carlo(&c)?;
        let finals: Vec<f64> = runs.iter().map(RunTrace::final_regret).collect();
        let n = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / n;
        let std = (finals.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / n).sqrt();
        let row = BetaRow {
            beta,
            mean_final_regret: mean,
            std_final_regret: std,
        };
        table.push(row);
        let better = match &best {
            None => true,
            Some((b, _)) => mean < b.mean_final_regret || (mean == b.mean_final_regret && beta < b.beta),
        };
        if better {
            best = Some((row, runs));
        }
    }
    let (row, best_runs) = best.expect("non-empty grid");
    Ok(BetaSearch {
        best: row.beta,
        table,
        best_runs,
    })
}

/// Writes a beta search table as CSV.
pub fn write_beta_table<W: Write>(out: W, table: &[BetaRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["beta", "mean_final_regret", "std_final_regret"])?;
    for r in table {
        w.write_record([
            r.beta.to_string(),
            r.mean_final_regret.to_string(),
            r.std_final_regret.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// What [`run_experiment`] produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub beta: BetaMode,
    pub beta_table: Option<Vec<BetaRow>>,
    pub runs: Vec<RunTrace>,
    pub aggregate: Vec<AggregateRow>,
    pub files: Vec<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs `mc` seeded replications (after a beta search if `beta` is a grid)
/// and writes the per-run and aggregate CSVs under `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let stem = format!("{}_{}", cfg.algo.name(), cfg.objective.name());
    fs::create_dir_all(out.join("runs"))?;
    let mut files = Vec::new();

    let (beta, beta_table, runs) = match &cfg.beta {
        BetaMode::Grid(betas) => {
            let search = grid_search_beta(cfg, betas)?;
            let path = out.join(format!("beta_search_{stem}.csv"));
            let mut f = create(&path)?;
            write_beta_table(&mut f, &search.table)?;
            f.flush()?;
            files.push(path);
            (BetaMode::Fixed(search.best), Some(search.table), search.best_runs)
        }
        other => (other.clone(), None, monte_carlo(cfg)?),
    };

    for trace in &runs {
        let path = out.join("runs").join(format!("{stem}_{}.csv", trace.seed));
        let mut f = create(&path)?;
        trace.write_csv(&mut f)?;
        f.flush()?;
        files.push(path);
        if cfg.dump_epochs {
            let path = out.join("runs").join(format!("{stem}_{}.epochs.txt", trace.seed));
            fs::write(&path, trace.epochs_text())?;
            files.push(path);
        }
    }

    let aggregate = aggregate_traces(&runs);
    let path = out.join(format!("aggregate_{stem}.csv"));
    let mut f = create(&path)?;
    write_aggregate_csv(&mut f, &aggregate, runs.len())?;
    f.flush()?;
    files.push(path);

    Ok(ExperimentOutcome {
        beta,
        beta_table,
        runs,
        aggregate,
        files,
    })
}
