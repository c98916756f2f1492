//! Per-run traces and their CSV form.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::protocol::{CommLedger, EpochRecord};

use super::Algo;

/// Column order of a run CSV.
pub const RUN_COLUMNS: [&str; 9] = [
    "seed",
    "algo",
    "step",
    "agent",
    "epoch",
    "instantaneous_regret",
    "cumulative_regret",
    "uplink_reals",
    "downlink_reals",
];

/// Column order of an aggregate CSV.
pub const AGGREGATE_COLUMNS: [&str; 5] = [
    "step",
    "mean_cumulative_regret",
    "std_cumulative_regret",
    "mean_comm_reals",
    "std_comm_reals",
];

/// One query by one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// 1-based time step.
    pub step: usize,
    pub agent: usize,
    /// 1-based epoch; 0 for algorithms without epochs.
    pub epoch: usize,
    /// Grid index of the query.
    pub point: usize,
    pub reward: f64,
    /// `f(x*_grid) - f(x)`.
    pub regret: f64,
}

/// Everything one run produced. `steps` are ordered by `(step, agent)` and
/// `cumulative[i]` is the regret summed over `steps[..=i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub algo: Algo,
    pub objective: String,
    pub seed: u64,
    pub agents: usize,
    pub horizon: usize,
    pub steps: Vec<StepRecord>,
    pub cumulative: Vec<f64>,
    pub ledger: CommLedger,
    pub epochs: Vec<EpochRecord>,
}

impl RunTrace {
    pub fn new(
        algo: Algo,
        seed: u64,
        agents: usize,
        horizon: usize,
        steps: Vec<StepRecord>,
        ledger: CommLedger,
        epochs: Vec<EpochRecord>,
    ) -> Self {
        let mut acc = 0.0;
        let cumulative = steps
            .iter()
            .map(|s| {
                acc += s.regret;
                acc
            })
            .collect();
        RunTrace {
            algo,
            objective: String::new(),
            seed,
            agents,
            horizon,
            steps,
            cumulative,
            ledger,
            epochs,
        }
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Cumulative regret at the end of each time step `1..=T`.
    pub fn regret_by_step(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.horizon];
        for (s, c) in self.steps.iter().zip(&self.cumulative) {
            out[s.step - 1] = *c;
        }
        out
    }

    /// Cumulative `(uplink per agent, downlink)` reals at the end of each
    /// step. An epoch's messages are counted at its last step.
    pub fn comm_by_step(&self) -> Vec<(f64, f64)> {
        let mut delta = vec![(0.0, 0.0); self.horizon];
        for e in &self.epochs {
            let d = &mut delta[e.last_step - 1];
            d.0 += e.comm.mean_uplink();
            d.1 += e.comm.downlink as f64;
        }
        let mut acc = (0.0, 0.0);
        delta
            .into_iter()
            .map(|(u, d)| {
                acc.0 += u;
                acc.1 += d;
                acc
            })
            .collect()
    }

    /// Total communication `C = C_up + C_down` at the end of each step.
    pub fn total_comm_by_step(&self) -> Vec<f64> {
        self.comm_by_step().into_iter().map(|(u, d)| u + d).collect()
    }

    /// Writes the run CSV, one row per `(step, agent)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let comm = self.comm_by_step();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RUN_COLUMNS)?;
        let seed = self.seed.to_string();
        for (s, c) in self.steps.iter().zip(&self.cumulative) {
            let (up, down) = comm[s.step - 1];
            w.write_record([
                seed.as_str(),
                self.algo.name(),
                &s.step.to_string(),
                &s.agent.to_string(),
                &s.epoch.to_string(),
                &s.regret.to_string(),
                &c.to_string(),
                &up.to_string(),
                &down.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plain-text dump of every epoch record, including active-region masks.
    pub fn epochs_text(&self) -> String {
        let mut s = String::new();
        for e in &self.epochs {
            let _ = writeln!(s, "[epoch {}]", e.epoch);
            let _ = writeln!(s, "length = {}", e.length);
            let _ = writeln!(s, "steps = {}..{}", e.first_step, e.last_step);
            let _ = writeln!(s, "queries = {}", e.queries);
            let _ = writeln!(s, "sigma_max = {}", e.sigma_max);
            let _ = writeln!(s, "probability = {}", e.probability);
            let idx: Vec<String> = e.inducing.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "inducing = {} [{}]", e.inducing.len(), idx.join(" "));
            let _ = writeln!(s, "active = {} -> {}", e.active_before, e.active_after);
            let up: Vec<String> = e.comm.uplink.iter().map(|u| u.to_string()).collect();
            let _ = writeln!(s, "uplink = [{}]", up.join(" "));
            let _ = writeln!(s, "downlink = {}", e.comm.downlink);
            let mask: String = e.mask_after.iter().map(|&b| if b { '1' } else { '0' }).collect();
            let _ = writeln!(s, "mask = {mask}");
            s.push('\n');
        }
        s
    }
}

/// Mean and population standard deviation across runs at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub step: usize,
    pub mean_regret: f64,
    pub std_regret: f64,
    pub mean_comm: f64,
    pub std_comm: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-step statistics over runs, reduced in the order given.
pub fn aggregate_traces(traces: &[RunTrace]) -> Vec<AggregateRow> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    let regret: Vec<Vec<f64>> = traces.iter().map(RunTrace::regret_by_step).collect();
    let comm: Vec<Vec<f64>> = traces.iter().map(RunTrace::total_comm_by_step).collect();
    (0..first.horizon)
        .map(|t| {
            let (mr, sr) = mean_std(&regret.iter().map(|r| r[t]).collect::<Vec<_>>());
            let (mc, sc) = mean_std(&comm.iter().map(|c| c[t]).collect::<Vec<_>>());
            AggregateRow {
                step: t + 1,
                mean_regret: mr,
                std_regret: sr,
                mean_comm: mc,
                std_comm: sc,
            }
        })
        .collect()
}

/// Writes an aggregate CSV, preceded by a `#` comment naming the std convention.
pub fn write_aggregate_csv<W: Write>(mut out: W, rows: &[AggregateRow], runs: usize) -> Result<()> {
    writeln!(
        out,
        "# {runs} runs; std is the population standard deviation (divide by n); comm = uplink per agent + downlink"
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.mean_regret.to_string(),
            r.std_regret.to_string(),
            r.mean_comm.to_string(),
            r.std_comm.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(regrets: &[f64], agents: usize) -> RunTrace {
        let steps = regrets
            .iter()
            .enumerate()
            .map(|(i, &r)| StepRecord {
                step: i / agents + 1,
                agent: i % agents,
                epoch: 0,
                point: 0,
                reward: 0.0,
                regret: r,
            })
            .collect();
        RunTrace::new(Algo::NKernelUcb, 1, agents, regrets.len() / agents, steps, CommLedger::new(agents), Vec::new())
    }

    #[test]
    fn cumulative_is_prefix_sum() {
        let t = toy(&[1.0, 2.0, 0.0, 0.5], 2);
        assert_eq!(t.cumulative, vec![1.0, 3.0, 3.0, 3.5]);
        assert_eq!(t.regret_by_step(), vec![3.0, 3.5]);
        assert_eq!(t.final_regret(), 3.5);
    }

    #[test]
    fn zero_regret_steps_carry_forward() {
        let t = toy(&[1.0, 0.0, 0.0, 0.0], 1);
        assert_eq!(t.regret_by_step(), vec![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn single_run_aggregate_has_zero_std() {
        let t = toy(&[1.0, 2.0, 3.0], 1);
        let rows = aggregate_traces(std::slice::from_ref(&t));
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.std_regret == 0.0 && r.std_comm == 0.0));
        assert_eq!(rows[2].mean_regret, 6.0);
    }

    #[test]
    fn population_std() {
        let a = toy(&[1.0], 1);
        let b = toy(&[3.0], 1);
        let rows = aggregate_traces(&[a, b]);
        assert_eq!(rows[0].mean_regret, 2.0);
        assert_eq!(rows[0].std_regret, 1.0);
    }

    #[test]
    fn csv_headers() {
        let t = toy(&[1.0, 2.0], 1);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), RUN_COLUMNS.join(","));
        assert_eq!(text.lines().count(), 3);
        let mut buf = Vec::new();
        write_aggregate_csv(&mut buf, &aggregate_traces(&[t]), 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# "));
        assert_eq!(text.lines().nth(1).unwrap(), AGGREGATE_COLUMNS.join(","));
    }
}
