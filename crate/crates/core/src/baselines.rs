//! N-KernelUCB: every agent runs GP-UCB on its own history and never talks.

use std::sync::Arc;

use crate::benchfns::{AgentEnv, Environment};
use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::experiment::{Algo, ExperimentConfig, RunTrace, Scenario, StepRecord};
use crate::gp::GpPosterior;
use crate::kernels::{KernelSpec, Points};
use crate::protocol::CommLedger;

/// One independent UCB agent.
#[derive(Debug, Clone)]
pub struct UcbAgentState {
    id: usize,
    beta: f64,
    history: Vec<usize>,
    rewards: Vec<f64>,
}

impl UcbAgentState {
    pub fn new(id: usize, beta: f64) -> Self {
        UcbAgentState {
            id,
            beta,
            history: Vec::new(),
            rewards: Vec::new(),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Grid indices queried so far.
    pub fn history(&self) -> &[usize] {
        &self.history
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn steps(&self) -> usize {
        self.history.len()
    }

    pub fn observe(&mut self, index: usize, reward: f64) {
        self.history.push(index);
        self.rewards.push(reward);
    }
}

/// First index of the maximum; NaN never wins.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Refits the exact posterior on the agent's history and returns the grid
/// argmax of `mu + beta * sigma`, lowest index on ties.
pub fn ucb_step(agent: &UcbAgentState, grid: &GridDomain, spec: KernelSpec, lambda: f64, exec: Execution) -> Result<usize> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let data = grid.points().select(&agent.history);
    let post = GpPosterior::new(spec, &data, &agent.rewards, lambda)?;
    let preds = post.predict_all(grid.points(), exec)?;
    Ok(argmax(preds.iter().map(|p| p.mean + agent.beta * p.std())))
}

/// Incremental version of [`ucb_step`] used by the simulator.
///
/// Keeps, for every grid point, `w(x) = L^{-1} k_X(x)` where `L L^T` is the
/// Cholesky factor of `lambda I + K_XX`. Appending an observation adds one
/// row to `L` and one entry to each `w(x)`, so a step costs `O(|grid| * m)`
/// instead of a refit. Mean is `w(x)^T L^{-1} y` and variance
/// `k(x,x) - |w(x)|^2`.
#[derive(Debug, Clone)]
pub struct UcbScorer {
    spec: KernelSpec,
    lambda: f64,
    grid: Arc<GridDomain>,
    capacity: usize,
    /// Row-major lower-triangular factor, `capacity x capacity`.
    chol: Vec<f64>,
    /// `L^{-1} y`.
    alpha: Vec<f64>,
    /// `w(x)` per grid point, `capacity` slots each.
    w: Vec<f64>,
    /// `|w(x)|^2` per grid point.
    reduction: Vec<f64>,
    /// `w(x)^T alpha` per grid point.
    mean: Vec<f64>,
    m: usize,
}

impl UcbScorer {
    pub fn new(spec: KernelSpec, lambda: f64, grid: Arc<GridDomain>, capacity: usize) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
        }
        let g = grid.len();
        Ok(UcbScorer {
            spec,
            lambda,
            capacity,
            chol: vec![0.0; capacity * capacity],
            alpha: Vec::with_capacity(capacity),
            w: vec![0.0; g * capacity],
            reduction: vec![0.0; g],
            mean: vec![0.0; g],
            m: 0,
            grid,
        })
    }

    pub fn observations(&self) -> usize {
        self.m
    }

    /// Posterior mean and variance at grid point `i`.
    pub fn posterior(&self, i: usize) -> (f64, f64) {
        (self.mean[i], (self.spec.diag() - self.reduction[i]).max(0.0))
    }

    /// Grid argmax of `mu + beta * sigma`, lowest index on ties.
    pub fn select(&self, beta: f64) -> usize {
        argmax((0..self.grid.len()).map(|i| {
            let (mu, var) = self.posterior(i);
            mu + beta * var.sqrt()
        }))
    }

    /// Conditions on reward `y` at grid point `index`.
    pub fn observe(&mut self, index: usize, y: f64) -> Result<()> {
        let m = self.m;
        if m == self.capacity {
            return Err(Error::InvalidInput(format!("scorer capacity {} exhausted", self.capacity)));
        }
        let cap = self.capacity;
        // The new factor row is w(x_new) followed by the new diagonal.
        let row: Vec<f64> = self.w[index * cap..index * cap + m].to_vec();
        let diag2 = self.spec.diag() + self.lambda - row.iter().map(|v| v * v).sum::<f64>();
        if !(diag2 > 0.0) {
            return Err(Error::Numerical(format!("non-positive pivot {diag2} in incremental factor")));
        }
        let diag = diag2.sqrt();
        self.chol[m * cap..m * cap + m].copy_from_slice(&row);
        self.chol[m * cap + m] = diag;
        let a = (y - row.iter().zip(&self.alpha).map(|(l, a)| l * a).sum::<f64>()) / diag;
        self.alpha.push(a);

        let x_new = self.grid.point(index).to_vec();
        let grid = self.grid.points();
        let spec = self.spec;
        for (i, ((wi, red), mean)) in self
            .w
            .chunks_exact_mut(cap)
            .zip(self.reduction.iter_mut())
            .zip(self.mean.iter_mut())
            .enumerate()
        {
            let k = spec.eval_unchecked(grid.row(i), &x_new);
            let dot: f64 = wi[..m].iter().zip(&row).map(|(a, b)| a * b).sum();
            let v = (k - dot) / diag;
            wi[m] = v;
            *red += v * v;
            *mean += v * a;
        }
        self.m += 1;
        Ok(())
    }
}

fn run_agent(agent: &mut UcbAgentState, env: &mut AgentEnv<'_>, scorer: &mut UcbScorer, horizon: usize) -> Result<()> {
    for _ in 0..horizon {
        let i = scorer.select(agent.beta);
        let y = env.query(i);
        scorer.observe(i, y)?;
        agent.observe(i, y);
    }
    Ok(())
}

/// Runs `N` independent UCB agents for `horizon` steps each.
pub fn run_ucb_agents(
    env: &mut Environment,
    spec: KernelSpec,
    lambda: f64,
    beta: f64,
    horizon: usize,
    exec: Execution,
) -> Result<Vec<UcbAgentState>> {
    let grid = env.grid().clone();
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let mut work: Vec<(UcbAgentState, AgentEnv<'_>)> = env
        .split_agents()
        .into_iter()
        .enumerate()
        .map(|(n, view)| (UcbAgentState::new(n, beta), view))
        .collect();
    let results: std::sync::Mutex<Vec<Option<Error>>> = std::sync::Mutex::new((0..work.len()).map(|_| None).collect());
    exec.for_each_mut(&mut work, |n, (agent, view)| {
        let outcome = UcbScorer::new(spec, lambda, grid.clone(), horizon)
            .and_then(|mut scorer| run_agent(agent, view, &mut scorer, horizon));
        if let Err(e) = outcome {
            results.lock().expect("poisoned")[n] = Some(e);
        }
    });
    if let Some(e) = results.into_inner().expect("poisoned").into_iter().flatten().next() {
        return Err(e);
    }
    Ok(work.into_iter().map(|(a, _)| a).collect())
}

/// Runs the baseline from a configuration. The configuration's beta must be
/// theoretical or a fixed value.
pub fn run_nkernelucb(cfg: &ExperimentConfig, run_seed: u64) -> Result<RunTrace> {
    let scenario = Scenario::build(cfg, run_seed)?;
    let beta = scenario.beta(cfg)?;
    let mut env = scenario.environment(cfg, run_seed)?;
    let agents = run_ucb_agents(
        &mut env,
        scenario.kernel,
        cfg.resolved_lambda(),
        beta,
        cfg.horizon,
        cfg.execution(),
    )?;
    let mut trace = trace_from_agents(&env, &agents, run_seed, cfg.horizon);
    trace.objective = cfg.objective.name().to_string();
    Ok(trace)
}

/// Builds the run trace of finished UCB agents.
pub fn trace_from_agents(env: &Environment, agents: &[UcbAgentState], run_seed: u64, horizon: usize) -> RunTrace {
    let mut records = Vec::with_capacity(agents.len() * horizon);
    for t in 0..horizon {
        for a in agents {
            let i = a.history[t];
            records.push(StepRecord {
                step: t + 1,
                agent: a.id,
                epoch: 0,
                point: i,
                reward: a.rewards[t],
                regret: env.regret(i),
            });
        }
    }
    RunTrace::new(Algo::NKernelUcb, run_seed, agents.len(), horizon, records, CommLedger::new(agents.len()), Vec::new())
}

/// Points queried by an agent, for inspection.
pub fn agent_points(agent: &UcbAgentState, grid: &GridDomain) -> Points {
    grid.points().select(&agent.history)
}
