//! The distributed protocol: agents explore uniformly with private coins, the
//! server replays their queries for free, compresses rewards through a
//! Nyström inducing set, and everyone trims the active region the same way.
//!
//! One epoch of [`run_duets_with`]:
//!
//! 1. every agent draws `T_j` grid points from its coin and queries them;
//! 2. the server replays the same draws from the coins (zero messages);
//! 3. the server computes the exact posterior variance over the epoch's
//!    queries, its maximum `sigma_max` over the active region, and samples
//!    the inducing set `S_j` with probability `min(1, p0 * sigma_max^2)`;
//! 4. `S_j` and `sigma_max` are broadcast; each agent uploads `Z^T Y` over
//!    its own data (`|S_j|` reals);
//! 5. the server sums the uploads in agent order, solves against
//!    `lambda I + Z^T Z`, and broadcasts the weights (`|S_j|` reals);
//! 6. all parties keep the points whose sparse mean is within
//!    `2 beta sigma_max` of the best.

use nalgebra::DMatrix;

use crate::benchfns::Environment;
use crate::domain::ActiveRegion;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::experiment::{Algo, ExperimentConfig, RunTrace, Scenario, StepRecord};
use crate::gp::{GpPosterior, NystromFeatures};
use crate::kernels::{KernelSpec, Points};
use crate::rng::{self, Purpose, Stream};

/// Epoch lengths `T_1, T_{j+1} = floor(sqrt(T * T_j))`, with the last epoch
/// cut so the lengths sum to the horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochSchedule {
    horizon: usize,
    first: usize,
    lengths: Vec<usize>,
}

impl EpochSchedule {
    pub fn new(horizon: usize, first: usize) -> Result<Self> {
        if first == 0 || first > horizon {
            return Err(Error::InvalidInput(format!(
                "first epoch length must satisfy 1 <= T_1 <= T, got T_1={first}, T={horizon}"
            )));
        }
        let mut lengths = Vec::new();
        let mut used = 0usize;
        let mut next = first;
        while used < horizon {
            let len = next.min(horizon - used);
            lengths.push(len);
            used += len;
            next = ((horizon as u64) * (next as u64)).isqrt() as usize;
        }
        Ok(EpochSchedule {
            horizon,
            first,
            lengths,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn epochs(&self) -> usize {
        self.lengths.len()
    }
}

/// `log(log(max(N, T))) + 4`, the ceiling on the number of epochs when
/// `T_1 >= T / N`. The inner logarithm is floored at 1 so the expression
/// stays finite for `max(N, T) < e`.
pub fn epoch_count_bound(agents: usize, horizon: usize) -> f64 {
    let m = agents.max(horizon).max(1) as f64;
    m.ln().max(1.0).ln() + 4.0
}

/// Confidence level used by the trimming rule:
/// `delta / (2 |U_T| (log(log N * log T) + 4))`, with the log-log term
/// floored at 1.
pub fn trimming_delta(delta: f64, grid_size: usize, agents: usize, horizon: usize) -> f64 {
    let inner = (agents as f64).ln() * (horizon as f64).ln();
    let loglog = if inner > std::f64::consts::E { inner.ln() } else { 1.0 };
    delta / (2.0 * grid_size as f64 * (loglog + 4.0))
}

/// How the server encodes inducing points on the downlink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CommEncoding {
    /// Each inducing point costs `d` reals.
    #[default]
    Points,
    /// Each inducing point costs one number (its grid index).
    Indices,
}

impl CommEncoding {
    pub fn name(self) -> &'static str {
        match self {
            CommEncoding::Points => "points",
            CommEncoding::Indices => "indices",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "points" => Some(CommEncoding::Points),
            "indices" => Some(CommEncoding::Indices),
            _ => None,
        }
    }

    /// Reals broadcast for `S_j` plus `sigma_max`.
    pub fn inducing_broadcast(self, inducing: usize, dim: usize) -> u64 {
        let per_point = match self {
            CommEncoding::Points => dim,
            CommEncoding::Indices => 1,
        };
        (inducing * per_point + 1) as u64
    }
}

/// Reals sent in one epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochComm {
    pub epoch: usize,
    /// Uplink reals per agent.
    pub uplink: Vec<u64>,
    /// Reals broadcast by the server.
    pub downlink: u64,
}

impl EpochComm {
    /// Uplink averaged over agents.
    pub fn mean_uplink(&self) -> f64 {
        if self.uplink.is_empty() {
            0.0
        } else {
            self.uplink.iter().sum::<u64>() as f64 / self.uplink.len() as f64
        }
    }

    pub fn total(&self) -> f64 {
        self.mean_uplink() + self.downlink as f64
    }
}

/// Running count of real numbers exchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommLedger {
    uplink: Vec<u64>,
    downlink: u64,
    epochs: Vec<EpochComm>,
}

/// Communication cost with uplink averaged over agents. A broadcast reaches
/// every agent, so its per-agent average is the broadcast size itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommTotals {
    pub uplink: f64,
    pub downlink: f64,
    pub total: f64,
}

impl CommLedger {
    pub fn new(agents: usize) -> Self {
        CommLedger {
            uplink: vec![0; agents],
            downlink: 0,
            epochs: Vec::new(),
        }
    }

    pub fn agents(&self) -> usize {
        self.uplink.len()
    }

    /// Opens the per-epoch bucket that subsequent records land in.
    pub fn begin_epoch(&mut self, epoch: usize) {
        self.epochs.push(EpochComm {
            epoch,
            uplink: vec![0; self.uplink.len()],
            downlink: 0,
        });
    }

    fn current(&mut self) -> Result<&mut EpochComm> {
        self.epochs
            .last_mut()
            .ok_or_else(|| Error::Protocol("communication recorded outside an epoch".into()))
    }

    pub fn record_uplink(&mut self, agent: usize, reals: u64) -> Result<()> {
        if agent >= self.uplink.len() {
            return Err(Error::InvalidInput(format!("no agent {agent}")));
        }
        self.current()?.uplink[agent] += reals;
        self.uplink[agent] += reals;
        Ok(())
    }

    pub fn record_downlink(&mut self, reals: u64) -> Result<()> {
        self.current()?.downlink += reals;
        self.downlink += reals;
        Ok(())
    }

    pub fn uplink_per_agent(&self) -> &[u64] {
        &self.uplink
    }

    pub fn downlink(&self) -> u64 {
        self.downlink
    }

    pub fn epochs(&self) -> &[EpochComm] {
        &self.epochs
    }

    pub fn totals(&self) -> CommTotals {
        comm_totals(self, self.agents())
    }
}

/// `(C_up, C_down, C)` with `C_up = (1/N) sum_n C_up^(n)`.
pub fn comm_totals(ledger: &CommLedger, agents: usize) -> CommTotals {
    let uplink = if agents == 0 {
        0.0
    } else {
        ledger.uplink.iter().sum::<u64>() as f64 / agents as f64
    };
    let downlink = ledger.downlink as f64;
    CommTotals {
        uplink,
        downlink,
        total: uplink + downlink,
    }
}

/// Private coin of each agent, derived from the run seed. The server is
/// handed the same values.
pub fn agent_coins(run_seed: u64, agents: usize) -> Vec<u64> {
    (0..agents as u64)
        .map(|n| rng::derive_seed(run_seed, Purpose::Coin, n, 0))
        .collect()
}

/// Stream an agent's coin produces in a given epoch. The server calls the
/// same function with the same coin to replay the draws.
pub fn query_stream(coin: u64, epoch: usize) -> Stream {
    rng::stream(coin, Purpose::Query, epoch as u64, 0)
}

/// Local state of one agent.
#[derive(Debug, Clone)]
pub struct AgentState {
    id: usize,
    coin: u64,
    region: ActiveRegion,
    queries: Vec<usize>,
    rewards: Vec<f64>,
    steps: usize,
    horizon: usize,
}

impl AgentState {
    pub fn new(id: usize, coin: u64, region: ActiveRegion, horizon: usize) -> Self {
        AgentState {
            id,
            coin,
            region,
            queries: Vec::new(),
            rewards: Vec::new(),
            steps: 0,
            horizon,
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn coin(&self) -> u64 {
        self.coin
    }

    pub fn region(&self) -> &ActiveRegion {
        &self.region
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Query grid indices of the current epoch.
    pub fn epoch_queries(&self) -> &[usize] {
        &self.queries
    }

    pub fn epoch_rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Draws `min(epoch_len, T - t)` points uniformly from the active region
    /// with this epoch's coin stream and queries each through `query`, which
    /// receives a grid index and returns a noisy reward. Replaces the
    /// previous epoch's data.
    pub fn explore(&mut self, epoch: usize, epoch_len: usize, mut query: impl FnMut(usize) -> f64) -> (&[usize], &[f64]) {
        let count = epoch_len.min(self.horizon - self.steps);
        let mut stream = query_stream(self.coin, epoch);
        self.queries = self.region.uniform_sample(&mut stream, count);
        self.rewards = self.queries.iter().map(|&i| query(i)).collect();
        self.steps += count;
        (&self.queries, &self.rewards)
    }

    /// `v = Z_{D,S}^T Y` over this agent's epoch data.
    pub fn project(&self, features: &NystromFeatures) -> Result<Vec<f64>> {
        let pts = self.region.grid().points().select(&self.queries);
        project_rewards(&pts, &self.rewards, features)
    }

    /// Projects and records the upload in the ledger.
    pub fn send_projection(&self, features: &NystromFeatures, ledger: &mut CommLedger) -> Result<Vec<f64>> {
        let v = self.project(features)?;
        ledger.record_uplink(self.id, v.len() as u64)?;
        Ok(v)
    }

    pub fn adopt_region(&mut self, region: ActiveRegion) {
        self.region = region;
    }
}

/// Server state: every agent's coin and the shared active region.
#[derive(Debug, Clone)]
pub struct ServerState {
    coins: Vec<u64>,
    region: ActiveRegion,
    steps: usize,
    horizon: usize,
}

impl ServerState {
    pub fn new(coins: Vec<u64>, region: ActiveRegion, horizon: usize) -> Self {
        ServerState {
            coins,
            region,
            steps: 0,
            horizon,
        }
    }

    pub fn region(&self) -> &ActiveRegion {
        &self.region
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Replays every agent's draws for epoch `region.epoch()`. Costs no
    /// communication. Returns per-agent grid indices in agent order.
    pub fn reconstruct(&self, epoch_len: usize) -> Vec<Vec<usize>> {
        let count = epoch_len.min(self.horizon - self.steps);
        let epoch = self.region.epoch();
        self.coins
            .iter()
            .map(|&coin| self.region.uniform_sample(&mut query_stream(coin, epoch), count))
            .collect()
    }

    /// [`ServerState::reconstruct`] after checking every agent holds the
    /// same active region as the server.
    pub fn reconstruct_checked(&self, epoch_len: usize, agent_regions: &[&ActiveRegion]) -> Result<Vec<Vec<usize>>> {
        if agent_regions.len() != self.coins.len() {
            return Err(Error::Protocol(format!(
                "{} agent regions for {} coins",
                agent_regions.len(),
                self.coins.len()
            )));
        }
        if let Some(n) = agent_regions.iter().position(|r| **r != self.region) {
            return Err(Error::Protocol(format!("agent {n} disagrees with the server on the active region")));
        }
        Ok(self.reconstruct(epoch_len))
    }

    fn advance(&mut self, region: ActiveRegion, consumed: usize) {
        self.region = region;
        self.steps += consumed;
    }
}

/// `min(1, p0 * sigma_max^2)`.
pub fn inducing_probability(p0: f64, sigma_max: f64) -> f64 {
    (p0 * sigma_max * sigma_max).clamp(0.0, 1.0)
}

/// Keeps each element of `queries` independently with probability
/// `min(1, p0 * sigma_max^2)`, preserving order. Consumes one uniform draw
/// per element.
pub fn build_inducing_set<T: Clone>(queries: &[T], sigma_max: f64, p0: f64, rng: &mut Stream) -> Vec<T> {
    use rand::Rng;
    let p = inducing_probability(p0, sigma_max);
    queries
        .iter()
        .filter(|_| rng.random::<f64>() < p)
        .cloned()
        .collect()
}

/// `Z_{D,S}^T Y` for one agent's data.
pub fn project_rewards(points: &Points, rewards: &[f64], features: &NystromFeatures) -> Result<Vec<f64>> {
    features.project(points, rewards)
}

/// Server-side aggregate of an epoch.
#[derive(Debug, Clone)]
pub struct Aggregate {
    /// `sum_n v^(n)`, summed in agent order.
    pub projection: Vec<f64>,
    /// `Z_{D,S}^T Z_{D,S}` over the full reconstructed query set.
    pub ztz: DMatrix<f64>,
    /// `(lambda I + Z^T Z)^{-1} sum_n v^(n)`.
    pub weights: Vec<f64>,
}

/// Combines the agents' projections into the mean weights.
pub fn aggregate(projections: &[Vec<f64>], queries: &Points, features: &NystromFeatures, lambda: f64) -> Result<Aggregate> {
    let r = features.rank();
    let mut sum = vec![0.0; r];
    for (n, v) in projections.iter().enumerate() {
        if v.len() != r {
            return Err(Error::InvalidInput(format!(
                "agent {n} sent {} values for an inducing set of size {r}",
                v.len()
            )));
        }
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    let ztz = features.gram(queries)?;
    let post = crate::gp::SparsePosterior::from_projection(features.clone(), ztz.clone(), &sum, lambda)?;
    Ok(Aggregate {
        projection: sum,
        ztz,
        weights: post.weights().to_vec(),
    })
}

/// What happened in one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub length: usize,
    /// First and last global step (1-based, inclusive) of the epoch.
    pub first_step: usize,
    pub last_step: usize,
    /// `|D_j|`, all agents together.
    pub queries: usize,
    /// Grid indices of `S_j`, in query order.
    pub inducing: Vec<usize>,
    pub sigma_max: f64,
    pub probability: f64,
    pub active_before: usize,
    pub active_after: usize,
    pub comm: EpochComm,
    pub mask_after: Vec<bool>,
}

/// Resolved parameters of one protocol run.
#[derive(Debug, Clone)]
pub struct DuetsParams {
    pub agents: usize,
    pub horizon: usize,
    pub first_epoch: usize,
    pub p0: f64,
    pub lambda: f64,
    pub beta: f64,
    pub kernel: KernelSpec,
    pub encoding: CommEncoding,
    pub exec: Execution,
}

/// Runs the protocol from a configuration. The configuration's beta must be
/// theoretical or a fixed value; a beta grid is resolved by the experiment
/// layer.
pub fn run_duets(cfg: &ExperimentConfig, run_seed: u64) -> Result<RunTrace> {
    let scenario = Scenario::build(cfg, run_seed)?;
    let params = DuetsParams {
        agents: cfg.agents,
        horizon: cfg.horizon,
        first_epoch: cfg.first_epoch,
        p0: cfg.p0,
        lambda: cfg.resolved_lambda(),
        beta: scenario.beta(cfg)?,
        kernel: scenario.kernel,
        encoding: cfg.comm_encoding,
        exec: cfg.execution(),
    };
    let mut env = scenario.environment(cfg, run_seed)?;
    let mut trace = run_duets_with(&params, &mut env, run_seed)?;
    trace.objective = cfg.objective.name().to_string();
    Ok(trace)
}

/// Runs the protocol against an environment. Agent coins and the server's
/// inducing-set stream are derived from `run_seed`.
pub fn run_duets_with(params: &DuetsParams, env: &mut Environment, run_seed: u64) -> Result<RunTrace> {
    let n_agents = params.agents;
    if env.agents() != n_agents {
        return Err(Error::InvalidInput(format!(
            "environment has {} noise streams for {n_agents} agents",
            env.agents()
        )));
    }
    if !(params.p0 > 0.0) || !(params.lambda > 0.0) || !(params.beta >= 0.0) {
        return Err(Error::InvalidInput("need p0 > 0, lambda > 0 and beta >= 0".into()));
    }
    let schedule = EpochSchedule::new(params.horizon, params.first_epoch)?;
    let grid = env.grid().clone();
    let dim = grid.dim();
    let start = ActiveRegion::full(grid.clone());

    let coins = agent_coins(run_seed, n_agents);
    let mut agents: Vec<AgentState> = coins
        .iter()
        .enumerate()
        .map(|(n, &c)| AgentState::new(n, c, start.clone(), params.horizon))
        .collect();
    let mut server = ServerState::new(coins, start, params.horizon);
    let mut ledger = CommLedger::new(n_agents);
    let mut records = Vec::with_capacity(n_agents * params.horizon);
    let mut epochs = Vec::with_capacity(schedule.epochs());

    for (j0, &len) in schedule.lengths().iter().enumerate() {
        let epoch = j0 + 1;
        let first_step = server.steps() + 1;

        {
            let mut views = env.split_agents();
            for (agent, view) in agents.iter_mut().zip(views.iter_mut()) {
                agent.explore(epoch, len, |i| view.query(i));
            }
        }
        for agent in &agents {
            for (k, &i) in agent.epoch_queries().iter().enumerate() {
                records.push(StepRecord {
                    step: first_step + k,
                    agent: agent.id(),
                    epoch,
                    point: i,
                    reward: agent.epoch_rewards()[k],
                    regret: env.regret(i),
                });
            }
        }

        let regions: Vec<&ActiveRegion> = agents.iter().map(|a| a.region()).collect();
        let replayed = server.reconstruct_checked(len, &regions)?;
        for (agent, d) in agents.iter().zip(&replayed) {
            if agent.epoch_queries() != d.as_slice() {
                return Err(Error::Protocol(format!(
                    "server replay differs from agent {} queries in epoch {epoch}",
                    agent.id()
                )));
            }
        }
        let all_queries: Vec<usize> = replayed.concat();
        let query_points = grid.points().select(&all_queries);

        let exact = GpPosterior::variance_only(params.kernel, &query_points, params.lambda)?;
        let variances = exact.predict_rows(grid.points(), server.region().indices(), params.exec)?;
        let var_max = variances.iter().map(|p| p.variance).fold(0.0, f64::max);
        let sigma_max = var_max.sqrt();
        let probability = inducing_probability(params.p0, sigma_max);
        let mut coin = rng::stream(run_seed, Purpose::Inducing, epoch as u64, 0);
        let inducing = build_inducing_set(&all_queries, sigma_max, params.p0, &mut coin);

        ledger.begin_epoch(epoch);
        ledger.record_downlink(params.encoding.inducing_broadcast(inducing.len(), dim))?;
        let features = NystromFeatures::new(params.kernel, grid.points().select(&inducing));
        let projections = agents
            .iter()
            .map(|a| a.send_projection(&features, &mut ledger))
            .collect::<Result<Vec<_>>>()?;
        let agg = aggregate(&projections, &query_points, &features, params.lambda)?;
        ledger.record_downlink(agg.weights.len() as u64)?;

        let means = features.linear_rows(grid.points(), server.region().indices(), &agg.weights, params.exec);
        let next = server.region().trim_with(&means, params.beta, sigma_max)?;
        if !next.is_subset_of(server.region()) {
            return Err(Error::Protocol(format!("region of epoch {} is not nested", epoch + 1)));
        }

        let consumed = agents[0].epoch_queries().len();
        epochs.push(EpochRecord {
            epoch,
            length: consumed,
            first_step,
            last_step: first_step + consumed - 1,
            queries: all_queries.len(),
            inducing,
            sigma_max,
            probability,
            active_before: server.region().len(),
            active_after: next.len(),
            comm: ledger.epochs().last().cloned().expect("epoch opened above"),
            mask_after: next.mask().to_vec(),
        });
        for agent in agents.iter_mut() {
            agent.adopt_region(next.clone());
        }
        server.advance(next, consumed);
    }

    records.sort_by_key(|r| (r.step, r.agent));
    Ok(RunTrace::new(Algo::Duets, run_seed, n_agents, params.horizon, records, ledger, epochs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GridDomain;
    use std::sync::Arc;

    #[test]
    fn schedule_examples() {
        assert_eq!(EpochSchedule::new(50, 2).unwrap().lengths(), &[2, 10, 22, 16]);
        assert_eq!(EpochSchedule::new(50, 50).unwrap().lengths(), &[50]);
        assert!(EpochSchedule::new(50, 51).is_err());
        assert!(EpochSchedule::new(50, 0).is_err());
    }

    #[test]
    fn schedule_long_horizon_within_bound() {
        let s = EpochSchedule::new(1_000_000, 1).unwrap();
        assert_eq!(s.lengths().iter().sum::<usize>(), 1_000_000);
        assert!((s.epochs() as f64) <= epoch_count_bound(1, 1_000_000));
    }

    #[test]
    fn comm_encoding_costs() {
        assert_eq!(CommEncoding::Points.inducing_broadcast(20, 10), 201);
        assert_eq!(CommEncoding::Indices.inducing_broadcast(20, 10), 21);
        assert_eq!(CommEncoding::Points.inducing_broadcast(0, 10), 1);
    }

    #[test]
    fn ledger_accounting() {
        let mut l = CommLedger::new(10);
        assert_eq!(l.totals(), CommTotals { uplink: 0.0, downlink: 0.0, total: 0.0 });
        assert!(l.record_downlink(3).is_err());
        l.begin_epoch(1);
        l.record_downlink(CommEncoding::Points.inducing_broadcast(20, 10)).unwrap();
        for n in 0..10 {
            l.record_uplink(n, 20).unwrap();
        }
        l.record_downlink(20).unwrap();
        let t = comm_totals(&l, 10);
        assert_eq!(t.uplink, 20.0);
        assert_eq!(t.downlink, 221.0);
        assert_eq!(t.total, 241.0);
        assert_eq!(l.epochs()[0].total(), 241.0);
    }

    #[test]
    fn inducing_set_edge_cases() {
        let d: Vec<usize> = (0..50).collect();
        let mut r = rng::seeded(1);
        assert!(build_inducing_set(&d, 0.0, 10.0, &mut r).is_empty());
        assert_eq!(build_inducing_set(&d, 1.0, 1.0, &mut r), d);
        assert_eq!(build_inducing_set(&d, 0.5, 100.0, &mut r), d);
        let s = build_inducing_set(&d, 0.5, 1.0, &mut r);
        let mut prev = None;
        for x in s {
            assert!(prev.is_none_or(|p| p < x));
            prev = Some(x);
        }
    }

    #[test]
    fn agent_explore_respects_horizon_and_replays() {
        let g = Arc::new(GridDomain::boxed(&[0.0], &[1.0], 11).unwrap());
        let region = ActiveRegion::full(g);
        let mut a = AgentState::new(0, 42, region.clone(), 5);
        let (q, y) = a.explore(1, 0, |_| 1.0);
        assert!(q.is_empty() && y.is_empty());
        let (q, y) = a.explore(1, 3, |_| 0.7);
        assert_eq!(q.len(), 3);
        assert_eq!(y, &[0.7; 3]);
        let first = q.to_vec();
        let (q, _) = a.explore(2, 10, |_| 0.0);
        assert_eq!(q.len(), 2);
        assert_eq!(a.steps(), 5);
        let (q, _) = a.explore(3, 10, |_| 0.0);
        assert!(q.is_empty());

        let mut b = AgentState::new(0, 42, region, 5);
        b.explore(1, 3, |_| 0.7);
        assert_eq!(b.epoch_queries(), first.as_slice());
    }

    #[test]
    fn reconstruct_rejects_region_mismatch() {
        let g = Arc::new(GridDomain::boxed(&[0.0], &[1.0], 5).unwrap());
        let full = ActiveRegion::full(g.clone());
        let server = ServerState::new(vec![1, 2], full.clone(), 10);
        let trimmed = full.trim_with(&[0.0, 1.0, 0.0, 0.0, 0.0], 0.0, 0.0).unwrap();
        assert!(matches!(
            server.reconstruct_checked(3, &[&full, &trimmed]),
            Err(Error::Protocol(_))
        ));
        assert_eq!(server.reconstruct_checked(3, &[&full, &full]).unwrap().len(), 2);
    }

    #[test]
    fn projection_scalar_case() {
        let spec = KernelSpec::se(1.0).unwrap();
        let d = Points::from_rows(&[[0.3, 0.1]]).unwrap();
        let f = NystromFeatures::new(spec, d.clone());
        let v = project_rewards(&d, &[2.0], &f).unwrap();
        assert!((v[0] - 2.0 * spec.diag().sqrt()).abs() < 1e-12);
        assert_eq!(project_rewards(&d, &[0.0], &f).unwrap(), vec![0.0]);
        let empty = NystromFeatures::new(spec, Points::new(2));
        assert!(project_rewards(&d, &[2.0], &empty).unwrap().is_empty());
    }

    #[test]
    fn aggregate_of_zero_projections_is_zero() {
        let spec = KernelSpec::se(0.5).unwrap();
        let d = Points::from_rows(&[[0.0], [0.5], [1.0]]).unwrap();
        let f = NystromFeatures::new(spec, d.select(&[0, 2]));
        let agg = aggregate(&[vec![0.0; 2], vec![0.0; 2]], &d, &f, 0.1).unwrap();
        assert_eq!(agg.weights, vec![0.0, 0.0]);
        assert!(aggregate(&[vec![0.0; 3]], &d, &f, 0.1).is_err());
    }
}
