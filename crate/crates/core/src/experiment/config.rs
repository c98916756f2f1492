//! Flat `key = value` configuration with field-level validation.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::benchfns::{coarse_bound, Environment, Objective, ObjectiveKind};
use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gp::confidence_width;
use crate::kernels::{KernelFamily, KernelSpec};
use crate::protocol::{trimming_delta, CommEncoding};
use crate::rng::{self, Purpose};

/// The beta values searched when `beta = grid`.
pub const DEFAULT_BETA_GRID: [f64; 5] = [0.2, 0.5, 1.0, 2.0, 5.0];

/// Lambda used when `lambda = auto` and the noise is exactly zero.
pub const NOISELESS_LAMBDA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Duets,
    NKernelUcb,
}

impl Algo {
    pub const ALL: [Algo; 2] = [Algo::Duets, Algo::NKernelUcb];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Duets => "duets",
            Algo::NKernelUcb => "nkernelucb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "duets" => Some(Algo::Duets),
            "nkernelucb" | "n-kernelucb" | "ucb" => Some(Algo::NKernelUcb),
            _ => None,
        }
    }
}

/// How the confidence multiplier is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaMode {
    /// `beta(delta')` from the confidence bound, with the RKHS bound taken
    /// from `rkhs_bound`.
    Theoretical,
    Fixed(f64),
    /// Grid-searched over the listed values before the main runs.
    Grid(Vec<f64>),
}

impl BetaMode {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        match s {
            "theoretical" => return Ok(BetaMode::Theoretical),
            "grid" => return Ok(BetaMode::Grid(DEFAULT_BETA_GRID.to_vec())),
            _ => {}
        }
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        match values.as_slice() {
            [] => Err("empty beta list".into()),
            [b] => Ok(BetaMode::Fixed(*b)),
            _ => Ok(BetaMode::Grid(values)),
        }
    }

    fn text(&self) -> String {
        match self {
            BetaMode::Theoretical => "theoretical".into(),
            BetaMode::Fixed(b) => format!("{b}"),
            BetaMode::Grid(v) => v.iter().map(|b| format!("{b}")).collect::<Vec<_>>().join(","),
        }
    }
}

/// Every knob of an experiment. Optional fields mean "derive from the
/// objective" and print as `auto`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algo: Algo,
    pub objective: ObjectiveKind,
    pub dimension: Option<usize>,
    pub agents: usize,
    pub horizon: usize,
    pub first_epoch: usize,
    pub p0: f64,
    pub lambda: Option<f64>,
    pub noise_std: f64,
    pub beta: BetaMode,
    pub delta: f64,
    pub kernel: KernelFamily,
    pub lengthscale: Option<f64>,
    pub variance_scale: f64,
    pub rkhs_bound: Option<f64>,
    pub grid_resolution: Option<usize>,
    pub ball_points: usize,
    pub seed: u64,
    pub mc: usize,
    pub comm_encoding: CommEncoding,
    pub parallel: bool,
    pub dump_epochs: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algo: Algo::Duets,
            objective: ObjectiveKind::H1,
            dimension: None,
            agents: 10,
            horizon: 50,
            first_epoch: 2,
            p0: 10.0,
            lambda: None,
            noise_std: 0.2,
            beta: BetaMode::Grid(DEFAULT_BETA_GRID.to_vec()),
            delta: 0.1,
            kernel: KernelFamily::SquaredExponential,
            lengthscale: None,
            variance_scale: 1.0,
            rkhs_bound: None,
            grid_resolution: None,
            ball_points: 4000,
            seed: 1,
            mc: 5,
            comm_encoding: CommEncoding::Points,
            parallel: true,
            dump_epochs: false,
        }
    }
}

/// Keys in the order [`ExperimentConfig::to_text`] prints them.
pub const KEYS: [&str; 22] = [
    "algo",
    "objective",
    "dimension",
    "agents",
    "horizon",
    "first_epoch",
    "p0",
    "lambda",
    "noise_std",
    "beta",
    "delta",
    "kernel",
    "lengthscale",
    "variance_scale",
    "rkhs_bound",
    "grid_resolution",
    "ball_points",
    "seed",
    "mc",
    "comm_encoding",
    "parallel",
    "dump_epochs",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse::<T>()
        .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
}

fn parse_auto<T: std::str::FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    if v == "auto" {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, got `{v}`"))),
    }
}

fn auto_text<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), |x| x.to_string())
}

impl ExperimentConfig {
    /// Parses a config file body: one `key = value` per line, `#` starts a
    /// comment, blank lines are ignored. Unlisted keys keep their defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::config(
                    line,
                    format!("line {}: expected `key = value`", lineno + 1),
                ));
            };
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "algo" => {
                self.algo = Algo::parse(v).ok_or_else(|| Error::config(key, format!("unknown algorithm `{v}`")))?
            }
            "objective" => {
                self.objective = ObjectiveKind::parse(v)
                    .ok_or_else(|| Error::config(key, format!("unknown objective `{v}`")))?
            }
            "dimension" => self.dimension = parse_auto(key, v)?,
            "agents" => self.agents = parse_num(key, v)?,
            "horizon" => self.horizon = parse_num(key, v)?,
            "first_epoch" => self.first_epoch = parse_num(key, v)?,
            "p0" => self.p0 = parse_num(key, v)?,
            "lambda" => self.lambda = parse_auto(key, v)?,
            "noise_std" => self.noise_std = parse_num(key, v)?,
            "beta" => self.beta = BetaMode::parse(v).map_err(|m| Error::config(key, m))?,
            "delta" => self.delta = parse_num(key, v)?,
            "kernel" => {
                self.kernel = KernelFamily::parse(v).ok_or_else(|| Error::config(key, format!("unknown kernel `{v}`")))?
            }
            "lengthscale" => self.lengthscale = parse_auto(key, v)?,
            "variance_scale" => self.variance_scale = parse_num(key, v)?,
            "rkhs_bound" => self.rkhs_bound = parse_auto(key, v)?,
            "grid_resolution" => self.grid_resolution = parse_auto(key, v)?,
            "ball_points" => self.ball_points = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "mc" => self.mc = parse_num(key, v)?,
            "comm_encoding" => {
                self.comm_encoding = CommEncoding::parse(v)
                    .ok_or_else(|| Error::config(key, format!("expected points or indices, got `{v}`")))?
            }
            "parallel" => self.parallel = parse_bool(key, v)?,
            "dump_epochs" => self.dump_epochs = parse_bool(key, v)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Text form of one key, as accepted by [`ExperimentConfig::set`].
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "algo" => self.algo.name().into(),
            "objective" => self.objective.name().into(),
            "dimension" => auto_text(&self.dimension),
            "agents" => self.agents.to_string(),
            "horizon" => self.horizon.to_string(),
            "first_epoch" => self.first_epoch.to_string(),
            "p0" => self.p0.to_string(),
            "lambda" => auto_text(&self.lambda),
            "noise_std" => self.noise_std.to_string(),
            "beta" => self.beta.text(),
            "delta" => self.delta.to_string(),
            "kernel" => self.kernel.name().into(),
            "lengthscale" => auto_text(&self.lengthscale),
            "variance_scale" => self.variance_scale.to_string(),
            "rkhs_bound" => auto_text(&self.rkhs_bound),
            "grid_resolution" => auto_text(&self.grid_resolution),
            "ball_points" => self.ball_points.to_string(),
            "seed" => self.seed.to_string(),
            "mc" => self.mc.to_string(),
            "comm_encoding" => self.comm_encoding.name().into(),
            "parallel" => self.parallel.to_string(),
            "dump_epochs" => self.dump_epochs.to_string(),
            _ => return None,
        })
    }

    /// Every key, one per line, in a form [`ExperimentConfig::from_text`]
    /// reads back to an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let _ = writeln!(out, "{k} = {}", self.get(k).expect("listed key"));
        }
        out
    }

    /// Checks every invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive and finite, got {v}")))
            }
        };
        if self.agents < 1 {
            return Err(Error::config("agents", "need at least one agent"));
        }
        if self.horizon < 1 {
            return Err(Error::config("horizon", "need at least one step"));
        }
        if self.first_epoch < 1 || self.first_epoch > self.horizon {
            return Err(Error::config(
                "first_epoch",
                format!("must satisfy 1 <= first_epoch <= horizon ({}), got {}", self.horizon, self.first_epoch),
            ));
        }
        positive("p0", self.p0)?;
        if let Some(l) = self.lambda {
            positive("lambda", l)?;
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::config("noise_std", format!("must be non-negative, got {}", self.noise_std)));
        }
        match &self.beta {
            BetaMode::Theoretical => {}
            BetaMode::Fixed(b) if *b >= 0.0 && b.is_finite() => {}
            BetaMode::Fixed(b) => return Err(Error::config("beta", format!("must be non-negative, got {b}"))),
            BetaMode::Grid(v) => {
                if v.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
                    return Err(Error::config("beta", "every grid value must be non-negative"));
                }
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("delta", format!("must lie in (0, 1), got {}", self.delta)));
        }
        if let Some(l) = self.lengthscale {
            positive("lengthscale", l)?;
        }
        positive("variance_scale", self.variance_scale)?;
        if let Some(b) = self.rkhs_bound {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::config("rkhs_bound", format!("must be non-negative, got {b}")));
            }
        }
        if let Some(d) = self.dimension {
            if d < 1 {
                return Err(Error::config("dimension", "must be at least 1"));
            }
            if !self.objective.dim_is_free() && d != self.objective.default_dim() {
                return Err(Error::config(
                    "dimension",
                    format!("{} is defined only in dimension {}", self.objective.name(), self.objective.default_dim()),
                ));
            }
        }
        if self.grid_resolution == Some(0) {
            return Err(Error::config("grid_resolution", "must be at least 1"));
        }
        if self.ball_points < 1 {
            return Err(Error::config("ball_points", "must be at least 1"));
        }
        if self.mc < 1 {
            return Err(Error::config("mc", "need at least one Monte Carlo run"));
        }
        Ok(())
    }

    /// `lambda`, or `noise_std^2` when automatic (floored for noiseless runs).
    pub fn resolved_lambda(&self) -> f64 {
        self.lambda.unwrap_or_else(|| {
            let r2 = self.noise_std * self.noise_std;
            if r2 > 0.0 {
                r2
            } else {
                NOISELESS_LAMBDA
            }
        })
    }

    pub fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }

    /// Seed of the `k`-th Monte Carlo run.
    pub fn run_seed(&self, k: usize) -> u64 {
        rng::derive_seed(self.seed, Purpose::Replication, k as u64, 0)
    }
}

/// Objective, grid and kernel of one run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub objective: Objective,
    pub grid: Arc<GridDomain>,
    pub kernel: KernelSpec,
    /// Bound on the RKHS norm used by the theoretical beta.
    pub bound: f64,
}

impl Scenario {
    /// Draws `theta*` and the grid from streams derived from `run_seed`.
    pub fn build(cfg: &ExperimentConfig, run_seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut theta_rng = rng::stream(run_seed, Purpose::Theta, 0, 0);
        let objective = Objective::build(cfg.objective, cfg.dimension, &mut theta_rng)?;
        let mut grid_rng = rng::stream(run_seed, Purpose::Grid, 0, 0);
        let grid = Arc::new(objective.default_grid(cfg.grid_resolution, cfg.ball_points, &mut grid_rng)?);
        let lengthscale = cfg.lengthscale.unwrap_or(cfg.objective.default_lengthscale());
        let kernel = KernelSpec::new(cfg.kernel, lengthscale, cfg.variance_scale)?;
        let bound = cfg.rkhs_bound.unwrap_or_else(|| coarse_bound(&objective, &grid));
        Ok(Scenario {
            objective,
            grid,
            kernel,
            bound,
        })
    }

    /// The beta a single run uses. Fails for an unresolved beta grid.
    pub fn beta(&self, cfg: &ExperimentConfig) -> Result<f64> {
        match &cfg.beta {
            BetaMode::Fixed(b) => Ok(*b),
            BetaMode::Theoretical => {
                let d = trimming_delta(cfg.delta, self.grid.len(), cfg.agents, cfg.horizon);
                confidence_width(self.bound, cfg.noise_std, cfg.resolved_lambda(), d)
            }
            BetaMode::Grid(_) => Err(Error::config("beta", "a beta grid must be searched before a single run")),
        }
    }

    /// The noisy environment with one noise stream per agent.
    pub fn environment(&self, cfg: &ExperimentConfig, run_seed: u64) -> Result<Environment> {
        let seeds = Environment::agent_noise_seeds(run_seed, cfg.agents);
        Environment::new(self.objective.clone(), self.grid.clone(), cfg.noise_std, &seeds)
    }
}
