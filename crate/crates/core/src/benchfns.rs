//! Benchmark objectives and the noisy environment agents query.
//!
//! All objectives are posed as maximisation problems:
//!
//! - `h1(x) = cos(3 x.theta)` and `h2(x) = s^3 - 3 s^2 + 3 s + 3` with
//!   `s = x.theta`, both on the unit ball, `theta` a random unit vector.
//! - `branin`: the negated Branin-Hoo function with its usual domain
//!   `[-5, 10] x [0, 15]` rescaled to `[0, 1]^2`.
//! - `hartmann4`: the negated four-dimensional Hartmann variant
//!   `(1.1 - sum_i alpha_i exp(-sum_j A_ij (x_j - P_ij)^2)) / 0.839` on
//!   `[0, 1]^4`, using the first four columns of the six-dimensional
//!   Hartmann constants.
//! - `constant`: a flat function, handy for degenerate checks.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose, Stream};

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN_A: [[f64; 4]; 4] = [
    [10.0, 3.0, 17.0, 3.5],
    [0.05, 10.0, 17.0, 0.1],
    [3.0, 3.5, 1.7, 10.0],
    [17.0, 8.0, 0.05, 10.0],
];
const HARTMANN_P: [[f64; 4]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124],
    [0.2329, 0.4135, 0.8307, 0.3736],
    [0.2348, 0.1451, 0.3522, 0.2883],
    [0.4047, 0.8828, 0.8732, 0.5743],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    H1,
    H2,
    Branin,
    Hartmann4,
    Constant,
}

impl ObjectiveKind {
    pub const BENCHMARKS: [ObjectiveKind; 4] = [
        ObjectiveKind::H1,
        ObjectiveKind::H2,
        ObjectiveKind::Branin,
        ObjectiveKind::Hartmann4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::H1 => "h1",
            ObjectiveKind::H2 => "h2",
            ObjectiveKind::Branin => "branin",
            ObjectiveKind::Hartmann4 => "hartmann4",
            ObjectiveKind::Constant => "constant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "h1" => Some(ObjectiveKind::H1),
            "h2" => Some(ObjectiveKind::H2),
            "branin" => Some(ObjectiveKind::Branin),
            "hartmann4" | "hartmann-4d" | "hartmann" => Some(ObjectiveKind::Hartmann4),
            "constant" => Some(ObjectiveKind::Constant),
            _ => None,
        }
    }

    /// Lengthscale used for this objective unless configured otherwise.
    pub fn default_lengthscale(self) -> f64 {
        match self {
            ObjectiveKind::Branin => 0.2,
            _ => 1.0,
        }
    }

    pub fn default_dim(self) -> usize {
        match self {
            ObjectiveKind::H1 | ObjectiveKind::H2 => 10,
            ObjectiveKind::Branin => 2,
            ObjectiveKind::Hartmann4 => 4,
            ObjectiveKind::Constant => 2,
        }
    }

    /// Whether the dimension may be changed from the default.
    pub fn dim_is_free(self) -> bool {
        matches!(self, ObjectiveKind::H1 | ObjectiveKind::H2 | ObjectiveKind::Constant)
    }

    fn on_ball(self) -> bool {
        matches!(self, ObjectiveKind::H1 | ObjectiveKind::H2)
    }
}

/// A noiseless objective together with its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    kind: ObjectiveKind,
    dim: usize,
    theta: Vec<f64>,
    level: f64,
}

impl Objective {
    pub fn h1(theta: Vec<f64>) -> Result<Self> {
        Self::with_theta(ObjectiveKind::H1, theta)
    }

    pub fn h2(theta: Vec<f64>) -> Result<Self> {
        Self::with_theta(ObjectiveKind::H2, theta)
    }

    fn with_theta(kind: ObjectiveKind, theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidInput("theta must be non-empty".into()));
        }
        Ok(Objective {
            kind,
            dim: theta.len(),
            theta,
            level: 0.0,
        })
    }

    pub fn branin() -> Self {
        Objective {
            kind: ObjectiveKind::Branin,
            dim: 2,
            theta: Vec::new(),
            level: 0.0,
        }
    }

    pub fn hartmann4() -> Self {
        Objective {
            kind: ObjectiveKind::Hartmann4,
            dim: 4,
            theta: Vec::new(),
            level: 0.0,
        }
    }

    /// The flat function `f = level` on `[0, 1]^dim`.
    pub fn constant(level: f64, dim: usize) -> Self {
        Objective {
            kind: ObjectiveKind::Constant,
            dim,
            theta: Vec::new(),
            level,
        }
    }

    /// Builds an objective by kind, drawing `theta` from `rng` when needed.
    pub fn build(kind: ObjectiveKind, dim: Option<usize>, rng: &mut Stream) -> Result<Self> {
        let d = dim.unwrap_or(kind.default_dim());
        if d != kind.default_dim() && !kind.dim_is_free() {
            return Err(Error::InvalidInput(format!(
                "{} is only defined in dimension {}",
                kind.name(),
                kind.default_dim()
            )));
        }
        match kind {
            ObjectiveKind::H1 => Self::h1(sample_theta_star(rng, d)?),
            ObjectiveKind::H2 => Self::h2(sample_theta_star(rng, d)?),
            ObjectiveKind::Branin => Ok(Self::branin()),
            ObjectiveKind::Hartmann4 => Ok(Self::hartmann4()),
            ObjectiveKind::Constant => Ok(Self::constant(0.0, d)),
        }
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        if x.len() != self.dim {
            return false;
        }
        if self.kind.on_ball() {
            x.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1.0 + 1e-12
        } else {
            x.iter().all(|v| (0.0..=1.0).contains(v))
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if !self.in_domain(x) {
            return Err(Error::InvalidInput(format!(
                "{x:?} lies outside the domain of {}",
                self.name()
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self.kind {
            ObjectiveKind::H1 => (3.0 * dot(x, &self.theta)).cos(),
            ObjectiveKind::H2 => {
                let s = dot(x, &self.theta);
                s * s * s - 3.0 * s * s + 3.0 * s + 3.0
            }
            ObjectiveKind::Branin => -branin(15.0 * x[0] - 5.0, 15.0 * x[1]),
            ObjectiveKind::Hartmann4 => -hartmann4(x),
            ObjectiveKind::Constant => self.level,
        }
    }

    /// Discretisation used when the configuration does not override it:
    /// 50 points per axis up to two dimensions, 20 in three, 12 above, and a
    /// rejection-sampled cloud of `ball_points` points for balls above three
    /// dimensions.
    pub fn default_grid(&self, resolution: Option<usize>, ball_points: usize, rng: &mut Stream) -> Result<GridDomain> {
        let d = self.dim;
        let res = resolution.unwrap_or(match d {
            1 | 2 => 50,
            3 => 20,
            _ => 12,
        });
        if self.kind.on_ball() {
            if d <= 3 {
                GridDomain::ball_lattice(d, res)
            } else {
                GridDomain::ball_sampled(d, ball_points, rng)
            }
        } else {
            GridDomain::boxed(&vec![0.0; d], &vec![1.0; d], res)
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Standard Branin-Hoo on its native domain (a minimisation problem).
pub fn branin(x1: f64, x2: f64) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    let q = x2 - b * x1 * x1 + c * x1 - 6.0;
    q * q + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

/// Four-dimensional Hartmann on `[0, 1]^4` (a minimisation problem).
pub fn hartmann4(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        let inner: f64 = (0..4)
            .map(|j| HARTMANN_A[i][j] * (x[j] - HARTMANN_P[i][j]).powi(2))
            .sum();
        s += HARTMANN_ALPHA[i] * (-inner).exp();
    }
    (1.1 - s) / 0.839
}

/// Uniform direction on the unit sphere in `R^d` (normalised Gaussian).
pub fn sample_theta_star(rng: &mut Stream, d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidInput("theta dimension must be at least 1".into()));
    }
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-300 {
            return Ok(g.into_iter().map(|v| v / n).collect());
        }
    }
}

/// `f(x) + eps` with `eps ~ N(0, noise_std^2)` drawn from `rng`.
pub fn noisy_query(o: &Objective, x: &[f64], noise_std: f64, rng: &mut Stream) -> Result<f64> {
    if !(noise_std >= 0.0) {
        return Err(Error::InvalidInput(format!("noise_std must be >= 0, got {noise_std}")));
    }
    let f = o.eval(x)?;
    let eps: f64 = rng.sample(StandardNormal);
    Ok(f + noise_std * eps)
}

/// Best grid point of an objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub index: usize,
    pub value: f64,
}

/// Scans the grid for the maximiser, ties going to the lowest index.
pub fn grid_optimum(o: &Objective, grid: &GridDomain) -> GridOptimum {
    let mut best = GridOptimum {
        index: 0,
        value: f64::NEG_INFINITY,
    };
    for (i, x) in grid.points().iter().enumerate() {
        let v = o.eval_unchecked(x);
        if v > best.value {
            best = GridOptimum { index: i, value: v };
        }
    }
    best
}

/// `max |f|` over the grid, used as the RKHS-norm bound in confidence widths.
pub fn coarse_bound(o: &Objective, grid: &GridDomain) -> f64 {
    grid.points()
        .iter()
        .map(|x| o.eval_unchecked(x).abs())
        .fold(0.0, f64::max)
}

/// The world the agents live in: objective, grid, and private noise streams.
///
/// Each agent has its own noise stream derived from the run seed; nothing
/// outside the environment can reproduce those draws.
#[derive(Debug, Clone)]
pub struct Environment {
    objective: Objective,
    grid: Arc<GridDomain>,
    optimum: GridOptimum,
    values: Vec<f64>,
    noise_std: f64,
    noise: Vec<Stream>,
}

impl Environment {
    /// One noise stream per entry of `noise_seeds`.
    pub fn new(objective: Objective, grid: Arc<GridDomain>, noise_std: f64, noise_seeds: &[u64]) -> Result<Self> {
        if grid.dim() != objective.dim() {
            return Err(Error::InvalidInput(format!(
                "grid dimension {} does not match objective dimension {}",
                grid.dim(),
                objective.dim()
            )));
        }
        if !(noise_std >= 0.0) {
            return Err(Error::InvalidInput(format!("noise_std must be >= 0, got {noise_std}")));
        }
        if let Some(x) = grid.points().iter().find(|x| !objective.in_domain(x)) {
            return Err(Error::InvalidInput(format!("grid point {x:?} outside objective domain")));
        }
        let values: Vec<f64> = grid.points().iter().map(|x| objective.eval_unchecked(x)).collect();
        let optimum = grid_optimum(&objective, &grid);
        Ok(Environment {
            objective,
            grid,
            optimum,
            values,
            noise_std,
            noise: noise_seeds.iter().map(|s| rng::seeded(*s)).collect(),
        })
    }

    /// Noise seeds for `agents` agents of a run.
    pub fn agent_noise_seeds(run_seed: u64, agents: usize) -> Vec<u64> {
        (0..agents as u64)
            .map(|n| rng::derive_seed(run_seed, Purpose::Noise, n, 0))
            .collect()
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn grid(&self) -> &Arc<GridDomain> {
        &self.grid
    }

    pub fn optimum(&self) -> GridOptimum {
        self.optimum
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn agents(&self) -> usize {
        self.noise.len()
    }

    /// Noiseless value at a grid point.
    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// `f(x*_grid) - f(x)` at a grid point.
    pub fn regret(&self, index: usize) -> f64 {
        self.optimum.value - self.values[index]
    }

    /// Noisy observation for `agent` at a grid point.
    pub fn query(&mut self, agent: usize, index: usize) -> f64 {
        let eps: f64 = self.noise[agent].sample(StandardNormal);
        self.values[index] + self.noise_std * eps
    }

    /// Splits into per-agent views that can be driven independently.
    pub fn split_agents(&mut self) -> Vec<AgentEnv<'_>> {
        let values = &self.values;
        let noise_std = self.noise_std;
        self.noise
            .iter_mut()
            .map(|rng| AgentEnv {
                values,
                noise_std,
                rng,
            })
            .collect()
    }
}

/// One agent's slice of an [`Environment`].
pub struct AgentEnv<'a> {
    values: &'a [f64],
    noise_std: f64,
    rng: &'a mut Stream,
}

impl AgentEnv<'_> {
    pub fn query(&mut self, index: usize) -> f64 {
        let eps: f64 = self.rng.sample(StandardNormal);
        self.values[index] + self.noise_std * eps
    }
}
