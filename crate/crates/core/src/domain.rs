//! Finite discretisations of the search space and the active region.
//!
//! The continuous domain is only ever touched through its grid: sampling,
//! suprema and trimming all range over grid points. Ties are broken by the
//! lowest flat index everywhere, so every party that runs the same
//! computation lands on the same answer.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::Points;
use crate::rng::Stream;

/// Geometry the grid was built from.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainShape {
    /// Axis-aligned box with a regular lattice of `resolution` points per axis.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
        resolution: usize,
    },
    /// Closed unit ball centred at the origin.
    UnitBall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    shape: DomainShape,
    points: Points,
}

impl GridDomain {
    /// Regular lattice over `[lo, hi]` with `resolution` points per axis.
    /// Flat index runs with the last axis fastest.
    pub fn boxed(lo: &[f64], hi: &[f64], resolution: usize) -> Result<Self> {
        let d = lo.len();
        if d == 0 || hi.len() != d {
            return Err(Error::InvalidInput("box bounds must be non-empty and of equal length".into()));
        }
        if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidInput(format!("invalid box bounds {lo:?} .. {hi:?}")));
        }
        if resolution == 0 {
            return Err(Error::InvalidInput("grid resolution must be at least 1".into()));
        }
        let total = resolution
            .checked_pow(d as u32)
            .filter(|n| *n <= 50_000_000)
            .ok_or_else(|| Error::InvalidInput(format!("{resolution}^{d} grid points is too many")))?;
        let axis = |k: usize, i: usize| {
            if resolution == 1 {
                lo[k]
            } else {
                lo[k] + (hi[k] - lo[k]) * i as f64 / (resolution - 1) as f64
            }
        };
        let mut points = Points::with_capacity(d, total);
        let mut x = vec![0.0; d];
        for flat in 0..total {
            let mut rest = flat;
            for k in (0..d).rev() {
                x[k] = axis(k, rest % resolution);
                rest /= resolution;
            }
            points.push(&x)?;
        }
        Ok(GridDomain {
            shape: DomainShape::Box {
                lo: lo.to_vec(),
                hi: hi.to_vec(),
                resolution,
            },
            points,
        })
    }

    /// The lattice on `[-1, 1]^d` restricted to the closed unit ball.
    pub fn ball_lattice(dim: usize, resolution: usize) -> Result<Self> {
        let cube = Self::boxed(&vec![-1.0; dim], &vec![1.0; dim], resolution)?;
        let mut points = Points::new(dim);
        for x in cube.points.iter() {
            if norm(x) <= 1.0 + 1e-12 {
                points.push(x)?;
            }
        }
        if points.is_empty() {
            return Err(Error::InvalidInput("ball lattice is empty".into()));
        }
        Ok(GridDomain {
            shape: DomainShape::UnitBall,
            points,
        })
    }

    /// `count` points drawn uniformly from the unit ball by rejection from
    /// the enclosing cube.
    pub fn ball_sampled(dim: usize, count: usize, rng: &mut Stream) -> Result<Self> {
        if dim == 0 || count == 0 {
            return Err(Error::InvalidInput("sampled ball needs dim >= 1 and count >= 1".into()));
        }
        let mut points = Points::with_capacity(dim, count);
        let mut x = vec![0.0; dim];
        while points.len() < count {
            for v in x.iter_mut() {
                *v = rng.random_range(-1.0..=1.0);
            }
            if norm(&x) <= 1.0 {
                points.push(&x)?;
            }
        }
        Ok(GridDomain {
            shape: DomainShape::UnitBall,
            points,
        })
    }

    pub fn shape(&self) -> &DomainShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    /// Whether `x` lies in the continuous domain the grid discretises.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match &self.shape {
            DomainShape::Box { lo, hi, .. } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= *l && *v <= *h),
            DomainShape::UnitBall => norm(x) <= 1.0 + 1e-12,
        }
    }

    /// Index of the grid point closest to `x` in Euclidean distance.
    pub fn nearest(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "point of dimension {} against grid of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok(best)
    }

    /// Largest axis spacing of a box lattice, `None` for ball grids.
    pub fn max_spacing(&self) -> Option<f64> {
        match &self.shape {
            DomainShape::Box { lo, hi, resolution } if *resolution > 1 => Some(
                lo.iter()
                    .zip(hi)
                    .map(|(l, h)| (h - l) / (*resolution - 1) as f64)
                    .fold(0.0, f64::max),
            ),
            DomainShape::Box { .. } => Some(0.0),
            DomainShape::UnitBall => None,
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Subset of grid points still under consideration in an epoch.
///
/// Never empty: constructors refuse an all-false mask.
#[derive(Debug, Clone)]
pub struct ActiveRegion {
    grid: Arc<GridDomain>,
    mask: Vec<bool>,
    active: Vec<usize>,
    epoch: usize,
}

impl PartialEq for ActiveRegion {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid)
            && self.epoch == other.epoch
            && self.mask == other.mask
    }
}

impl ActiveRegion {
    /// The whole grid, as the region of epoch 1.
    pub fn full(grid: Arc<GridDomain>) -> Self {
        let n = grid.len();
        ActiveRegion {
            grid,
            mask: vec![true; n],
            active: (0..n).collect(),
            epoch: 1,
        }
    }

    pub fn from_mask(grid: Arc<GridDomain>, mask: Vec<bool>, epoch: usize) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "mask of length {} for grid of {} points",
                mask.len(),
                grid.len()
            )));
        }
        let active: Vec<usize> = mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i).collect();
        if active.is_empty() {
            return Err(Error::Protocol("active region would be empty".into()));
        }
        Ok(ActiveRegion {
            grid,
            mask,
            active,
            epoch,
        })
    }

    pub fn grid(&self) -> &Arc<GridDomain> {
        &self.grid
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Active grid indices in increasing order.
    pub fn indices(&self) -> &[usize] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.mask.get(index).copied().unwrap_or(false)
    }

    pub fn is_subset_of(&self, other: &ActiveRegion) -> bool {
        self.mask.len() == other.mask.len() && self.mask.iter().zip(&other.mask).all(|(a, b)| !a || *b)
    }

    /// `count` grid indices drawn i.i.d. uniformly over the active points.
    pub fn uniform_sample(&self, rng: &mut Stream, count: usize) -> Vec<usize> {
        let n = self.active.len();
        (0..count).map(|_| self.active[rng.random_range(0..n)]).collect()
    }

    /// Maximum of `values` (aligned with [`ActiveRegion::indices`]) and the
    /// grid index attaining it.
    pub fn sup_of(&self, values: &[f64]) -> Result<(usize, f64)> {
        if values.len() != self.active.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for {} active points",
                values.len(),
                self.active.len()
            )));
        }
        let mut best = 0;
        for (k, v) in values.iter().enumerate() {
            if *v > values[best] {
                best = k;
            }
        }
        Ok((self.active[best], values[best]))
    }

    /// Supremum of `f` over the active grid points.
    pub fn sup_by(&self, f: impl Fn(&[f64]) -> f64) -> (usize, f64) {
        let values: Vec<f64> = self.active.iter().map(|&i| f(self.grid.point(i))).collect();
        self.sup_of(&values).expect("values aligned by construction")
    }

    /// Keeps the active points whose mean is within `2 * beta * sigma_max`
    /// of the best mean. `means` is aligned with [`ActiveRegion::indices`].
    /// The result belongs to the next epoch.
    pub fn trim_with(&self, means: &[f64], beta: f64, sigma_max: f64) -> Result<ActiveRegion> {
        if !(beta >= 0.0) || !(sigma_max >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "trim needs beta >= 0 and sigma_max >= 0, got {beta}, {sigma_max}"
            )));
        }
        let (_, top) = self.sup_of(means)?;
        let threshold = top - 2.0 * beta * sigma_max;
        let mut mask = vec![false; self.mask.len()];
        for (&i, &m) in self.active.iter().zip(means) {
            if m >= threshold {
                mask[i] = true;
            }
        }
        // the maximiser always clears its own threshold
        assert!(mask.iter().any(|m| *m), "trim emptied the active region");
        ActiveRegion::from_mask(self.grid.clone(), mask, self.epoch + 1)
    }

    pub fn trim_by(&self, mean: impl Fn(&[f64]) -> f64, beta: f64, sigma_max: f64) -> Result<ActiveRegion> {
        let means: Vec<f64> = self.active.iter().map(|&i| mean(self.grid.point(i))).collect();
        self.trim_with(&means, beta, sigma_max)
    }

    /// Active points as a point set, in index order.
    pub fn points(&self) -> Points {
        self.grid.points().select(&self.active)
    }
}
