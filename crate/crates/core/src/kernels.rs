//! Stationary kernels, Gram matrices and information gain.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// A set of points in `R^d`, stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize) -> Self {
        Points { dim, data: Vec::new() }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        Points {
            dim,
            data: Vec::with_capacity(dim * n),
        }
    }

    /// Builds a set from rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut pts = Points::with_capacity(dim, rows.len());
        for r in rows {
            pts.push(r.as_ref())?;
        }
        Ok(pts)
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 && !data.is_empty() || dim > 0 && !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "flat buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        Ok(Points { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if self.data.is_empty() && self.dim == 0 {
            self.dim = x.len();
        }
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "point of dimension {} pushed into set of dimension {}",
                x.len(),
                self.dim
            )));
        }
        self.data.extend_from_slice(x);
        Ok(())
    }

    /// Gathers the rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Points {
        let mut out = Points::with_capacity(self.dim, indices.len());
        for &i in indices {
            out.data.extend_from_slice(self.row(i));
        }
        out
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

/// Kernel family. Matérn smoothness is restricted to the half-integer cases
/// with closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    SquaredExponential,
    Matern12,
    Matern32,
    Matern52,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::SquaredExponential => "se",
            KernelFamily::Matern12 => "matern12",
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Matern52 => "matern52",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "se" | "rbf" | "squared_exponential" => Some(KernelFamily::SquaredExponential),
            "matern12" | "matern1/2" => Some(KernelFamily::Matern12),
            "matern32" | "matern3/2" => Some(KernelFamily::Matern32),
            "matern52" | "matern5/2" => Some(KernelFamily::Matern52),
            _ => None,
        }
    }
}

/// Kernel family plus hyperparameters. Defines `k(x, x')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    lengthscale: f64,
    variance_scale: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscale: f64, variance_scale: f64) -> Result<Self> {
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "lengthscale must be positive, got {lengthscale}"
            )));
        }
        if !(variance_scale > 0.0 && variance_scale.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "variance_scale must be positive, got {variance_scale}"
            )));
        }
        Ok(KernelSpec {
            family,
            lengthscale,
            variance_scale,
        })
    }

    /// Squared-exponential kernel with unit variance.
    pub fn se(lengthscale: f64) -> Result<Self> {
        Self::new(KernelFamily::SquaredExponential, lengthscale, 1.0)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    pub fn variance_scale(&self) -> f64 {
        self.variance_scale
    }

    /// `k(x, x)`, identical for every `x`.
    pub fn diag(&self) -> f64 {
        self.variance_scale
    }

    /// Kernel value without the dimension check. Callers guarantee
    /// `x.len() == y.len()`.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        self.of_sq_dist(sq)
    }

    #[inline]
    fn of_sq_dist(&self, sq: f64) -> f64 {
        let l = self.lengthscale;
        let s = self.variance_scale;
        match self.family {
            KernelFamily::SquaredExponential => s * (-sq / (2.0 * l * l)).exp(),
            KernelFamily::Matern12 => s * (-sq.sqrt() / l).exp(),
            KernelFamily::Matern32 => {
                let a = 3f64.sqrt() * sq.sqrt() / l;
                s * (1.0 + a) * (-a).exp()
            }
            KernelFamily::Matern52 => {
                let a = 5f64.sqrt() * sq.sqrt() / l;
                s * (1.0 + a + a * a / 3.0) * (-a).exp()
            }
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "kernel arguments have dimensions {} and {}",
                x.len(),
                y.len()
            )));
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// Writes `k(p_i, x)` for every point of `pts` into `out`.
    pub(crate) fn cross_into(&self, pts: &Points, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(pts.dim(), x.len());
        for (o, p) in out.iter_mut().zip(pts.iter()) {
            *o = self.eval_unchecked(p, x);
        }
    }

    /// The vector `k_X(x) = [k(x_1, x), ..., k(x_m, x)]`.
    pub fn cross(&self, pts: &Points, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(pts, x)?;
        let mut out = vec![0.0; pts.len()];
        self.cross_into(pts, x, &mut out);
        Ok(out)
    }
}

pub(crate) fn check_dim(pts: &Points, x: &[f64]) -> Result<()> {
    if !pts.is_empty() && pts.dim() != x.len() {
        return Err(Error::InvalidInput(format!(
            "point of dimension {} against set of dimension {}",
            x.len(),
            pts.dim()
        )));
    }
    Ok(())
}

/// Gram matrix `K[i, j] = k(x_i, x_j)`. Only the lower triangle is computed;
/// the upper triangle is mirrored so the result is exactly symmetric.
pub fn kernel_matrix(spec: &KernelSpec, pts: &Points) -> DMatrix<f64> {
    let m = pts.len();
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..i {
            let v = spec.eval_unchecked(pts.row(i), pts.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] = spec.diag();
    }
    k
}

/// Information gain `1/2 log det(I + K / lambda)` of a point set.
///
/// Eigenvalues of `K` in `[-tol, 0)` are floored to zero, with
/// `tol = 1e-9 * m * variance_scale`; anything more negative is reported as a
/// numerical failure.
pub fn information_gain(spec: &KernelSpec, pts: &Points, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let m = pts.len();
    if m == 0 {
        return Ok(0.0);
    }
    let k = kernel_matrix(spec, pts);
    let tol = 1e-9 * m as f64 * spec.variance_scale();
    let eig = linalg::sym_eigenvalues(&k);
    let mut acc = 0.0;
    for e in eig.iter() {
        if *e < -tol {
            return Err(Error::Numerical(format!(
                "kernel matrix has eigenvalue {e} below tolerance -{tol}"
            )));
        }
        acc += (e.max(0.0) / lambda).ln_1p();
    }
    Ok(0.5 * acc)
}
