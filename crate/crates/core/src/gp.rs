//! Gaussian-process posteriors: exact, and Nyström-sparse over an inducing set.
//!
//! Both posteriors report variance on the same scale,
//! `k(x,x) - k_X(x)^T (lambda I + K)^{-1} k_X(x)` for the exact model. The
//! sparse model's bracketed quantity `k(x,x) - z^T Z^T Z (lambda I + Z^T Z)^{-1} z`
//! lands on that scale directly; [`SparsePosterior::scaled_variance`] gives
//! the same value divided by `lambda` for callers that want that convention.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernels::{check_dim, kernel_matrix, KernelSpec, Points};
use crate::linalg::{self, Cholesky};

const GRID_CHUNK: usize = 256;

/// Posterior mean and variance at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Exact GP posterior conditioned on `m` observations.
///
/// Bitwise-identical conditioning points are merged: `c` copies of a point
/// with mean reward `y_bar` are equivalent to one point with noise variance
/// `lambda / c`. The factorization is of `K_u + lambda * diag(1/c)` over the
/// distinct points, which gives exactly the same mean and variance as the
/// full `m x m` system.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    spec: KernelSpec,
    support: Points,
    counts: Vec<usize>,
    factor: Option<Cholesky>,
    weights: Vec<f64>,
    lambda: f64,
    observations: usize,
}

impl GpPosterior {
    pub fn new(spec: KernelSpec, points: &Points, rewards: &[f64], lambda: f64) -> Result<Self> {
        if points.len() != rewards.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} rewards",
                points.len(),
                rewards.len()
            )));
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!(
                "lambda must be positive, got {lambda}"
            )));
        }

        let mut slot: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut support = Points::new(points.dim());
        let mut counts = Vec::new();
        let mut sums = Vec::new();
        for (x, &y) in points.iter().zip(rewards) {
            let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
            match slot.get(&key) {
                Some(&i) => {
                    counts[i] += 1;
                    sums[i] += y;
                }
                None => {
                    slot.insert(key, counts.len());
                    support.push(x)?;
                    counts.push(1);
                    sums.push(y);
                }
            }
        }

        let u = counts.len();
        let (factor, weights) = if u == 0 {
            (None, Vec::new())
        } else {
            let mut a = kernel_matrix(&spec, &support);
            for i in 0..u {
                a[(i, i)] += lambda / counts[i] as f64;
            }
            let factor = Cholesky::new(a)?;
            let mut w: Vec<f64> = sums
                .iter()
                .zip(&counts)
                .map(|(s, &c)| s / c as f64)
                .collect();
            factor.solve(&mut w);
            (Some(factor), w)
        };

        Ok(GpPosterior {
            spec,
            support,
            counts,
            factor,
            weights,
            lambda,
            observations: points.len(),
        })
    }

    /// Posterior whose mean is irrelevant (all rewards zero). The variance
    /// depends only on the query locations.
    pub fn variance_only(spec: KernelSpec, points: &Points, lambda: f64) -> Result<Self> {
        Self::new(spec, points, &vec![0.0; points.len()], lambda)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of observations conditioned on, duplicates included.
    pub fn len(&self) -> usize {
        self.observations
    }

    pub fn is_empty(&self) -> bool {
        self.observations == 0
    }

    /// Number of distinct conditioning points.
    pub fn distinct_points(&self) -> usize {
        self.counts.len()
    }

    fn predict_with(&self, x: &[f64], kx: &mut Vec<f64>, scratch: &mut Vec<f64>) -> Prediction {
        let prior = self.spec.diag();
        let Some(factor) = &self.factor else {
            return Prediction {
                mean: 0.0,
                variance: prior,
            };
        };
        kx.resize(self.support.len(), 0.0);
        self.spec.cross_into(&self.support, x, kx);
        let mean = kx.iter().zip(&self.weights).map(|(a, b)| a * b).sum();
        let reduction = factor.quad_form(kx, scratch);
        Prediction {
            mean,
            variance: (prior - reduction).max(0.0),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_dim(&self.support, x)?;
        Ok(self.predict_with(x, &mut Vec::new(), &mut Vec::new()))
    }

    /// Predictions at `pts.row(i)` for each `i` in `rows`, in order.
    pub fn predict_rows(&self, pts: &Points, rows: &[usize], exec: Execution) -> Result<Vec<Prediction>> {
        if !self.support.is_empty() && pts.dim() != self.support.dim() {
            return Err(Error::InvalidInput(format!(
                "query set dimension {} against posterior dimension {}",
                pts.dim(),
                self.support.dim()
            )));
        }
        let chunks = rows.len().div_ceil(GRID_CHUNK);
        let parts = exec.map(chunks, |c| {
            let lo = c * GRID_CHUNK;
            let hi = (lo + GRID_CHUNK).min(rows.len());
            let mut kx = Vec::new();
            let mut scratch = Vec::new();
            rows[lo..hi]
                .iter()
                .map(|&i| self.predict_with(pts.row(i), &mut kx, &mut scratch))
                .collect::<Vec<_>>()
        });
        Ok(parts.into_iter().flatten().collect())
    }

    pub fn predict_all(&self, pts: &Points, exec: Execution) -> Result<Vec<Prediction>> {
        let rows: Vec<usize> = (0..pts.len()).collect();
        self.predict_rows(pts, &rows, exec)
    }
}

/// Nyström feature map `z_S(x) = K_{S,S}^{-1/2} k_S(x)` for an inducing set `S`.
///
/// The inverse square root comes from a symmetric eigendecomposition with
/// eigenvalues floored at `1e-13 * r * variance_scale`, so duplicated inducing
/// points are harmless. An empty inducing set maps every point to the empty
/// vector.
#[derive(Debug, Clone)]
pub struct NystromFeatures {
    spec: KernelSpec,
    inducing: Points,
    gram_inv_sqrt: DMatrix<f64>,
}

impl NystromFeatures {
    pub fn new(spec: KernelSpec, inducing: Points) -> Self {
        let r = inducing.len();
        let floor = 1e-13 * r as f64 * spec.variance_scale();
        let gram_inv_sqrt = linalg::sym_inv_sqrt(&kernel_matrix(&spec, &inducing), floor);
        NystromFeatures {
            spec,
            inducing,
            gram_inv_sqrt,
        }
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn inducing(&self) -> &Points {
        &self.inducing
    }

    pub fn gram_inv_sqrt(&self) -> &DMatrix<f64> {
        &self.gram_inv_sqrt
    }

    /// Feature dimension `r = |S|`.
    pub fn rank(&self) -> usize {
        self.inducing.len()
    }

    fn features_with(&self, x: &[f64], ks: &mut Vec<f64>, out: &mut Vec<f64>) {
        let r = self.rank();
        ks.resize(r, 0.0);
        self.spec.cross_into(&self.inducing, x, ks);
        out.clear();
        out.resize(r, 0.0);
        // gram_inv_sqrt is symmetric: iterate columns for contiguous access
        for (j, kj) in ks.iter().enumerate() {
            let col = self.gram_inv_sqrt.column(j);
            for (o, g) in out.iter_mut().zip(col.iter()) {
                *o += g * kj;
            }
        }
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(&self.inducing, x)?;
        let mut out = Vec::new();
        self.features_with(x, &mut Vec::new(), &mut out);
        Ok(out)
    }

    /// `Z^T Z = sum_i z(x_i) z(x_i)^T` over a data set.
    pub fn gram(&self, data: &Points) -> Result<DMatrix<f64>> {
        let r = self.rank();
        let mut ztz = DMatrix::zeros(r, r);
        if r == 0 {
            return Ok(ztz);
        }
        if !data.is_empty() {
            check_dim(&self.inducing, data.row(0))?;
        }
        let (mut ks, mut z) = (Vec::new(), Vec::new());
        for x in data.iter() {
            self.features_with(x, &mut ks, &mut z);
            for j in 0..r {
                let zj = z[j];
                for i in j..r {
                    ztz[(i, j)] += z[i] * zj;
                }
            }
        }
        for j in 0..r {
            for i in j + 1..r {
                ztz[(j, i)] = ztz[(i, j)];
            }
        }
        Ok(ztz)
    }

    /// `Z^T y = sum_i z(x_i) y_i`.
    pub fn project(&self, data: &Points, y: &[f64]) -> Result<Vec<f64>> {
        if data.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} rewards",
                data.len(),
                y.len()
            )));
        }
        let r = self.rank();
        let mut v = vec![0.0; r];
        if r == 0 {
            return Ok(v);
        }
        if !data.is_empty() {
            check_dim(&self.inducing, data.row(0))?;
        }
        let (mut ks, mut z) = (Vec::new(), Vec::new());
        for (x, yi) in data.iter().zip(y) {
            self.features_with(x, &mut ks, &mut z);
            for (vj, zj) in v.iter_mut().zip(&z) {
                *vj += zj * yi;
            }
        }
        Ok(v)
    }

    /// `z(x)^T w` for each row, in order. This is the sparse posterior mean
    /// when `w` is the aggregated weight vector.
    pub fn linear_rows(&self, pts: &Points, rows: &[usize], w: &[f64], exec: Execution) -> Vec<f64> {
        if self.rank() == 0 {
            return vec![0.0; rows.len()];
        }
        exec.map_chunked(rows.len(), GRID_CHUNK, |i| {
            let (mut ks, mut z) = (Vec::new(), Vec::new());
            self.features_with(pts.row(rows[i]), &mut ks, &mut z);
            z.iter().zip(w).map(|(a, b)| a * b).sum()
        })
    }
}

/// Sparse posterior built from Nyström features.
///
/// Holds exactly what the server needs: the inducing set (inside the
/// features), `Z^T Z`, and the mean weights `(lambda I + Z^T Z)^{-1} Z^T Y`.
#[derive(Debug, Clone)]
pub struct SparsePosterior {
    features: NystromFeatures,
    ztz: DMatrix<f64>,
    factor: Option<Cholesky>,
    weights: Vec<f64>,
    lambda: f64,
}

impl SparsePosterior {
    /// Fits directly from data: computes `Z^T Z` and `Z^T Y` and solves.
    pub fn fit(spec: KernelSpec, inducing: Points, data: &Points, y: &[f64], lambda: f64) -> Result<Self> {
        let features = NystromFeatures::new(spec, inducing);
        let ztz = features.gram(data)?;
        let zty = features.project(data, y)?;
        Self::from_projection(features, ztz, &zty, lambda)
    }

    /// Builds from `Z^T Z` and the raw projection `Z^T Y`.
    pub fn from_projection(features: NystromFeatures, ztz: DMatrix<f64>, zty: &[f64], lambda: f64) -> Result<Self> {
        let (factor, mut weights) = Self::factor(&features, &ztz, zty, lambda)?;
        if let Some(f) = &factor {
            f.solve(&mut weights);
        }
        Ok(SparsePosterior {
            features,
            ztz,
            factor,
            weights,
            lambda,
        })
    }

    /// Builds from `Z^T Z` and already-solved mean weights.
    pub fn from_weights(features: NystromFeatures, ztz: DMatrix<f64>, weights: Vec<f64>, lambda: f64) -> Result<Self> {
        let (factor, weights) = Self::factor(&features, &ztz, &weights, lambda)?;
        Ok(SparsePosterior {
            features,
            ztz,
            factor,
            weights,
            lambda,
        })
    }

    fn factor(
        features: &NystromFeatures,
        ztz: &DMatrix<f64>,
        vec: &[f64],
        lambda: f64,
    ) -> Result<(Option<Cholesky>, Vec<f64>)> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        let r = features.rank();
        if ztz.shape() != (r, r) || vec.len() != r {
            return Err(Error::InvalidInput(format!(
                "inconsistent sparse state: rank {r}, Z^T Z {:?}, vector {}",
                ztz.shape(),
                vec.len()
            )));
        }
        if r == 0 {
            return Ok((None, Vec::new()));
        }
        let mut m = ztz.clone();
        for i in 0..r {
            m[(i, i)] += lambda;
        }
        Ok((Some(Cholesky::new(m)?), vec.to_vec()))
    }

    pub fn features(&self) -> &NystromFeatures {
        &self.features
    }

    pub fn ztz(&self) -> &DMatrix<f64> {
        &self.ztz
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn predict_with(&self, x: &[f64], ks: &mut Vec<f64>, z: &mut Vec<f64>, scratch: &mut Vec<f64>) -> Prediction {
        let prior = self.features.spec.diag();
        let Some(factor) = &self.factor else {
            return Prediction {
                mean: 0.0,
                variance: prior,
            };
        };
        self.features.features_with(x, ks, z);
        let mean = z.iter().zip(&self.weights).map(|(a, b)| a * b).sum();
        // z^T Z^T Z (lambda I + Z^T Z)^{-1} z = |z|^2 - lambda z^T (lambda I + Z^T Z)^{-1} z
        let zz: f64 = z.iter().map(|v| v * v).sum();
        let q = factor.quad_form(z, scratch);
        let variance = (prior - zz + self.lambda * q).clamp(0.0, prior);
        Prediction { mean, variance }
    }

    /// Mean and variance (on the exact-posterior scale) at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_dim(self.features.inducing(), x)?;
        Ok(self.predict_with(x, &mut Vec::new(), &mut Vec::new(), &mut Vec::new()))
    }

    /// The variance divided by `lambda`.
    pub fn scaled_variance(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict(x)?.variance / self.lambda)
    }

    pub fn predict_rows(&self, pts: &Points, rows: &[usize], exec: Execution) -> Vec<Prediction> {
        exec.map_chunked(rows.len(), GRID_CHUNK, |i| {
            let (mut ks, mut z, mut s) = (Vec::new(), Vec::new(), Vec::new());
            self.predict_with(pts.row(rows[i]), &mut ks, &mut z, &mut s)
        })
    }
}

/// Confidence width `B + R sqrt((2 / lambda) log(2 / delta))`.
pub fn confidence_width(rkhs_bound: f64, noise_scale: f64, lambda: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(rkhs_bound >= 0.0) || !(noise_scale >= 0.0) || !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need B >= 0, R >= 0, lambda > 0; got B={rkhs_bound}, R={noise_scale}, lambda={lambda}"
        )));
    }
    Ok(rkhs_bound + noise_scale * ((2.0 / lambda) * (2.0 / delta).ln()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use nalgebra::DVector;
    use rand::Rng;

    fn random_points(n: usize, d: usize, r: &mut rng::Stream) -> Points {
        let flat = (0..n * d).map(|_| r.random::<f64>()).collect();
        Points::from_flat(d, flat).unwrap()
    }

    /// Dense oracle: explicit inverse of `lambda I + K` over raw observations.
    fn dense_oracle(spec: &KernelSpec, x: &Points, y: &[f64], lambda: f64, q: &[f64]) -> (f64, f64) {
        let m = x.len();
        let a = kernel_matrix(spec, x) + DMatrix::identity(m, m) * lambda;
        let inv = a.try_inverse().unwrap();
        let k = DVector::from_vec(spec.cross(x, q).unwrap());
        let yv = DVector::from_column_slice(y);
        let mean = (k.transpose() * &inv * yv)[(0, 0)];
        let var = spec.diag() - (k.transpose() * &inv * &k)[(0, 0)];
        (mean, var)
    }

    #[test]
    fn empty_posterior_is_prior() {
        let spec = KernelSpec::new(crate::kernels::KernelFamily::SquaredExponential, 0.5, 2.0).unwrap();
        let gp = GpPosterior::new(spec, &Points::new(2), &[], 0.1).unwrap();
        let p = gp.predict(&[0.3, 0.3]).unwrap();
        assert_eq!(p.mean, 0.0);
        assert_eq!(p.variance, 2.0);
    }

    #[test]
    fn one_point_closed_form() {
        let spec = KernelSpec::se(1.0).unwrap();
        let x = Points::from_rows(&[[0.2]]).unwrap();
        let gp = GpPosterior::new(spec, &x, &[1.0], 1.0).unwrap();
        let p = gp.predict(&[0.2]).unwrap();
        assert!((p.mean - 0.5).abs() < 1e-15);
        assert!((p.variance - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let spec = KernelSpec::se(1.0).unwrap();
        let x = Points::from_rows(&[[0.2], [0.3]]).unwrap();
        assert!(GpPosterior::new(spec, &x, &[1.0], 1.0).is_err());
        assert!(GpPosterior::new(spec, &x, &[1.0, 2.0], 0.0).is_err());
        let gp = GpPosterior::new(spec, &x, &[1.0, 2.0], 1.0).unwrap();
        assert!(gp.predict(&[0.1, 0.1]).is_err());
    }

    #[test]
    fn matches_dense_inverse_oracle() {
        let mut r = rng::seeded(3);
        let spec = KernelSpec::se(0.4).unwrap();
        let x = random_points(50, 3, &mut r);
        let y: Vec<f64> = (0..50).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
        let gp = GpPosterior::new(spec, &x, &y, 0.04).unwrap();
        for _ in 0..50 {
            let q: Vec<f64> = (0..3).map(|_| r.random::<f64>()).collect();
            let (m, v) = dense_oracle(&spec, &x, &y, 0.04, &q);
            let p = gp.predict(&q).unwrap();
            assert!((p.mean - m).abs() < 1e-8, "{} vs {}", p.mean, m);
            assert!((p.variance - v.max(0.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn duplicates_match_dense_oracle() {
        let mut r = rng::seeded(4);
        let spec = KernelSpec::se(0.5).unwrap();
        let base = random_points(6, 2, &mut r);
        let picks: Vec<usize> = (0..40).map(|_| r.random_range(0..6)).collect();
        let x = base.select(&picks);
        let y: Vec<f64> = (0..40).map(|_| r.random::<f64>()).collect();
        let gp = GpPosterior::new(spec, &x, &y, 0.2).unwrap();
        assert!(gp.distinct_points() <= 6);
        assert_eq!(gp.len(), 40);
        for q in base.iter().chain([[0.5, 0.5].as_slice()]) {
            let (m, v) = dense_oracle(&spec, &x, &y, 0.2, q);
            let p = gp.predict(q).unwrap();
            assert!((p.mean - m).abs() < 1e-9);
            assert!((p.variance - v).abs() < 1e-9);
        }
    }

    #[test]
    fn variance_bounded_and_monotone_under_appending() {
        let mut r = rng::seeded(9);
        let spec = KernelSpec::se(0.3).unwrap();
        let tests = random_points(100, 2, &mut r);
        let all = random_points(30, 2, &mut r);
        let mut prev = vec![spec.diag(); tests.len()];
        for m in 1..=30 {
            let x = all.select(&(0..m).collect::<Vec<_>>());
            let gp = GpPosterior::variance_only(spec, &x, 0.04).unwrap();
            let preds = gp.predict_all(&tests, Execution::Sequential).unwrap();
            for (p, old) in preds.iter().zip(prev.iter_mut()) {
                assert!(p.variance >= 0.0 && p.variance <= spec.diag());
                assert!(p.variance <= *old + 1e-9);
                *old = p.variance;
            }
        }
    }

    #[test]
    fn batch_equals_pointwise() {
        let mut r = rng::seeded(10);
        let spec = KernelSpec::se(0.3).unwrap();
        let x = random_points(20, 2, &mut r);
        let y: Vec<f64> = (0..20).map(|_| r.random::<f64>()).collect();
        let gp = GpPosterior::new(spec, &x, &y, 0.1).unwrap();
        let grid = random_points(700, 2, &mut r);
        let seq = gp.predict_all(&grid, Execution::Sequential).unwrap();
        let par = gp.predict_all(&grid, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq[17], gp.predict(grid.row(17)).unwrap());
    }

    #[test]
    fn nystrom_scalar_and_far_separated() {
        let spec = KernelSpec::se(1.0).unwrap();
        let s = Points::from_rows(&[[0.0, 0.0]]).unwrap();
        let f = NystromFeatures::new(spec, s);
        let z = f.features(&[0.3, 0.4]).unwrap();
        let k = spec.eval(&[0.0, 0.0], &[0.3, 0.4]).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0] - k).abs() < 1e-12);

        let far = Points::from_rows(&[[0.0, 0.0], [50.0, 0.0], [0.0, 50.0], [50.0, 50.0]]).unwrap();
        let f = NystromFeatures::new(spec, far.clone());
        for x in far.iter() {
            let z = f.features(x).unwrap();
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn nystrom_feature_norm_below_prior() {
        let mut r = rng::seeded(12);
        let spec = KernelSpec::se(0.3).unwrap();
        for trial in 0..20 {
            let s = random_points(1 + trial, 2, &mut r);
            let f = NystromFeatures::new(spec, s);
            for _ in 0..50 {
                let x = [r.random::<f64>(), r.random::<f64>()];
                let z = f.features(&x).unwrap();
                let n2: f64 = z.iter().map(|v| v * v).sum();
                assert!(n2 <= spec.diag() + 1e-6, "{n2}");
            }
        }
    }

    #[test]
    fn empty_inducing_set_gives_prior() {
        let spec = KernelSpec::se(1.0).unwrap();
        let data = Points::from_rows(&[[0.1], [0.2]]).unwrap();
        let sp = SparsePosterior::fit(spec, Points::new(1), &data, &[1.0, 2.0], 0.5).unwrap();
        let p = sp.predict(&[0.4]).unwrap();
        assert_eq!(p.mean, 0.0);
        assert_eq!(p.variance, 1.0);
        assert_eq!(sp.scaled_variance(&[0.4]).unwrap() * 0.5, 1.0);
        assert!(sp.features().features(&[0.4]).unwrap().is_empty());
    }

    #[test]
    fn single_inducing_point_matches_exact() {
        let spec = KernelSpec::se(1.0).unwrap();
        let d = Points::from_rows(&[[0.7]]).unwrap();
        let sp = SparsePosterior::fit(spec, d.clone(), &d, &[1.0], 1.0).unwrap();
        let p = sp.predict(&[0.7]).unwrap();
        assert!((p.mean - 0.5).abs() < 1e-12);
        assert!((p.variance - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sparse_with_full_inducing_set_equals_exact() {
        let mut r = rng::seeded(21);
        let spec = KernelSpec::se(0.5).unwrap();
        for &lambda in &[0.04, 1.0] {
            let d = random_points(60, 2, &mut r);
            let y: Vec<f64> = (0..60).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
            let exact = GpPosterior::new(spec, &d, &y, lambda).unwrap();
            let sparse = SparsePosterior::fit(spec, d.clone(), &d, &y, lambda).unwrap();
            for _ in 0..100 {
                let q = [r.random::<f64>(), r.random::<f64>()];
                let a = exact.predict(&q).unwrap();
                let b = sparse.predict(&q).unwrap();
                assert!((a.mean - b.mean).abs() < 1e-6, "{a:?} {b:?}");
                assert!((a.variance - b.variance).abs() < 1e-6, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn sparse_rejects_inconsistent_state() {
        let spec = KernelSpec::se(1.0).unwrap();
        let f = NystromFeatures::new(spec, Points::from_rows(&[[0.0], [1.0]]).unwrap());
        assert!(SparsePosterior::from_weights(f, DMatrix::zeros(3, 3), vec![0.0; 2], 1.0).is_err());
    }

    #[test]
    fn confidence_width_cases() {
        assert_eq!(confidence_width(1.7, 0.0, 0.3, 0.1).unwrap(), 1.7);
        let delta = 2.0 / std::f64::consts::E.powi(2);
        assert!((confidence_width(1.0, 1.0, 1.0, delta).unwrap() - 3.0).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let w = confidence_width(1.0, 0.2, 0.04, i as f64 / 100.0).unwrap();
            assert!(w < prev);
            prev = w;
        }
        assert!(confidence_width(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(confidence_width(1.0, 1.0, 1.0, 1.0).is_err());
    }
}
