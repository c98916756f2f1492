//! Dense symmetric factorizations used by the posteriors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Cholesky factor `A = L L^T`, with `L` stored as packed rows for fast
/// repeated triangular solves.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    n: usize,
    // row i occupies packed[i*(i+1)/2 .. i*(i+1)/2 + i + 1]
    packed: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let chol = a
            .cholesky()
            .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
        let l = chol.l();
        let mut packed = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                packed.push(l[(i, j)]);
            }
        }
        Ok(Cholesky { n, packed })
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        let s = i * (i + 1) / 2;
        &self.packed[s..s + i + 1]
    }

    /// Overwrites `b` with `L^{-1} b`.
    pub fn forward(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let row = self.row(i);
            let mut acc = b[i];
            for j in 0..i {
                acc -= row[j] * b[j];
            }
            b[i] = acc / row[i];
        }
    }

    /// Overwrites `b` with `L^{-T} b`.
    pub fn backward(&self, b: &mut [f64]) {
        for i in (0..self.n).rev() {
            let bi = b[i] / self.row(i)[i];
            b[i] = bi;
            let row = self.row(i);
            for j in 0..i {
                b[j] -= row[j] * bi;
            }
        }
    }

    /// Overwrites `b` with `A^{-1} b`.
    pub fn solve(&self, b: &mut [f64]) {
        self.forward(b);
        self.backward(b);
    }

    /// `b^T A^{-1} b`, computed as `|L^{-1} b|^2`. Uses `scratch` as workspace.
    pub fn quad_form(&self, b: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.extend_from_slice(b);
        self.forward(scratch);
        scratch.iter().map(|v| v * v).sum()
    }
}

pub(crate) fn sym_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    if a.nrows() == 0 {
        return DVector::zeros(0);
    }
    SymmetricEigen::new(a.clone()).eigenvalues
}

/// Symmetric inverse square root `V diag(max(e, floor)^{-1/2}) V^T`.
pub(crate) fn sym_inv_sqrt(a: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(a.clone());
    let v = &eig.eigenvectors;
    let scale = eig.eigenvalues.map(|e| 1.0 / e.max(floor).sqrt());
    let mut vs = v.clone();
    for (j, s) in scale.iter().enumerate() {
        vs.column_mut(j).scale_mut(*s);
    }
    let out = &vs * v.transpose();
    // exact symmetry
    DMatrix::from_fn(n, n, |i, j| if i >= j { out[(i, j)] } else { out[(j, i)] })
}
