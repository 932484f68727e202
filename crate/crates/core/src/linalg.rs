//! Small dense/sparse linear-algebra kernels shared by the victims and the
//! structural attacks.
//!
//! Everything here is deterministic: parallel products split work by output
//! row, so each entry is accumulated in a fixed order regardless of thread
//! scheduling.

use ndarray::linalg::general_mat_mul;
use ndarray::parallel::prelude::*;
use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Row-compressed symmetric sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Build from per-row (col, value) lists; rows must be pre-sorted by column.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for (j, v) in row {
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Csr { n, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        self.indices[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    /// Return the stored value at (i, j), or 0.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        match self.indices[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Sparse * dense -> dense, parallel over output rows.
    pub fn mul_dense(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(self.n, x.nrows(), "dimension mismatch in sparse product");
        let d = x.ncols();
        let mut out = Array2::<f64>::zeros((self.n, d));
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(i, mut row)| {
                for (j, v) in self.row(i) {
                    let src = x.row(j);
                    for k in 0..d {
                        row[k] += v * src[k];
                    }
                }
            });
        out
    }

    /// Densify (tests and small eigenchecks only).
    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::<f64>::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[[i, j]] = v;
            }
        }
        m
    }
}

/// Dense product `a * b`, parallel over row blocks of `a`.
pub fn par_matmul(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    assert_eq!(a.ncols(), b.nrows(), "dimension mismatch in dense product");
    let mut out = Array2::<f64>::zeros((a.nrows(), b.ncols()));
    let chunk = 128.max(a.nrows() / (4 * rayon::current_num_threads().max(1))).max(1);
    out.axis_chunks_iter_mut(Axis(0), chunk)
        .into_par_iter()
        .enumerate()
        .for_each(|(ci, mut oc)| {
            let lo = ci * chunk;
            let hi = (lo + oc.nrows()).min(a.nrows());
            general_mat_mul(1.0, &a.slice(ndarray::s![lo..hi, ..]), &b, 0.0, &mut oc);
        });
    out
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.axis_iter_mut(Axis(0)) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            z += *v;
        }
        for v in row.iter_mut() {
            *v /= z;
        }
    }
    p
}

/// Backward pass of row-wise softmax: given P and dL/dP, return dL/dlogits.
pub fn softmax_rows_backward(p: &Array2<f64>, pbar: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros(p.raw_dim());
    for i in 0..p.nrows() {
        let mut dot = 0.0;
        for k in 0..p.ncols() {
            dot += p[[i, k]] * pbar[[i, k]];
        }
        for k in 0..p.ncols() {
            out[[i, k]] = p[[i, k]] * (pbar[[i, k]] - dot);
        }
    }
    out
}

/// Mean cross-entropy of `logits` rows in `idx` against integer labels.
pub fn cross_entropy(logits: &Array2<f64>, labels: &[usize], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for &i in idx {
        let row = logits.row(i);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|v| (v - m).exp()).sum();
        total += z.ln() + m - row[labels[i]];
    }
    total / idx.len() as f64
}

/// Argmax with ties broken toward the lowest index.
pub fn argmax_row(row: ndarray::ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    let mut bv = row[0];
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > bv {
            bv = v;
            best = k;
        }
    }
    best
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns. Deterministic: fixed sweep order, fixed convergence threshold.
pub fn jacobi_eigh(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let tol = 1e-12;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off.sqrt() < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].partial_cmp(&m[[j, j]]).unwrap().then(i.cmp(&j)));
    let eigvals = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut eigvecs = Array2::<f64>::zeros((n, n));
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            eigvecs[[k, new]] = v[[k, old]];
        }
    }
    (eigvals, eigvecs)
}
