//! Thin SVD by one-sided (Hestenes) Jacobi rotations.
//!
//! The matrices seen by the learners are at most `p² × p²` (256 × 256 for
//! 16×16 filters), so the quadratic-per-sweep cost is irrelevant next to the
//! patch products, and Jacobi gives high relative accuracy with a fixed,
//! reproducible rotation order.

use serde::{Deserialize, Serialize};

use super::matrix::{dot, Matrix};
use crate::{contract, Result};

const MAX_SWEEPS: usize = 80;

/// `m = u · diag(sigma) · xᵀ` with `k = min(rows, cols)` triplets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThinSvd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub x: Matrix,
}

impl ThinSvd {
    pub fn rank_k(&self) -> usize {
        self.sigma.len()
    }

    /// `u · xᵀ`, the orthogonal polar factor of the decomposed matrix.
    pub fn polar_factor(&self) -> Matrix {
        self.u
            .matmul_tr(&self.x)
            .expect("svd factors are conformant")
    }

    /// `Σ_{i ∈ range} u_i x_iᵀ`.
    pub fn partial_polar(&self, range: std::ops::Range<usize>) -> Matrix {
        let mut out = Matrix::zeros(self.u.rows(), self.x.rows());
        for i in range {
            let (ui, xi) = (self.u.col(i), self.x.col(i));
            for (j, &xv) in xi.iter().enumerate() {
                for (d, &uv) in out.col_mut(j).iter_mut().zip(ui) {
                    *d += uv * xv;
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (i, &s) in self.sigma.iter().enumerate() {
            us.col_mut(i).iter_mut().for_each(|v| *v *= s);
        }
        us.matmul_tr(&self.x).expect("svd factors are conformant")
    }
}

/// Thin singular value decomposition.
///
/// Singular values come out in descending order. Each pair `(u_i, x_i)` is
/// oriented so that the largest-magnitude entry of `u_i` (first one on ties)
/// is nonnegative.
pub fn thin_svd(m: &Matrix) -> Result<ThinSvd> {
    contract!(
        m.rows() >= 1 && m.cols() >= 1,
        "thin_svd of an empty {:?} matrix",
        m.shape()
    );
    contract!(m.is_finite(), "thin_svd input has non-finite entries");

    let mut svd = if m.rows() >= m.cols() {
        jacobi_tall(m)
    } else {
        let t = jacobi_tall(&m.transpose());
        ThinSvd {
            u: t.x,
            sigma: t.sigma,
            x: t.u,
        }
    };
    orient(&mut svd);
    Ok(svd)
}

fn jacobi_tall(m: &Matrix) -> ThinSvd {
    let (rows, n) = m.shape();
    let mut w = m.clone();
    let mut x = Matrix::identity(n);
    let tol = f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n.saturating_sub(1) {
            for j in i + 1..n {
                let alpha = dot(w.col(i), w.col(i));
                let beta = dot(w.col(j), w.col(j));
                let gamma = dot(w.col(i), w.col(j));
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(w.as_mut_slice(), rows, i, j, c, s);
                rotate(x.as_mut_slice(), n, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|i| dot(w.col(i), w.col(i)).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let sigma: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let x = x.select_columns(&order);
    let mut u = w.select_columns(&order);

    let floor = sigma[0] * f64::EPSILON * rows.max(n) as f64;
    let mut deficient = Vec::new();
    for (i, &s) in sigma.iter().enumerate() {
        if s > floor && s > 0.0 {
            u.col_mut(i).iter_mut().for_each(|v| *v /= s);
        } else {
            deficient.push(i);
        }
    }
    complete_basis(&mut u, &deficient);
    ThinSvd { u, sigma, x }
}

fn rotate(data: &mut [f64], rows: usize, i: usize, j: usize, c: f64, s: f64) {
    let (head, tail) = data.split_at_mut(j * rows);
    let ci = &mut head[i * rows..(i + 1) * rows];
    let cj = &mut tail[..rows];
    for (a, b) in ci.iter_mut().zip(cj.iter_mut()) {
        let (va, vb) = (*a, *b);
        *a = c * va - s * vb;
        *b = s * va + c * vb;
    }
}

/// Replaces the listed columns of `u` with unit vectors orthogonal to every
/// other column, drawing candidates from the standard basis.
fn complete_basis(u: &mut Matrix, deficient: &[usize]) {
    if deficient.is_empty() {
        return;
    }
    let rows = u.rows();
    let mut accepted: Vec<usize> = (0..u.cols()).filter(|i| !deficient.contains(i)).collect();
    for &slot in deficient {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for k in 0..rows {
            let mut e = vec![0.0; rows];
            e[k] = 1.0;
            // Two passes of Gram–Schmidt for numerical orthogonality.
            for _ in 0..2 {
                for &a in &accepted {
                    let proj = dot(u.col(a), &e);
                    for (ev, &uv) in e.iter_mut().zip(u.col(a)) {
                        *ev -= proj * uv;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if best.as_ref().is_none_or(|(b, _)| norm > *b + 1e-12) {
                best = Some((norm, e));
            }
        }
        let (norm, e) = best.expect("rows >= 1");
        for (d, v) in u.col_mut(slot).iter_mut().zip(&e) {
            *d = v / norm;
        }
        accepted.push(slot);
    }
}

fn orient(svd: &mut ThinSvd) {
    for i in 0..svd.sigma.len() {
        let col = svd.u.col(i);
        let mut pivot = 0;
        for (r, v) in col.iter().enumerate() {
            if v.abs() > col[pivot].abs() {
                pivot = r;
            }
        }
        if col[pivot] < 0.0 {
            svd.u.col_mut(i).iter_mut().for_each(|v| *v = -*v);
            svd.x.col_mut(i).iter_mut().for_each(|v| *v = -*v);
        }
    }
}
