//! Orthonormal filter banks and their initializations.

use std::f64::consts::PI;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::imgcore::PatchMatrix;
use crate::learner::{self, LearnParams};
use crate::linops::{polar_orthonormalize, Matrix};
use crate::{contract, Result};

/// Tolerance on `‖atomsᵀ·atoms − I‖_max` accepted by [`FilterBank::new`].
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

/// `s` orthonormal atoms of length `p²`, stored as the columns of a
/// `p² × s` matrix. Atom `i` reshaped column-major is the `p×p` spatial
/// filter; as a tight-frame filter it is scaled by `1/p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    p: usize,
    atoms: Matrix,
}

impl FilterBank {
    pub fn new(p: usize, atoms: Matrix) -> Result<Self> {
        contract!(p >= 1, "filter side must be positive");
        contract!(
            atoms.rows() == p * p,
            "atoms have {} rows, expected {}",
            atoms.rows(),
            p * p
        );
        contract!(
            (1..=p * p).contains(&atoms.cols()),
            "filter count {} outside 1..={}",
            atoms.cols(),
            p * p
        );
        contract!(atoms.is_finite(), "atoms contain non-finite entries");
        let defect = atoms.orthonormality_defect();
        contract!(
            defect <= ORTHONORMAL_TOLERANCE,
            "atoms are not orthonormal (defect {defect:e})"
        );
        Ok(Self { p, atoms })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of filters.
    pub fn s(&self) -> usize {
        self.atoms.cols()
    }

    pub fn atoms(&self) -> &Matrix {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        self.atoms.col(i)
    }

    pub fn is_full(&self) -> bool {
        self.s() == self.p * self.p
    }

    /// Index of the atom with the largest response to a constant patch.
    pub fn lowpass_index(&self) -> usize {
        (0..self.s())
            .map(|i| (i, self.atom(i).iter().sum::<f64>().abs()))
            .fold((0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            })
            .0
    }
}

/// Orthonormal 2-D DCT-II basis of `p×p` patches, `s = p²`.
///
/// Atom `u·p + v` is the tensor product of the 1-D row-frequency `u` and
/// column-frequency `v` vectors, so atom 0 is the constant `1/p`.
pub fn dct_basis(p: usize) -> FilterBank {
    assert!(p >= 1, "filter side must be positive");
    let one_d: Vec<Vec<f64>> = (0..p)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / p as f64).sqrt()
            } else {
                (2.0 / p as f64).sqrt()
            };
            (0..p)
                .map(|n| scale * (PI * (2 * n + 1) as f64 * k as f64 / (2 * p) as f64).cos())
                .collect()
        })
        .collect();
    let mut atoms = Matrix::zeros(p * p, p * p);
    for u in 0..p {
        for v in 0..p {
            let col = atoms.col_mut(u * p + v);
            for c in 0..p {
                for r in 0..p {
                    col[r + c * p] = one_d[u][r] * one_d[v][c];
                }
            }
        }
    }
    FilterBank { p, atoms }
}

/// `s` distinct atoms of `bank`, chosen uniformly without replacement by a
/// ChaCha8 generator seeded with `seed`. Selected atoms keep their original
/// relative order.
pub fn subselect_random(bank: &FilterBank, s: usize, seed: u64) -> Result<FilterBank> {
    contract!(
        s >= 1 && s <= bank.s(),
        "cannot select {s} of {} atoms",
        bank.s()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, bank.s(), s).into_vec();
    picked.sort_unstable();
    Ok(FilterBank {
        p: bank.p,
        atoms: bank.atoms.select_columns(&picked),
    })
}

/// Default norm floor for signal-subspace candidate columns.
pub const SIGNAL_EPSILON: f64 = 1e-5;
/// Default number of full-bank warm-up iterations before the split.
pub const SIGNAL_WARM_ITERS: usize = 2;

/// Initial bank drawn from the signal subspace of a short full-bank run.
///
/// Runs `warm_iters` iterations of the square learner from the DCT basis,
/// forms `S = Σ_{i≤s} u_i x_iᵀ` from the final SVD of `G·Vᵀ`, and keeps the
/// `s` columns of `S` with the largest norms among those above `epsilon`.
/// Any shortfall is filled with the leading left singular vectors, and the
/// assembled matrix is replaced by its orthogonal polar factor.
pub fn init_signal_subspace(
    patches: &PatchMatrix,
    s: usize,
    epsilon: f64,
    warm_iters: usize,
    lambda: f64,
) -> Result<FilterBank> {
    let p = patches.p();
    contract!(
        s >= 1 && s <= p * p,
        "filter count {s} outside 1..={}",
        p * p
    );
    contract!(warm_iters >= 1, "warm_iters must be at least 1");

    let params = LearnParams {
        iters: warm_iters,
        lambda,
        ..LearnParams::new(p, p * p, 0.0)
    };
    let warm = learner::learn_full(patches, &dct_basis(p), &params)?;
    let svd = warm.last_svd;
    let signal = svd.partial_polar(0..s);

    let norms: Vec<f64> = (0..signal.cols())
        .map(|j| signal.col(j).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut candidates: Vec<usize> = (0..signal.cols()).filter(|&j| norms[j] > epsilon).collect();
    candidates.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    candidates.truncate(s);

    let mut columns: Vec<Vec<f64>> = candidates.iter().map(|&j| signal.col(j).to_vec()).collect();
    let deficit = s - columns.len();
    columns.extend((0..deficit).map(|i| svd.u.col(i).to_vec()));

    let assembled = Matrix::from_columns(&columns)?;
    FilterBank::new(p, polar_orthonormalize(&assembled)?)
}
