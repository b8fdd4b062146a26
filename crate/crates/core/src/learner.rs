//! Alternating-minimization filter learners.
//!
//! Both learners minimise
//!
//! ```text
//!   ‖V − D₁ᵀG‖²_F + ‖D₂ᵀG‖²_F + λ²‖V‖₀   subject to  [D₁ D₂] orthogonal
//! ```
//!
//! over the coefficients `V` (hard thresholding) and the kept filters `D₁`
//! (orthogonal Procrustes via SVD of `G·Vᵀ`). With `s = p²` the `D₂` term is
//! empty and this is the square data-driven tight frame learner.
//!
//! `G` holds raw pixel patches and atoms have unit norm, so each coefficient
//! carries noise of standard deviation exactly σ and `λ` reads as a multiple
//! of σ.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::filterbank::{dct_basis, FilterBank};
use crate::imgcore::PatchMatrix;
use crate::linops::{self, hard_threshold, thin_svd, Matrix, ThinSvd, RANK_TOLERANCE};
use crate::{contract, Result};

/// Learning threshold as a multiple of the noise standard deviation.
pub const LAMBDA_SCALE: f64 = 3.4;
pub const DEFAULT_ITERS: usize = 25;
pub const DEFAULT_P: usize = 8;
pub const DEFAULT_S: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnParams {
    pub p: usize,
    pub s: usize,
    pub lambda: f64,
    pub iters: usize,
    /// Weight of the proximal anchor on `V` (0 disables it).
    pub prox_lambda: f64,
    /// Weight of the proximal anchor on `D₁` (0 disables it).
    pub prox_mu: f64,
    pub stride: usize,
}

impl LearnParams {
    /// Defaults for a given noise level: `λ = 3.4σ`, 25 iterations, no
    /// proximal terms, dense patches.
    pub fn new(p: usize, s: usize, sigma: f64) -> Self {
        Self {
            p,
            s,
            lambda: LAMBDA_SCALE * sigma,
            iters: DEFAULT_ITERS,
            prox_lambda: 0.0,
            prox_mu: 0.0,
            stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        contract!(self.p >= 1, "p must be positive");
        contract!(
            self.s >= 1 && self.s <= self.p * self.p,
            "filter count {} outside 1..={}",
            self.s,
            self.p * self.p
        );
        contract!(self.iters >= 1, "iters must be at least 1");
        contract!(self.lambda >= 0.0, "lambda must be nonnegative");
        contract!(
            self.prox_lambda >= 0.0 && self.prox_mu >= 0.0,
            "proximal weights must be nonnegative"
        );
        contract!(self.stride >= 1, "stride must be positive");
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Objective after both half-steps of this iteration.
    pub objective: f64,
    /// Nonzero coefficients in `V`.
    pub nnz: usize,
    /// Singular values of the matrix whose polar factor became `D₁`.
    pub singular_values: Vec<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LearnTrace {
    pub iterations: Vec<IterationRecord>,
}

impl LearnTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.objective).collect()
    }

    /// Largest increase between consecutive objectives (≤ 0 when monotone).
    pub fn worst_ascent(&self) -> f64 {
        self.iterations
            .windows(2)
            .map(|w| w[1].objective - w[0].objective)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Everything a learning run produces, including the final coefficients and
/// filter-update SVD for diagnostics.
#[derive(Clone, Debug)]
pub struct LearnOutcome {
    pub bank: FilterBank,
    pub trace: LearnTrace,
    /// `V` from the last iteration.
    pub coefficients: Matrix,
    /// SVD of `G·Vᵀ (+ μ·D₁)` from the last iteration.
    pub last_svd: ThinSvd,
}

/// Coefficient half-step.
///
/// Without the proximal term this is `H_λ(D₁ᵀG)`. With `prox_lambda > 0` it
/// is `H_{λ/√(1+λ_k)}((D₁ᵀG + λ_k V_prev)/(1+λ_k))`.
pub fn update_coefficients(
    g: &Matrix,
    bank: &FilterBank,
    lambda: f64,
    prox_lambda: f64,
    v_prev: Option<&Matrix>,
) -> Result<Matrix> {
    contract!(
        g.rows() == bank.atoms().rows(),
        "patch length {} does not match filter length {}",
        g.rows(),
        bank.atoms().rows()
    );
    let c = bank.atoms().tr_matmul(g)?;
    if prox_lambda > 0.0 {
        let v_prev = v_prev.ok_or_else(|| {
            crate::Error::Contract("proximal coefficient step needs the previous V".into())
        })?;
        proximal_coefficients(c, v_prev, lambda, prox_lambda)
    } else {
        contract!(prox_lambda == 0.0, "prox_lambda must be nonnegative");
        hard_threshold(&c, lambda)
    }
}

/// The proximal coefficient formula applied to precomputed `c = D₁ᵀG`. With
/// `prox_lambda = 0` it reproduces `H_λ(c)` bit for bit.
pub fn proximal_coefficients(
    mut c: Matrix,
    v_prev: &Matrix,
    lambda: f64,
    prox_lambda: f64,
) -> Result<Matrix> {
    contract!(
        c.shape() == v_prev.shape(),
        "previous V has shape {:?}, expected {:?}",
        v_prev.shape(),
        c.shape()
    );
    contract!(prox_lambda >= 0.0, "prox_lambda must be nonnegative");
    let denom = 1.0 + prox_lambda;
    for (ci, &vi) in c.as_mut_slice().iter_mut().zip(v_prev.as_slice()) {
        *ci = (*ci + prox_lambda * vi) / denom;
    }
    linops::hard_threshold_in_place(c.as_mut_slice(), lambda / denom.sqrt())?;
    Ok(c)
}

/// Filter half-step: polar factor of `G·Vᵀ + μ·D₁_prev`.
pub fn update_filters(
    g: &Matrix,
    v: &Matrix,
    prox_mu: f64,
    bank_prev: &FilterBank,
) -> Result<FilterBank> {
    let gvt = g.matmul_tr(v)?;
    filters_from_correlation(gvt, prox_mu, bank_prev).map(|(bank, _)| bank)
}

fn filters_from_correlation(
    mut gvt: Matrix,
    prox_mu: f64,
    bank_prev: &FilterBank,
) -> Result<(FilterBank, ThinSvd)> {
    contract!(
        gvt.shape() == bank_prev.atoms().shape(),
        "G·Vᵀ has shape {:?}, bank is {:?}",
        gvt.shape(),
        bank_prev.atoms().shape()
    );
    contract!(prox_mu >= 0.0, "prox_mu must be nonnegative");
    for (a, &d) in gvt
        .as_mut_slice()
        .iter_mut()
        .zip(bank_prev.atoms().as_slice())
    {
        *a += prox_mu * d;
    }
    let svd = thin_svd(&gvt)?;
    let sigma_max = svd.sigma[0];
    let rank = svd
        .sigma
        .iter()
        .filter(|&&r| r > RANK_TOLERANCE * sigma_max)
        .count();
    if rank == 0 {
        return Err(crate::Error::DegenerateRank {
            ratio: 0.0,
            hint: "G·Vᵀ vanishes: no coefficient survived thresholding; lower the threshold or use prox_mu > 0",
        });
    }
    let atoms = if rank == svd.sigma.len() {
        svd.polar_factor()
    } else {
        complete_toward(&svd, rank, bank_prev.atoms())?
    };
    let bank = FilterBank::new(bank_prev.p(), atoms)?;
    Ok((bank, svd))
}

/// Maximiser of `Tr(QᵀM)` over orthonormal `Q` when `M` has rank `rank`
/// below its column count. The leading part `U_r X_rᵀ` is forced; the
/// directions `M` does not see are filled with the polar factor of the
/// previous bank projected off `span(U_r)`, i.e. the limit of the proximal
/// filter update as its weight goes to zero.
fn complete_toward(svd: &ThinSvd, rank: usize, prev: &Matrix) -> Result<Matrix> {
    let s = svd.sigma.len();
    let lead: Vec<usize> = (0..rank).collect();
    let tail: Vec<usize> = (rank..s).collect();
    let (u_r, x_r, x_n) = (
        svd.u.select_columns(&lead),
        svd.x.select_columns(&lead),
        svd.x.select_columns(&tail),
    );

    let mut b = prev.matmul(&x_n)?;
    let overlap = u_r.tr_matmul(&b)?;
    b = b.sub(&u_r.matmul(&overlap)?)?;
    let b_svd = thin_svd(&b)?;
    let fill =
        if b_svd.sigma[0] > 0.0 && b_svd.sigma[s - rank - 1] > RANK_TOLERANCE * b_svd.sigma[0] {
            b_svd.polar_factor()
        } else {
            // The previous bank gives no usable direction either; the SVD's own
            // completion is orthogonal to span(U_r) by construction.
            svd.u.select_columns(&tail)
        };
    u_r.matmul_tr(&x_r)?.add(&fill.matmul_tr(&x_n)?)
}

/// `‖V − D₁ᵀG‖²_F + ‖D₂ᵀG‖²_F + λ²‖V‖₀`, with the complement term taken as
/// `‖G‖²_F − ‖D₁ᵀG‖²_F`.
pub fn objective(g: &Matrix, v: &Matrix, bank: &FilterBank, lambda: f64) -> Result<f64> {
    let c = bank.atoms().tr_matmul(g)?;
    contract!(
        c.shape() == v.shape(),
        "V has shape {:?}, expected {:?}",
        v.shape(),
        c.shape()
    );
    Ok(objective_from_products(
        g.frobenius_norm_sq(),
        &c,
        v,
        lambda,
    ))
}

fn objective_from_products(g_norm_sq: f64, c: &Matrix, v: &Matrix, lambda: f64) -> f64 {
    let mut fit = 0.0;
    let mut kept = 0.0;
    let mut nnz = 0usize;
    for (&ci, &vi) in c.as_slice().iter().zip(v.as_slice()) {
        fit += (vi - ci) * (vi - ci);
        kept += ci * ci;
        nnz += (vi != 0.0) as usize;
    }
    fit + (g_norm_sq - kept) + lambda * lambda * nnz as f64
}

/// Learns `params.s` filters starting from `init`.
pub fn learn(
    patches: &PatchMatrix,
    init: &FilterBank,
    params: &LearnParams,
) -> Result<(FilterBank, LearnTrace)> {
    learn_full(patches, init, params).map(|o| (o.bank, o.trace))
}

/// Square learner (`s = p²`) from the DCT basis.
pub fn ddtf_learn(patches: &PatchMatrix, params: &LearnParams) -> Result<(FilterBank, LearnTrace)> {
    contract!(
        params.s == params.p * params.p,
        "square learner needs s = p² = {}, got {}",
        params.p * params.p,
        params.s
    );
    learn(patches, &dct_basis(params.p), params)
}

/// [`learn`] returning the final coefficients and SVD as well.
pub fn learn_full(
    patches: &PatchMatrix,
    init: &FilterBank,
    params: &LearnParams,
) -> Result<LearnOutcome> {
    params.validate()?;
    contract!(
        init.p() == patches.p(),
        "bank side {} but patch side {}",
        init.p(),
        patches.p()
    );
    contract!(
        init.p() == params.p,
        "bank side {} but params.p {}",
        init.p(),
        params.p
    );
    contract!(
        init.s() == params.s,
        "bank has {} filters but params.s = {}",
        init.s(),
        params.s
    );

    let g = patches.matrix();
    let g_norm_sq = g.frobenius_norm_sq();
    let mut bank = init.clone();
    let mut c = bank.atoms().tr_matmul(g)?;
    let mut v_prev: Option<Matrix> = None;
    let mut trace = LearnTrace::default();
    let mut last_svd = None;

    for _ in 0..params.iters {
        let start = Instant::now();
        // Both half-steps always take the proximal form; with zero weights
        // it reduces exactly to the plain updates. The first anchor is the
        // plain thresholded start, so the sequence begins where the
        // unanchored one does.
        let anchor = match v_prev.take() {
            Some(v) => v,
            None => hard_threshold(&c, params.lambda)?,
        };
        let v = proximal_coefficients(c, &anchor, params.lambda, params.prox_lambda)?;

        let gvt = g.matmul_tr(&v)?;
        let (next, svd) = filters_from_correlation(gvt, params.prox_mu, &bank)?;
        bank = next;
        c = bank.atoms().tr_matmul(g)?;

        trace.iterations.push(IterationRecord {
            objective: objective_from_products(g_norm_sq, &c, &v, params.lambda),
            nnz: v.count_nonzero(),
            singular_values: svd.sigma.clone(),
            seconds: start.elapsed().as_secs_f64(),
        });
        last_svd = Some(svd);
        v_prev = Some(v);
    }

    Ok(LearnOutcome {
        bank,
        trace,
        coefficients: v_prev.expect("iters >= 1"),
        last_svd: last_svd.expect("iters >= 1"),
    })
}
