//! MMSE channel estimation from the training observation.
//!
//! The estimate covariance is formed through whichever of the two equivalent
//! Hermitian positive definite systems is smaller: `A^H A + I` (n_0 x n_0) when
//! n_0 ≤ N, otherwise `I + A A^H` (N x N). Both have eigenvalues ≥ 1.

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::numerics::{
    eigh, CMatrix, CVector, HermitianMatrix, Spectrum, C64, DEFAULT_RANK_TOL, LN_PI_E,
};
use crate::pilots::EffectiveMatrix;

/// Relative agreement required between the two MMSE distortion formulas.
pub const DMMSE_AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct MmseResult {
    /// C_{S|P}.
    pub est_cov: HermitianMatrix,
    /// C_E = C_H - C_{S|P}.
    pub err_cov: HermitianMatrix,
    pub est_spectrum: Spectrum,
    /// tr(C_E) after clamping round-off eigenvalues.
    pub d_mmse: f64,
    /// tr(C_H (I + A A^H)^{-1}), computed independently of `d_mmse`.
    pub d_mmse_trace_form: f64,
    /// r_S.
    pub r_s: usize,
    /// `C_H P (P^H C_H P + I)^{-1}`, present when requested.
    pub filter: Option<CMatrix>,
}

impl MmseResult {
    /// Relative gap between the two distortion formulas.
    pub fn d_mmse_discrepancy(&self) -> f64 {
        let scale = self.d_mmse.abs().max(self.d_mmse_trace_form.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.d_mmse - self.d_mmse_trace_form).abs() / scale
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.d_mmse_discrepancy() <= DMMSE_AGREEMENT_TOL
    }
}

/// Full MMSE result including the estimation filter.
pub fn mmse(model: &ChannelModel, eff: &EffectiveMatrix) -> Result<MmseResult> {
    mmse_impl(model, eff, true)
}

/// Covariances and distortion only; skips the N x n_0 filter.
pub fn mmse_covariance(model: &ChannelModel, eff: &EffectiveMatrix) -> Result<MmseResult> {
    mmse_impl(model, eff, false)
}

fn mmse_impl(model: &ChannelModel, eff: &EffectiveMatrix, with_filter: bool) -> Result<MmseResult> {
    let n = model.n();
    if eff.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: eff.n(),
        });
    }
    let n0 = eff.n0();
    let sqrt = model.sqrt_cov();
    let c = model.cov().as_matrix();
    let a = eff.a();

    let m = eff.gram_big().as_matrix() + CMatrix::identity(n, n);
    let chol_m = m.cholesky().ok_or(Error::SingularSystem)?;
    let d_mmse_trace_form = chol_m.solve(c).trace().re;

    let (inner, filter) = if n0 <= n {
        let k = a.adjoint() * a + CMatrix::identity(n0, n0);
        let chol_k = k.cholesky().ok_or(Error::SingularSystem)?;
        // K^{-1} A^H
        let g = chol_k.solve(&a.adjoint());
        let filter = with_filter.then(|| sqrt * g.adjoint());
        (a * g, filter)
    } else {
        let inner = chol_m.solve(eff.gram_big().as_matrix());
        let filter = with_filter.then(|| sqrt * chol_m.solve(a));
        (inner, filter)
    };

    let est_cov = HermitianMatrix::from_hermitian_part(&(sqrt * inner * sqrt));
    let err_cov = HermitianMatrix::from_hermitian_part(&(c - est_cov.as_matrix()));
    let est_spectrum = eigh(&est_cov, DEFAULT_RANK_TOL)?;
    let err_spectrum = eigh(&err_cov, DEFAULT_RANK_TOL)?;
    let d_mmse = err_spectrum.eigenvalues.iter().sum();

    Ok(MmseResult {
        r_s: est_spectrum.rank,
        est_cov,
        err_cov,
        est_spectrum,
        d_mmse,
        d_mmse_trace_form,
        filter,
    })
}

/// S = E[H | Y] for the training row `y` (stored as a column of length n_0).
pub fn estimate(result: &MmseResult, y: &CVector) -> Result<CVector> {
    let filter = result.filter.as_ref().ok_or_else(|| {
        Error::InvalidParameter("MMSE result was computed without its filter".into())
    })?;
    if y.len() != filter.ncols() {
        return Err(Error::DimensionMismatch {
            expected: filter.ncols(),
            found: y.len(),
        });
    }
    Ok(filter * y.map(|z| z.conj()))
}

/// Differential entropies (nats) of H, Y|P, Ȳ|P and S|P with their ranks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySet {
    pub h_h: f64,
    pub h_y: f64,
    pub h_ybar: f64,
    pub h_s: f64,
    pub r_h: usize,
    pub r_y: usize,
    pub r_ybar: usize,
    pub r_s: usize,
}

/// All four entropies from pseudo-log-determinants of their covariances.
///
/// Forms the n_0 x n_0 matrix `A^H A`, so it is meant for analysis rather than
/// the Monte Carlo inner loop.
pub fn entropies(model: &ChannelModel, eff: &EffectiveMatrix, result: &MmseResult) -> Result<EntropySet> {
    let n0 = eff.n0();
    let ybar_cov = eff.gram_small();
    let y_cov = HermitianMatrix::from_hermitian_part(
        &(ybar_cov.as_matrix() + CMatrix::from_diagonal_element(n0, n0, C64::new(1.0, 0.0))),
    );
    let ybar = eigh(&ybar_cov, DEFAULT_RANK_TOL)?;
    let y = eigh(&y_cov, DEFAULT_RANK_TOL)?;
    let r_h = model.rank();
    Ok(EntropySet {
        h_h: r_h as f64 * LN_PI_E + model.pseudo_logdet(),
        h_y: y.rank as f64 * LN_PI_E + y.pseudo_logdet(),
        h_ybar: ybar.rank as f64 * LN_PI_E + ybar.pseudo_logdet(),
        h_s: result.r_s as f64 * LN_PI_E + result.est_spectrum.pseudo_logdet(),
        r_h,
        r_y: y.rank,
        r_ybar: ybar.rank,
        r_s: result.r_s,
    })
}
