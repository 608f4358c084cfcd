//! Deterministic bounds on the expected rate terms over the Gaussian pilot ensemble,
//! their large-n_t coefficients, and complex Wishart moment formulas.

use crate::channel::{ChannelModel, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::digamma_sum;
use crate::rdf::direct_rdf_formula;

/// A bound value, or the reason its formula does not apply.
#[derive(Debug, Clone, PartialEq)]
pub enum Bound {
    Valid(f64),
    Invalid(String),
}

impl Bound {
    pub fn value(&self) -> Option<f64> {
        match self {
            Bound::Valid(v) => Some(*v),
            Bound::Invalid(_) => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, Bound::Valid(_))
    }

    fn sum(&self, other: &Bound) -> Bound {
        match (self, other) {
            (Bound::Valid(a), Bound::Valid(b)) => Bound::Valid(a + b),
            (Bound::Invalid(r), _) | (_, Bound::Invalid(r)) => Bound::Invalid(r.clone()),
        }
    }
}

/// All bounds for one configuration. `overall_*` bound the excess rate
/// `E[R_{H,S|P}(d)] − R_H(d)`; add `r_direct` for the rate itself.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSet {
    pub r_direct: f64,
    pub dr_source_lo: Bound,
    pub dr_source_hi: Bound,
    pub dmmse_lo: Bound,
    pub dmmse_hi: Bound,
    pub dr_dist_lo: Bound,
    pub dr_dist_hi: Bound,
    pub overall_lo: Bound,
    pub overall_hi: Bound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticCoefficients {
    pub c_source_lo: f64,
    pub c_source_hi: f64,
    pub c_dmmse: f64,
    pub c_dist_lo: f64,
    pub c_dist_hi: f64,
    pub c_overall_lo: f64,
    pub c_overall_hi: f64,
}

fn check_common(cfg: &SystemConfig, model: &ChannelModel) -> Result<()> {
    if model.n() != cfg.n() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n(),
            found: model.n(),
        });
    }
    if cfg.n_p() != cfg.n_c() {
        return Err(Error::PreconditionViolated(format!(
            "bounds need n_p = n_c, got n_p = {} and n_c = {}",
            cfg.n_p(),
            cfg.n_c()
        )));
    }
    if cfg.n_t() < cfg.m_t() {
        return Err(Error::PreconditionViolated(format!(
            "bounds need n_t >= m_t, got n_t = {} and m_t = {}",
            cfg.n_t(),
            cfg.m_t()
        )));
    }
    model.require_full_rank()
}

fn need_gap(cfg: &SystemConfig, gap: usize) -> Option<String> {
    (cfg.n_t() < cfg.m_t() + gap).then(|| format!("needs n_t >= m_t + {gap}, got n_t = {}, m_t = {}", cfg.n_t(), cfg.m_t()))
}

/// Lower and upper bounds on E[ΔR_S].
pub fn bound_dr_source(cfg: &SystemConfig, model: &ChannelModel) -> Result<(Bound, Bound)> {
    check_common(cfg, model)?;
    let (m_t, n_c, n_t) = (cfg.m_t() as f64, cfg.n_c() as f64, cfg.n_t() as f64);
    let snr = cfg.snr_dl();
    let alpha = snr * n_t / m_t;
    let eigs = &model.spectrum().eigenvalues;

    let log_ratio: f64 = eigs.iter().map(|&l| l.ln() - (alpha * l).ln_1p()).sum();
    let lo = 0.5
        * (log_ratio
            + cfg.n() as f64 * (snr / m_t).ln()
            + n_c * digamma_sum(cfg.m_t(), cfg.n_t())?);

    let hi = match need_gap(cfg, 2) {
        Some(reason) => Bound::Invalid(reason),
        None => {
            let gap = n_t - m_t;
            let lmin = model.lambda_min_positive();
            let second = m_t * m_t * n_c * n_t / (2.0 * snr * (gap - 1.0) * (gap + 1.0) * lmin * lmin);
            Bound::Valid(m_t / (2.0 * snr * gap) * (-model.inverse_trace()? + second))
        }
    };
    Ok((Bound::Valid(lo), hi))
}

/// Lower and upper bounds on E[D_mmse].
pub fn bound_dmmse(cfg: &SystemConfig, model: &ChannelModel) -> Result<(Bound, Bound)> {
    check_common(cfg, model)?;
    let (m_t, n_c, n_t) = (cfg.m_t() as f64, cfg.n_c() as f64, cfg.n_t() as f64);
    let alpha = cfg.snr_dl() * n_t / m_t;
    let lo: f64 = model.spectrum().eigenvalues.iter().map(|&l| l / (1.0 + alpha * l)).sum();
    let hi = match need_gap(cfg, 1) {
        Some(reason) => Bound::Invalid(reason),
        None => Bound::Valid(m_t * m_t * n_c / (cfg.snr_dl() * (n_t - m_t))),
    };
    Ok((Bound::Valid(lo), hi))
}

/// Lower and upper bounds on E[ΔR_d] at the configured d and ε.
///
/// The upper bound assumes every draw satisfies `D_mmse ≤ (1 − ε) d`; the Monte
/// Carlo engine reports how often that fails.
pub fn bound_dr_distortion(cfg: &SystemConfig, model: &ChannelModel) -> Result<(Bound, Bound)> {
    let (dmmse_lo, dmmse_hi) = bound_dmmse(cfg, model)?;
    let n = cfg.n() as f64;
    let d = cfg.d();
    let lo = match dmmse_lo {
        Bound::Valid(dl) if dl < d => Bound::Valid(-0.5 * n * (-dl / d).ln_1p()),
        Bound::Valid(dl) => Bound::Invalid(format!("needs d > D_mmse lower bound {dl}, got d = {d}")),
        invalid => invalid,
    };
    let hi = match dmmse_hi {
        Bound::Valid(du) => Bound::Valid(n / (2.0 * cfg.epsilon() * d) * du),
        invalid => invalid,
    };
    Ok((lo, hi))
}

/// Every bound for `cfg`, with the sums bounding the excess rate.
pub fn bound_set(cfg: &SystemConfig, model: &ChannelModel) -> Result<BoundSet> {
    let (dr_source_lo, dr_source_hi) = bound_dr_source(cfg, model)?;
    let (dmmse_lo, dmmse_hi) = bound_dmmse(cfg, model)?;
    let (dr_dist_lo, dr_dist_hi) = bound_dr_distortion(cfg, model)?;
    Ok(BoundSet {
        r_direct: direct_rdf_formula(model, cfg.d())?,
        overall_lo: dr_source_lo.sum(&dr_dist_lo),
        overall_hi: dr_source_hi.sum(&dr_dist_hi),
        dr_source_lo,
        dr_source_hi,
        dmmse_lo,
        dmmse_hi,
        dr_dist_lo,
        dr_dist_hi,
    })
}

/// Coefficients c of the leading c/n_t terms.
pub fn asymptotic_coefficients(cfg: &SystemConfig, model: &ChannelModel) -> Result<AsymptoticCoefficients> {
    if model.n() != cfg.n() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n(),
            found: model.n(),
        });
    }
    let (m_t, n_c) = (cfg.m_t() as f64, cfg.n_c() as f64);
    let snr = cfg.snr_dl();
    let c_source_hi = -m_t * model.inverse_trace()? / (2.0 * snr);
    let c_source_lo = c_source_hi - m_t * m_t * n_c / 4.0;
    let c_dmmse = m_t * m_t * n_c / snr;
    let c_dist_lo = m_t.powi(3) * n_c * n_c / (2.0 * cfg.d() * snr);
    let c_dist_hi = c_dist_lo / cfg.epsilon();
    Ok(AsymptoticCoefficients {
        c_source_lo,
        c_source_hi,
        c_dmmse,
        c_dist_lo,
        c_dist_hi,
        c_overall_lo: c_source_lo + c_dist_lo,
        c_overall_hi: c_source_hi + c_dist_hi,
    })
}

/// E[log det X] for X ~ CW_m(n, Σ), given log det Σ.
pub fn wishart_logdet_mean(m: usize, n: usize, sigma_logdet: f64) -> Result<f64> {
    if m == 0 || n < m {
        return Err(Error::PreconditionViolated(format!("needs n >= m >= 1, got m = {m}, n = {n}")));
    }
    Ok(sigma_logdet + digamma_sum(m, n)?)
}

/// Multipliers of I in E[X⁻¹] and E[X⁻²] for X = G G^H with G an m x n matrix
/// of i.i.d. CN(0, p) entries.
pub fn wishart_inverse_moments(m: usize, n: usize, p: f64) -> Result<(f64, f64)> {
    if m == 0 || n <= m + 1 {
        return Err(Error::PreconditionViolated(format!("needs n > m + 1 >= 2, got m = {m}, n = {n}")));
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::PreconditionViolated(format!("needs p > 0, got {p}")));
    }
    let (m, n) = (m as f64, n as f64);
    let inv = 1.0 / (p * (n - m));
    let inv_sq = n / (p * p * (n - m - 1.0) * (n - m) * (n - m + 1.0));
    Ok((inv, inv_sq))
}
