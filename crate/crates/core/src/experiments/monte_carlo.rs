use super::{run_trials, Execution, McEstimate};
use crate::channel::{ChannelModel, SystemConfig};
use crate::error::{Error, Result};
use crate::estimation::mmse_covariance;
use crate::pilots::{effective_matrix, sample_pilot};
use crate::rdf::{direct_rdf_formula, overall_rdf, source_term};

pub const MIN_TRIALS: usize = 100;

/// Expectations over pilot draws at one configuration.
///
/// `dr_source` and `dmmse` use every draw. The rate terms exclude draws with
/// d ≤ d_min; `dr_distortion` is the remainder `total − R_H(d) − ΔR_S`, which
/// matches the closed-form term whenever d ≤ d_max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSummary {
    pub r_direct: f64,
    pub dr_source: McEstimate,
    pub dr_distortion: McEstimate,
    pub dmmse: McEstimate,
    /// total − R_H(d).
    pub gap: McEstimate,
    pub total: McEstimate,
    /// Fraction of rate draws that took the water-filled path (d > d_max).
    pub extended_fraction: f64,
}

struct Trial {
    dr_source: f64,
    dmmse: f64,
    violated: bool,
    /// (total, extended), absent when d ≤ d_min.
    rate: Option<(f64, bool)>,
}

pub fn mc_run(cfg: &SystemConfig, model: &ChannelModel, trials: usize, seed: u64, exec: Execution) -> Result<McSummary> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    if model.n() != cfg.n() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n(),
            found: model.n(),
        });
    }
    let pilot_set = cfg.default_pilot_set();
    let d = cfg.d();
    let r_direct = direct_rdf_formula(model, d)?;
    let threshold = (1.0 - cfg.epsilon()) * d;

    let outcomes = run_trials(exec, trials, seed, |s| {
        let mut rng = crate::numerics::SimRng::new(s);
        let pilot = sample_pilot(cfg, &pilot_set, &mut rng)?;
        let eff = effective_matrix(model, &pilot)?;
        let est = mmse_covariance(model, &eff)?;
        if !est.is_consistent() {
            return Err(Error::Numerical(format!(
                "MMSE distortion formulas disagree: {} vs {}",
                est.d_mmse, est.d_mmse_trace_form
            )));
        }
        let rate = match overall_rdf(model, &est, d) {
            Ok(b) => Some((b.total, b.extended)),
            Err(Error::DistortionBelowMmse { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Trial {
            dr_source: source_term(model, &est),
            dmmse: est.d_mmse,
            violated: est.d_mmse > threshold,
            rate,
        })
    })?;

    let violated = outcomes.iter().filter(|t| t.violated).count() as f64 / trials as f64;
    let src: Vec<f64> = outcomes.iter().map(|t| t.dr_source).collect();
    let dm: Vec<f64> = outcomes.iter().map(|t| t.dmmse).collect();
    let mut total = Vec::with_capacity(trials);
    let mut dist = Vec::with_capacity(trials);
    let mut extended = 0usize;
    for t in &outcomes {
        if let Some((r, ext)) = t.rate {
            total.push(r);
            dist.push(r - r_direct - t.dr_source);
            extended += ext as usize;
        }
    }
    let skipped = trials - total.len();
    if total.len() < 2 {
        return Err(Error::TooManySkipped { skipped, trials });
    }
    let gap: Vec<f64> = total.iter().map(|r| r - r_direct).collect();

    let tag = |mut e: McEstimate, skipped: usize| {
        e.violated_epsilon_fraction = violated;
        e.skipped = skipped;
        e
    };
    let rate_estimate = |xs: &[f64]| McEstimate::from_samples(xs, seed).map(|e| tag(e, skipped));
    Ok(McSummary {
        r_direct,
        dr_source: tag(McEstimate::from_samples(&src, seed)?, 0),
        dmmse: tag(McEstimate::from_samples(&dm, seed)?, 0),
        dr_distortion: rate_estimate(&dist)?,
        gap: rate_estimate(&gap)?,
        total: rate_estimate(&total)?,
        extended_fraction: if total.is_empty() { 0.0 } else { extended as f64 / total.len() as f64 },
    })
}
