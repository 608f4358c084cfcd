//! Overall rate-distortion function of the channel given its MMSE estimate.
//!
//! Rates are in nats and follow the ½ log convention used throughout the
//! crate, so `R_H(d) = ½ log det⁺(C_H) − (r_H/2) log(d/r_H)`.

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::estimation::MmseResult;
use crate::numerics::{CVector, SimRng, C64, LN_PI_E};

/// Agreement required between the decomposed and compact totals.
pub const TOTAL_AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdfBreakdown {
    /// R_H(d).
    pub r_direct: f64,
    /// ΔR_S.
    pub dr_source: f64,
    /// ΔR_d.
    pub dr_distortion: f64,
    /// `r_direct + dr_source + dr_distortion`.
    pub total: f64,
    /// The same rate from the estimate spectrum alone.
    pub total_compact: f64,
    pub d: f64,
    pub d_eff: f64,
    /// Number of estimate modes carrying rate (r_S, or r'_S past d_max).
    pub active_rank: usize,
    /// True when d > d_max and the water-filled path was used.
    pub extended: bool,
}

impl RdfBreakdown {
    pub fn total_discrepancy(&self) -> f64 {
        (self.total - self.total_compact).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillResult {
    pub water_level: f64,
    /// `min(θ, λ_i)`, aligned with the input eigenvalues.
    pub per_mode_noise: Vec<f64>,
    pub rate: f64,
    /// Number of modes with λ_i > θ.
    pub active_set_size: usize,
    /// The budget exceeded the total variance; zero rate already meets it.
    pub budget_exceeds_variance: bool,
}

fn check_budget(d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::BudgetNonpositive(d));
    }
    Ok(())
}

/// R_H(d) without the range check.
pub fn direct_rdf_formula(model: &ChannelModel, d: f64) -> Result<f64> {
    check_budget(d)?;
    let r_h = model.rank() as f64;
    Ok(0.5 * model.pseudo_logdet() - 0.5 * r_h * (d / r_h).ln())
}

/// R_H(d) for `0 < d ≤ r_H λ_min⁺(C_H)`, where all modes share one noise level.
pub fn direct_rdf(model: &ChannelModel, d: f64) -> Result<f64> {
    check_budget(d)?;
    let limit = model.rank() as f64 * model.lambda_min_positive();
    if d > limit {
        return Err(Error::DistortionOutOfRange {
            d,
            bound: format!("d must not exceed r_H * lambda_min+ = {limit}"),
        });
    }
    direct_rdf_formula(model, d)
}

/// R_H(d) at any positive d, by reverse water-filling over the spectrum of C_H.
pub fn direct_rdf_waterfilled(model: &ChannelModel, d: f64) -> Result<f64> {
    Ok(reverse_waterfill(model.spectrum().positive(), d)?.rate)
}

/// `(d_min, d_max)`: the MMSE floor and the end of the uniform-noise range.
pub fn distortion_range(mmse: &MmseResult, model: &ChannelModel) -> (f64, f64) {
    let d_min = model.trace() - mmse.est_cov.trace();
    let d_max = match mmse.est_spectrum.min_positive() {
        Some(lmin) => d_min + mmse.r_s as f64 * lmin,
        None => d_min,
    };
    (d_min, d_max)
}

/// Decomposed rate for an estimate whose carried modes have total log-spectrum
/// `logdet` over `rank` modes, with `floor` the distortion not available to them.
fn decomposed(model: &ChannelModel, d: f64, floor: f64, rank: usize, logdet: f64) -> (f64, f64, f64) {
    let r_h = model.rank() as f64;
    let r_s = rank as f64;
    let h_h = r_h * LN_PI_E + model.pseudo_logdet();
    let h_s = r_s * LN_PI_E + logdet;
    let r_direct = 0.5 * model.pseudo_logdet() - 0.5 * r_h * (d / r_h).ln();
    let dr_source = 0.5 * (h_s - h_h) + 0.5 * r_h * (r_s / r_h).ln();
    let dr_distortion =
        0.5 * (r_h - r_s) * (d * std::f64::consts::PI * std::f64::consts::E / r_s).ln()
            - 0.5 * r_s * (1.0 - floor / d).ln();
    (r_direct, dr_source, dr_distortion)
}

/// ΔR_S over all r_S estimate modes; independent of d.
pub fn source_term(model: &ChannelModel, mmse: &MmseResult) -> f64 {
    let r_h = model.rank() as f64;
    let r_s = mmse.r_s as f64;
    let h_h = r_h * LN_PI_E + model.pseudo_logdet();
    let h_s = r_s * LN_PI_E + mmse.est_spectrum.pseudo_logdet();
    0.5 * (h_s - h_h) + 0.5 * r_h * (r_s / r_h).ln()
}

/// Overall RDF at distortion `d`.
///
/// Inside `(d_min, d_max]` the closed form applies with all r_S modes active.
/// Past d_max the weakest estimate modes saturate; they are dropped from the
/// entropy term and their variance joins the floor, which keeps the
/// decomposition exact. The compact total then comes from reverse water-filling.
pub fn overall_rdf(model: &ChannelModel, mmse: &MmseResult, d: f64) -> Result<RdfBreakdown> {
    check_budget(d)?;
    let (d_min, d_max) = distortion_range(mmse, model);
    if d <= d_min {
        return Err(Error::DistortionBelowMmse { d, d_min });
    }
    let d_eff = d - d_min;
    let eigs = mmse.est_spectrum.positive();

    if d <= d_max {
        let r_s = mmse.r_s;
        let logdet = mmse.est_spectrum.pseudo_logdet();
        let (r_direct, dr_source, dr_distortion) = decomposed(model, d, d_min, r_s, logdet);
        let total_compact = 0.5 * logdet - 0.5 * r_s as f64 * (d_eff / r_s as f64).ln();
        return Ok(RdfBreakdown {
            r_direct,
            dr_source,
            dr_distortion,
            total: r_direct + dr_source + dr_distortion,
            total_compact,
            d,
            d_eff,
            active_rank: r_s,
            extended: false,
        });
    }

    let wf = if eigs.is_empty() { None } else { Some(reverse_waterfill(eigs, d_eff)?) };
    let wf = match wf {
        Some(wf) if wf.active_set_size > 0 => wf,
        _ => {
            // Zero rate: the budget covers the whole estimate variance.
            let r_direct = direct_rdf_formula(model, d)?;
            return Ok(RdfBreakdown {
                r_direct,
                dr_source: 0.0,
                dr_distortion: -r_direct,
                total: 0.0,
                total_compact: 0.0,
                d,
                d_eff,
                active_rank: 0,
                extended: true,
            });
        }
    };
    let (mut logdet, mut saturated) = (0.0, 0.0);
    for &l in eigs {
        if l > wf.water_level {
            logdet += l.ln();
        } else {
            saturated += l;
        }
    }
    let (r_direct, dr_source, dr_distortion) =
        decomposed(model, d, d_min + saturated, wf.active_set_size, logdet);
    Ok(RdfBreakdown {
        r_direct,
        dr_source,
        dr_distortion,
        total: r_direct + dr_source + dr_distortion,
        total_compact: wf.rate,
        d,
        d_eff,
        active_rank: wf.active_set_size,
        extended: true,
    })
}

/// Reverse water-filling: θ solves `Σ min(θ, λ_i) = d_eff` over the positive modes.
///
/// Solved exactly by scanning the breakpoints of the piecewise-linear left side.
pub fn reverse_waterfill(eigenvalues: &[f64], d_eff: f64) -> Result<WaterfillResult> {
    check_budget(d_eff)?;
    if eigenvalues.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidParameter("eigenvalues must be finite and nonnegative".into()));
    }
    let mut sorted: Vec<f64> = eigenvalues.iter().copied().filter(|&l| l > 0.0).collect();
    if sorted.is_empty() {
        return Err(Error::InvalidParameter("water-filling needs a positive eigenvalue".into()));
    }
    sorted.sort_by(|a, b| a.total_cmp(b));
    let total: f64 = sorted.iter().sum();
    let r = sorted.len();

    let water_level = if d_eff >= total {
        sorted[r - 1]
    } else {
        let mut below = 0.0;
        let mut theta = sorted[r - 1];
        for k in 0..r {
            let t = (d_eff - below) / (r - k) as f64;
            if t <= sorted[k] {
                theta = t;
                break;
            }
            below += sorted[k];
        }
        theta
    };

    let per_mode_noise: Vec<f64> = eigenvalues.iter().map(|&l| l.min(water_level)).collect();
    let (mut rate, mut active) = (0.0, 0);
    for &l in eigenvalues {
        if l > water_level {
            rate += 0.5 * (l / water_level).ln();
            active += 1;
        }
    }
    Ok(WaterfillResult {
        water_level,
        per_mode_noise,
        rate,
        active_set_size: active,
        budget_exceeds_variance: d_eff > total,
    })
}

/// Draw Z from its conditional law given S in the test channel `S = Z + N`.
///
/// `wf` must come from `reverse_waterfill` on `mmse.est_spectrum.positive()`.
/// Works mode by mode in the eigenbasis of C_{S|P}: with coordinate c, variance λ
/// and noise n, `z = (1 − n/λ) c + CN(0, (λ − n) n / λ)`.
pub fn simulate_test_channel(mmse: &MmseResult, wf: &WaterfillResult, s: &CVector, rng: &mut SimRng) -> Result<CVector> {
    let spec = &mmse.est_spectrum;
    if wf.per_mode_noise.len() != spec.rank {
        return Err(Error::RankMismatch {
            expected: spec.rank,
            found: wf.per_mode_noise.len(),
        });
    }
    if s.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: s.len(),
        });
    }
    let mut z = CVector::zeros(s.len());
    for (i, (&lambda, &noise)) in spec.positive().iter().zip(&wf.per_mode_noise).enumerate() {
        let u = spec.eigenvectors.column(i);
        let c = u.dotc(s);
        let gain = 1.0 - noise / lambda;
        let var = ((lambda - noise) * noise / lambda).max(0.0);
        let w = if var > 0.0 { rng.complex_normal((var / 2.0).sqrt()) } else { C64::new(0.0, 0.0) };
        z.axpy(c * gain + w, &u, C64::new(1.0, 0.0));
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::mmse;
    use crate::numerics::{CMatrix, HermitianMatrix};
    use crate::pilots::{effective_matrix, PilotMatrix};

    fn scalar_setup() -> (ChannelModel, MmseResult) {
        let p = PilotMatrix::from_blocks(vec![CMatrix::from_element(1, 1, C64::new(1.0, 0.0))], vec![1], 1, 1.0)
            .unwrap();
        let model = ChannelModel::identity(1);
        let eff = effective_matrix(&model, &p).unwrap();
        let r = mmse(&model, &eff).unwrap();
        (model, r)
    }

    #[test]
    fn direct_examples() {
        let i2 = ChannelModel::identity(2);
        assert!((direct_rdf(&i2, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(direct_rdf(&ChannelModel::identity(3), 3.0).unwrap().abs() < 1e-15);
        let m = ChannelModel::from_covariance(HermitianMatrix::from_real_diagonal(&[2.0, 1.0])).unwrap();
        let expected = 0.5 * 2f64.ln() - 0.75f64.ln();
        assert!((direct_rdf(&m, 1.5).unwrap() - expected).abs() < 1e-14);
        assert!((direct_rdf_waterfilled(&m, 1.5).unwrap() - expected).abs() < 1e-14);
        assert!(matches!(direct_rdf(&m, 2.5), Err(Error::DistortionOutOfRange { .. })));
        assert!(direct_rdf(&m, 0.0).is_err());
    }

    #[test]
    fn scalar_range_and_breakdown() {
        let (model, r) = scalar_setup();
        let (lo, hi) = distortion_range(&r, &model);
        assert!((lo - 0.5).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
        let b = overall_rdf(&model, &r, 1.0).unwrap();
        assert!(b.r_direct.abs() < 1e-15);
        assert!((b.dr_source + 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((b.dr_distortion - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!(b.total.abs() < 1e-15 && b.total_compact.abs() < 1e-15);
        assert!(!b.extended);
        assert!(matches!(overall_rdf(&model, &r, 0.5), Err(Error::DistortionBelowMmse { .. })));
    }

    #[test]
    fn zero_pilot_range_is_degenerate() {
        let model = ChannelModel::identity(2);
        let p = PilotMatrix::from_blocks(vec![CMatrix::zeros(1, 1), CMatrix::zeros(1, 1)], vec![1, 2], 2, 0.0).unwrap();
        let r = mmse(&model, &effective_matrix(&model, &p).unwrap()).unwrap();
        assert_eq!(distortion_range(&r, &model), (2.0, 2.0));
        let b = overall_rdf(&model, &r, 2.5).unwrap();
        assert_eq!(b.total, 0.0);
        assert!(b.extended);
    }

    #[test]
    fn waterfill_examples() {
        let w = reverse_waterfill(&[2.0, 1.0], 1.0).unwrap();
        assert!((w.water_level - 0.5).abs() < 1e-15);
        assert!((w.rate - 0.5 * (4f64.ln() + 2f64.ln())).abs() < 1e-14);
        assert_eq!(w.active_set_size, 2);

        let w = reverse_waterfill(&[3.0, 0.1], 1.1).unwrap();
        assert!((w.water_level - 1.0).abs() < 1e-14);
        assert_eq!(w.per_mode_noise[1], 0.1);
        assert!((w.rate - 0.5 * 3f64.ln()).abs() < 1e-14);
        assert_eq!(w.active_set_size, 1);

        let w = reverse_waterfill(&[1.0], 1.0).unwrap();
        assert_eq!((w.water_level, w.rate, w.budget_exceeds_variance), (1.0, 0.0, false));

        let w = reverse_waterfill(&[1.0, 0.5], 4.0).unwrap();
        assert!(w.budget_exceeds_variance);
        assert_eq!(w.rate, 0.0);
        assert!(matches!(reverse_waterfill(&[1.0], 0.0), Err(Error::BudgetNonpositive(_))));
        assert!(reverse_waterfill(&[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn waterfill_ties_and_zero_modes() {
        let w = reverse_waterfill(&[1.0, 1.0, 0.0, 4.0], 3.0).unwrap();
        assert!((w.water_level - 1.0).abs() < 1e-15);
        assert_eq!(w.active_set_size, 1);
        assert_eq!(w.per_mode_noise[2], 0.0);
        assert!((w.per_mode_noise.iter().sum::<f64>() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn extended_path_decomposes_exactly() {
        // Estimate spectrum {2, 1} after a perfect-quality pilot on a diagonal channel.
        let model = ChannelModel::from_covariance(HermitianMatrix::from_real_diagonal(&[4.0, 2.0])).unwrap();
        let p = PilotMatrix::from_blocks(
            vec![CMatrix::from_element(1, 1, C64::new(0.5, 0.0)), CMatrix::from_element(1, 1, C64::new(1.0 / 2f64.sqrt(), 0.0))],
            vec![1, 2],
            2,
            0.25,
        )
        .unwrap();
        let r = mmse(&model, &effective_matrix(&model, &p).unwrap()).unwrap();
        let (lo, hi) = distortion_range(&r, &model);
        let b = overall_rdf(&model, &r, hi + 0.3).unwrap();
        assert!(b.extended);
        assert_eq!(b.active_rank, 1);
        assert!(b.total_discrepancy() < 1e-12);
        assert!(b.total > 0.0);
        let inside = overall_rdf(&model, &r, 0.5 * (lo + hi)).unwrap();
        assert!(inside.total_discrepancy() < 1e-12);
        assert!(inside.total > b.total);
    }

    #[test]
    fn test_channel_zero_rate_endpoint() {
        let (_, r) = scalar_setup();
        let wf = reverse_waterfill(r.est_spectrum.positive(), 0.5).unwrap();
        let z = simulate_test_channel(&r, &wf, &CVector::from_element(1, C64::new(0.7, -0.2)), &mut SimRng::new(1))
            .unwrap();
        assert_eq!(z[0], C64::new(0.0, 0.0));
        let bad = WaterfillResult { per_mode_noise: vec![], ..wf };
        assert!(matches!(
            simulate_test_channel(&r, &bad, &CVector::zeros(1), &mut SimRng::new(1)),
            Err(Error::RankMismatch { .. })
        ));
    }
}
