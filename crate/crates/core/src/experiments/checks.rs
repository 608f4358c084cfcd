use super::{run_trial_range, run_trials, Execution, McEstimate, Moments};
use crate::bounds::{wishart_inverse_moments, wishart_logdet_mean};
use crate::channel::{ChannelModel, SystemConfig};
use crate::error::{Error, Result};
use crate::estimation::{estimate, mmse};
use crate::numerics::{complex_gaussian_matrix, CMatrix, SimRng};
use crate::pilots::{effective_matrix, sample_pilot, sample_training};
use crate::rdf::{distortion_range, reverse_waterfill, simulate_test_channel};

/// Largest tolerated share of draws with d ≤ d_min.
const MAX_SKIPPED_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistortionTarget {
    /// A fixed budget d; draws with d ≤ d_min are skipped.
    Absolute(f64),
    /// `d = d_min + delta` on every draw; `delta = 0` reconstructs with Z = S.
    AboveMmse(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct E2eResult {
    /// ‖H − Z‖² over the kept draws.
    pub distortion: McEstimate,
    /// ‖H − Z‖² − d per draw; its mean should vanish.
    pub excess: McEstimate,
}

/// Samples H, Y, the estimate S and a test-channel reconstruction Z per draw.
pub fn e2e_distortion_check(
    cfg: &SystemConfig,
    model: &ChannelModel,
    target: DistortionTarget,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<E2eResult> {
    match target {
        DistortionTarget::Absolute(d) if !(d > 0.0 && d.is_finite()) => {
            return Err(Error::InvalidParameter(format!("distortion target must be positive, got {d}")))
        }
        DistortionTarget::AboveMmse(delta) if !(delta >= 0.0 && delta.is_finite()) => {
            return Err(Error::InvalidParameter(format!("distortion offset must be nonnegative, got {delta}")))
        }
        _ => {}
    }
    let pilot_set = cfg.default_pilot_set();
    let draws = run_trials(exec, trials, seed, |s| {
        let mut rng = SimRng::new(s);
        let pilot = sample_pilot(cfg, &pilot_set, &mut rng)?;
        let eff = effective_matrix(model, &pilot)?;
        let est = mmse(model, &eff)?;
        let sample = sample_training(model, &pilot, &mut rng)?;
        let s_hat = estimate(&est, &sample.y)?;
        let (d_min, _) = distortion_range(&est, model);
        let d = match target {
            DistortionTarget::Absolute(d) if d <= d_min => return Ok(None),
            DistortionTarget::Absolute(d) => d,
            DistortionTarget::AboveMmse(delta) => d_min + delta,
        };
        let d_eff = d - d_min;
        let z = if d_eff <= 0.0 || est.r_s == 0 {
            s_hat
        } else {
            let wf = reverse_waterfill(est.est_spectrum.positive(), d_eff)?;
            simulate_test_channel(&est, &wf, &s_hat, &mut rng)?
        };
        let err = (&sample.h - z).norm_squared();
        Ok(Some((err, d)))
    })?;

    let kept: Vec<(f64, f64)> = draws.into_iter().flatten().collect();
    let skipped = trials - kept.len();
    if skipped as f64 > MAX_SKIPPED_FRACTION * trials as f64 {
        return Err(Error::TooManySkipped { skipped, trials });
    }
    let errs: Vec<f64> = kept.iter().map(|k| k.0).collect();
    let excess: Vec<f64> = kept.iter().map(|k| k.0 - k.1).collect();
    let mut distortion = McEstimate::from_samples(&errs, seed)?;
    let mut excess = McEstimate::from_samples(&excess, seed)?;
    distortion.skipped = skipped;
    excess.skipped = skipped;
    Ok(E2eResult { distortion, excess })
}

/// Monte Carlo against the complex Wishart moment formulas. Diagonal moments
/// are averaged over the m diagonal entries of each draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WishartCheck {
    pub logdet: McEstimate,
    pub inv_diag: McEstimate,
    pub inv_sq_diag: McEstimate,
    pub expected_logdet: f64,
    pub expected_inv: f64,
    pub expected_inv_sq: f64,
}

/// Draws processed per block; bounds memory for long runs.
const WISHART_BLOCK: usize = 1 << 16;

/// X = G G^H with G an m x n matrix of i.i.d. CN(0, p) entries.
pub fn wishart_check(m: usize, n: usize, p: f64, draws: usize, seed: u64, exec: Execution) -> Result<WishartCheck> {
    let (expected_inv, expected_inv_sq) = wishart_inverse_moments(m, n, p)?;
    let expected_logdet = wishart_logdet_mean(m, n, m as f64 * p.ln())?;
    let draw = |s: u64| {
        let mut rng = SimRng::new(s);
        let g = complex_gaussian_matrix(&mut rng, m, n, p)?;
        let x = &g * g.adjoint();
        let chol = x.cholesky().ok_or(Error::SingularSystem)?;
        let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>();
        let inv = chol.inverse();
        let inv_sq = &inv * &inv;
        let mean_diag = |a: &CMatrix| a.diagonal().iter().map(|z| z.re).sum::<f64>() / m as f64;
        Ok([logdet, mean_diag(&inv), mean_diag(&inv_sq)])
    };
    let mut acc = [Moments::EMPTY; 3];
    let mut start = 0;
    while start < draws {
        let end = (start + WISHART_BLOCK).min(draws);
        let block = run_trial_range(exec, start..end, seed, draw)?;
        for (k, a) in acc.iter_mut().enumerate() {
            let col: Vec<f64> = block.iter().map(|v| v[k]).collect();
            *a = a.merge(Moments::from_samples(&col));
        }
        start = end;
    }
    Ok(WishartCheck {
        logdet: McEstimate::from_moments(acc[0], seed)?,
        inv_diag: McEstimate::from_moments(acc[1], seed)?,
        inv_sq_diag: McEstimate::from_moments(acc[2], seed)?,
        expected_logdet,
        expected_inv,
        expected_inv_sq,
    })
}
