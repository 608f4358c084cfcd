use super::{mc_run, Execution, McEstimate, McSummary};
use crate::bounds::{bound_set, BoundSet};
use crate::channel::{ChannelModel, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::derive_seed;

/// Least-squares fit of `v ≈ c / n_t` with the log-log slope of the same points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub coefficient: f64,
    /// Slope of ln v against ln n_t; NaN if any value is nonpositive.
    pub log_log_slope: f64,
    /// `‖v − c/n_t‖ / ‖v‖`.
    pub relative_residual: f64,
    pub points: usize,
}

pub fn fit_inverse_decay(n_t: &[f64], values: &[f64]) -> Result<DecayFit> {
    if n_t.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: n_t.len(),
            found: values.len(),
        });
    }
    if n_t.len() < 2 {
        return Err(Error::PreconditionViolated("a decay fit needs at least two points".into()));
    }
    let sxx: f64 = n_t.iter().map(|n| 1.0 / (n * n)).sum();
    let sxy: f64 = n_t.iter().zip(values).map(|(n, v)| v / n).sum();
    let c = sxy / sxx;
    let res: f64 = n_t.iter().zip(values).map(|(n, v)| (v - c / n).powi(2)).sum();
    let norm: f64 = values.iter().map(|v| v * v).sum();

    let log_log_slope = if values.iter().all(|&v| v > 0.0) {
        let xs: Vec<f64> = n_t.iter().map(|n| n.ln()).collect();
        let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let k = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        cov / var
    } else {
        f64::NAN
    };
    Ok(DecayFit {
        coefficient: c,
        log_log_slope,
        relative_residual: if norm > 0.0 { (res / norm).sqrt() } else { 0.0 },
        points: n_t.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n_t: usize,
    pub seed: u64,
    pub summary: McSummary,
    /// Bounds, or why they do not apply at this point.
    pub bounds: std::result::Result<BoundSet, String>,
}

/// Outcome of the sandwich comparisons at one grid point; `true` also when a
/// bound is invalid and the comparison is one-sided or skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sandwich {
    pub dr_source: bool,
    pub dmmse: bool,
    pub dr_distortion: bool,
    pub overall: bool,
}

impl Sandwich {
    pub fn all(&self) -> bool {
        self.dr_source && self.dmmse && self.dr_distortion && self.overall
    }
}

impl SweepPoint {
    /// Each Monte Carlo mean within `k` standard errors of its bound interval.
    pub fn sandwich(&self, k: f64) -> Sandwich {
        let Ok(b) = &self.bounds else {
            return Sandwich {
                dr_source: true,
                dmmse: true,
                dr_distortion: true,
                overall: true,
            };
        };
        let check = |e: &McEstimate, lo: &crate::bounds::Bound, hi: &crate::bounds::Bound| {
            e.within_band(lo.value(), hi.value(), k)
        };
        let s = &self.summary;
        Sandwich {
            dr_source: check(&s.dr_source, &b.dr_source_lo, &b.dr_source_hi),
            dmmse: check(&s.dmmse, &b.dmmse_lo, &b.dmmse_hi),
            dr_distortion: check(&s.dr_distortion, &b.dr_dist_lo, &b.dr_dist_hi),
            overall: check(&s.gap, &b.overall_lo, &b.overall_hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Fits over the largest ⌈len/2⌉ grid points (at least two).
    pub gap_fit: DecayFit,
    pub dmmse_fit: DecayFit,
    pub dr_source_fit: DecayFit,
    pub dr_distortion_fit: DecayFit,
}

impl SweepResult {
    pub fn grid(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.n_t).collect()
    }
}

fn validate_grid(cfg: &SystemConfig, grid: &[usize]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidParameter(format!("n_t grid needs at least two points, got {}", grid.len())));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!("n_t grid must be strictly increasing: {grid:?}")));
    }
    if grid[0] < cfg.m_t() {
        return Err(Error::InvalidParameter(format!(
            "every n_t must be at least m_t = {}, got {}",
            cfg.m_t(),
            grid[0]
        )));
    }
    Ok(())
}

/// Point `n_t` runs under seed `derive_seed(seed, n_t)`.
pub fn sweep_nt(
    cfg: &SystemConfig,
    model: &ChannelModel,
    grid: &[usize],
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<SweepResult> {
    validate_grid(cfg, grid)?;
    let mut points = Vec::with_capacity(grid.len());
    for &n_t in grid {
        let c = cfg.with_n_t(n_t)?;
        let point_seed = derive_seed(seed, n_t as u64);
        let summary = mc_run(&c, model, trials, point_seed, exec)?;
        let bounds = match bound_set(&c, model) {
            Ok(b) => Ok(b),
            Err(e @ (Error::PreconditionViolated(_) | Error::SingularCovariance { .. })) => Err(e.to_string()),
            Err(e) => return Err(e),
        };
        points.push(SweepPoint {
            n_t,
            seed: point_seed,
            summary,
            bounds,
        });
    }

    let window = &points[(grid.len() / 2).min(grid.len() - 2)..];
    let n: Vec<f64> = window.iter().map(|p| p.n_t as f64).collect();
    let fit = |f: fn(&McSummary) -> f64| {
        let v: Vec<f64> = window.iter().map(|p| f(&p.summary)).collect();
        fit_inverse_decay(&n, &v)
    };
    Ok(SweepResult {
        gap_fit: fit(|s| s.gap.mean)?,
        dmmse_fit: fit(|s| s.dmmse.mean)?,
        dr_source_fit: fit(|s| s.dr_source.mean)?,
        dr_distortion_fit: fit(|s| s.dr_distortion.mean)?,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_inverse_decay() {
        let n = [10.0, 20.0, 40.0];
        let v: Vec<f64> = n.iter().map(|x| 3.0 / x).collect();
        let f = fit_inverse_decay(&n, &v).unwrap();
        assert!((f.coefficient - 3.0).abs() < 1e-14);
        assert!((f.log_log_slope + 1.0).abs() < 1e-14);
        assert!(f.relative_residual < 1e-14);
    }

    #[test]
    fn nonpositive_values_have_no_slope() {
        let f = fit_inverse_decay(&[1.0, 2.0], &[1.0, -1.0]).unwrap();
        assert!(f.log_log_slope.is_nan());
        assert!(fit_inverse_decay(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn grid_validation() {
        let cfg = SystemConfig::new(2, 2, 2, 1.0, 1.0).unwrap();
        assert!(validate_grid(&cfg, &[2, 4]).is_ok());
        assert!(validate_grid(&cfg, &[]).is_err());
        assert!(validate_grid(&cfg, &[4, 4]).is_err());
        assert!(validate_grid(&cfg, &[1, 4]).is_err());
    }
}
