//! Downlink channel statistics and realizations.
//!
//! The channel vector stacks all antennas of subcarrier 1, then all antennas of
//! subcarrier 2, and so on: entry `r * m_t + a` is antenna `a` on subcarrier `r`
//! (0-based). Pilot blocks follow the same layout.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::numerics::{
    eigh, random_unitary, relative_frobenius_diff, CMatrix, CVector, HermitianMatrix, SimRng,
    Spectrum, C64, DEFAULT_RANK_TOL,
};

/// System dimensions and operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    m_t: usize,
    n_c: usize,
    n_p: usize,
    n_t: usize,
    snr_dl: f64,
    d: f64,
    epsilon: f64,
}

pub const DEFAULT_EPSILON: f64 = 0.5;

impl SystemConfig {
    /// Pilots on every subcarrier and ε = 0.5.
    pub fn new(m_t: usize, n_c: usize, n_t: usize, snr_dl: f64, d: f64) -> Result<Self> {
        Self::full(m_t, n_c, n_c, n_t, snr_dl, d, DEFAULT_EPSILON)
    }

    pub fn full(
        m_t: usize,
        n_c: usize,
        n_p: usize,
        n_t: usize,
        snr_dl: f64,
        d: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let cfg = Self {
            m_t,
            n_c,
            n_p,
            n_t,
            snr_dl,
            d,
            epsilon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.m_t == 0 || self.n_c == 0 || self.n_p == 0 || self.n_t == 0 {
            return bad(format!(
                "counts must be >= 1 (m_t={}, n_c={}, n_p={}, n_t={})",
                self.m_t, self.n_c, self.n_p, self.n_t
            ));
        }
        if self.n_p > self.n_c {
            return bad(format!("n_p = {} exceeds n_c = {}", self.n_p, self.n_c));
        }
        if !(self.snr_dl > 0.0) || !self.snr_dl.is_finite() {
            return bad(format!("snr_dl must be positive, got {}", self.snr_dl));
        }
        if !(self.d > 0.0) || !self.d.is_finite() {
            return bad(format!("distortion d must be positive, got {}", self.d));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        Ok(())
    }

    pub fn with_n_t(&self, n_t: usize) -> Result<Self> {
        Self::full(self.m_t, self.n_c, self.n_p, n_t, self.snr_dl, self.d, self.epsilon)
    }

    pub fn with_distortion(&self, d: f64) -> Result<Self> {
        Self::full(self.m_t, self.n_c, self.n_p, self.n_t, self.snr_dl, d, self.epsilon)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::full(self.m_t, self.n_c, self.n_p, self.n_t, self.snr_dl, self.d, epsilon)
    }

    pub fn m_t(&self) -> usize {
        self.m_t
    }
    pub fn n_c(&self) -> usize {
        self.n_c
    }
    pub fn n_p(&self) -> usize {
        self.n_p
    }
    pub fn n_t(&self) -> usize {
        self.n_t
    }
    pub fn snr_dl(&self) -> f64 {
        self.snr_dl
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Channel dimension N = m_t n_c.
    pub fn n(&self) -> usize {
        self.m_t * self.n_c
    }

    /// Training length n_0 = n_t n_p.
    pub fn n0(&self) -> usize {
        self.n_t * self.n_p
    }

    /// Per-entry pilot variance p = SNR_dl / m_t.
    pub fn pilot_power(&self) -> f64 {
        self.snr_dl / self.m_t as f64
    }

    /// 1-based pilot subcarriers spread evenly over the band; all of them when n_p = n_c.
    pub fn default_pilot_set(&self) -> Vec<usize> {
        (0..self.n_p).map(|b| 1 + b * self.n_c / self.n_p).collect()
    }
}

/// Covariance generators.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceKind {
    Identity,
    /// `R_f ⊗ R_s` with `R[i][j] = rho^|i-j|`, frequency outer and spatial inner.
    Kronecker { rho_s: f64, rho_f: f64 },
    /// ⌈N/3⌉ eigenvalues at `lo`, ⌈N/3⌉ at `hi`, the rest at `mid`, scaled to
    /// `trace` (N when `None`), in a Haar-random eigenbasis.
    ThreeTier {
        lo: f64,
        mid: f64,
        hi: f64,
        trace: Option<f64>,
    },
}

/// Default tier levels before trace normalization.
pub const DEFAULT_TIER_LEVELS: (f64, f64, f64) = (0.3, 1.0, 2.0);

impl CovarianceKind {
    pub fn three_tier_default() -> Self {
        let (lo, mid, hi) = DEFAULT_TIER_LEVELS;
        CovarianceKind::ThreeTier {
            lo,
            mid,
            hi,
            trace: None,
        }
    }
}

/// Channel covariance with its cached spectrum and Hermitian square root.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    cov: HermitianMatrix,
    spectrum: Spectrum,
    sqrt_cov: CMatrix,
}

impl ChannelModel {
    pub fn from_covariance(cov: HermitianMatrix) -> Result<Self> {
        let spectrum = eigh(&cov, DEFAULT_RANK_TOL)?;
        if spectrum.rank == 0 {
            return Err(Error::InvalidParameter(
                "channel covariance is the zero matrix".into(),
            ));
        }
        let sqrt_cov = spectrum.sqrt();
        Ok(Self {
            cov,
            spectrum,
            sqrt_cov,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_covariance(HermitianMatrix::identity(n)).expect("identity is PSD")
    }

    pub fn n(&self) -> usize {
        self.cov.dim()
    }

    pub fn cov(&self) -> &HermitianMatrix {
        &self.cov
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn sqrt_cov(&self) -> &CMatrix {
        &self.sqrt_cov
    }

    /// r_H.
    pub fn rank(&self) -> usize {
        self.spectrum.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.spectrum.is_full_rank()
    }

    pub fn trace(&self) -> f64 {
        self.cov.trace()
    }

    pub fn pseudo_logdet(&self) -> f64 {
        self.spectrum.pseudo_logdet()
    }

    /// Smallest nonzero eigenvalue.
    pub fn lambda_min_positive(&self) -> f64 {
        self.spectrum.min_positive().expect("model has positive rank")
    }

    /// tr(C_H^{-1}); requires full rank.
    pub fn inverse_trace(&self) -> Result<f64> {
        self.require_full_rank()?;
        Ok(self.spectrum.eigenvalues.iter().map(|l| 1.0 / l).sum())
    }

    pub fn require_full_rank(&self) -> Result<()> {
        if self.is_full_rank() {
            Ok(())
        } else {
            Err(Error::SingularCovariance {
                rank: self.rank(),
                n: self.n(),
            })
        }
    }

    /// H = C_H^{1/2} g with g ~ CN(0, I).
    pub fn sample_channel(&self, rng: &mut SimRng) -> CVector {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let g = CVector::from_fn(self.n(), |_, _| rng.complex_normal(scale));
        &self.sqrt_cov * g
    }

    /// Writes the covariance in the text matrix format (see [`write_matrix_text`]).
    pub fn write_text(&self, out: impl Write) -> Result<()> {
        write_matrix_text(self.cov.as_matrix(), out)
    }

    pub fn read_text(input: impl BufRead) -> Result<Self> {
        let m = read_matrix_text(input)?;
        let cov = HermitianMatrix::new(m)?;
        Self::from_covariance(cov)
    }
}

/// Builds a channel model of dimension `m_t * n_c`. Only `ThreeTier` consumes `rng`.
pub fn make_covariance(
    kind: &CovarianceKind,
    m_t: usize,
    n_c: usize,
    rng: &mut SimRng,
) -> Result<ChannelModel> {
    let n = m_t * n_c;
    if n == 0 {
        return Err(Error::InvalidParameter("empty channel dimension".into()));
    }
    match *kind {
        CovarianceKind::Identity => Ok(ChannelModel::identity(n)),
        CovarianceKind::Kronecker { rho_s, rho_f } => {
            let r_s = exponential_correlation(m_t, rho_s)?;
            let r_f = exponential_correlation(n_c, rho_f)?;
            let c = r_f.kronecker(&r_s);
            ChannelModel::from_covariance(HermitianMatrix::from_hermitian_part(&c))
        }
        CovarianceKind::ThreeTier { lo, mid, hi, trace } => {
            let eigenvalues = three_tier_eigenvalues(n, (lo, mid, hi), trace.unwrap_or(n as f64))?;
            let q = random_unitary(rng, n);
            let lambda = HermitianMatrix::from_real_diagonal(&eigenvalues);
            let c = &q * lambda.as_matrix() * q.adjoint();
            ChannelModel::from_covariance(HermitianMatrix::from_hermitian_part(&c))
        }
    }
}

/// Prescribed three-tier eigenvalues, small tier first, before any basis rotation.
pub fn three_tier_eigenvalues(n: usize, levels: (f64, f64, f64), trace: f64) -> Result<Vec<f64>> {
    let (lo, mid, hi) = levels;
    if !(lo > 0.0 && lo < mid && mid < hi && hi.is_finite()) {
        return Err(Error::TierLevelsNotOrdered { lo, mid, hi });
    }
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "target trace must be positive, got {trace}"
        )));
    }
    let tier = n.div_ceil(3);
    let n_small = tier.min(n);
    let n_large = tier.min(n - n_small);
    let n_mid = n - n_small - n_large;
    let raw: Vec<f64> = std::iter::repeat_n(lo, n_small)
        .chain(std::iter::repeat_n(mid, n_mid))
        .chain(std::iter::repeat_n(hi, n_large))
        .collect();
    let scale = trace / raw.iter().sum::<f64>();
    Ok(raw.into_iter().map(|l| l * scale).collect())
}

fn exponential_correlation(n: usize, rho: f64) -> Result<CMatrix> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidCorrelation(rho));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        C64::new(rho.powi(i.abs_diff(j) as i32), 0.0)
    }))
}

/// Text matrix format: first line `N`, then `N` lines of `N` whitespace-separated
/// `re,im` pairs. Values use the shortest representation that round-trips.
pub fn write_matrix_text(m: &CMatrix, mut out: impl Write) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    writeln!(out, "{}", m.nrows())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:?},{:?}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix_text(input: impl BufRead) -> Result<CMatrix> {
    let fmt_err = |line: usize, message: String| Error::MatrixFormat { line, message };
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| fmt_err(1, "missing dimension header".into()))?;
    let header = header?;
    let n: usize = header
        .trim()
        .parse()
        .map_err(|_| fmt_err(hline, format!("bad dimension header {:?}", header.trim())))?;
    if n == 0 {
        return Err(fmt_err(hline, "dimension must be positive".into()));
    }

    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| fmt_err(hline + i + 1, format!("expected {n} rows, found {i}")))?;
        let line = line?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != n {
            return Err(fmt_err(
                lineno,
                format!("expected {n} entries, found {}", tokens.len()),
            ));
        }
        for (j, tok) in tokens.iter().enumerate() {
            let (re, im) = tok
                .split_once(',')
                .ok_or_else(|| fmt_err(lineno, format!("entry {tok:?} is not re,im")))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| fmt_err(lineno, format!("bad number {s:?}")))
            };
            m[(i, j)] = C64::new(parse(re)?, parse(im)?);
        }
    }
    if let Some((lineno, _)) = lines.next() {
        return Err(fmt_err(lineno, "trailing data after matrix".into()));
    }
    Ok(m)
}

/// ‖sqrt · sqrt − C‖_F / ‖C‖_F for a model.
pub fn sqrt_residual(model: &ChannelModel) -> f64 {
    relative_frobenius_diff(&(model.sqrt_cov() * model.sqrt_cov()), model.cov().as_matrix())
}
