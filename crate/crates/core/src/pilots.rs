//! Gaussian-ensemble block pilots and the effective matrix A = C_H^{1/2} P.

use std::collections::HashSet;

use crate::channel::{ChannelModel, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::{complex_gaussian_matrix, hermitian_part, CMatrix, CVector, HermitianMatrix, SimRng};

/// Block pilot matrix: pilot block `b` is an `m_t x n_t` Gaussian block placed in
/// the rows of subcarrier `pilot_set[b]` and in columns `b*n_t .. (b+1)*n_t`.
/// Every other entry is exactly zero.
#[derive(Debug, Clone)]
pub struct PilotMatrix {
    blocks: Vec<CMatrix>,
    pilot_set: Vec<usize>,
    power: f64,
    m_t: usize,
    n_c: usize,
    n_t: usize,
}

impl PilotMatrix {
    /// Assembles a pilot from explicit blocks (all `m_t x n_t`).
    pub fn from_blocks(
        blocks: Vec<CMatrix>,
        pilot_set: Vec<usize>,
        n_c: usize,
        power: f64,
    ) -> Result<Self> {
        validate_pilot_set(&pilot_set, n_c)?;
        if blocks.len() != pilot_set.len() {
            return Err(Error::DimensionMismatch {
                expected: pilot_set.len(),
                found: blocks.len(),
            });
        }
        let (m_t, n_t) = blocks.first().map_or((0, 0), |b| b.shape());
        if m_t == 0 || n_t == 0 {
            return Err(Error::InvalidParameter("empty pilot block".into()));
        }
        if let Some(b) = blocks.iter().find(|b| b.shape() != (m_t, n_t)) {
            return Err(Error::DimensionMismatch {
                expected: m_t * n_t,
                found: b.nrows() * b.ncols(),
            });
        }
        Ok(Self {
            blocks,
            pilot_set,
            power,
            m_t,
            n_c,
            n_t,
        })
    }

    /// Rows N = m_t n_c.
    pub fn n(&self) -> usize {
        self.m_t * self.n_c
    }

    /// Columns n_0 = n_t n_p.
    pub fn n0(&self) -> usize {
        self.n_t * self.blocks.len()
    }

    pub fn m_t(&self) -> usize {
        self.m_t
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn pilot_set(&self) -> &[usize] {
        &self.pilot_set
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    /// First row of the subcarrier that carries block `b`.
    fn row_offset(&self, b: usize) -> usize {
        (self.pilot_set[b] - 1) * self.m_t
    }

    /// The full `N x n_0` matrix.
    pub fn to_dense(&self) -> CMatrix {
        let mut p = CMatrix::zeros(self.n(), self.n0());
        for (b, block) in self.blocks.iter().enumerate() {
            p.view_mut((self.row_offset(b), b * self.n_t), (self.m_t, self.n_t))
                .copy_from(block);
        }
        p
    }

    /// P P^H, block diagonal with `P_b P_b^H` on the pilot subcarriers.
    pub fn gram(&self) -> HermitianMatrix {
        let mut g = CMatrix::zeros(self.n(), self.n());
        for (b, block) in self.blocks.iter().enumerate() {
            let r = self.row_offset(b);
            let pp = hermitian_part(&(block * block.adjoint()));
            g.view_mut((r, r), (self.m_t, self.m_t)).copy_from(&pp);
        }
        HermitianMatrix::from_hermitian_part(&g)
    }

    /// Scales every entry, e.g. to compare pilot powers.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for b in out.blocks.iter_mut() {
            *b *= num_complex::Complex::new(alpha, 0.0);
        }
        out.power *= alpha * alpha;
        out
    }
}

fn validate_pilot_set(pilot_set: &[usize], n_c: usize) -> Result<()> {
    let mut seen = HashSet::new();
    for &idx in pilot_set {
        if idx == 0 || idx > n_c {
            return Err(Error::IndexOutOfRange { index: idx, n_c });
        }
        if !seen.insert(idx) {
            return Err(Error::DuplicateSubcarrier(idx));
        }
    }
    if pilot_set.is_empty() {
        return Err(Error::InvalidParameter("pilot set is empty".into()));
    }
    Ok(())
}

/// Draws one pilot matrix: each block has i.i.d. CN(0, SNR_dl / m_t) entries, blocks
/// drawn in `pilot_set` order.
pub fn sample_pilot(cfg: &SystemConfig, pilot_set: &[usize], rng: &mut SimRng) -> Result<PilotMatrix> {
    validate_pilot_set(pilot_set, cfg.n_c())?;
    if pilot_set.len() != cfg.n_p() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_p(),
            found: pilot_set.len(),
        });
    }
    let p = cfg.pilot_power();
    let blocks = pilot_set
        .iter()
        .map(|_| complex_gaussian_matrix(rng, cfg.m_t(), cfg.n_t(), p))
        .collect::<Result<Vec<_>>>()?;
    PilotMatrix::from_blocks(blocks, pilot_set.to_vec(), cfg.n_c(), p)
}

/// A = C_H^{1/2} P together with its N x N Gram matrix A A^H.
#[derive(Debug, Clone)]
pub struct EffectiveMatrix {
    a: CMatrix,
    gram_big: HermitianMatrix,
}

impl EffectiveMatrix {
    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    /// A A^H (N x N).
    pub fn gram_big(&self) -> &HermitianMatrix {
        &self.gram_big
    }

    /// A^H A (n_0 x n_0), formed on demand.
    pub fn gram_small(&self) -> HermitianMatrix {
        HermitianMatrix::from_hermitian_part(&(self.a.adjoint() * &self.a))
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn n0(&self) -> usize {
        self.a.ncols()
    }
}

/// Forms A blockwise and A A^H as C_H^{1/2} (P P^H) C_H^{1/2}.
pub fn effective_matrix(model: &ChannelModel, pilot: &PilotMatrix) -> Result<EffectiveMatrix> {
    if model.n() != pilot.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            found: pilot.n(),
        });
    }
    let sqrt = model.sqrt_cov();
    let (m_t, n_t) = (pilot.m_t(), pilot.n_t());
    let mut a = CMatrix::zeros(pilot.n(), pilot.n0());
    for (b, block) in pilot.blocks().iter().enumerate() {
        let cols = sqrt.columns(pilot.row_offset(b), m_t);
        a.columns_mut(b * n_t, n_t).copy_from(&(cols * block));
    }
    let gram_big = HermitianMatrix::from_hermitian_part(&(sqrt * pilot.gram().as_matrix() * sqrt));
    Ok(EffectiveMatrix { a, gram_big })
}

/// One channel draw with its training observation `Y = H^H P + W`.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub h: CVector,
    /// Row vector of length n_0, stored as a column.
    pub y: CVector,
}

/// Draws H from the model, then the unit-variance noise W.
pub fn sample_training(
    model: &ChannelModel,
    pilot: &PilotMatrix,
    rng: &mut SimRng,
) -> Result<TrainingSample> {
    if model.n() != pilot.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            found: pilot.n(),
        });
    }
    let h = model.sample_channel(rng);
    let (m_t, n_t) = (pilot.m_t(), pilot.n_t());
    let mut y = CVector::zeros(pilot.n0());
    for (b, block) in pilot.blocks().iter().enumerate() {
        let hb = h.rows(pilot.row_offset(b), m_t);
        // (H_b^H P_b)^T = P_b^T conj(H_b)
        let yb = block.transpose() * hb.map(|z| z.conj());
        y.rows_mut(b * n_t, n_t).copy_from(&yb);
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    for yi in y.iter_mut() {
        *yi += rng.complex_normal(scale);
    }
    Ok(TrainingSample { h, y })
}
