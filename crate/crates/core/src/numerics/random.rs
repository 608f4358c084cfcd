//! Seeded randomness: reproducible generators and complex Gaussian draws.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::linalg::{CMatrix, CVector, C64};
use crate::error::{Error, Result};

/// Reproducible generator. Identical seed and call sequence give bit-identical draws.
#[derive(Debug, Clone)]
pub struct SimRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent ChaCha stream under the same seed.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    /// Generator for work item `index` under `root`, independent of execution order.
    pub fn derived(root: u64, index: u64) -> Self {
        Self::new(derive_seed(root, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits in [0, 1).
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One CN(0, variance) draw without parameter validation.
    pub(crate) fn complex_normal(&mut self, scale: f64) -> C64 {
        let re = self.standard_normal();
        let im = self.standard_normal();
        C64::new(scale * re, scale * im)
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// `root XOR splitmix64(index)`.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = index.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    root ^ (z ^ (z >> 31))
}

fn check_variance(variance: f64) -> Result<f64> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "complex Gaussian variance must be positive and finite, got {variance}"
        )));
    }
    Ok((variance / 2.0).sqrt())
}

/// `n` i.i.d. circularly symmetric CN(0, variance) entries.
pub fn sample_complex_gaussian(rng: &mut SimRng, n: usize, variance: f64) -> Result<CVector> {
    let scale = check_variance(variance)?;
    Ok(CVector::from_fn(n, |_, _| rng.complex_normal(scale)))
}

/// `rows x cols` matrix of i.i.d. CN(0, variance) entries, filled column by column.
pub fn complex_gaussian_matrix(
    rng: &mut SimRng,
    rows: usize,
    cols: usize,
    variance: f64,
) -> Result<CMatrix> {
    let scale = check_variance(variance)?;
    let mut m = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = rng.complex_normal(scale);
        }
    }
    Ok(m)
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix with phase correction.
pub fn random_unitary(rng: &mut SimRng, n: usize) -> CMatrix {
    let g = complex_gaussian_matrix(rng, n, n, 1.0).expect("unit variance is valid");
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}
