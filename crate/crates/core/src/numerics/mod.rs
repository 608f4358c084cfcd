//! Shared numerical kernels.
//!
//! All logarithms are natural: rates and entropies are in nats.

pub mod linalg;
pub mod random;
pub mod special;

pub use linalg::{
    eigh, frobenius, hermitian_part, pseudo_logdet, relative_frobenius_diff, CMatrix, CVector,
    HermitianMatrix, Spectrum, C64, DEFAULT_RANK_TOL,
};
pub use random::{
    complex_gaussian_matrix, derive_seed, random_unitary, sample_complex_gaussian, SimRng,
};
pub use special::{digamma, digamma_sum};

/// ln(pi e), the per-dimension entropy constant of a circular complex Gaussian.
pub const LN_PI_E: f64 = 2.144_729_885_849_400_2;

/// Pairwise (cascade) summation; the order of operations depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}
