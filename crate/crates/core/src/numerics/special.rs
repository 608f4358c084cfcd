//! Digamma function.

use crate::error::{Error, Result};

/// Below this argument the recurrence shifts x upward before the series is applied.
const ASYMPTOTIC_THRESHOLD: f64 = 10.0;

/// B_{2k} / (2k) for k = 1..=8.
const ASYMPTOTIC_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

/// ψ(x) for x > 0.
///
/// Shifts the argument with ψ(x) = ψ(x + 1) - 1/x until x ≥ 10, then uses
/// ψ(x) ~ ln x - 1/(2x) - Σ B_{2k} / (2k x^{2k}).
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "digamma",
            value: x,
        });
    }
    let mut shift = 0.0;
    let mut z = x;
    while z < ASYMPTOTIC_THRESHOLD {
        shift -= 1.0 / z;
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    // Horner in 1/z^2, highest order first.
    let series = ASYMPTOTIC_COEFFS
        .iter()
        .rev()
        .fold(0.0, |acc, &c| acc * inv2 + c)
        * inv2;
    Ok(shift + z.ln() - 0.5 / z - series)
}

/// Σ_{j=0}^{m-1} ψ(n - j), the digamma part of the complex Wishart log-determinant mean.
pub fn digamma_sum(m: usize, n: usize) -> Result<f64> {
    if n < m {
        return Err(Error::PreconditionViolated(format!(
            "digamma sum needs n >= m, got n = {n}, m = {m}"
        )));
    }
    (0..m).map(|j| digamma((n - j) as f64)).sum()
}
