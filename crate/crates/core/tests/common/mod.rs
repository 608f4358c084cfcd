//! Independent oracles: dense explicit-inverse formulas and brute-force searches
//! that share no code path with the library routines they check.
#![allow(dead_code)]

use csi_rdf::channel::{ChannelModel, SystemConfig};
use csi_rdf::numerics::{random_unitary, CMatrix, HermitianMatrix, SimRng, C64};
use csi_rdf::pilots::{effective_matrix, sample_pilot, EffectiveMatrix, PilotMatrix};

pub struct Instance {
    pub cfg: SystemConfig,
    pub model: ChannelModel,
    pub pilot: PilotMatrix,
    pub eff: EffectiveMatrix,
}

fn pick(rng: &mut SimRng, lo: usize, hi: usize) -> usize {
    lo + ((rng.uniform() * (hi - lo + 1) as f64) as usize).min(hi - lo)
}

/// Random full-rank covariance with eigenvalues in [0.1, 3] in a Haar basis.
pub fn random_model(rng: &mut SimRng, n: usize) -> ChannelModel {
    let eigs: Vec<f64> = (0..n).map(|_| 0.1 + 2.9 * rng.uniform()).collect();
    let q = random_unitary(rng, n);
    let c = &q * HermitianMatrix::from_real_diagonal(&eigs).as_matrix() * q.adjoint();
    ChannelModel::from_covariance(HermitianMatrix::from_hermitian_part(&c)).unwrap()
}

/// N = m_t n_c ≤ 15, n_p = n_c, n_t ≥ m_t, SNR log-uniform on [0.3, 30].
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = SimRng::new(seed);
    let m_t = pick(&mut rng, 1, 3);
    let n_c = pick(&mut rng, 1, 5);
    let n_t = pick(&mut rng, m_t, m_t + 4);
    let snr = 0.3 * 100f64.powf(rng.uniform());
    let cfg = SystemConfig::new(m_t, n_c, n_t, snr, 1.0).unwrap();
    let model = random_model(&mut rng, cfg.n());
    let pilot = sample_pilot(&cfg, &cfg.default_pilot_set(), &mut rng).unwrap();
    let eff = effective_matrix(&model, &pilot).unwrap();
    Instance { cfg, model, pilot, eff }
}

pub fn inverse(m: &CMatrix) -> CMatrix {
    m.clone().lu().try_inverse().expect("invertible")
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// ln det of a Hermitian positive definite matrix via LU.
pub fn logdet_lu(m: &CMatrix) -> f64 {
    let det: C64 = m.clone().lu().determinant();
    assert!(det.re > 0.0 && det.im.abs() <= 1e-8 * det.re.abs(), "det = {det}");
    det.re.ln()
}

pub fn trace(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

pub fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

/// C_S = C P (P^H C P + I)^{-1} P^H C from the dense pilot and explicit inverse.
pub fn dense_estimate_cov(model: &ChannelModel, pilot: &PilotMatrix) -> CMatrix {
    let c = model.cov().as_matrix();
    let p = pilot.to_dense();
    let k = p.adjoint() * c * &p + identity(p.ncols());
    c * &p * inverse(&k) * p.adjoint() * c
}

/// The three Woodbury forms A(AᴴA+I)⁻¹Aᴴ, (I+AAᴴ)⁻¹AAᴴ and I − (I+AAᴴ)⁻¹.
pub fn woodbury_forms(a: &CMatrix) -> [CMatrix; 3] {
    let n = a.nrows();
    let aah = a * a.adjoint();
    let small = a.adjoint() * a + identity(a.ncols());
    let big_inv = inverse(&(identity(n) + &aah));
    [a * inverse(&small) * a.adjoint(), &big_inv * aah, identity(n) - big_inv]
}

/// ln det(AAᴴ (I + AAᴴ)⁻¹).
pub fn entropy_gap_oracle(a: &CMatrix) -> f64 {
    let aah = a * a.adjoint();
    logdet_lu(&aah) - logdet_lu(&(identity(a.nrows()) + aah))
}

/// min ½ Σ ln(λ_i / n_i) subject to Σ n_i = d_eff, 0 < n_i ≤ λ_i, by pairwise
/// exchange from the proportional allocation with a ternary search per pair.
pub fn brute_force_rate(eigs: &[f64], d_eff: f64) -> f64 {
    let total: f64 = eigs.iter().sum();
    if d_eff >= total {
        return 0.0;
    }
    let objective = |n: &[f64]| eigs.iter().zip(n).map(|(l, x)| 0.5 * (l / x).ln()).sum::<f64>();
    let mut n: Vec<f64> = eigs.iter().map(|l| l * d_eff / total).collect();
    let k = eigs.len();
    let mut best = objective(&n);
    for _ in 0..2000 {
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                // Move t from mode i to mode j.
                let lo = -(n[j].min(eigs[i] - n[i]));
                let hi = n[i].min(eigs[j] - n[j]);
                let pair = |t: f64| {
                    let (a, b) = (n[i] - t, n[j] + t);
                    if a <= 0.0 || b <= 0.0 {
                        f64::INFINITY
                    } else {
                        0.5 * ((eigs[i] / a).ln() + (eigs[j] / b).ln())
                    }
                };
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let m1 = a + (b - a) / 3.0;
                    let m2 = b - (b - a) / 3.0;
                    if pair(m1) <= pair(m2) {
                        b = m2;
                    } else {
                        a = m1;
                    }
                }
                let t = 0.5 * (a + b);
                if pair(t) < pair(0.0) {
                    n[i] -= t;
                    n[j] += t;
                    n[i] = n[i].min(eigs[i]);
                    n[j] = n[j].min(eigs[j]);
                }
            }
        }
        let now = objective(&n);
        if best - now < 1e-14 {
            best = best.min(now);
            break;
        }
        best = now;
    }
    best
}

/// Random eigenvalue list with 1..=5 entries in [0.05, 4] and a budget in (0, Σλ).
pub fn random_waterfill_instance(seed: u64) -> (Vec<f64>, f64) {
    let mut rng = SimRng::new(seed);
    let k = pick(&mut rng, 1, 5);
    let eigs: Vec<f64> = (0..k).map(|_| 0.05 + 3.95 * rng.uniform()).collect();
    let total: f64 = eigs.iter().sum();
    let d_eff = total * (0.02 + 0.96 * rng.uniform());
    (eigs, d_eff)
}
