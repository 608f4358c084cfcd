mod common;

use csi_rdf::bounds::bound_set;
use csi_rdf::channel::{ChannelModel, SystemConfig};
use csi_rdf::cli::ExperimentConfig;
use csi_rdf::estimation::{estimate, mmse};
use csi_rdf::experiments::{e2e_distortion_check, mc_run, sweep_nt, DistortionTarget, Execution};
use csi_rdf::numerics::{CMatrix, SimRng, C64};
use csi_rdf::pilots::{effective_matrix, sample_pilot, sample_training};

use common::random_model;

fn default_model() -> (SystemConfig, ChannelModel) {
    let cfg = ExperimentConfig::builtin();
    let model = cfg.channel_model().unwrap();
    (cfg.system, model)
}

#[test]
fn estimate_is_orthogonal_to_its_error() {
    let cfg = SystemConfig::new(2, 2, 3, 4.0, 1.0).unwrap();
    let model = random_model(&mut SimRng::new(11), cfg.n());
    let mut rng = SimRng::new(12);
    let pilot = sample_pilot(&cfg, &cfg.default_pilot_set(), &mut rng).unwrap();
    let est = mmse(&model, &effective_matrix(&model, &pilot).unwrap()).unwrap();

    let draws = 20_000;
    let n = cfg.n();
    let mut cross = CMatrix::zeros(n, n);
    let (mut s_pow, mut e_pow, mut err_sq) = (0.0, 0.0, Vec::with_capacity(draws));
    for _ in 0..draws {
        let t = sample_training(&model, &pilot, &mut rng).unwrap();
        let s = estimate(&est, &t.y).unwrap();
        let e = &t.h - &s;
        cross += &s * e.adjoint();
        s_pow += s.norm_squared();
        e_pow += e.norm_squared();
        err_sq.push(e.norm_squared());
    }
    let k = draws as f64;
    let scale = (s_pow / k * e_pow / k / k).sqrt();
    let worst = cross.iter().map(|z: &C64| (z / k).norm()).fold(0.0, f64::max);
    assert!(worst < 5.0 * scale, "{worst} vs {scale}");

    // Squared error averages to d_mmse.
    let mean = err_sq.iter().sum::<f64>() / k;
    let var = err_sq.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    assert!((mean - est.d_mmse).abs() <= 3.0 * (var / k).sqrt(), "{mean} vs {}", est.d_mmse);
}

#[test]
fn stderr_shrinks_by_root_two() {
    let (cfg, model) = default_model();
    let cfg = cfg.with_n_t(16).unwrap();
    let a = mc_run(&cfg, &model, 2_000, 5, Execution::Parallel).unwrap();
    let b = mc_run(&cfg, &model, 4_000, 5, Execution::Parallel).unwrap();
    for (x, y) in [(a.gap, b.gap), (a.dmmse, b.dmmse), (a.dr_source, b.dr_source)] {
        let ratio = x.stderr / y.stderr;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() <= 0.15, "ratio {ratio}");
    }
}

#[test]
fn parallel_and_sequential_runs_are_identical() {
    let (cfg, model) = default_model();
    let a = mc_run(&cfg, &model, 300, 9, Execution::Parallel).unwrap();
    let b = mc_run(&cfg, &model, 300, 9, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.gap.mean.to_bits(), b.gap.mean.to_bits());
}

#[test]
fn test_channel_meets_its_budget() {
    let mut rng = SimRng::new(21);
    for (i, (m_t, n_c, n_t)) in [(1, 2, 2), (2, 2, 3), (2, 3, 4), (3, 2, 5), (1, 4, 1)].into_iter().enumerate() {
        let cfg = SystemConfig::new(m_t, n_c, n_t, 3.0, 1.0).unwrap();
        let model = random_model(&mut rng, cfg.n());
        let delta = 0.2 * model.trace() * (0.2 + 0.6 * rng.uniform());
        let r = e2e_distortion_check(&cfg, &model, DistortionTarget::AboveMmse(delta), 10_000, i as u64, Execution::Parallel)
            .unwrap();
        assert!(r.excess.within_sigma(0.0, 3.0), "config {i}: {:?}", r.excess);
    }
}

#[test]
fn zero_offset_reconstructs_with_the_estimate() {
    let (cfg, model) = default_model();
    let cfg = cfg.with_n_t(8).unwrap();
    let r = e2e_distortion_check(&cfg, &model, DistortionTarget::AboveMmse(0.0), 5_000, 2, Execution::Parallel).unwrap();
    assert!(r.excess.within_sigma(0.0, 3.0), "{:?}", r.excess);
    let m = mc_run(&cfg, &model, 5_000, 2, Execution::Parallel).unwrap();
    assert!((r.distortion.mean - m.dmmse.mean).abs() <= 3.0 * (r.distortion.stderr + m.dmmse.stderr));
}

#[test]
fn scalar_end_to_end() {
    let cfg = SystemConfig::new(1, 1, 1, 1.0, 1.0).unwrap();
    let r = e2e_distortion_check(&cfg, &ChannelModel::identity(1), DistortionTarget::Absolute(1.0), 100_000, 4, Execution::Parallel)
        .unwrap();
    assert!(r.distortion.within_sigma(1.0, 3.0), "{:?}", r.distortion);
}

#[test]
fn default_point_sandwiches_every_term() {
    let (cfg, model) = default_model();
    let s = sweep_nt(&cfg, &model, &[8, 9], 10_000, 1, Execution::Parallel).unwrap();
    let p = &s.points[0];
    let sw = p.sandwich(3.0);
    assert!(sw.all(), "{sw:?} {:?}", p.summary);
}

#[test]
fn minimal_training_keeps_lower_bounds() {
    let (cfg, model) = default_model();
    let cfg = cfg.with_n_t(cfg.m_t()).unwrap().with_distortion(20.0).unwrap();
    let b = bound_set(&cfg, &model).unwrap();
    assert!(!b.dmmse_hi.is_valid() && !b.dr_source_hi.is_valid());
    assert!(b.dmmse_lo.is_valid() && b.dr_source_lo.is_valid());
    let s = mc_run(&cfg, &model, 500, 3, Execution::Parallel).unwrap();
    assert!(s.dmmse.within_band(b.dmmse_lo.value(), None, 3.0));
    assert!(s.dr_source.within_band(b.dr_source_lo.value(), None, 3.0));
}

#[test]
fn all_draws_infeasible_is_reported() {
    let (cfg, model) = default_model();
    let err = mc_run(&cfg.with_n_t(4).unwrap().with_distortion(0.5).unwrap(), &model, 200, 1, Execution::Sequential).unwrap_err();
    assert!(matches!(err, csi_rdf::Error::TooManySkipped { skipped: 200, trials: 200 }), "{err}");
}

#[test]
fn gap_is_positive_for_short_training() {
    let (cfg, model) = default_model();
    // d = 3.5 lies below the MMSE floor for most draws at n_t = m_t.
    for n_t in [8, 12, 16] {
        let s = mc_run(&cfg.with_n_t(n_t).unwrap(), &model, 1_000, 6, Execution::Parallel).unwrap();
        assert!(s.gap.mean - 3.0 * s.gap.stderr > 0.0, "n_t={n_t}: {:?}", s.gap);
    }
}

#[test]
fn identity_covariance_sweep_is_sandwiched() {
    let cfg = SystemConfig::new(2, 4, 4, 10.0, 2.0).unwrap();
    let model = ChannelModel::identity(cfg.n());
    let s = sweep_nt(&cfg, &model, &[4, 8, 16, 32], 2_000, 8, Execution::Parallel).unwrap();
    for p in &s.points {
        assert!(p.sandwich(3.0).all(), "n_t={}: {:?}", p.n_t, p.sandwich(3.0));
    }
}
