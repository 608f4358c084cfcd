//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 failed assertion,
//! 4 numerical failure or infeasible distortion.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bounds::{asymptotic_coefficients, bound_dmmse, bound_dr_distortion, bound_dr_source, Bound};
use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::estimation::{entropies, mmse};
use crate::experiments::{e2e_distortion_check, sweep_nt, wishart_check, DistortionTarget, Execution};
use crate::numerics::SimRng;
use crate::pilots::{effective_matrix, sample_pilot};
use crate::rdf::{distortion_range, overall_rdf};

pub use config::{ExperimentConfig, RateUnit};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_ASSERTION: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

/// Standard errors allowed between a Monte Carlo mean and its target.
const SIGMA: f64 = 3.0;

#[derive(Debug, Parser)]
#[command(name = "csi-rdf", version, about = "Rate-distortion analysis of CSI feedback after MMSE training")]
pub struct Cli {
    /// TOML experiment configuration; the built-in default when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Report rates in bits instead of nats.
    #[arg(long, global = true)]
    pub bits: bool,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run trials on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Copy, Default)]
pub struct PointArgs {
    #[arg(long = "n-t")]
    pub n_t: Option<usize>,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Overall RDF for one seeded pilot draw.
    Rdf {
        #[command(flatten)]
        point: PointArgs,
        /// Also print a CSV row.
        #[arg(long)]
        csv: bool,
    },
    /// Deterministic bounds and asymptotic coefficients.
    Bounds {
        #[command(flatten)]
        point: PointArgs,
    },
    /// n_t sweep written to sweep.csv and sweep.svg.
    Figure2,
    /// Monte Carlo against the complex Wishart moment formulas.
    WishartCheck {
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// End-to-end distortion of the test-channel reconstruction.
    E2eCheck {
        #[command(flatten)]
        point: PointArgs,
    },
}

/// Parses `args` and runs the command, writing reports to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match dispatch(&cli, &cfg, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::TrialFailed { source, .. } => exit_code(source),
        Error::InvalidParameter(_)
        | Error::InvalidCorrelation(_)
        | Error::TierLevelsNotOrdered { .. }
        | Error::DuplicateSubcarrier(_)
        | Error::IndexOutOfRange { .. }
        | Error::DimensionMismatch { .. }
        | Error::MatrixFormat { .. }
        | Error::PreconditionViolated(_)
        | Error::TooManySkipped { .. }
        | Error::SingularCovariance { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::builtin(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if cli.bits {
        cfg.unit = RateUnit::Bits;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn point_config(cfg: &ExperimentConfig, p: PointArgs) -> Result<SystemConfig> {
    let mut s = cfg.system.clone();
    if let Some(n_t) = p.n_t {
        s = s.with_n_t(n_t)?;
    }
    if let Some(d) = p.d {
        s = s.with_distortion(d)?;
    }
    if let Some(e) = p.epsilon {
        s = s.with_epsilon(e)?;
    }
    Ok(s)
}

fn dispatch(cli: &Cli, cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<u8> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match &cli.command {
        Command::Rdf { point, csv } => cmd_rdf(cfg, point_config(cfg, *point)?, *csv, out),
        Command::Bounds { point } => cmd_bounds(cfg, point_config(cfg, *point)?, out),
        Command::Figure2 => cmd_figure2(cfg, exec, out),
        Command::WishartCheck { m, n, p } => cmd_wishart(cfg, *m, *n, *p, exec, out),
        Command::E2eCheck { point } => cmd_e2e(cfg, point_config(cfg, *point)?, exec, out),
    }
}

fn describe(sys: &SystemConfig) -> String {
    format!(
        "m_t={} n_c={} n_p={} n_t={} snr_dl={} d={} epsilon={}",
        sys.m_t(),
        sys.n_c(),
        sys.n_p(),
        sys.n_t(),
        sys.snr_dl(),
        sys.d(),
        sys.epsilon()
    )
}

fn cmd_rdf(cfg: &ExperimentConfig, sys: SystemConfig, csv: bool, out: &mut dyn Write) -> Result<u8> {
    let model = cfg.channel_model()?;
    let mut rng = SimRng::new(cfg.seed);
    let pilot = sample_pilot(&sys, &sys.default_pilot_set(), &mut rng)?;
    let eff = effective_matrix(&model, &pilot)?;
    let est = mmse(&model, &eff)?;
    let (d_min, d_max) = distortion_range(&est, &model);
    let h = entropies(&model, &eff, &est)?;
    let k = cfg.unit.factor();
    let unit = cfg.unit.name();
    writeln!(out, "{}", describe(&sys))?;
    writeln!(out, "seed = {}", cfg.seed)?;
    writeln!(out, "distortion range: d_min = {} d_max = {}", d_min, d_max)?;
    writeln!(
        out,
        "entropies ({unit}): h(H) = {} h(Y|P) = {} h(Ybar|P) = {} h(S|P) = {}",
        h.h_h * k,
        h.h_y * k,
        h.h_ybar * k,
        h.h_s * k
    )?;
    writeln!(out, "ranks: r_H = {} r_Y = {} r_Ybar = {} r_S = {}", h.r_h, h.r_y, h.r_ybar, h.r_s)?;
    let b = match overall_rdf(&model, &est, sys.d()) {
        Ok(b) => b,
        Err(e @ Error::DistortionBelowMmse { .. }) => {
            writeln!(out, "infeasible: d = {} does not exceed d_min = {}", sys.d(), d_min)?;
            eprintln!("error: {e}");
            return Ok(EXIT_NUMERICAL);
        }
        Err(e) => return Err(e),
    };
    writeln!(out, "R_H(d) = {} {unit}", b.r_direct * k)?;
    writeln!(out, "dR_source = {} {unit}", b.dr_source * k)?;
    writeln!(out, "dR_distortion = {} {unit}", b.dr_distortion * k)?;
    writeln!(out, "total = {} {unit}", b.total * k)?;
    writeln!(out, "total (compact) = {} {unit}", b.total_compact * k)?;
    writeln!(out, "active modes = {}{}", b.active_rank, if b.extended { " (water-filled)" } else { "" })?;
    if csv {
        use output::num;
        writeln!(out, "d,d_min,d_max,r_direct,dr_source,dr_distortion,total,total_compact,active_rank,extended")?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            num(b.d),
            num(d_min),
            num(d_max),
            num(b.r_direct * k),
            num(b.dr_source * k),
            num(b.dr_distortion * k),
            num(b.total * k),
            num(b.total_compact * k),
            b.active_rank,
            b.extended as u8
        )?;
    }
    if b.total_discrepancy() > crate::rdf::TOTAL_AGREEMENT_TOL {
        eprintln!("error: decomposed and compact totals differ by {}", b.total_discrepancy());
        return Ok(EXIT_NUMERICAL);
    }
    Ok(EXIT_OK)
}

fn show(b: &Bound, k: f64) -> String {
    match b {
        Bound::Valid(v) => format!("{}", v * k),
        Bound::Invalid(r) => format!("invalid ({r})"),
    }
}

fn cmd_bounds(cfg: &ExperimentConfig, sys: SystemConfig, out: &mut dyn Write) -> Result<u8> {
    let model = cfg.channel_model()?;
    let k = cfg.unit.factor();
    let unit = cfg.unit.name();
    writeln!(out, "{}", describe(&sys))?;
    let rows: [(&str, Result<(Bound, Bound)>, f64); 3] = [
        ("dR_source", bound_dr_source(&sys, &model), k),
        ("dmmse", bound_dmmse(&sys, &model), 1.0),
        ("dR_distortion", bound_dr_distortion(&sys, &model), k),
    ];
    for (name, r, scale) in &rows {
        match r {
            Ok((lo, hi)) => {
                writeln!(out, "{name}_lo = {}", show(lo, *scale))?;
                writeln!(out, "{name}_hi = {}", show(hi, *scale))?;
            }
            Err(e) => writeln!(out, "{name}: invalid ({e})")?,
        }
    }
    if let (Ok((sl, sh)), Ok((dl, dh))) = (&rows[0].1, &rows[2].1) {
        let sum = |a: &Bound, b: &Bound| match (a, b) {
            (Bound::Valid(x), Bound::Valid(y)) => Bound::Valid(x + y),
            (Bound::Invalid(r), _) | (_, Bound::Invalid(r)) => Bound::Invalid(r.clone()),
        };
        writeln!(out, "overall_lo = {}", show(&sum(sl, dl), k))?;
        writeln!(out, "overall_hi = {}", show(&sum(sh, dh), k))?;
    }
    match asymptotic_coefficients(&sys, &model) {
        Ok(c) => {
            writeln!(out, "asymptotic coefficients (x 1/n_t, {unit} unless noted):")?;
            writeln!(out, "c_source_lo = {}", c.c_source_lo * k)?;
            writeln!(out, "c_source_hi = {}", c.c_source_hi * k)?;
            writeln!(out, "c_dmmse = {} (distortion)", c.c_dmmse)?;
            writeln!(out, "c_dist_lo = {}", c.c_dist_lo * k)?;
            writeln!(out, "c_dist_hi = {}", c.c_dist_hi * k)?;
            writeln!(out, "c_overall_lo = {}", c.c_overall_lo * k)?;
            writeln!(out, "c_overall_hi = {}", c.c_overall_hi * k)?;
        }
        Err(e) => writeln!(out, "asymptotic coefficients: invalid ({e})")?,
    }
    Ok(EXIT_OK)
}

fn cmd_figure2(cfg: &ExperimentConfig, exec: Execution, out: &mut dyn Write) -> Result<u8> {
    let model = cfg.channel_model()?;
    let sweep = sweep_nt(&cfg.system, &model, &cfg.n_t_grid, cfg.trials, cfg.seed, exec)?;
    let k = cfg.unit.factor();
    std::fs::create_dir_all(&cfg.out)?;
    std::fs::write(cfg.out.join("sweep.csv"), output::sweep_csv(&sweep.points, k, SIGMA))?;
    std::fs::write(cfg.out.join("sweep.svg"), output::sweep_svg(&sweep.points, k, cfg.unit.name()))?;

    let mut ok = true;
    for p in &sweep.points {
        let s = p.sandwich(SIGMA);
        ok &= s.all();
        writeln!(
            out,
            "n_t = {:>4}  gap = {:.6} +- {:.6} {}  sandwich: source {} dmmse {} distortion {} overall {}",
            p.n_t,
            p.summary.gap.mean * k,
            p.summary.gap.stderr * k,
            cfg.unit.name(),
            pass(s.dr_source),
            pass(s.dmmse),
            pass(s.dr_distortion),
            pass(s.overall)
        )?;
        if let Err(reason) = &p.bounds {
            writeln!(out, "           bounds unavailable: {reason}")?;
        }
    }
    writeln!(
        out,
        "gap fit: coefficient {} log-log slope {} ({} points)",
        sweep.gap_fit.coefficient * k,
        sweep.gap_fit.log_log_slope,
        sweep.gap_fit.points
    )?;
    writeln!(out, "D_mmse fit: coefficient {}", sweep.dmmse_fit.coefficient)?;
    writeln!(out, "wrote {}", cfg.out.join("sweep.csv").display())?;
    Ok(if ok { EXIT_OK } else { EXIT_ASSERTION })
}

fn pass(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

fn cmd_wishart(cfg: &ExperimentConfig, m: usize, n: usize, p: f64, exec: Execution, out: &mut dyn Write) -> Result<u8> {
    let w = wishart_check(m, n, p, cfg.trials, cfg.seed, exec)?;
    let logdet_ok = w.logdet.within_sigma(w.expected_logdet, SIGMA);
    let inv_ok = (w.inv_diag.mean / w.expected_inv - 1.0).abs() <= 0.02;
    let inv_sq_ok = (w.inv_sq_diag.mean / w.expected_inv_sq - 1.0).abs() <= 0.03;
    writeln!(out, "m = {m} n = {n} p = {p} draws = {}", cfg.trials)?;
    writeln!(
        out,
        "E[log det X] = {} +- {} (formula {}) {}",
        w.logdet.mean,
        w.logdet.stderr,
        w.expected_logdet,
        pass(logdet_ok)
    )?;
    writeln!(out, "E[X^-1] diagonal = {} (formula {}) {}", w.inv_diag.mean, w.expected_inv, pass(inv_ok))?;
    writeln!(out, "E[X^-2] diagonal = {} (formula {}) {}", w.inv_sq_diag.mean, w.expected_inv_sq, pass(inv_sq_ok))?;
    Ok(if logdet_ok && inv_ok && inv_sq_ok { EXIT_OK } else { EXIT_ASSERTION })
}

fn cmd_e2e(cfg: &ExperimentConfig, sys: SystemConfig, exec: Execution, out: &mut dyn Write) -> Result<u8> {
    let model = cfg.channel_model()?;
    let r = e2e_distortion_check(&sys, &model, DistortionTarget::Absolute(sys.d()), cfg.trials, cfg.seed, exec)?;
    let ok = r.distortion.within_sigma(sys.d(), SIGMA);
    writeln!(out, "{}", describe(&sys))?;
    writeln!(
        out,
        "E||H - Z||^2 = {} +- {} over {} draws ({} skipped), target d = {} {}",
        r.distortion.mean,
        r.distortion.stderr,
        r.distortion.trials,
        r.distortion.skipped,
        sys.d(),
        pass(ok)
    )?;
    Ok(if ok { EXIT_OK } else { EXIT_ASSERTION })
}
