//! `sweep.csv` and `sweep.svg` writers.

use std::fmt::Write as _;

use crate::bounds::Bound;
use crate::experiments::{McEstimate, SweepPoint};

pub const SWEEP_HEADER: &str = "n_t,trials,seed,r_direct,gap_mean,gap_stderr,total_mean,total_stderr,\
dr_source_mean,dr_source_stderr,dr_distortion_mean,dr_distortion_stderr,dmmse_mean,dmmse_stderr,\
dr_source_lo,dr_source_hi,dmmse_lo,dmmse_hi,dr_dist_lo,dr_dist_hi,overall_lo,overall_hi,\
skipped,extended_fraction,violated_epsilon_fraction,sandwich";

/// Full double precision (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn bound(b: Option<&Bound>, scale: f64) -> String {
    match b.and_then(Bound::value) {
        Some(v) => num(v * scale),
        None => String::new(),
    }
}

/// One row per grid point. Rates are multiplied by `scale`; distortions are not.
pub fn sweep_csv(points: &[SweepPoint], scale: f64, sigma: f64) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for p in points {
        let s = &p.summary;
        let b = p.bounds.as_ref().ok();
        let est = |e: &McEstimate, k: f64| format!("{},{}", num(e.mean * k), num(e.stderr * k));
        let fields = [
            p.n_t.to_string(),
            s.dr_source.trials.to_string(),
            p.seed.to_string(),
            num(s.r_direct * scale),
            est(&s.gap, scale),
            est(&s.total, scale),
            est(&s.dr_source, scale),
            est(&s.dr_distortion, scale),
            est(&s.dmmse, 1.0),
            bound(b.map(|b| &b.dr_source_lo), scale),
            bound(b.map(|b| &b.dr_source_hi), scale),
            bound(b.map(|b| &b.dmmse_lo), 1.0),
            bound(b.map(|b| &b.dmmse_hi), 1.0),
            bound(b.map(|b| &b.dr_dist_lo), scale),
            bound(b.map(|b| &b.dr_dist_hi), scale),
            bound(b.map(|b| &b.overall_lo), scale),
            bound(b.map(|b| &b.overall_hi), scale),
            s.gap.skipped.to_string(),
            num(s.extended_fraction),
            num(s.dmmse.violated_epsilon_fraction),
            (p.sandwich(sigma).all() as u8).to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;

/// Log-log plot of the excess rate against n_t with the bound band and ±3σ bars.
pub fn sweep_svg(points: &[SweepPoint], scale: f64, unit: &str) -> String {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for p in points {
        xs.push(p.n_t as f64);
        let g = &p.summary.gap;
        ys.extend([g.mean - 3.0 * g.stderr, g.mean + 3.0 * g.stderr].map(|v| v * scale));
        if let Ok(b) = &p.bounds {
            ys.extend([b.overall_lo.value(), b.overall_hi.value()].into_iter().flatten().map(|v| v * scale));
        }
    }
    ys.retain(|&y| y > 0.0 && y.is_finite());
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    if xs.is_empty() || ys.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let lx = |x: f64| x.log10();
    let (x0, x1) = span(xs.iter().map(|&x| lx(x)));
    let (y0, y1) = span(ys.iter().map(|&y| y.log10()));
    let px = |x: f64| MARGIN + (lx(x) - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    // Axes and decade ticks.
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {t} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    for &x in &xs {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, px(x), H - MARGIN + 18.0, x);
    }
    for e in y0.floor() as i32..=y1.ceil() as i32 {
        let y = 10f64.powi(e);
        if y.log10() < y0 || y.log10() > y1 {
            continue;
        }
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"#, MARGIN - 6.0, py(y) + 4.0, e);
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n_t</text>"#, W / 2.0, H - 16.0);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">E[R] - R_H(d) ({unit})</text>"#,
        H / 2.0,
        H / 2.0
    );

    // Bound band.
    let band: Vec<(f64, f64, f64)> = points
        .iter()
        .filter_map(|p| {
            let b = p.bounds.as_ref().ok()?;
            let (lo, hi) = (b.overall_lo.value()? * scale, b.overall_hi.value()? * scale);
            (lo > 0.0 && hi > 0.0).then_some((p.n_t as f64, lo, hi))
        })
        .collect();
    if band.len() >= 2 {
        let mut d = String::new();
        for (i, (x, _, hi)) in band.iter().enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if i == 0 { "M" } else { "L" }, px(*x), py(*hi));
        }
        for (x, lo, _) in band.iter().rev() {
            let _ = write!(d, "L{:.2} {:.2} ", px(*x), py(*lo));
        }
        let _ = writeln!(svg, r##"<path d="{}Z" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>"##, d);
    }

    // Monte Carlo means with 3σ bars.
    let mut line = String::new();
    for p in points {
        let g = &p.summary.gap;
        let m = g.mean * scale;
        if m <= 0.0 {
            continue;
        }
        let x = px(p.n_t as f64);
        let _ = write!(line, "{}{:.2} {:.2} ", if line.is_empty() { "M" } else { "L" }, x, py(m));
        let (lo, hi) = ((g.mean - 3.0 * g.stderr) * scale, (g.mean + 3.0 * g.stderr) * scale);
        if lo > 0.0 {
            let _ = writeln!(svg, r#"<path d="M{x:.2} {:.2} V{:.2}" stroke="black"/>"#, py(lo), py(hi));
        }
        let _ = writeln!(svg, r##"<circle cx="{x:.2}" cy="{:.2}" r="3" fill="#08519c"/>"##, py(m));
    }
    if !line.is_empty() {
        let _ = writeln!(svg, r##"<path d="{}" stroke="#08519c" fill="none"/>"##, line.trim_end());
    }
    svg.push_str("</svg>\n");
    svg
}

fn span(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 12.8] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn header_column_count() {
        assert_eq!(SWEEP_HEADER.split(',').count(), 26);
    }

    #[test]
    fn empty_svg_is_well_formed() {
        let s = sweep_svg(&[], 1.0, "nats");
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
    }
}
