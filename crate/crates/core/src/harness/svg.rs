//! Static SVG line charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::harness::sweep::{RowEngine, SweepRow};
use crate::harness::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Gain against the repair interval on a log axis.
    GainVsDelta,
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];
const RATIO_TOLERANCE: f64 = 1e-6;

pub fn emit_svg(rows: &[SweepRow], path: &Path, plot: PlotKind) -> Result<(), HarnessError> {
    let svg = render_svg(rows, plot)?;
    std::fs::write(path, svg).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn render_svg(rows: &[SweepRow], plot: PlotKind) -> Result<String, HarnessError> {
    let PlotKind::GainVsDelta = plot;
    let first = rows
        .first()
        .ok_or_else(|| HarnessError::Input("no rows to plot".into()))?;
    let ratio = first.ratio();
    if let Some(r) = rows
        .iter()
        .find(|r| ((r.ratio() - ratio) / ratio).abs() > RATIO_TOLERANCE)
    {
        return Err(HarnessError::Input(format!(
            "rows mix t_bs/t_d ratios {} and {}; plot one ratio at a time",
            fmt_num(ratio),
            fmt_num(r.ratio())
        )));
    }
    if let Some(r) = rows
        .iter()
        .find(|r| !(r.delta > 0.0 && r.delta.is_finite() && r.gain.is_finite()))
    {
        return Err(HarnessError::Input(format!(
            "cannot plot delta={} gain={}",
            r.delta, r.gain
        )));
    }

    let mut series: BTreeMap<(usize, usize, u8), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        let tag = match r.engine {
            RowEngine::Analytic => 0,
            RowEngine::Simulate => 1,
        };
        series
            .entry((r.n, r.k, tag))
            .or_default()
            .push((r.delta, r.gain));
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let (mut x0, mut x1) = bounds(rows.iter().map(|r| r.delta.log10()));
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let (mut y0, mut y1) = bounds(rows.iter().map(|r| r.gain).chain([1.0]));
    let pad = ((y1 - y0) * 0.05).max(0.01);
    y0 -= pad;
    y1 += pad;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |d: f64| LEFT + (d.log10() - x0) / (x1 - x0) * plot_w;
    let sy = |g: f64| TOP + (y1 - g) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">Gain vs repair interval, t_bs/t_d = {}</text>"#,
        LEFT + plot_w / 2.0,
        fmt_num(ratio)
    );

    for e in (x0.ceil() as i32)..=(x1.floor() as i32) {
        let x = LEFT + (e as f64 - x0) / (x1 - x0) * plot_w;
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            TOP + plot_h
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#,
            TOP + plot_h + 18.0
        );
    }
    for i in 0..=5 {
        let g = y0 + (y1 - y0) * i as f64 / 5.0;
        let y = sy(g);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            fmt_num(g)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">repair interval Δ (t.u., log scale)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">gain T_ref / T_dw</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, ((n, k, tag), pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if *tag == 1 {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let coords: Vec<String> = pts
            .iter()
            .map(|&(d, g)| format!("{:.2},{:.2}", sx(d), sy(g)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            coords.join(" ")
        );
        for &(d, g) in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                sx(d),
                sy(g)
            );
        }
        let ly = TOP + 14.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 16.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 24.0
        );
        let label = if *tag == 1 { " sim" } else { "" };
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">(n,k) = ({n},{k}){label}</text>"#,
            lx + 30.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
