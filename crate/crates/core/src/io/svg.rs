//! Static SVG output: discovery-matrix heatmaps and discovery plots.

use std::fmt::Write as _;

use crate::discovery::{colorize, DiagonalSeries, DiscoveryMatrix};

/// Default heatmap cell edge in pixels.
pub const DEFAULT_CELL: u32 = 10;

/// One `rect` per cell, row 1 at the top and `j = 0` on the left, filled with
/// the evidence bucket colour of the entry. Cells carry `data-r`/`data-j`.
pub fn heatmap_svg(m: &DiscoveryMatrix, cell: u32) -> String {
    let k = m.k() as u32;
    let (w, h) = ((k + 1) * cell, k.max(1) * cell);
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>");
    for (r, j, v) in m.entries() {
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"{}\" data-r=\"{r}\" data-j=\"{j}\"/>",
            j as u32 * cell,
            (r as u32 - 1) * cell,
            colorize(v).hex()
        );
    }
    s.push_str("</svg>\n");
    s
}

const PALETTE: [&str; 6] = ["#2ca02c", "#ff7f0e", "#1f77b4", "#d62728", "#9467bd", "#8c564b"];

/// Line chart of `log10` values against the step, one polyline per series.
/// Infinite values are clipped to the plotted range.
pub fn series_svg(series: &[DiagonalSeries]) -> String {
    const W: f64 = 800.0;
    const H: f64 = 500.0;
    const PAD: f64 = 50.0;

    let finite = series
        .iter()
        .flat_map(|s| s.values.iter())
        .map(|v| v.log10())
        .filter(|x| x.is_finite());
    let (mut lo, mut hi) = finite.fold((0.0f64, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let steps = series.iter().map(|s| s.values.len()).max().unwrap_or(0).max(1);
    let sx = |i: usize| PAD + (W - 2.0 * PAD) * (i + 1) as f64 / steps as f64;
    let sy = |y: f64| {
        let y = y.clamp(lo, hi);
        H - PAD - (H - 2.0 * PAD) * (y - lo) / (hi - lo)
    };

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"#ffffff\"/>");
    let _ = writeln!(
        s,
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\"/>",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    if lo <= 0.0 && hi >= 0.0 {
        let y0 = sy(0.0);
        let _ = writeln!(
            s,
            "<line x1=\"{PAD}\" y1=\"{y0:.2}\" x2=\"{}\" y2=\"{y0:.2}\" stroke=\"#999999\" stroke-dasharray=\"4 4\"/>",
            W - PAD
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{PAD}\" y=\"{}\" font-size=\"12\">log10 max {hi:.2}</text>",
        PAD - 8.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{PAD}\" y=\"{}\" font-size=\"12\">log10 min {lo:.2}, steps 1..{steps}</text>",
        H - PAD + 20.0
    );
    for (i, series) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for (n, v) in series.values.iter().enumerate() {
            let _ = write!(points, "{:.2},{:.2} ", sx(n), sy(v.log10()));
        }
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1\" data-r=\"{}\" data-kind=\"{}\" points=\"{}\"/>",
            series.r,
            series.kind.as_str(),
            points.trim_end()
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{} r={}</text>",
            W - PAD - 150.0,
            PAD + 16.0 * (i + 1) as f64,
            series.kind.as_str(),
            series.r
        );
    }
    s.push_str("</svg>\n");
    s
}
