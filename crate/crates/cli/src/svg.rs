use std::fmt::Write as _;

use spheredyn::sweep::SweepGrid;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 3] = ["#f2f0f7", "#9e9ac8", "#54278f"];

/// Heat map of `fixed_count` over the `(θ, α)` grid with the curve
/// `cos θ = √(1 − α²)` drawn on top.
pub fn phase_diagram(grid: &SweepGrid) -> String {
    let (t0, t1) = bounds(&grid.thetas);
    let (a0, a1) = bounds(&grid.alphas);
    let cw = (WIDTH - 2.0 * MARGIN) / grid.thetas.len() as f64;
    let ch = (HEIGHT - 2.0 * MARGIN) / grid.alphas.len() as f64;
    let x_of = |t: f64| MARGIN + (t - t0) / (t1 - t0).max(f64::EPSILON) * (WIDTH - 2.0 * MARGIN - cw) + cw / 2.0;
    let y_of = |a: f64| HEIGHT - MARGIN - (a - a0) / (a1 - a0).max(f64::EPSILON) * (HEIGHT - 2.0 * MARGIN - ch) - ch / 2.0;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    for c in &grid.cells {
        let color = COLORS[c.fixed_count.min(2)];
        writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            x_of(c.theta) - cw / 2.0,
            y_of(c.alpha) - ch / 2.0,
            cw,
            ch
        )
        .unwrap();
    }

    // α = sin θ on the part of the axis where cos θ ≥ 0.
    let mut path = String::new();
    let steps = 400;
    for i in 0..=steps {
        let t = t0 + (t1 - t0) * i as f64 / steps as f64;
        let a = t.sin().abs();
        if t.cos() < 0.0 || a < a0 || a > a1 {
            continue;
        }
        let cmd = if path.is_empty() { 'M' } else { 'L' };
        write!(path, "{cmd}{:.2},{:.2} ", x_of(t), y_of(a)).unwrap();
    }
    if !path.is_empty() {
        writeln!(s, r##"<path d="{}" fill="none" stroke="#d7301f" stroke-width="2"/>"##, path.trim_end()).unwrap();
    }

    writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">θ</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">α</text>"#,
        HEIGHT / 2.0
    )
    .unwrap();
    for (k, color) in COLORS.iter().enumerate() {
        let y = MARGIN / 2.0;
        let x = WIDTH - MARGIN - 150.0 + 50.0 * k as f64;
        writeln!(s, r#"<rect x="{x}" y="{}" width="12" height="12" fill="{color}" stroke="black"/>"#, y - 10.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="12">{k}</text>"#, x + 16.0).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(v: &[f64]) -> (f64, f64) {
    (v.first().copied().unwrap_or(0.0), v.last().copied().unwrap_or(1.0))
}
