//! Artifact writers. Numbers are rendered in fixed scientific notation and
//! SVG coordinates at fixed precision, so repeated runs with the same
//! inputs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use voctri::simulate::Sample;

/// Full-precision numeric field for CSV output.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    std::fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
}

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 540.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 48.0;
const SERIES: [(&str, &str); 3] = [
    ("crop", "#1b9e77"),
    ("aphids", "#d95f02"),
    ("natural enemies", "#7570b3"),
];

/// Renders the three state components against time as SVG polylines.
pub fn trajectory_svg(samples: &[Sample]) -> String {
    let t_max = samples.last().map(|s| s.t).unwrap_or(1.0).max(1e-12);
    let v_max = samples
        .iter()
        .map(|s| s.state.crop.max(s.state.aphids).max(s.state.enemies))
        .fold(0.0_f64, f64::max)
        .max(1e-12)
        * 1.05;
    let x_of = |t: f64| MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) * t / t_max;
    let y_of = |v: f64| HEIGHT - MARGIN_BOTTOM - (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) * v / v_max;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // Axes.
    let (x0, y0) = (MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{:.3}" y2="{y0}" stroke="black" stroke-width="1"/>"#,
        WIDTH - MARGIN_RIGHT
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN_TOP}" stroke="black" stroke-width="1"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="13" text-anchor="middle">time</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x0}" y="{:.3}" font-family="sans-serif" font-size="12" text-anchor="middle">0</text>"#,
        y0 + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="12" text-anchor="middle">{t_max:.1}</text>"#,
        WIDTH - MARGIN_RIGHT,
        y0 + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="12" text-anchor="end">{v_max:.3}</text>"#,
        x0 - 6.0,
        MARGIN_TOP + 4.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="12" text-anchor="end">0</text>"#,
        x0 - 6.0,
        y0 + 4.0
    );

    let components = [
        |s: &Sample| s.state.crop,
        |s: &Sample| s.state.aphids,
        |s: &Sample| s.state.enemies,
    ];
    for (i, (label, color)) in SERIES.iter().enumerate() {
        let mut points = String::new();
        for s in samples {
            let _ = write!(points, "{:.3},{:.3} ", x_of(s.t), y_of(components[i](s)));
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.trim_end()
        );
        let ly = MARGIN_TOP + 16.0 * (i as f64 + 1.0);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{color}" stroke-width="3"/>"#,
            MARGIN_LEFT + 12.0,
            ly - 4.0,
            MARGIN_LEFT + 36.0,
            ly - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="13">{label}</text>"#,
            MARGIN_LEFT + 42.0,
            ly
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use voctri::model::State;

    #[test]
    fn numeric_format_is_full_precision() {
        assert_eq!(num(0.25), "2.5000000000000000e-1");
        let third: f64 = 1.0 / 3.0;
        assert_eq!(num(third).parse::<f64>().unwrap(), third);
    }

    #[test]
    fn svg_is_deterministic_and_well_formed() {
        let samples: Vec<Sample> = (0..50)
            .map(|i| Sample {
                t: i as f64,
                state: State::new(
                    0.5 + 0.1 * (i as f64 * 0.3).sin(),
                    0.3,
                    0.2 + 0.01 * i as f64,
                ),
            })
            .collect();
        let one = trajectory_svg(&samples);
        let two = trajectory_svg(&samples);
        assert_eq!(one, two);
        assert!(one.starts_with("<svg"));
        assert!(one.ends_with("</svg>\n"));
        assert_eq!(one.matches("<polyline").count(), 3);
        for (_, color) in SERIES {
            assert!(one.contains(color));
        }
    }
}
