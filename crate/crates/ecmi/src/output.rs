//! CSV and SVG emitters for the comparison outputs.
//!
//! Every file starts with a schema/config comment line so downstream tooling
//! can re-plot from the CSV alone. The SVG writer is dependency-free: plain
//! rectangles for the winner heat map and polylines for the curves, with a
//! fixed color legend.

use crate::analyze::{CurvePoint, OrderingEntry, RegionMap, RegionWinner};
use std::fmt::Write as _;
use std::io::{self, Write};

/// Fixed color assignment used by every SVG output.
pub fn winner_color(winner: RegionWinner) -> &'static str {
    match winner {
        RegionWinner::BinaryKl => "#1f77b4",
        RegionWinner::Linear => "#ff7f0e",
        RegionWinner::Sqrt => "#2ca02c",
        RegionWinner::Trivial => "#d62728",
    }
}

const CURVE_COLORS: [(&str, &str); 4] = [
    ("interpolation", "#9467bd"),
    ("binary_kl", "#1f77b4"),
    ("linear", "#ff7f0e"),
    ("sqrt", "#2ca02c"),
];

pub fn write_ordering_csv<W: Write>(
    mut w: W,
    ecmi: f64,
    entries: &[OrderingEntry],
) -> io::Result<()> {
    writeln!(w, "# ecmi ordering, schema=1, ecmi={ecmi}")?;
    writeln!(w, "rank,bound,value")?;
    for (rank, entry) in entries.iter().enumerate() {
        writeln!(w, "{},{},{}", rank, entry.name.as_str(), entry.value)?;
    }
    Ok(())
}

pub fn write_region_csv<W: Write>(mut w: W, map: &RegionMap) -> io::Result<()> {
    writeln!(
        w,
        "# ecmi region map, schema=1, ecmi_points={}, train_points={}",
        map.ecmi_grid.len(),
        map.train_grid.len()
    )?;
    writeln!(w, "ecmi,train_loss,winner,binary_kl,linear,sqrt")?;
    for (bi, &b) in map.ecmi_grid.iter().enumerate() {
        for (li, &train) in map.train_grid.iter().enumerate() {
            let idx = bi * map.train_grid.len() + li;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                b,
                train,
                map.winners[idx].as_str(),
                map.binary_kl_values[idx],
                map.linear_values[idx],
                map.sqrt_values[idx]
            )?;
        }
    }
    Ok(())
}

pub fn write_curves_csv<W: Write>(mut w: W, curves: &[CurvePoint]) -> io::Result<()> {
    writeln!(w, "# ecmi bound curves, schema=1, points={}", curves.len())?;
    writeln!(w, "ecmi,interpolation,binary_kl,linear,sqrt")?;
    for point in curves {
        writeln!(
            w,
            "{},{},{},{},{}",
            point.ecmi, point.interpolation, point.binary_kl, point.linear, point.sqrt
        )?;
    }
    Ok(())
}

/// Winner heat map: one rectangle per cell, information on the x axis
/// (log-ordered as given), training loss on the y axis, legend at the right.
pub fn region_svg(map: &RegionMap) -> String {
    let cell = 12.0;
    let margin = 60.0;
    let legend_width = 140.0;
    let width = margin + cell * map.ecmi_grid.len() as f64 + legend_width;
    let height = margin + cell * map.train_grid.len() as f64 + 30.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n<rect width=\"{width}\" height=\"{height}\" \
         fill=\"white\"/>"
    );
    for (bi, _) in map.ecmi_grid.iter().enumerate() {
        for (li, _) in map.train_grid.iter().enumerate() {
            let winner = map.winners[bi * map.train_grid.len() + li];
            let x = margin + cell * bi as f64;
            // Flip the y axis so training loss grows upward.
            let y = margin + cell * (map.train_grid.len() - 1 - li) as f64;
            let _ = writeln!(
                svg,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"{}\"/>",
                winner_color(winner)
            );
        }
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">samplewise information (nats, log scale)</text>",
        margin,
        height - 8.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 14 {})\">training loss</text>",
        margin + 120.0,
        margin + 120.0
    );
    let legend_x = margin + cell * map.ecmi_grid.len() as f64 + 16.0;
    for (row, winner) in [
        RegionWinner::BinaryKl,
        RegionWinner::Linear,
        RegionWinner::Sqrt,
        RegionWinner::Trivial,
    ]
    .into_iter()
    .enumerate()
    {
        let y = margin + 20.0 * row as f64;
        let _ = writeln!(
            svg,
            "<rect x=\"{legend_x}\" y=\"{y}\" width=\"14\" height=\"14\" fill=\"{}\"/>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>",
            winner_color(winner),
            legend_x + 20.0,
            y + 11.0,
            winner.as_str()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Line chart of the four bound curves over the information grid, drawn on a
/// log-x / linear-y frame.
pub fn curves_svg(curves: &[CurvePoint]) -> String {
    let width = 640.0;
    let height = 420.0;
    let margin = 60.0;
    let plot_w = width - 2.0 * margin - 60.0;
    let plot_h = height - 2.0 * margin;
    let x_lo = curves.first().map(|c| c.ecmi.ln()).unwrap_or(0.0);
    let x_hi = curves.last().map(|c| c.ecmi.ln()).unwrap_or(1.0);
    let y_hi = curves
        .iter()
        .flat_map(|c| [c.interpolation, c.binary_kl, c.linear, c.sqrt])
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let x_of = |b: f64| margin + (b.ln() - x_lo) / (x_hi - x_lo).max(1e-12) * plot_w;
    let y_of = |v: f64| margin + plot_h - v / y_hi * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n<rect width=\"{width}\" height=\"{height}\" \
         fill=\"white\"/>\n<rect x=\"{margin}\" y=\"{margin}\" width=\"{plot_w}\" \
         height=\"{plot_h}\" fill=\"none\" stroke=\"#999\"/>"
    );
    let series = |f: fn(&CurvePoint) -> f64| -> String {
        curves
            .iter()
            .map(|c| format!("{:.2},{:.2}", x_of(c.ecmi), y_of(f(c))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let getters: [fn(&CurvePoint) -> f64; 4] = [
        |c| c.interpolation,
        |c| c.binary_kl,
        |c| c.linear,
        |c| c.sqrt,
    ];
    for ((name, color), getter) in CURVE_COLORS.iter().zip(getters) {
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" points=\"{}\"/>",
            series(getter)
        );
        let _ = name;
    }
    for (row, (name, color)) in CURVE_COLORS.iter().enumerate() {
        let y = margin + 18.0 * row as f64;
        let x = width - 130.0;
        let _ = writeln!(
            svg,
            "<rect x=\"{x}\" y=\"{y}\" width=\"14\" height=\"4\" fill=\"{color}\"/>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"12\">{name}</text>",
            x + 20.0,
            y + 6.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{margin}\" y=\"{}\" font-size=\"12\">samplewise information (nats, log scale)</text>",
        height - 14.0
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyze;

    #[test]
    fn region_csv_has_header_and_rows() {
        let map = analyze::region_map(&[0.01, 0.1], &[0.0, 0.2]).unwrap();
        let mut buf = Vec::new();
        write_region_csv(&mut buf, &map).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# ecmi region map, schema=1"));
        assert_eq!(text.lines().count(), 2 + 4);
        assert!(text.contains("binary_kl"));
    }

    #[test]
    fn svg_outputs_are_well_formed_enough() {
        let map = analyze::region_map(&[0.01, 0.1], &[0.0, 0.2]).unwrap();
        let svg = region_svg(&map);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        // Background + one rect per cell + four legend swatches.
        assert_eq!(svg.matches("<rect").count(), 1 + 4 + 4);

        let curves = analyze::bound_curves(&[0.01, 0.05, 0.2]).unwrap();
        let svg = curves_svg(&curves);
        assert!(svg.contains("polyline"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
