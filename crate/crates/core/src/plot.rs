//! Dependency-free SVG scatter plots of 2-D embeddings.
//!
//! Data markers carry `class="marker"`, legend swatches `class="legend-marker"`.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::embedding::Embedding;
use crate::error::{Error, Result};

const PANEL_W: f64 = 480.0;
const PANEL_H: f64 = 420.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_R: f64 = 110.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 40.0;
const MARKER_R: f64 = 3.5;

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone, Copy)]
enum Shape {
    Circle,
    Square,
    Triangle,
    Diamond,
}

const SHAPES: [Shape; 4] = [
    Shape::Circle,
    Shape::Square,
    Shape::Triangle,
    Shape::Diamond,
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn marker(out: &mut String, class: &str, shape: Shape, color: &str, x: f64, y: f64) {
    let r = MARKER_R;
    // Writing into a String cannot fail.
    let _ = match shape {
        Shape::Circle => writeln!(
            out,
            r#"<circle class="{class}" cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{color}" fill-opacity="0.8"/>"#
        ),
        Shape::Square => writeln!(
            out,
            r#"<rect class="{class}" x="{:.2}" y="{:.2}" width="{}" height="{}" fill="{color}" fill-opacity="0.8"/>"#,
            x - r,
            y - r,
            2.0 * r,
            2.0 * r
        ),
        Shape::Triangle => writeln!(
            out,
            r#"<polygon class="{class}" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}" fill-opacity="0.8"/>"#,
            x,
            y - 1.2 * r,
            x - 1.1 * r,
            y + 0.9 * r,
            x + 1.1 * r,
            y + 0.9 * r
        ),
        Shape::Diamond => writeln!(
            out,
            r#"<polygon class="{class}" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}" fill-opacity="0.8"/>"#,
            x,
            y - 1.3 * r,
            x + 1.3 * r,
            y,
            x,
            y + 1.3 * r,
            x - 1.3 * r,
            y
        ),
    };
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    let pad = if span > 0.0 {
        0.05 * span
    } else {
        lo.abs().max(1.0) * 0.05
    };
    (lo - pad, hi + pad)
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn draw_panel(out: &mut String, emb: &Embedding, title: &str, ox: f64, oy: f64) {
    let coords = emb.coords();
    let (x0, x1) = padded_range(coords.column(0).iter().copied());
    let (y0, y1) = padded_range(coords.column(1).iter().copied());
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let (left, top) = (ox + MARGIN_L, oy + MARGIN_T);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| top + plot_h - (y - y0) / (y1 - y0) * plot_h;

    let _ = writeln!(out, r#"<g class="panel">"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="15">{}</text>"#,
        left + plot_w / 2.0,
        oy + 22.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{left:.2}" y="{top:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#444"/>"##
    );
    for (v, anchor_x) in [(x0, left), (x1, left + plot_w)] {
        let _ = writeln!(
            out,
            r#"<text x="{anchor_x:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
            top + plot_h + 14.0,
            fmt_tick(v)
        );
    }
    for (v, anchor_y) in [(y0, top + plot_h), (y1, top)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#,
            left - 4.0,
            anchor_y + 3.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">dim 1</text>"#,
        left + plot_w / 2.0,
        top + plot_h + 30.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11" transform="rotate(-90 {:.2} {:.2})">dim 2</text>"#,
        left - 40.0,
        top + plot_h / 2.0,
        left - 40.0,
        top + plot_h / 2.0
    );

    let classes: Vec<Option<i32>> = emb
        .labels()
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let style = |label: Option<i32>| {
        let idx = classes.iter().position(|c| *c == label).unwrap_or(0);
        (SHAPES[idx % SHAPES.len()], COLORS[idx % COLORS.len()])
    };
    for (i, label) in emb.labels().iter().enumerate() {
        let (shape, color) = style(*label);
        marker(
            out,
            "marker",
            shape,
            color,
            sx(coords[(i, 0)]),
            sy(coords[(i, 1)]),
        );
    }
    for (k, label) in classes.iter().enumerate() {
        let (shape, color) = style(*label);
        let ly = top + 12.0 + 18.0 * k as f64;
        let lx = left + plot_w + 16.0;
        marker(out, "legend-marker", shape, color, lx, ly);
        let name = label.map_or_else(|| "unlabeled".to_owned(), |l| format!("class {l}"));
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            lx + 10.0,
            ly + 4.0,
            escape(&name)
        );
    }
    let _ = writeln!(out, "</g>");
}

fn check_2d(emb: &Embedding) -> Result<()> {
    if emb.dims() != 2 {
        return Err(Error::invalid(format!(
            "scatter plots need a 2-D embedding, got {} dimensions",
            emb.dims()
        )));
    }
    Ok(())
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

/// Single scatter panel with one marker shape and color per class.
pub fn render_scatter(emb: &Embedding, title: &str) -> Result<String> {
    check_2d(emb)?;
    let mut body = String::new();
    draw_panel(&mut body, emb, title, 0.0, 0.0);
    Ok(document(PANEL_W, PANEL_H, &body))
}

/// Grid of panels, filled row by row.
pub fn render_panels(panels: &[(&str, &Embedding)], columns: usize) -> Result<String> {
    if panels.is_empty() || columns == 0 {
        return Err(Error::invalid("need at least one panel and one column"));
    }
    let mut body = String::new();
    for (idx, (title, emb)) in panels.iter().enumerate() {
        check_2d(emb)?;
        let (row, col) = (idx / columns, idx % columns);
        draw_panel(
            &mut body,
            emb,
            title,
            col as f64 * PANEL_W,
            row as f64 * PANEL_H,
        );
    }
    let rows = panels.len().div_ceil(columns);
    let cols = columns.min(panels.len());
    Ok(document(
        cols as f64 * PANEL_W,
        rows as f64 * PANEL_H,
        &body,
    ))
}
