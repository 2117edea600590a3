//! Plain SVG output for route maps and bandit traces.

use std::fmt::Write as _;

use hhasa_core::{HeuristicId, Instance, NodeKind, RunRecord, Tour, POOL_SIZE};

const SIZE: f64 = 640.0;
const MARGIN: f64 = 30.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
}

/// Depot, customers, every station of the instance and one polyline per
/// route.
pub fn route_map(inst: &Instance, tour: &Tour, fitness: f64) -> String {
    let pts: Vec<_> = (0..inst.n_nodes()).map(|n| inst.coord(n)).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &pts {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    // y grows upwards in the instance, downwards in SVG.
    let tx = |x: f64| MARGIN + (x - x0) * scale;
    let ty = |y: f64| SIZE - MARGIN - (y - y0) * scale;

    let mut out = String::new();
    header(&mut out, SIZE, SIZE + 20.0);
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{}">{} fitness {fitness:.2}</text>"#,
        SIZE + 10.0,
        escape(inst.name())
    );

    for (i, route) in tour.routes().filter(|r| !r.is_empty()).enumerate() {
        let mut d = String::new();
        for (k, &n) in std::iter::once(&0).chain(route).chain(std::iter::once(&0)).enumerate() {
            let p = pts[n];
            let _ = write!(d, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, tx(p.x), ty(p.y));
        }
        let _ = writeln!(
            out,
            r#"<path class="route" d="{d}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            PALETTE[i % PALETTE.len()]
        );
    }

    for (n, p) in pts.iter().enumerate() {
        let (x, y) = (tx(p.x), ty(p.y));
        let _ = match inst.kind(n) {
            NodeKind::Depot => writeln!(
                out,
                r#"<rect class="depot" x="{:.2}" y="{:.2}" width="10" height="10" fill="red"/>"#,
                x - 5.0,
                y - 5.0
            ),
            NodeKind::Customer => writeln!(
                out,
                r#"<circle class="customer" cx="{x:.2}" cy="{y:.2}" r="3.5" fill="none" stroke="gray"/>"#
            ),
            NodeKind::Station => writeln!(
                out,
                r#"<circle class="station" cx="{x:.2}" cy="{y:.2}" r="4" fill="black"/>"#
            ),
        };
    }
    out.push_str("</svg>\n");
    out
}

/// Two stacked panels: selections per epoch and accumulated reward per
/// epoch, one line per heuristic.
pub fn trace_plot(rec: &RunRecord) -> String {
    let epochs = rec.bandit_trace.len();
    let (w, panel_h, legend_w) = (720.0, 220.0, 110.0);
    let plot_w = w - legend_w - 2.0 * MARGIN;
    let h = 2.0 * panel_h + 3.0 * MARGIN;

    let mut out = String::new();
    header(&mut out, w, h);
    let panels: [(&str, Vec<[f64; POOL_SIZE]>); 2] = [
        (
            "selections",
            rec.bandit_trace
                .iter()
                .map(|b| b.selections.map(|s| s as f64))
                .collect(),
        ),
        ("rewards", rec.bandit_trace.iter().map(|b| b.rewards).collect()),
    ];
    for (pi, (title, series)) in panels.iter().enumerate() {
        let top = MARGIN + pi as f64 * (panel_h + MARGIN);
        let ymax = series
            .iter()
            .flat_map(|row| row.iter().copied())
            .fold(0.0_f64, f64::max)
            .max(1.0);
        let px = |e: usize| MARGIN + if epochs > 1 { e as f64 / (epochs - 1) as f64 * plot_w } else { plot_w / 2.0 };
        let py = |v: f64| top + panel_h - v / ymax * panel_h;
        let _ = writeln!(
            out,
            r##"<g class="panel"><rect x="{MARGIN}" y="{top}" width="{plot_w}" height="{panel_h}" fill="none" stroke="#999"/>"##
        );
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN}" y="{}">{title} per epoch (max {ymax:.0}, {epochs} epochs)</text>"#,
            top - 6.0
        );
        for arm in 0..POOL_SIZE {
            let pts: Vec<String> = series
                .iter()
                .enumerate()
                .map(|(e, row)| format!("{:.2},{:.2}", px(e), py(row[arm])))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1"/>"#,
                pts.join(" "),
                PALETTE[arm]
            );
        }
        out.push_str("</g>\n");
    }
    let lx = w - legend_w;
    for (arm, id) in HeuristicId::ALL.iter().enumerate() {
        let y = MARGIN + 14.0 * arm as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{id}</text>"#,
            lx + 14.0,
            PALETTE[arm],
            lx + 18.0,
            y + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
