//! Trajectory plots: time runs up the vertical axis, space along the
//! horizontal one.

use std::fmt::Write as _;

use harris_core::flow::FlowPathRecord;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 40.0;

/// Evenly spaced indices into `0..len`, always keeping both ends.
pub fn downsample(len: usize, max: usize) -> Vec<usize> {
    if len <= max {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (0..max)
        .map(|k| ((k * (len - 1)) as f64 / (max - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

/// Polylines of a flow path, one per maximal run in which a label is the
/// lowest label of its cluster. A merged cluster is drawn once.
pub fn polylines(record: &FlowPathRecord, max_times: usize) -> Vec<Vec<(f64, f64)>> {
    let idx = downsample(record.times.len(), max_times.max(2));
    let mut lines = Vec::new();
    for k in 0..record.labels.len() {
        let mut line: Vec<(f64, f64)> = Vec::new();
        for w in idx.windows(2) {
            let (a, b) = (w[0], w[1]);
            if record.cluster_ids[a][k] as usize != k {
                break;
            }
            if line.is_empty() {
                line.push((record.values[a][k], record.times[a]));
            }
            line.push((record.values[b][k], record.times[b]));
        }
        if !line.is_empty() {
            lines.push(line);
        }
    }
    lines
}

pub fn render(record: &FlowPathRecord, max_times: usize, title: &str) -> String {
    let lines = polylines(record, max_times);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, _) in lines.iter().flatten() {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if !(hi > lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    let horizon = record.horizon().max(f64::MIN_POSITIVE);
    let sx = (WIDTH - 2.0 * MARGIN) / (hi - lo);
    let sy = (HEIGHT - 2.0 * MARGIN) / horizon;
    let px = |x: f64| MARGIN + (x - lo) * sx;
    let py = |t: f64| HEIGHT - MARGIN - t * sy;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g stroke="gray" stroke-width="1"><line x1="{m}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{m}" y1="{b}" x2="{m}" y2="{m}"/></g>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<g font-family="sans-serif" font-size="12"><text x="{}" y="{}" text-anchor="middle">space</text><text x="12" y="{}" transform="rotate(-90 12 {})" text-anchor="middle">time</text></g>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let _ = writeln!(s, r#"<g fill="none" stroke="black" stroke-width="0.8">"#);
    for line in &lines {
        s.push_str(r#"<polyline points=""#);
        for (i, &(x, t)) in line.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.2},{:.2}", px(x), py(t));
        }
        s.push_str("\"/>\n");
    }
    s.push_str("</g>\n</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
