//! Deterministic report emission: JSON with 17 significant digits, config
//! hashing, CSV and minimal SVG plots.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Number, Value};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        "0.0000000000000000e0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            let raw = n.to_string();
            if raw.contains(['.', 'e', 'E']) {
                let x: f64 = raw.parse().expect("numeric literal");
                Value::Number(Number::from_str(&fmt17(x)).expect("formatted float"))
            } else {
                Value::Number(n)
            }
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

/// Serializes `result` inside an envelope carrying the tool version and the
/// hash of the configuration text.
pub fn envelope<S: Serialize>(command: &str, config_sha256: &str, result: &S) -> serde_json::Result<String> {
    let mut m = Map::new();
    m.insert("tool".into(), Value::String("radshoot".into()));
    m.insert("version".into(), Value::String(VERSION.into()));
    m.insert("command".into(), Value::String(command.into()));
    m.insert("config_sha256".into(), Value::String(config_sha256.into()));
    m.insert("result".into(), canonical(serde_json::to_value(result)?));
    let mut s = serde_json::to_string_pretty(&Value::Object(m))?;
    s.push('\n');
    Ok(s)
}

pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
}

const COLOURS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Polylines on shared axes.
pub fn svg_lines(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let (w, h, pad) = (720.0, 440.0, 56.0);
    let all = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, w / 2.0);
    let _ = writeln!(
        out,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(out, r##"<line x1="{pad}" x2="{0}" y1="{1}" y2="{1}" stroke="#999" stroke-dasharray="4 3"/>"##, w - pad, sy(0.0));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, w / 2.0, h - 16.0);
    let _ = writeln!(out, r#"<text x="16" y="{0}" transform="rotate(-90 16 {0})" text-anchor="middle">{ylabel}</text>"#, h / 2.0);
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="{anchor}">{x:.4}</text>"#, sx(x), h - pad + 16.0);
    }
    for y in [y0, y1] {
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{y:.4}</text>"#, pad - 4.0, sy(y) + 4.0);
    }
    for (i, s) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
            w - pad - 160.0,
            pad + 16.0 * i as f64,
            s.label
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One coloured cell per scan point, keyed by label.
pub fn svg_strip(title: &str, cells: &[(f64, String)]) -> String {
    let (w, h, pad) = (720.0, 160.0, 40.0);
    let mut tags: Vec<&str> = cells.iter().map(|c| c.1.as_str()).collect();
    tags.sort_unstable();
    tags.dedup();
    let colour = |t: &str| {
        let i = tags.iter().position(|x| *x == t).unwrap_or(0);
        format!("hsl({},60%,55%)", (i * 137) % 360)
    };
    let n = cells.len().max(1) as f64;
    let cw = (w - 2.0 * pad) / n;
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="18" text-anchor="middle">{title}</text>"#, w / 2.0);
    for (i, (_, tag)) in cells.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<rect x="{:.3}" y="30" width="{:.3}" height="50" fill="{}"><title>{tag}</title></rect>"#,
            pad + cw * i as f64,
            cw,
            colour(tag)
        );
    }
    if let (Some(first), Some(last)) = (cells.first(), cells.last()) {
        let _ = writeln!(out, r#"<text x="{pad}" y="96">t = {:.3}</text>"#, first.0);
        let _ = writeln!(out, r#"<text x="{}" y="96" text-anchor="end">t = {:.3}</text>"#, w - pad, last.0);
    }
    for (i, t) in tags.iter().enumerate() {
        let x = pad + (i % 8) as f64 * 80.0;
        let y = 116.0 + (i / 8) as f64 * 16.0;
        let _ = writeln!(out, r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/>"#, y - 9.0, colour(t));
        let _ = writeln!(out, r#"<text x="{}" y="{y}">{t}</text>"#, x + 14.0);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_get_seventeen_digits() {
        let s = envelope("t", "abc", &serde_json::json!({"x": 0.1, "n": 3, "z": 0.0})).unwrap();
        assert!(s.contains("\"x\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["result"]["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn envelope_is_deterministic() {
        let v = serde_json::json!({"b": [1.5, 2.25], "a": "x"});
        assert_eq!(envelope("c", "h", &v).unwrap(), envelope("c", "h", &v).unwrap());
    }

    #[test]
    fn hash_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
