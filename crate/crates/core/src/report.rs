//! Tables, deterministic JSON and CSV output, and small SVG line plots.

use crate::error::{Error, Result};
use serde::Serialize;
use serde_json::{Map, Number, Value};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

/// Named numeric table, written as CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Table {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(format!("{name} (table {})", self.name)))?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format_float(*v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(name: &str, text: &str) -> Result<Table> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Config(format!("{name}: empty CSV")))?;
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, l) in lines.enumerate() {
            let row = l
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("{name}: row {}: {e}", i + 1)))?;
            if row.len() != columns.len() {
                return Err(Error::Config(format!("{name}: row {} has {} cells", i + 1, row.len())));
            }
            rows.push(row);
        }
        Ok(Table { name: name.into(), columns, rows })
    }
}

/// 17 significant digits, so output round-trips exactly.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Serialize to pretty JSON with every float printed by [`format_float`].
/// Non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Config(e.to_string()))?;
    let v = normalize(v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            if n.is_u64() || n.is_i64() {
                Value::Number(n)
            } else {
                match n.as_f64() {
                    Some(x) if x.is_finite() => Value::Number(Number::from_str(&format_float(x)).expect("valid number")),
                    _ => Value::Null,
                }
            }
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

pub fn write_table(dir: &Path, table: &Table) -> Result<()> {
    std::fs::write(dir.join(format!("{}.csv", table.name)), table.to_csv())?;
    Ok(())
}

/// Line plot of `y` columns against `x`.
#[derive(Clone, Debug)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    pub y: Vec<String>,
    pub log_x: bool,
    pub log_y: bool,
    /// Reference slopes drawn through the first point of the first series (log-log only).
    pub guides: Vec<f64>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const M: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Deterministic SVG line plot; points with non-positive values on log axes are skipped.
pub fn plot_svg(table: &Table, spec: &PlotSpec) -> Result<String> {
    let xs = table.column(&spec.x)?;
    let tx = |v: f64| if spec.log_x { v.log10() } else { v };
    let ty = |v: f64| if spec.log_y { v.log10() } else { v };
    let ok = |x: f64, y: f64| {
        x.is_finite() && y.is_finite() && (!spec.log_x || x > 0.0) && (!spec.log_y || y > 0.0)
    };
    let mut series = Vec::new();
    for name in &spec.y {
        let ys = table.column(name)?;
        let pts: Vec<(f64, f64)> = xs.iter().zip(&ys).filter(|(x, y)| ok(**x, **y)).map(|(x, y)| (tx(*x), ty(*y))).collect();
        series.push((name.clone(), pts));
    }
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.1.iter().copied()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), p| (a.min(p.0), b.max(p.0), c.min(p.1), d.max(p.1)),
    );
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-300 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-300 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(&spec.title));
    let label = |name: &str, log: bool| if log { format!("log10 {name}") } else { name.to_string() };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        W / 2.0,
        H - 15.0,
        escape(&label(&spec.x, spec.log_x))
    );
    for (v, anchor, x, y) in [
        (x0, "start", M, H - M + 15.0),
        (x1, "end", W - M, H - M + 15.0),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="11">{v:.3}</text>"#);
    }
    for (v, y) in [(y0, H - M), (y1, M + 10.0)] {
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end" font-size="11">{v:.3}</text>"#, M - 4.0);
    }
    if spec.log_x && spec.log_y {
        if let Some(&(gx, gy)) = series.first().and_then(|s| s.1.first()) {
            for (k, slope) in spec.guides.iter().enumerate() {
                let (ax, ay) = (gx, gy);
                let (bx, by) = (x1, gy + slope * (x1 - gx));
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="5,4"/>"#,
                    px(ax),
                    py(ay),
                    px(bx),
                    py(by)
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="gray">slope {slope}</text>"#,
                    W - M - 70.0,
                    M + 20.0 + 14.0 * (spec.y.len() + k) as f64
                );
            }
        }
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{color}">{}</text>"#,
            W - M - 70.0,
            M + 20.0 + 14.0 * i as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![0.1, 1.0 / 3.0]);
        t.push(vec![-2.5e-300, 7.0]);
        let back = Table::from_csv("t", &t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert!(matches!(t.column("c"), Err(Error::MissingColumn(_))));
    }

    #[test]
    fn json_floats_have_fixed_width() {
        #[derive(Serialize)]
        struct S {
            x: f64,
            n: usize,
            bad: f64,
        }
        let s = to_json(&S { x: 0.1, n: 3, bad: f64::NAN }).unwrap();
        assert!(s.contains("\"x\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3") && s.contains("\"bad\": null"));
    }

    #[test]
    fn svg_is_deterministic() {
        let mut t = Table::new("scan", &["lambda", "u"]);
        for k in 1..5 {
            let l = 10f64.powi(k);
            t.push(vec![l, 1.0 / l]);
        }
        let spec = PlotSpec {
            title: "scan".into(),
            x: "lambda".into(),
            y: vec!["u".into()],
            log_x: true,
            log_y: true,
            guides: vec![-1.0, -0.5],
        };
        let a = plot_svg(&t, &spec).unwrap();
        assert_eq!(a, plot_svg(&t, &spec).unwrap());
        assert!(a.starts_with("<svg") && a.contains("slope -0.5"));
        let bad = PlotSpec { y: vec!["v".into()], ..spec };
        assert!(plot_svg(&t, &bad).is_err());
    }
}
