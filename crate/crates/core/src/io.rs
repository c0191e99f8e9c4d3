//! CSV trajectory files and static SVG line charts.
//!
//! CSV layout: `t,mean_0,...,mean_{d-1},std_0,...,std_{d-1},phase`, optionally
//! followed by `ref_0,...,ref_{d-1}` when a reference solution is attached.
//! Floats carry 17 significant digits, lines end with `\n`.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::filter::Trajectory;
use crate::ssm::Phase;

/// Scientific notation with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_header(dim: usize, with_reference: bool) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((0..dim).map(|i| format!("mean_{i}")));
    cols.extend((0..dim).map(|i| format!("std_{i}")));
    cols.push("phase".to_string());
    if with_reference {
        cols.extend((0..dim).map(|i| format!("ref_{i}")));
    }
    cols.join(",")
}

/// Write one row per record. `reference`, when given, holds one state per record.
pub fn write_csv<W: Write>(
    out: &mut W,
    traj: &Trajectory,
    reference: Option<&[Vec<f64>]>,
) -> Result<()> {
    let dim = traj.dim();
    if let Some(r) = reference {
        if r.len() != traj.len() {
            return Err(Error::DimensionMismatch {
                expected: traj.len(),
                actual: r.len(),
                context: "reference rows",
            });
        }
    }
    let mut buf = csv_header(dim, reference.is_some());
    buf.push('\n');
    for (k, rec) in traj.records.iter().enumerate() {
        buf.push_str(&fmt_float(rec.t));
        for m in &rec.marginals {
            buf.push(',');
            buf.push_str(&fmt_float(m.mean));
        }
        for m in &rec.marginals {
            buf.push(',');
            buf.push_str(&fmt_float(m.std()));
        }
        buf.push(',');
        buf.push_str(rec.phase.as_str());
        if let Some(r) = reference {
            for v in &r[k] {
                buf.push(',');
                buf.push_str(&fmt_float(*v));
            }
        }
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub phase: Phase,
    pub reference: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub dim: usize,
    pub has_reference: bool,
    pub rows: Vec<CsvRow>,
}

impl CsvTable {
    /// Time of the last Taylor row when the table switches to Fourier rows.
    pub fn prediction_time(&self) -> Option<f64> {
        let first = self.rows.iter().position(|r| r.phase == Phase::Fourier)?;
        if first == 0 {
            return None;
        }
        Some(self.rows[first - 1].t)
    }
}

pub fn parse_csv(text: &str) -> Result<CsvTable> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    let n = cols.len();
    let (dim, has_reference) = match n {
        n if n >= 4 && (n - 2) % 2 == 0 && header == csv_header((n - 2) / 2, false) => {
            ((n - 2) / 2, false)
        }
        n if n >= 5 && (n - 2) % 3 == 0 && header == csv_header((n - 2) / 3, true) => {
            ((n - 2) / 3, true)
        }
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unrecognized header '{header}'"),
            })
        }
    };

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {n} fields, found {}", fields.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid number '{s}'"),
            })
        };
        let t = num(fields[0])?;
        let means = fields[1..=dim]
            .iter()
            .map(|s| num(s))
            .collect::<Result<Vec<_>>>()?;
        let stds = fields[dim + 1..=2 * dim]
            .iter()
            .map(|s| num(s))
            .collect::<Result<Vec<_>>>()?;
        let phase = fields[2 * dim + 1]
            .parse::<Phase>()
            .map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid phase '{}'", fields[2 * dim + 1]),
            })?;
        let reference = fields[2 * dim + 2..]
            .iter()
            .map(|s| num(s))
            .collect::<Result<Vec<_>>>()?;
        rows.push(CsvRow {
            t,
            means,
            stds,
            phase,
            reference,
        });
    }
    Ok(CsvTable {
        dim,
        has_reference,
        rows,
    })
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 40.0;
const MEAN_COLORS: [&str; 4] = ["#d62728", "#2ca02c", "#9467bd", "#8c564b"];
const REF_COLORS: [&str; 4] = ["#1f77b4", "#ffbf00", "#17becf", "#7f7f7f"];

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if lo > hi {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

/// Line chart of the filter means, reference curves and the `T_p` rule.
pub fn render_svg(table: &CsvTable) -> String {
    let (t0, t1) = range(table.rows.iter().map(|r| r.t));
    let (y0, y1) = range(
        table
            .rows
            .iter()
            .flat_map(|r| r.means.iter().chain(&r.reference).copied()),
    );
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |t: f64| LEFT + (t - t0) / (t1 - t0) * (WIDTH - LEFT - RIGHT);
    let py = |y: f64| HEIGHT - BOTTOM - (y - y0) / (y1 - y0) * (HEIGHT - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g id="axes" stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b}"/></g>"#,
        b = HEIGHT - BOTTOM,
        r = WIDTH - RIGHT,
    );
    let _ = writeln!(
        s,
        r#"<g id="ticks" font-family="sans-serif" font-size="11">"#
    );
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let t = t0 + f * (t1 - t0);
        let y = y0 + f * (y1 - y0);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(t),
            HEIGHT - BOTTOM + 16.0,
            tick_label(t)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py(y) + 4.0,
            tick_label(y)
        );
    }
    let _ = writeln!(s, "</g>");

    let mut polyline = |id: String, color: &str, pick: &dyn Fn(&CsvRow) -> f64| {
        let pts: Vec<String> = table
            .rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.t), py(pick(r))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline id="{id}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
    };
    if !table.rows.is_empty() {
        if table.has_reference {
            for i in 0..table.dim {
                polyline(format!("ref_{i}"), REF_COLORS[i % REF_COLORS.len()], &|r| {
                    r.reference[i]
                });
            }
        }
        for i in 0..table.dim {
            polyline(
                format!("mean_{i}"),
                MEAN_COLORS[i % MEAN_COLORS.len()],
                &|r| r.means[i],
            );
        }
    }
    if let Some(tp) = table.prediction_time() {
        let _ = writeln!(
            s,
            r#"<line id="prediction-time" x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{b}" stroke="black" stroke-dasharray="4,3"/>"#,
            x = px(tp),
            b = HEIGHT - BOTTOM,
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}
