//! Plain-text point sets.
//!
//! ```text
//! dim 2
//! 0.0 0.0
//! 0.5 1.25 3
//! ```
//!
//! The header fixes the dimension; each following line holds `d` coordinates
//! and an optional integer mass (default 1). Blank lines and `#` comments are
//! skipped.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::quantum::Quantum;

use super::{Point, PointConfiguration, Window};

pub fn parse_point_file(text: &str, window: &Window) -> Result<PointConfiguration> {
    let mut dim = None;
    let mut points = Vec::new();
    let mut masses = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let Some(d) = dim else {
            let mut parts = line.split_whitespace();
            let d = match (parts.next(), parts.next(), parts.next()) {
                (Some("dim"), Some(v), None) => v
                    .parse::<usize>()
                    .ok()
                    .filter(|&d| d >= 1)
                    .ok_or_else(|| err(format!("bad dimension `{v}`")))?,
                _ => return Err(err("expected header `dim <d>`".into())),
            };
            if d != window.dim() {
                return Err(err(format!(
                    "file dimension {d} differs from window dimension {}",
                    window.dim()
                )));
            }
            dim = Some(d);
            continue;
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != d && fields.len() != d + 1 {
            return Err(err(format!(
                "expected {d} coordinates and an optional mass, got {} fields",
                fields.len()
            )));
        }
        let coords = fields[..d]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|c| c.is_finite())
                    .ok_or_else(|| err(format!("bad coordinate `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let mass = match fields.get(d) {
            None => 1,
            Some(f) => f
                .parse::<u64>()
                .ok()
                .filter(|&m| m >= 1)
                .ok_or_else(|| err(format!("bad mass `{f}` (positive integer expected)")))?,
        };
        if window.is_torus() && !window.contains(&coords) {
            return Err(err(format!("point {coords:?} lies outside the torus window")));
        }
        points.push(Point::new(coords));
        masses.push(mass);
    }
    if dim.is_none() {
        return Err(Error::Parse {
            line: 1,
            message: "missing header `dim <d>`".into(),
        });
    }
    PointConfiguration::new(window.clone(), points, masses, Quantum::ONE)
}

/// Writes the text format; masses of 1 are omitted.
pub fn format_point_file(config: &PointConfiguration) -> String {
    let mut out = format!("dim {}\n", config.dim());
    for (p, &m) in config.points().iter().zip(config.masses()) {
        let line: Vec<String> = p.iter().map(|c| c.to_string()).collect();
        out.push_str(&line.join(" "));
        if m != 1 {
            let _ = write!(out, " {m}");
        }
        out.push('\n');
    }
    out
}
