//! Point and rule files.
//!
//! A point file is UTF-8 CSV with one point per row, `x[,y[,z]][,weight]`.
//! Lines starting with `#` are comments and blank lines are skipped. A row
//! without the weight column gets unit mass. Rule files use the same layout
//! and carry their residual, degree and solver in a leading comment.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::catch::{CompressedRule, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::points::PointSet;

/// Parses point-file text for `dim`-dimensional points.
pub fn parse_points(text: &str, dim: usize) -> Result<DiscreteMeasure> {
    let mut coords = Vec::new();
    let mut masses = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim && fields.len() != dim + 1 {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "expected {dim} coordinates and an optional weight, found {} fields",
                    fields.len()
                ),
            });
        }
        let mut values = Vec::with_capacity(fields.len());
        for f in &fields {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("'{f}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite value '{f}'"),
                });
            }
            values.push(v);
        }
        let mass = if values.len() == dim + 1 {
            values[dim]
        } else {
            1.0
        };
        if mass <= 0.0 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("weight must be positive, got {mass}"),
            });
        }
        coords.extend_from_slice(&values[..dim]);
        masses.push(mass);
    }
    if masses.is_empty() {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: "no points found".into(),
        });
    }
    DiscreteMeasure::new(PointSet::new(dim, coords)?, masses)
}

pub fn read_points(path: &Path, dim: usize) -> Result<DiscreteMeasure> {
    parse_points(&fs::read_to_string(path)?, dim)
}

fn push_rows(out: &mut String, points: &PointSet, weights: &[f64]) {
    for (p, w) in points.iter().zip(weights) {
        for x in p {
            let _ = write!(out, "{x},");
        }
        let _ = writeln!(out, "{w}");
    }
}

/// CSV text for a measure. Values use the shortest representation that reads back exactly.
pub fn format_measure(measure: &DiscreteMeasure) -> String {
    let mut out = String::new();
    push_rows(&mut out, measure.points(), measure.masses());
    out
}

pub fn format_rule(rule: &CompressedRule, original_m: usize) -> String {
    let mut out = format!(
        "# catch rule: epsilon={:e} degree={} solver={} rank={} nodes={} original={}\n",
        rule.residual,
        rule.exactness_degree,
        rule.solver_used,
        rule.rank_n,
        rule.len(),
        original_m
    );
    push_rows(&mut out, &rule.nodes, &rule.weights);
    out
}

pub fn write_points(path: &Path, measure: &DiscreteMeasure) -> Result<()> {
    fs::write(path, format_measure(measure))?;
    Ok(())
}

pub fn write_rule(path: &Path, rule: &CompressedRule, original_m: usize) -> Result<()> {
    fs::write(path, format_rule(rule, original_m))?;
    Ok(())
}
