//! Atomic file output: CSV point clouds, JSON reports, SVG scatter plots.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sfs_core::PointSet;

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    /// From the file extension, CSV when unknown.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("json") => Format::Json,
            Some("svg") => Format::Svg,
            _ => Format::Csv,
        }
    }
}

#[derive(Serialize)]
struct PointsJson<'a, M: Serialize> {
    dim: usize,
    points: Vec<&'a [f64]>,
    metadata: &'a M,
}

/// Writes `set` in `format`. For CSV and SVG the metadata goes to a
/// sibling `.json` file; JSON output embeds it.
pub fn write_cloud<M: Serialize>(path: &Path, format: Format, set: &PointSet, metadata: &M) -> Result<Vec<PathBuf>> {
    match format {
        Format::Csv | Format::Svg => {
            let body = if format == Format::Csv {
                set.to_csv_string()
            } else {
                svg_scatter(set)
            };
            write_atomic(path, body.as_bytes())?;
            let meta = sidecar(path);
            write_json(&meta, metadata)?;
            Ok(vec![path.to_path_buf(), meta])
        }
        Format::Json => {
            let doc = PointsJson {
                dim: set.dim(),
                points: set.points().collect(),
                metadata,
            };
            write_json(path, &doc)?;
            Ok(vec![path.to_path_buf()])
        }
    }
}

/// `x.csv` → `x.json`; a JSON target gets `x.meta.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    if Format::from_path(path) == Format::Json {
        path.with_extension("meta.json")
    } else {
        path.with_extension("json")
    }
}

pub const SVG_SIZE: f64 = 800.0;
pub const SVG_MARGIN: f64 = 0.05;

/// 800×800 scatter of the first two coordinates (1-D sets on a line),
/// bounding box fitted with a 5% margin, one 1px square per point.
pub fn svg_scatter(set: &PointSet) -> String {
    let xy = |p: &[f64]| (p[0], if p.len() > 1 { p[1] } else { 0.0 });
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in set.points() {
        let (x, y) = xy(p);
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    // equal scale on both axes, degenerate extents widened to 1
    let span = (x1 - x0).max(y1 - y0);
    let span = if span > 0.0 { span } else { 1.0 };
    let inner = SVG_SIZE * (1.0 - 2.0 * SVG_MARGIN);
    let scale = inner / span;
    let cx = 0.5 * (x0 + x1);
    let cy = 0.5 * (y0 + y1);
    let mut out = String::with_capacity(64 + set.len() * 48);
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">"#,
        s = SVG_SIZE
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    out.push_str("<g fill=\"black\">\n");
    for p in set.points() {
        let (x, y) = xy(p);
        let px = SVG_SIZE / 2.0 + (x - cx) * scale;
        // SVG y grows downwards
        let py = SVG_SIZE / 2.0 - (y - cy) * scale;
        writeln!(out, r#"<rect x="{px:.2}" y="{py:.2}" width="1" height="1"/>"#).unwrap();
    }
    out.push_str("</g>\n</svg>\n");
    out
}
