//! Finite point sets in ℝᵐ and the Hausdorff metric.
//!
//! Every compact set handled by this crate is carried as a [`PointSet`], a
//! nonempty finite multiset of points of a common dimension. Attractors are
//! approximated by finite iterates, so the Hausdorff distance between two
//! point sets is the basic convergence measure everywhere else.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Tolerance for set-equality checks unless an operation says otherwise.
pub const SET_TOLERANCE: f64 = 1e-12;

// Below this many distance evaluations the directed distance runs serially.
const PARALLEL_THRESHOLD: usize = 1 << 16;

/// A single point with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("point must have dimension >= 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

/// Euclidean distance between two coordinate slices of equal length.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A nonempty finite multiset of points in ℝᵐ, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Builds a set from row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if coords.is_empty() {
            return Err(Error::EmptySet);
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_points<I, P>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = P>,
        P: AsRef<[f64]>,
    {
        let mut dim = None;
        let mut coords = Vec::new();
        for p in points {
            let p = p.as_ref();
            match dim {
                None => dim = Some(p.len()),
                Some(d) if d != p.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: p.len(),
                    })
                }
                _ => {}
            }
            coords.extend_from_slice(p);
        }
        let dim = dim.ok_or(Error::EmptySet)?;
        Self::from_flat(dim, coords)
    }

    /// One-dimensional set from scalars.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_flat(1, values.to_vec())
    }

    pub fn singleton(point: &[f64]) -> Result<Self> {
        Self::from_flat(point.len(), point.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.coords
    }

    /// Concatenates two sets of equal dimension (multiset union).
    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        check_dims(self, other)?;
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(PointSet {
            dim: self.dim,
            coords,
        })
    }

    /// Removes exact duplicates, keeping first occurrences in order.
    /// `-0.0` and `0.0` are treated as equal.
    pub fn dedup_exact(&self) -> PointSet {
        let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(self.len());
        let mut coords = Vec::with_capacity(self.coords.len());
        for p in self.points() {
            let key: Vec<u64> = p.iter().map(|&x| (x + 0.0).to_bits()).collect();
            if seen.insert(key) {
                coords.extend_from_slice(p);
            }
        }
        PointSet {
            dim: self.dim,
            coords,
        }
    }

    /// Keeps the first `m` coordinates of every point.
    pub fn truncate_dim(&self, m: usize) -> Result<PointSet> {
        if m == 0 || m > self.dim {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate dimension {} to {m}",
                self.dim
            )));
        }
        let coords = self
            .points()
            .flat_map(|p| p[..m].iter().copied())
            .collect();
        Ok(PointSet { dim: m, coords })
    }

    /// Per-coordinate (min, max) bounds.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.points() {
            for (slot, &x) in b.iter_mut().zip(p) {
                slot.0 = slot.0.min(x);
                slot.1 = slot.1.max(x);
            }
        }
        b
    }

    /// Parses headerless CSV, one point per row. Ragged rows are rejected.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut dim = None;
        let mut coords = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(format!("row {}: {e}", row + 1)))?;
            if dim.is_none() {
                dim = Some(record.len());
            }
            for field in record.iter() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::Parse(format!("row {}: `{field}` is not a number", row + 1))
                })?;
                coords.push(v);
            }
        }
        let dim = dim.ok_or(Error::EmptySet)?;
        Self::from_flat(dim, coords)
    }

    /// Headerless CSV with 17 significant digits per coordinate.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.coords.len() * 24);
        for p in self.points() {
            for (i, x) in p.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{}", format_real(*x)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Formats a real with 17 significant digits (round-trip safe).
pub fn format_real(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

fn check_dims(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

/// Nearest-neighbour helper: the target points sorted along the axis of
/// largest spread. A query scans outward from its position on that axis and
/// stops once the axis gap alone exceeds the best distance found, so the
/// minimum is exact.
struct SweepIndex<'a> {
    set: &'a PointSet,
    axis: usize,
    order: Vec<usize>,
    keys: Vec<f64>,
}

impl<'a> SweepIndex<'a> {
    fn new(set: &'a PointSet) -> Self {
        let axis = set
            .bounds()
            .iter()
            .enumerate()
            .max_by(|a, b| (a.1 .1 - a.1 .0).total_cmp(&(b.1 .1 - b.1 .0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.sort_by(|&i, &j| set.point(i)[axis].total_cmp(&set.point(j)[axis]));
        let keys = order.iter().map(|&i| set.point(i)[axis]).collect();
        SweepIndex {
            set,
            axis,
            order,
            keys,
        }
    }

    fn nearest_distance(&self, q: &[f64]) -> f64 {
        let key = q[self.axis];
        let start = self.keys.partition_point(|&k| k < key);
        let mut best = f64::INFINITY;
        let mut hi = start;
        let mut lo = start;
        loop {
            let mut progressed = false;
            if hi < self.keys.len() && self.keys[hi] - key <= best {
                best = best.min(euclidean(q, self.set.point(self.order[hi])));
                hi += 1;
                progressed = true;
            }
            if lo > 0 && key - self.keys[lo - 1] <= best {
                lo -= 1;
                best = best.min(euclidean(q, self.set.point(self.order[lo])));
                progressed = true;
            }
            if !progressed {
                return best;
            }
        }
    }
}

/// Directed distance sup_{b∈B} inf_{c∈C} |b − c|.
pub fn directed_distance(from: &PointSet, to: &PointSet) -> Result<f64> {
    check_dims(from, to)?;
    let work = from.len().saturating_mul(to.len());
    if work < PARALLEL_THRESHOLD {
        // exact double loop, early exit once a point cannot raise the max
        let mut cmax = 0.0f64;
        for b in from.points() {
            let mut cmin = f64::INFINITY;
            for c in to.points() {
                let d = euclidean(b, c);
                if d < cmin {
                    cmin = d;
                    if cmin <= cmax {
                        break;
                    }
                }
            }
            cmax = cmax.max(cmin);
        }
        return Ok(cmax);
    }
    let index = SweepIndex::new(to);
    Ok(from
        .as_flat()
        .par_chunks_exact(from.dim)
        .map(|b| index.nearest_distance(b))
        .reduce(|| 0.0, f64::max))
}

/// Hausdorff distance max{d(B,C), d(C,B)}.
pub fn hausdorff(a: &PointSet, b: &PointSet) -> Result<f64> {
    Ok(directed_distance(a, b)?.max(directed_distance(b, a)?))
}

/// True when the two sets agree within `tol` in the Hausdorff metric.
pub fn sets_equal(a: &PointSet, b: &PointSet, tol: f64) -> Result<bool> {
    Ok(hausdorff(a, b)? <= tol)
}

/// Snaps points to a grid of cell size `epsilon` and keeps the first point
/// seen in each occupied cell. The result is within `epsilon·√m` of the
/// input in the Hausdorff metric. `epsilon <= 0` returns the input unchanged.
pub fn decimate(set: &PointSet, epsilon: f64) -> PointSet {
    if !(epsilon > 0.0) {
        return set.clone();
    }
    let mut seen: HashSet<Vec<i64>> = HashSet::with_capacity(set.len());
    let mut coords = Vec::with_capacity(set.coords.len());
    for p in set.points() {
        let key: Vec<i64> = p.iter().map(|&x| (x / epsilon).floor() as i64).collect();
        if seen.insert(key) {
            coords.extend_from_slice(p);
        }
    }
    PointSet {
        dim: set.dim,
        coords,
    }
}

/// Maximum pairwise Euclidean distance.
pub fn diameter(set: &PointSet) -> f64 {
    let n = set.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let p = set.point(i);
            (i + 1..n)
                .map(|j| euclidean(p, set.point(j)))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}
