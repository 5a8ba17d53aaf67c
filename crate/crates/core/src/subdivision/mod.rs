//! Binary univariate subdivision: masks, refinement on finite data, the
//! square slice matrices S₁/S₂, and convergence estimates.
//!
//! Refinement is p_i^{k+1} = Σ_j a_{i−2j} p_j^k. With finite data
//! p_0, …, p_{n−1} only outputs whose whole stencil {j : i − 2j ∈ σ(a)} is
//! nonempty and inside 0..n are produced. For a mask with support
//! {o, …, o+L−1} these are i = o+L−2, …, 2n−1+o, that is 2n − L + 2 points
//! when L ≥ 2. S₁ is the first n of those rows and S₂ the last n.

mod laurent;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_sets::{euclidean, hausdorff, PointSet};

pub use laurent::parse_laurent;

/// Tolerance for parity sums in [`check_constant_reproduction`].
pub const REPRODUCTION_TOL: f64 = 1e-12;

/// Largest support accepted from text input.
pub const MAX_SUPPORT: usize = 4096;

/// Finitely supported mask a_j, j ∈ {offset, …, offset+len−1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    offset: i64,
    coeffs: Vec<f64>,
}

impl Mask {
    /// Trims zero coefficients from both ends so the support is tight.
    pub fn new(offset: i64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        let first = coeffs
            .iter()
            .position(|&c| c != 0.0)
            .ok_or_else(|| Error::InvalidParameter("mask has no nonzero coefficient".into()))?;
        let last = coeffs.iter().rposition(|&c| c != 0.0).expect("nonzero exists");
        Ok(Mask {
            offset: offset + first as i64,
            coeffs: coeffs[first..=last].to_vec(),
        })
    }

    /// Keeps the declared support even when end coefficients vanish, so a
    /// mask family keeps a common support size.
    pub fn with_support(offset: i64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("mask support is empty".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Mask { offset, coeffs })
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn support_size(&self) -> usize {
        self.coeffs.len()
    }

    /// a_t, zero outside the support.
    pub fn get(&self, t: i64) -> f64 {
        let r = t - self.offset;
        if r < 0 || r as usize >= self.coeffs.len() {
            0.0
        } else {
            self.coeffs[r as usize]
        }
    }

    pub fn parity(&self) -> Parity {
        if self.coeffs.len() % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// ℓ with support size 2ℓ (even) or 2ℓ+1 (odd).
    pub fn half_length(&self) -> usize {
        self.coeffs.len() / 2
    }

    /// Largest |a_j − b_j| over the union of supports.
    pub fn max_difference(&self, other: &Mask) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = (self.offset + self.coeffs.len() as i64).max(other.offset + other.coeffs.len() as i64);
        (lo..hi)
            .map(|t| (self.get(t) - other.get(t)).abs())
            .fold(0.0, f64::max)
    }

    /// JSON `{offset, coeffs}` or Laurent text.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json_str(text)
        } else {
            Self::from_laurent(text)
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let d: MaskDescriptor = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if d.coeffs.len() > MAX_SUPPORT {
            return Err(Error::InvalidParameter(format!(
                "mask support larger than {MAX_SUPPORT}"
            )));
        }
        Mask::new(d.offset, d.coeffs)
    }

    pub fn from_laurent(text: &str) -> Result<Self> {
        let terms = parse_laurent(text)?;
        let lo = *terms.keys().next().expect("parser returns at least one term");
        let hi = *terms.keys().next_back().expect("nonempty");
        let span = hi.checked_sub(lo).filter(|&s| (s as u64) < MAX_SUPPORT as u64).ok_or_else(
            || Error::InvalidParameter(format!("mask support larger than {MAX_SUPPORT}")),
        )?;
        let mut coeffs = vec![0.0; span as usize + 1];
        for (e, c) in terms {
            coeffs[(e - lo) as usize] = c;
        }
        Mask::new(lo, coeffs)
    }

    pub fn to_descriptor(&self) -> MaskDescriptor {
        MaskDescriptor {
            offset: self.offset,
            coeffs: self.coeffs.clone(),
        }
    }
}

/// JSON form of a mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskDescriptor {
    pub offset: i64,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

type MaskGen = dyn Fn(usize) -> Mask + Send + Sync;

/// Level-dependent masks k ↦ a^[k], k ≥ 1, with a common support size.
#[derive(Clone)]
pub struct MaskSequence {
    label: String,
    support_size: usize,
    generator: Arc<MaskGen>,
}

impl fmt::Debug for MaskSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaskSequence")
            .field("label", &self.label)
            .field("support_size", &self.support_size)
            .finish_non_exhaustive()
    }
}

impl MaskSequence {
    /// `generator` must be deterministic and return masks of support size
    /// `support_size`; [`MaskSequence::mask`] panics otherwise.
    pub fn new<G>(label: impl Into<String>, support_size: usize, generator: G) -> Self
    where
        G: Fn(usize) -> Mask + Send + Sync + 'static,
    {
        MaskSequence {
            label: label.into(),
            support_size,
            generator: Arc::new(generator),
        }
    }

    pub fn constant(mask: Mask) -> Self {
        let size = mask.support_size();
        MaskSequence::new("constant", size, move |_| mask.clone())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support_size(&self) -> usize {
        self.support_size
    }

    /// a^[k] for k ≥ 1.
    pub fn mask(&self, k: usize) -> Mask {
        let m = (self.generator)(k);
        assert_eq!(
            m.support_size(),
            self.support_size,
            "mask sequence `{}` changed support size at level {k}",
            self.label
        );
        m
    }
}

/// Outcome of the constants-reproduction test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantReproduction {
    pub holds: bool,
    pub even_sum: f64,
    pub odd_sum: f64,
}

/// Σ a_{2j} = Σ a_{2j+1} = 1 within [`REPRODUCTION_TOL`].
pub fn check_constant_reproduction(mask: &Mask) -> ConstantReproduction {
    let (mut even_sum, mut odd_sum) = (0.0, 0.0);
    for (r, &c) in mask.coeffs.iter().enumerate() {
        if (mask.offset + r as i64).rem_euclid(2) == 0 {
            even_sum += c;
        } else {
            odd_sum += c;
        }
    }
    ConstantReproduction {
        holds: (even_sum - 1.0).abs() <= REPRODUCTION_TOL && (odd_sum - 1.0).abs() <= REPRODUCTION_TOL,
        even_sum,
        odd_sum,
    }
}

/// Row stencils of the fully supported outputs: (i, [(j, a_{i−2j})]).
fn stencil_rows(mask: &Mask, n: usize) -> Vec<(i64, Vec<(usize, f64)>)> {
    let len = mask.coeffs.len() as i64;
    let lo = mask.offset;
    let hi = mask.offset + len - 1;
    let n = n as i64;
    let mut rows = Vec::new();
    for i in (lo + len - 2)..=(2 * n - 1 + lo) {
        // j with lo <= i - 2j <= hi
        let j_min = (i - hi).div_euclid(2) + i64::from((i - hi).rem_euclid(2) != 0);
        let j_max = (i - lo).div_euclid(2);
        if j_min > j_max || j_min < 0 || j_max >= n {
            continue;
        }
        let stencil = (j_min..=j_max)
            .map(|j| (j as usize, mask.get(i - 2 * j)))
            .collect();
        rows.push((i, stencil));
    }
    rows
}

/// One refinement step on finite data, keeping only fully supported
/// outputs.
pub fn refine(mask: &Mask, p: &PointSet) -> Result<PointSet> {
    let rows = stencil_rows(mask, p.len());
    if rows.is_empty() {
        return Err(Error::StencilTooShort {
            len: p.len(),
            support: mask.support_size(),
        });
    }
    let d = p.dim();
    let mut out = Vec::with_capacity(rows.len() * d);
    for (_, stencil) in &rows {
        let mut acc = vec![0.0; d];
        for &(j, a) in stencil {
            for (o, x) in acc.iter_mut().zip(p.point(j)) {
                *o += a * x;
            }
        }
        out.extend(acc);
    }
    PointSet::from_flat(d, out)
}

/// The two n×n slices of the refinement operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceMatrices {
    pub s1: DMatrix<f64>,
    pub s2: DMatrix<f64>,
    pub n: usize,
    pub parity: Parity,
}

impl SliceMatrices {
    /// S₁ for r = 1, S₂ for r = 2.
    pub fn get(&self, r: u8) -> &DMatrix<f64> {
        match r {
            1 => &self.s1,
            2 => &self.s2,
            _ => panic!("slice index must be 1 or 2, got {r}"),
        }
    }
}

/// Smallest admissible slice size: n > ℓ + 1 and enough fully supported
/// rows (2n − L + 2 ≥ n).
pub fn min_slice_size(mask: &Mask) -> usize {
    let l = mask.support_size();
    (mask.half_length() + 2).max(l.saturating_sub(2)).max(1)
}

pub fn slice_matrices(mask: &Mask, n: usize) -> Result<SliceMatrices> {
    let min = min_slice_size(mask);
    let rows = stencil_rows(mask, n);
    if n < min || rows.len() < n {
        return Err(Error::SliceSizeTooSmall { n, min });
    }
    let build = |chosen: &[(i64, Vec<(usize, f64)>)]| {
        let mut s = DMatrix::zeros(n, n);
        for (r, (_, stencil)) in chosen.iter().enumerate() {
            for &(j, a) in stencil {
                s[(r, j)] = a;
            }
        }
        s
    };
    Ok(SliceMatrices {
        s1: build(&rows[..n]),
        s2: build(&rows[rows.len() - n..]),
        n,
        parity: mask.parity(),
    })
}

/// Applies a^[1], …, a^[K] in turn.
pub fn subdivide_levels(masks: &MaskSequence, p0: &PointSet, levels: usize) -> Result<PointSet> {
    let mut p = p0.clone();
    for k in 1..=levels {
        p = refine(&masks.mask(k), &p)?;
    }
    Ok(p)
}

/// Every level p⁰, …, p^K.
pub fn subdivide_all_levels(
    masks: &MaskSequence,
    p0: &PointSet,
    levels: usize,
) -> Result<Vec<PointSet>> {
    let mut out = Vec::with_capacity(levels + 1);
    out.push(p0.clone());
    for k in 1..=levels {
        let next = refine(&masks.mask(k), &out[k - 1])?;
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceClass {
    /// Adjacent differences decay geometrically.
    C0Like,
    /// Hausdorff steps decay but differences do not.
    HLike,
    Inconclusive,
}

/// Geometric decay threshold for the mean ratio in the classification.
pub const DECAY_RATIO: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C0Estimate {
    /// Δ_k = max_i |p^k_{i+1} − p^k_i| for k = 0..=K.
    pub max_differences: Vec<f64>,
    /// h(p^k, p^{k+1}) for k = 0..K.
    pub hausdorff_steps: Vec<f64>,
    /// Δ_{k+1}/Δ_k.
    pub difference_ratios: Vec<f64>,
    /// h_{k+1}/h_k.
    pub step_ratios: Vec<f64>,
    /// Geometric mean of the difference ratios over the second half.
    pub difference_rate: Option<f64>,
    /// Geometric mean of the step ratios over the second half.
    pub step_rate: Option<f64>,
    pub classification: ConvergenceClass,
}

fn max_adjacent(p: &PointSet) -> f64 {
    (1..p.len())
        .map(|i| euclidean(p.point(i - 1), p.point(i)))
        .fold(0.0, f64::max)
}

fn ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2)
        .map(|w| if w[0] == 0.0 { if w[1] == 0.0 { 0.0 } else { f64::INFINITY } } else { w[1] / w[0] })
        .collect()
}

fn tail_rate(r: &[f64]) -> Option<f64> {
    if r.is_empty() {
        return None;
    }
    let tail = &r[r.len() / 2..];
    if tail.iter().any(|&x| x == 0.0) {
        return Some(0.0);
    }
    Some((tail.iter().map(|x| x.ln()).sum::<f64>() / tail.len() as f64).exp())
}

/// Empirical convergence reading of K levels of subdivision.
pub fn c0_convergence_estimate(
    masks: &MaskSequence,
    p0: &PointSet,
    levels: usize,
) -> Result<C0Estimate> {
    if levels < 2 {
        return Err(Error::InvalidParameter("need at least 2 levels".into()));
    }
    let all = subdivide_all_levels(masks, p0, levels)?;
    let max_differences: Vec<f64> = all.iter().map(max_adjacent).collect();
    let hausdorff_steps = all
        .windows(2)
        .map(|w| hausdorff(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    let difference_ratios = ratios(&max_differences);
    let step_ratios = ratios(&hausdorff_steps);
    let difference_rate = tail_rate(&difference_ratios);
    let step_rate = tail_rate(&step_ratios);
    let half = hausdorff_steps.len() / 2;
    let steps_shrink = hausdorff_steps[half..].iter().all(|&h| h > 0.0)
        && step_ratios[half.saturating_sub(1).min(step_ratios.len())..]
            .iter()
            .all(|&r| r < 1.0);
    let classification = match (difference_rate, step_rate) {
        (Some(d), _) if d < DECAY_RATIO => ConvergenceClass::C0Like,
        (_, Some(s)) if s < DECAY_RATIO && steps_shrink => ConvergenceClass::HLike,
        _ => ConvergenceClass::Inconclusive,
    };
    Ok(C0Estimate {
        max_differences,
        hausdorff_steps,
        difference_ratios,
        step_ratios,
        difference_rate,
        step_rate,
        classification,
    })
}
