//! Affine function systems, sequences of them, and their trajectories.
//!
//! A [`FunctionSystem`] acts on a [`PointSet`] through the Hutchinson operator
//! B ↦ ∪ f(B). An [`SfsSchedule`] is a deterministic sequence k ↦ 𝓕_k of
//! systems (levels are 1-based), evaluated on demand.
//!
//! * forward trajectory Φ_k = 𝓕_k ∘ … ∘ 𝓕_1, the newest system applied last;
//! * backward trajectory Ψ_k = 𝓕_1 ∘ … ∘ 𝓕_k, the newest system innermost.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::metric_sets::{decimate, euclidean, hausdorff, Point, PointSet};

/// The affine map x ↦ Ax + b on ℝᵐ. `A` is stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl AffineMap {
    pub fn new(dim: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("map dimension must be >= 1".into()));
        }
        if a.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: a.len(),
            });
        }
        if b.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: b.len(),
            });
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(AffineMap { dim, a, b })
    }

    pub fn from_matrix(a: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let n = a.nrows();
        let flat = (0..n * n).map(|i| a[(i / n, i % n)]).collect();
        Self::new(n, flat, b.to_vec())
    }

    /// x ↦ scale·x + shift on ℝ.
    pub fn scalar(scale: f64, shift: f64) -> Result<Self> {
        Self::new(1, vec![scale], vec![shift])
    }

    /// Planar similitude: rotation by `angle` radians, scaling by `ratio`,
    /// then translation.
    pub fn similitude(ratio: f64, angle: f64, translation: [f64; 2]) -> Result<Self> {
        let (s, c) = angle.sin_cos();
        Self::new(
            2,
            vec![ratio * c, -ratio * s, ratio * s, ratio * c],
            translation.to_vec(),
        )
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let a = (0..dim * dim)
            .map(|i| if i / dim == i % dim { 1.0 } else { 0.0 })
            .collect();
        Self::new(dim, a, vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn linear(&self) -> &[f64] {
        &self.a
    }

    pub fn offset(&self) -> &[f64] {
        &self.b
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.a)
    }

    #[inline]
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.a[i * d..(i + 1) * d];
            *o = row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>() + self.b[i];
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.apply_into(x, &mut out);
        out
    }

    /// self ∘ other.
    pub fn compose(&self, other: &AffineMap) -> Result<AffineMap> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let a = self.matrix() * other.matrix();
        let b = self.apply(&other.b);
        AffineMap::from_matrix(&a, &b)
    }
}

/// Exact Lipschitz constant of an affine map: the spectral norm of its
/// linear part.
pub fn lipschitz(f: &AffineMap) -> f64 {
    spectral_norm(&f.matrix())
}

/// A nonempty family of affine maps of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSystem {
    dim: usize,
    maps: Vec<AffineMap>,
    label: String,
}

impl FunctionSystem {
    pub fn new(maps: Vec<AffineMap>, label: impl Into<String>) -> Result<Self> {
        let dim = maps.first().ok_or_else(|| {
            Error::InvalidParameter("a function system needs at least one map".into())
        })?
        .dim();
        if let Some(bad) = maps.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(FunctionSystem {
            dim,
            maps,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let d: FunctionSystemDescriptor =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        d.build()
    }

    pub fn to_descriptor(&self) -> FunctionSystemDescriptor {
        FunctionSystemDescriptor {
            dim: self.dim,
            maps: self
                .maps
                .iter()
                .map(|m| MapDescriptor {
                    a: MatrixRepr::Flat(m.a.clone()),
                    b: m.b.clone(),
                })
                .collect(),
            label: Some(self.label.clone()),
        }
    }
}

/// JSON form of a matrix: row-major flat array or array of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixRepr {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDescriptor {
    #[serde(rename = "A")]
    pub a: MatrixRepr,
    pub b: Vec<f64>,
}

/// JSON descriptor `{dim, maps: [{A, b}], label?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSystemDescriptor {
    pub dim: usize,
    pub maps: Vec<MapDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl FunctionSystemDescriptor {
    pub fn build(&self) -> Result<FunctionSystem> {
        let maps = self
            .maps
            .iter()
            .map(|m| {
                let a = match &m.a {
                    MatrixRepr::Flat(v) => v.clone(),
                    MatrixRepr::Rows(rows) => {
                        if let Some(r) = rows.iter().find(|r| r.len() != self.dim) {
                            return Err(Error::DimensionMismatch {
                                expected: self.dim,
                                found: r.len(),
                            });
                        }
                        rows.concat()
                    }
                };
                AffineMap::new(self.dim, a, m.b.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        FunctionSystem::new(maps, self.label.clone().unwrap_or_default())
    }
}

/// L_𝓕 = max Lip(f_i); the contraction factor of the Hutchinson operator.
pub fn contraction_factor(f: &FunctionSystem) -> f64 {
    f.maps.iter().map(lipschitz).fold(0.0, f64::max)
}

fn check_dim(f: &FunctionSystem, b: &PointSet) -> Result<()> {
    if f.dim != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim,
            found: b.dim(),
        });
    }
    Ok(())
}

/// Images of every point under every map (map-major order), without
/// deduplication.
pub fn hutchinson_images(f: &FunctionSystem, b: &PointSet) -> Result<PointSet> {
    check_dim(f, b)?;
    let d = f.dim;
    let input = b.as_flat();
    let mut out = vec![0.0; input.len() * f.maps.len()];
    for (map, block) in f.maps.iter().zip(out.chunks_mut(input.len())) {
        block
            .par_chunks_mut(d)
            .zip(input.par_chunks(d))
            .with_min_len(1024)
            .for_each(|(o, x)| map.apply_into(x, o));
    }
    PointSet::from_flat(d, out)
}

/// 𝓕(B) = ∪ f(B), then decimated with cell size ε. With ε = 0 only exact
/// duplicates are merged.
pub fn hutchinson_apply(f: &FunctionSystem, b: &PointSet, epsilon: f64) -> Result<PointSet> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "decimation epsilon must be finite and >= 0, got {epsilon}"
        )));
    }
    let images = hutchinson_images(f, b)?;
    Ok(reduce(&images, epsilon))
}

fn reduce(s: &PointSet, epsilon: f64) -> PointSet {
    if epsilon > 0.0 {
        decimate(s, epsilon)
    } else {
        s.dedup_exact()
    }
}

/// Settings for [`ifs_attractor`].
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorOptions {
    /// Stop once h(B_k, B_{k+1}) < tol.
    pub tol: f64,
    pub max_iter: usize,
    pub epsilon: f64,
    /// Caller asserts that some ℓ-fold composition is contractive, which
    /// allows L_𝓕 ≥ 1.
    pub eventually_contractive: bool,
    /// Abort with [`Error::SetTooLarge`] above this many points.
    pub max_points: Option<usize>,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        AttractorOptions {
            tol: 1e-6,
            max_iter: 64,
            epsilon: 0.0,
            eventually_contractive: false,
            max_points: None,
        }
    }
}

/// Result of an attractor iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorRun {
    pub set: PointSet,
    pub iterations: usize,
    /// h(B_{k-1}, B_k) for k = 1..=iterations.
    pub steps: Vec<f64>,
    pub converged: bool,
    pub contraction: f64,
    /// A-priori estimate h(B_k, A) ≤ h(B_k, B_{k+1})/(1 − L), when L < 1.
    pub error_bound: Option<f64>,
}

impl AttractorRun {
    pub fn final_step(&self) -> Option<f64> {
        self.steps.last().copied()
    }
}

/// Iterates B_{k+1} = 𝓕(B_k) until the Hausdorff step drops below `tol`.
pub fn ifs_attractor(
    f: &FunctionSystem,
    b0: &PointSet,
    opts: &AttractorOptions,
) -> Result<AttractorRun> {
    check_dim(f, b0)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be > 0".into()));
    }
    let contraction = contraction_factor(f);
    if contraction >= 1.0 && !opts.eventually_contractive {
        return Err(Error::NotContractive {
            factor: contraction,
        });
    }
    let mut current = reduce(b0, opts.epsilon);
    let mut steps = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let next = hutchinson_apply(f, &current, opts.epsilon)?;
        check_budget(&next, opts.max_points)?;
        let step = hausdorff(&current, &next)?;
        steps.push(step);
        current = next;
        if step < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(finish_run(current, steps, converged, contraction))
}

/// Exactly `depth` Hutchinson iterations, no stopping rule.
pub fn iterate_fixed(
    f: &FunctionSystem,
    b0: &PointSet,
    depth: usize,
    epsilon: f64,
    max_points: Option<usize>,
) -> Result<AttractorRun> {
    check_dim(f, b0)?;
    let contraction = contraction_factor(f);
    let mut current = reduce(b0, epsilon);
    let mut steps = Vec::with_capacity(depth);
    for _ in 0..depth {
        let next = hutchinson_apply(f, &current, epsilon)?;
        check_budget(&next, max_points)?;
        steps.push(hausdorff(&current, &next)?);
        current = next;
    }
    Ok(finish_run(current, steps, true, contraction))
}

fn finish_run(set: PointSet, steps: Vec<f64>, converged: bool, contraction: f64) -> AttractorRun {
    let error_bound = match steps.last() {
        Some(&h) if contraction < 1.0 => Some(h / (1.0 - contraction)),
        _ => None,
    };
    AttractorRun {
        set,
        iterations: steps.len(),
        steps,
        converged,
        contraction,
        error_bound,
    }
}

fn check_budget(s: &PointSet, limit: Option<usize>) -> Result<()> {
    match limit {
        Some(limit) if s.len() > limit => Err(Error::SetTooLarge {
            points: s.len(),
            limit,
        }),
        _ => Ok(()),
    }
}

type Generator = dyn Fn(usize) -> Arc<FunctionSystem> + Send + Sync;
type FactorFn = dyn Fn(usize) -> f64 + Send + Sync;

/// A sequence of function systems k ↦ 𝓕_k, k ≥ 1, of a common dimension.
#[derive(Clone)]
pub struct SfsSchedule {
    dim: usize,
    label: String,
    generator: Arc<Generator>,
    factor: Option<Arc<FactorFn>>,
}

impl fmt::Debug for SfsSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SfsSchedule")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl SfsSchedule {
    /// The generator must be deterministic and return systems of dimension
    /// `dim` for every k ≥ 1.
    pub fn new<G>(dim: usize, label: impl Into<String>, generator: G) -> Self
    where
        G: Fn(usize) -> Arc<FunctionSystem> + Send + Sync + 'static,
    {
        SfsSchedule {
            dim,
            label: label.into(),
            generator: Arc::new(generator),
            factor: None,
        }
    }

    /// Replaces the per-level contraction factor, e.g. by a Lipschitz
    /// constant restricted to an invariant flat.
    pub fn with_factor<F>(mut self, factor: F) -> Self
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        self.factor = Some(Arc::new(factor));
        self
    }

    pub fn constant(system: FunctionSystem) -> Self {
        let dim = system.dim();
        let label = format!("constant({})", system.label());
        let system = Arc::new(system);
        SfsSchedule::new(dim, label, move |_| Arc::clone(&system))
    }

    /// Cycles through `systems`, holding system i for `block_lengths[i]`
    /// consecutive levels.
    pub fn periodic(systems: Vec<FunctionSystem>, block_lengths: Vec<usize>) -> Result<Self> {
        if systems.is_empty() || systems.len() != block_lengths.len() {
            return Err(Error::InvalidParameter(
                "periodic schedule needs one block length per system".into(),
            ));
        }
        if block_lengths.contains(&0) {
            return Err(Error::InvalidParameter("block lengths must be >= 1".into()));
        }
        let dim = systems[0].dim();
        if let Some(bad) = systems.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        let label = format!(
            "periodic({})",
            systems
                .iter()
                .zip(&block_lengths)
                .map(|(s, b)| format!("{}x{b}", s.label()))
                .collect::<Vec<_>>()
                .join(",")
        );
        let systems: Vec<Arc<FunctionSystem>> = systems.into_iter().map(Arc::new).collect();
        let period: usize = block_lengths.iter().sum();
        Ok(SfsSchedule::new(dim, label, move |k| {
            let mut pos = (k.max(1) - 1) % period;
            for (s, &len) in systems.iter().zip(&block_lengths) {
                if pos < len {
                    return Arc::clone(s);
                }
                pos -= len;
            }
            unreachable!("position within period")
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// 𝓕_k for k ≥ 1.
    pub fn system(&self, k: usize) -> Arc<FunctionSystem> {
        (self.generator)(k)
    }

    /// Contraction factor s_k of level k.
    pub fn factor(&self, k: usize) -> f64 {
        match &self.factor {
            Some(f) => f(k),
            None => contraction_factor(&self.system(k)),
        }
    }

    pub fn factors(&self, levels: usize) -> Vec<f64> {
        (1..=levels).map(|k| self.factor(k)).collect()
    }

    /// k ↦ 𝓕_{k+offset}, for resuming a forward trajectory at level offset.
    pub fn shifted(&self, offset: usize) -> SfsSchedule {
        let inner = self.clone();
        let label = format!("{}+{offset}", self.label);
        let factor_src = self.clone();
        SfsSchedule::new(self.dim, label, move |k| inner.system(k + offset))
            .with_factor(move |k| factor_src.factor(k + offset))
    }
}

/// Point sets at requested depths plus the Hausdorff distances between
/// consecutive requested depths.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub depths: Vec<usize>,
    pub sets: Vec<PointSet>,
    pub steps: Vec<f64>,
}

impl Trajectory {
    /// Computes the steps between consecutive sets.
    pub fn from_sets(depths: Vec<usize>, sets: Vec<PointSet>) -> Result<Self> {
        let steps = sets
            .windows(2)
            .map(|w| hausdorff(&w[0], &w[1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            depths,
            sets,
            steps,
        })
    }

    pub fn last(&self) -> Option<&PointSet> {
        self.sets.last()
    }
}

/// Settings shared by both trajectory drivers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrajectoryOptions {
    pub epsilon: f64,
    pub max_points: Option<usize>,
}

impl TrajectoryOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        TrajectoryOptions {
            epsilon,
            max_points: None,
        }
    }
}

fn check_depths(depths: &[usize]) -> Result<()> {
    if depths.is_empty() {
        return Err(Error::InvalidParameter("no depths requested".into()));
    }
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "depths must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn check_schedule(s: &SfsSchedule, a: &PointSet) -> Result<()> {
    if s.dim != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim,
            found: a.dim(),
        });
    }
    Ok(())
}

/// Φ_k(A) = 𝓕_k ∘ … ∘ 𝓕_1(A) at each requested k, computed incrementally.
pub fn forward_trajectory(
    s: &SfsSchedule,
    a: &PointSet,
    depths: &[usize],
    opts: TrajectoryOptions,
) -> Result<Trajectory> {
    check_depths(depths)?;
    check_schedule(s, a)?;
    let mut current = a.clone();
    let mut level = 0;
    let mut sets = Vec::with_capacity(depths.len());
    for &depth in depths {
        while level < depth {
            level += 1;
            current = hutchinson_apply(&s.system(level), &current, opts.epsilon)?;
            check_budget(&current, opts.max_points)?;
        }
        sets.push(current.clone());
    }
    Trajectory::from_sets(depths.to_vec(), sets)
}

/// Ψ_K(A) = 𝓕_1 ∘ … ∘ 𝓕_K(A) for each requested K. Each depth starts
/// afresh from A and applies 𝓕_K first.
pub fn backward_trajectory(
    s: &SfsSchedule,
    a: &PointSet,
    depths: &[usize],
    opts: TrajectoryOptions,
) -> Result<Trajectory> {
    check_depths(depths)?;
    check_schedule(s, a)?;
    let mut sets = Vec::with_capacity(depths.len());
    for &depth in depths {
        let mut current = a.clone();
        for level in (1..=depth).rev() {
            current = hutchinson_apply(&s.system(level), &current, opts.epsilon)?;
            check_budget(&current, opts.max_points)?;
        }
        sets.push(current);
    }
    Trajectory::from_sets(depths.to_vec(), sets)
}

/// Closed ball B(q, M/(1−μ)), invariant under every map with
/// d(T(x), q) ≤ μ·d(x, q) + M.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantBall {
    pub center: Point,
    pub radius: f64,
}

impl InvariantBall {
    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        euclidean(self.center.coords(), x) <= self.radius * (1.0 + slack) + slack
    }
}

pub fn invariant_ball(center: Point, mu: f64, m: f64) -> Result<InvariantBall> {
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::InvalidParameter(format!(
            "ball contraction must satisfy 0 <= mu < 1, got {mu}"
        )));
    }
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("offset bound must be >= 0, got {m}")));
    }
    Ok(InvariantBall {
        center,
        radius: m / (1.0 - mu),
    })
}

/// (μ, M) for the maps of `f` about q: μ = max ‖A_i‖₂, M = max |T_i(q) − q|.
/// Then d(T_i(x), q) ≤ μ·d(x, q) + M for every map.
pub fn ball_constants(f: &FunctionSystem, q: &Point) -> Result<(f64, f64)> {
    if q.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: q.dim(),
        });
    }
    let mu = contraction_factor(f);
    let m = f
        .maps()
        .iter()
        .map(|t| euclidean(&t.apply(q.coords()), q.coords()))
        .fold(0.0, f64::max);
    Ok((mu, m))
}

/// (∏ s_i)·d(x, y).
pub fn similarity_bound(s: &[f64], d_xy: f64) -> f64 {
    s.iter().product::<f64>() * d_xy
}

/// Three-way reading of a truncated factor sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProductClass {
    /// Σ ∏ s_i appears finite (implies the product tends to 0).
    SumConverges,
    /// ∏ s_i appears to tend to 0 but the sum does not settle.
    ProductToZero,
    Inconclusive,
}

/// Partial products and sums of a factor sequence with an empirical
/// classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDiagnostic {
    pub partial_products: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Geometric mean of P_k/P_{k−1} over the last quarter of the levels.
    pub tail_ratio: Option<f64>,
    /// P_K·r̂/(1 − r̂), the geometric extrapolation of the remaining sum.
    pub tail_estimate: Option<f64>,
    pub classification: ProductClass,
    /// Always true: a finite truncation cannot prove convergence.
    pub empirical: bool,
}

/// Relative size of the extrapolated tail allowed for "sum converges".
pub const TAIL_FRACTION: f64 = 1e-2;
/// P_K must drop to this fraction of max P_k for "product to zero".
pub const PRODUCT_DROP: f64 = 0.05;

pub fn product_diagnostic(s: &[f64]) -> ProductDiagnostic {
    let mut partial_products = Vec::with_capacity(s.len());
    let mut partial_sums = Vec::with_capacity(s.len());
    let (mut p, mut sum) = (1.0f64, 0.0f64);
    for &si in s {
        p *= si;
        sum += p;
        partial_products.push(p);
        partial_sums.push(sum);
    }
    let k = s.len();
    if k == 0 {
        return ProductDiagnostic {
            partial_products,
            partial_sums,
            tail_ratio: None,
            tail_estimate: None,
            classification: ProductClass::Inconclusive,
            empirical: true,
        };
    }
    let q = (k / 4).max(1);
    let last = partial_products[k - 1];
    let before = if k > q { partial_products[k - 1 - q] } else { 1.0 };
    let ratio = if before == 0.0 || last == 0.0 {
        0.0
    } else {
        (last / before).powf(1.0 / q as f64)
    };
    let tail = if last == 0.0 {
        Some(0.0)
    } else if ratio < 1.0 {
        Some(last * ratio / (1.0 - ratio))
    } else {
        None
    };
    let total = partial_sums[k - 1];
    let peak = partial_products.iter().copied().fold(0.0, f64::max);
    let classification = match tail {
        Some(t) if ratio < 1.0 && t <= TAIL_FRACTION * total => ProductClass::SumConverges,
        _ if last <= PRODUCT_DROP * peak => ProductClass::ProductToZero,
        _ => ProductClass::Inconclusive,
    };
    ProductDiagnostic {
        partial_products,
        partial_sums,
        tail_ratio: Some(ratio),
        tail_estimate: tail,
        classification,
        empirical: true,
    }
}
