//! Lifting subdivision to function systems on ℝⁿ.
//!
//! With n control points stacked as the rows of an n×n matrix L (control
//! points in the first m columns, a ones column last), each slice S_r gives
//! the map A ↦ A·L⁻¹S_rL on row vectors. When the mask reproduces constants
//! the lifted matrix has the block form (G 0; v 1), so the flat Q^{n−1} of
//! rows ending in 1 is invariant and G carries the contraction.
//!
//! Row action r ↦ r·M is turned into the column convention x ↦ Mᵀx used by
//! [`crate::function_systems`].

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_systems::{AffineMap, FunctionSystem, SfsSchedule};
use crate::linalg::{hadamard_ratio, inverse_condition, spectral_norm, spectral_radius};
use crate::metric_sets::{diameter, PointSet};
use crate::subdivision::{slice_matrices, MaskSequence, SliceMatrices};

/// Minimum |det| relative to the product of row norms.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Tolerance for the (0,…,0,1) last column of lifted maps.
pub const BLOCK_TOL: f64 = 1e-10;
/// Longest composition length enumerated exhaustively.
pub const MAX_EXACT_WORD_LEN: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiftKind {
    P,
    H,
}

/// Nonsingular n×n basis matrix with a last column of ones.
#[derive(Debug, Clone)]
pub struct LiftMatrix {
    matrix: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    m: usize,
    kind: LiftKind,
    inverse_condition: f64,
}

impl PartialEq for LiftMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix && self.m == other.m && self.kind == other.kind
    }
}

impl LiftMatrix {
    fn from_matrix(matrix: DMatrix<f64>, m: usize, kind: LiftKind) -> Result<Self> {
        let ratio = hadamard_ratio(&matrix);
        let rcond = inverse_condition(&matrix);
        let condition = if rcond > 0.0 { 1.0 / rcond } else { f64::INFINITY };
        if !(ratio > SINGULAR_TOL) {
            return Err(match kind {
                LiftKind::P => Error::DegenerateControlPoints { condition },
                LiftKind::H => Error::Singular { condition },
            });
        }
        let lu = matrix.clone().lu();
        Ok(LiftMatrix {
            matrix,
            lu,
            m,
            kind,
            inverse_condition: rcond,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> LiftKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// 2-norm condition number estimate σ_max/σ_min.
    pub fn condition(&self) -> f64 {
        1.0 / self.inverse_condition
    }

    /// L⁻¹·B by LU solve.
    pub fn solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.lu.solve(b).ok_or(Error::Singular {
            condition: self.condition(),
        })
    }

    /// Rows of the matrix as a point set in ℝⁿ.
    pub fn rows(&self) -> PointSet {
        matrix_rows(&self.matrix)
    }
}

/// Rows of a matrix as a point set.
pub fn matrix_rows(m: &DMatrix<f64>) -> PointSet {
    let flat: Vec<f64> = m.transpose().iter().copied().collect();
    PointSet::from_flat(m.ncols(), flat).expect("matrix rows are finite and nonempty")
}

fn basis_pattern(n: usize, p0: Option<&PointSet>) -> DMatrix<f64> {
    let m = p0.map_or(0, |p| p.dim());
    let mut mat = DMatrix::zeros(n, n);
    if let Some(p) = p0 {
        for (i, row) in p.points().enumerate() {
            for (c, &x) in row.iter().enumerate() {
                mat[(i, c)] = x;
            }
        }
    }
    for c in 0..n - m - 1 {
        mat[(c, m + c)] = 1.0;
    }
    for i in 0..n {
        mat[(i, n - 1)] = 1.0;
    }
    mat
}

/// P = [p⁰ | shifted identity block | 𝟙]. Requires n > m + 1 and the last
/// m + 1 control points affinely independent.
pub fn build_p_matrix(p0: &PointSet) -> Result<LiftMatrix> {
    let (n, m) = (p0.len(), p0.dim());
    if n <= m + 1 {
        return Err(Error::InvalidParameter(format!(
            "need more than {} control points in dimension {m}, got {n}",
            m + 1
        )));
    }
    LiftMatrix::from_matrix(basis_pattern(n, Some(p0)), m, LiftKind::P)
}

/// H = [identity block | 𝟙], upper triangular with unit diagonal.
pub fn build_h_matrix(n: usize) -> Result<LiftMatrix> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("basis size must be >= 2, got {n}")));
    }
    LiftMatrix::from_matrix(basis_pattern(n, None), 0, LiftKind::H)
}

/// JSON `{n, m, p0, fill}` describing a lift matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftDescriptor {
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub p0: Vec<Vec<f64>>,
    #[serde(default = "default_fill")]
    pub fill: String,
}

fn default_fill() -> String {
    "h-pattern".into()
}

/// Upper bound on n accepted from descriptors.
pub const MAX_LIFT_SIZE: usize = 512;

impl LiftDescriptor {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<LiftMatrix> {
        if self.fill != "h-pattern" {
            return Err(Error::InvalidParameter(format!(
                "unsupported fill `{}` (expected `h-pattern`)",
                self.fill
            )));
        }
        if self.n > MAX_LIFT_SIZE {
            return Err(Error::InvalidParameter(format!("n above {MAX_LIFT_SIZE}")));
        }
        if self.m == 0 {
            if !self.p0.is_empty() {
                return Err(Error::InvalidParameter("m = 0 takes no control points".into()));
            }
            return build_h_matrix(self.n);
        }
        if self.p0.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: self.p0.len(),
            });
        }
        let p0 = PointSet::from_points(&self.p0)?;
        if p0.dim() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                found: p0.dim(),
            });
        }
        build_p_matrix(&p0)
    }
}

/// M_r = L⁻¹S_rL acting on row vectors from the right.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMap {
    pub matrix: DMatrix<f64>,
    pub reproduces_constants: bool,
}

impl LiftedMap {
    /// x ↦ Mᵀx on ℝⁿ.
    pub fn to_affine(&self) -> AffineMap {
        let n = self.matrix.nrows();
        AffineMap::from_matrix(&self.matrix.transpose(), &vec![0.0; n])
            .expect("lifted matrices are square and finite")
    }

    /// ‖G‖₂ when constants are reproduced (Lipschitz constant on Q^{n−1}),
    /// otherwise ‖M‖₂ on ℝⁿ.
    pub fn lipschitz(&self) -> f64 {
        match block_structure(self) {
            Ok(b) => b.g_norm,
            Err(_) => spectral_norm(&self.matrix),
        }
    }
}

fn reproduces_constants(s: &DMatrix<f64>) -> bool {
    s.row_iter()
        .all(|r| (r.sum() - 1.0).abs() <= crate::subdivision::REPRODUCTION_TOL)
}

pub fn lift(s: &DMatrix<f64>, l: &LiftMatrix) -> Result<LiftedMap> {
    if s.nrows() != l.n() || s.ncols() != l.n() {
        return Err(Error::DimensionMismatch {
            expected: l.n(),
            found: s.nrows(),
        });
    }
    let matrix = l.solve(&(s * &l.matrix))?;
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(LiftedMap {
        matrix,
        reproduces_constants: reproduces_constants(s),
    })
}

/// (G, v) with M = (G 0; v 1).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStructure {
    pub g: DMatrix<f64>,
    pub v: DVector<f64>,
    pub g_norm: f64,
    /// Largest deviation of the last column from (0,…,0,1).
    pub last_column_error: f64,
}

pub fn block_structure(m: &LiftedMap) -> Result<BlockStructure> {
    if !m.reproduces_constants {
        return Err(Error::ConstantsNotReproduced);
    }
    let n = m.matrix.nrows();
    let last_column_error = (0..n)
        .map(|i| {
            let want = if i + 1 == n { 1.0 } else { 0.0 };
            (m.matrix[(i, n - 1)] - want).abs()
        })
        .fold(0.0, f64::max);
    let g = m.matrix.view((0, 0), (n - 1, n - 1)).into_owned();
    let v = DVector::from_iterator(n - 1, m.matrix.row(n - 1).iter().take(n - 1).copied());
    let g_norm = spectral_norm(&g);
    Ok(BlockStructure {
        g,
        v,
        g_norm,
        last_column_error,
    })
}

/// A finite word over {1, 2}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexWord(Vec<u8>);

impl IndexWord {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if let Some(d) = digits.iter().find(|&&d| d != 1 && d != 2) {
            return Err(Error::InvalidParameter(format!("word digit {d} not in {{1, 2}}")));
        }
        Ok(IndexWord(digits))
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Σ (i_k − 1)·2^{−k}.
pub fn word_parameter(w: &IndexWord) -> f64 {
    w.0.iter()
        .enumerate()
        .map(|(k, &d)| f64::from(d - 1) * 0.5f64.powi(k as i32 + 1))
        .sum()
}

/// Limit point estimate for a word: the mean row of
/// S^[K]_{i_K}⋯S^[1]_{i_1}·p⁰ and the diameter of those rows.
#[derive(Debug, Clone, PartialEq)]
pub struct WordLimit {
    pub point: Vec<f64>,
    pub spread: f64,
}

pub fn word_limit(masks: &MaskSequence, w: &IndexWord, p0: &PointSet) -> Result<WordLimit> {
    if w.is_empty() {
        return Err(Error::InvalidParameter("word must have length >= 1".into()));
    }
    let n = p0.len();
    let mut p = DMatrix::from_row_slice(n, p0.dim(), p0.as_flat());
    for (k, &d) in w.0.iter().enumerate() {
        let s = slice_matrices(&masks.mask(k + 1), n)?;
        p = s.get(d) * p;
    }
    let rows = matrix_rows(&p);
    let point = (0..p.ncols()).map(|c| p.column(c).mean()).collect();
    Ok(WordLimit {
        point,
        spread: diameter(&rows),
    })
}

/// First m coordinates of every point, duplicates removed.
pub fn project(a: &PointSet, m: usize) -> Result<PointSet> {
    Ok(a.truncate_dim(m)?.dedup_exact())
}

/// Rows r of a basis attractor mapped to r·H⁻¹·p⁰ in ℝᵐ.
pub fn attractor_from_basis(hinf: &PointSet, h: &LiftMatrix, p0: &PointSet) -> Result<PointSet> {
    if hinf.dim() != h.n() {
        return Err(Error::DimensionMismatch {
            expected: h.n(),
            found: hinf.dim(),
        });
    }
    if p0.len() != h.n() {
        return Err(Error::DimensionMismatch {
            expected: h.n(),
            found: p0.len(),
        });
    }
    let x = h.solve(&DMatrix::from_row_slice(p0.len(), p0.dim(), p0.as_flat()))?;
    let rows = DMatrix::from_row_slice(hinf.len(), hinf.dim(), hinf.as_flat());
    Ok(matrix_rows(&(rows * x)).dedup_exact())
}

/// A mask sequence together with a lift basis: the level-k maps
/// f_{r,k}(A) = A·L⁻¹S_r^[k]L.
#[derive(Debug, Clone)]
pub struct SubdivisionLift {
    masks: MaskSequence,
    lift: Arc<LiftMatrix>,
}

impl SubdivisionLift {
    pub fn new(masks: MaskSequence, lift: LiftMatrix) -> Result<Self> {
        // slice existence depends only on the support size, shared by all levels
        slice_matrices(&masks.mask(1), lift.n())?;
        Ok(SubdivisionLift {
            masks,
            lift: Arc::new(lift),
        })
    }

    pub fn n(&self) -> usize {
        self.lift.n()
    }

    pub fn masks(&self) -> &MaskSequence {
        &self.masks
    }

    pub fn lift_matrix(&self) -> &LiftMatrix {
        &self.lift
    }

    pub fn slices(&self, k: usize) -> SliceMatrices {
        slice_matrices(&self.masks.mask(k), self.n()).expect("checked at construction")
    }

    pub fn lifted(&self, k: usize) -> [LiftedMap; 2] {
        let s = self.slices(k);
        [1u8, 2].map(|r| lift(s.get(r), &self.lift).expect("lift matrix is nonsingular"))
    }

    pub fn system(&self, k: usize) -> FunctionSystem {
        let maps = self.lifted(k).iter().map(LiftedMap::to_affine).collect();
        FunctionSystem::new(maps, format!("{}[{k}]", self.masks.label())).expect("two maps")
    }

    /// max_r Lipschitz constant of the level-k lifted maps.
    pub fn factor(&self, k: usize) -> f64 {
        self.lifted(k).iter().map(LiftedMap::lipschitz).fold(0.0, f64::max)
    }

    /// max_r ρ(G_r^[k]): the largest modulus among the non-unit eigenvalues
    /// of the level-k slices. Independent of the lift basis.
    pub fn spectral_factor(&self, k: usize) -> Result<f64> {
        let lifted = self.lifted(k);
        let mut mu = 0.0f64;
        for m in &lifted {
            mu = mu.max(spectral_radius(&block_structure(m)?.g));
        }
        Ok(mu)
    }

    /// Largest ‖G^[a+ℓ−1]_{i_ℓ}⋯G^[a]_{i_1}‖₂ over all words of length ℓ.
    pub fn block_factor(&self, start: usize, ell: usize) -> Result<f64> {
        if ell == 0 {
            return Ok(1.0);
        }
        let gs: Vec<[DMatrix<f64>; 2]> = (start..start + ell)
            .map(|k| {
                let l = self.lifted(k);
                Ok([block_structure(&l[0])?.g, block_structure(&l[1])?.g])
            })
            .collect::<Result<_>>()?;
        if ell <= MAX_EXACT_WORD_LEN {
            let mut products = vec![DMatrix::<f64>::identity(self.n() - 1, self.n() - 1)];
            for pair in &gs {
                products = products
                    .par_iter()
                    .flat_map_iter(|p| [&pair[0] * p, &pair[1] * p])
                    .collect();
            }
            Ok(products.par_iter().map(spectral_norm).reduce(|| 0.0, f64::max))
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let words: Vec<u64> = (0..1usize << MAX_EXACT_WORD_LEN)
                .map(|_| rng.next_u64())
                .collect();
            Ok(words
                .par_iter()
                .map(|&bits| {
                    let mut p = DMatrix::<f64>::identity(self.n() - 1, self.n() - 1);
                    for (i, pair) in gs.iter().enumerate() {
                        p = &pair[((bits >> (i % 64)) & 1) as usize] * p;
                    }
                    spectral_norm(&p)
                })
                .reduce(|| 0.0, f64::max))
        }
    }

    /// Block factors for ℓ = 1..=max_ell starting at level `start`.
    pub fn composition_search(&self, start: usize, max_ell: usize) -> Result<CompositionSearch> {
        let mut factors = Vec::with_capacity(max_ell);
        let mut certified = None;
        for ell in 1..=max_ell {
            let f = self.block_factor(start, ell)?;
            factors.push(f);
            if f < 1.0 {
                certified = Some(ell);
                break;
            }
        }
        Ok(CompositionSearch {
            start,
            factors,
            certified_length: certified,
        })
    }

    pub fn schedule(&self) -> SfsSchedule {
        let this = self.clone();
        let fac = self.clone();
        SfsSchedule::new(self.n(), self.masks.label().to_string(), move |k| {
            Arc::new(this.system(k))
        })
        .with_factor(move |k| fac.factor(k))
    }
}

/// Result of searching for a contractive ℓ-fold composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionSearch {
    pub start: usize,
    /// factors[ℓ−1] = max over words of length ℓ.
    pub factors: Vec<f64>,
    /// Smallest ℓ whose factor is below 1.
    pub certified_length: Option<usize>,
}

/// Level-k maps x ↦ (M_r^[k])ᵀx on ℝⁿ as a schedule.
pub fn sfs_from_subdivision(masks: &MaskSequence, l: &LiftMatrix, n: usize) -> Result<SfsSchedule> {
    if l.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: l.n(),
        });
    }
    Ok(SubdivisionLift::new(masks.clone(), l.clone())?.schedule())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_sets::hausdorff;
    use crate::subdivision::{subdivide_levels, Mask};

    fn cubic() -> MaskSequence {
        MaskSequence::constant(Mask::new(0, vec![0.125, 0.5, 0.75, 0.5, 0.125]).unwrap())
    }

    fn polygon() -> PointSet {
        PointSet::from_points([[0.0, 0.0], [1.0, 2.0], [2.0, -1.0], [3.0, 1.0], [4.0, 0.0]]).unwrap()
    }

    #[test]
    fn printed_fourpoint_p() {
        let p0 = PointSet::from_points([[0.0, 2.0], [1.0, 1.0], [2.0, 1.0], [3.0, 2.0], [2.0, 4.0], [1.0, 4.0]])
            .unwrap();
        let p = build_p_matrix(&p0).unwrap();
        let want = DMatrix::from_row_slice(
            6,
            6,
            &[
                0., 2., 1., 0., 0., 1., //
                1., 1., 0., 1., 0., 1., //
                2., 1., 0., 0., 1., 1., //
                3., 2., 0., 0., 0., 1., //
                2., 4., 0., 0., 0., 1., //
                1., 4., 0., 0., 0., 1.,
            ],
        );
        assert_eq!(p.matrix(), &want);
        assert_eq!(p.kind(), LiftKind::P);
    }

    #[test]
    fn cubic_p_pattern() {
        let p = build_p_matrix(&polygon()).unwrap();
        let m = p.matrix();
        assert_eq!(m.row(0).iter().copied().collect::<Vec<_>>(), vec![0., 0., 1., 0., 1.]);
        assert_eq!(m.row(1).iter().copied().collect::<Vec<_>>(), vec![1., 2., 0., 1., 1.]);
        assert_eq!(m.row(4).iter().copied().collect::<Vec<_>>(), vec![4., 0., 0., 0., 1.]);
    }

    #[test]
    fn collinear_points_rejected() {
        let line = PointSet::from_points((0..5).map(|i| [i as f64, 2.0 * i as f64])).unwrap();
        assert!(matches!(
            build_p_matrix(&line),
            Err(Error::DegenerateControlPoints { .. })
        ));
    }

    #[test]
    fn h_matrix() {
        let h = build_h_matrix(3).unwrap();
        assert_eq!(
            h.matrix(),
            &DMatrix::from_row_slice(3, 3, &[1., 0., 1., 0., 1., 1., 0., 0., 1.])
        );
        let id = h.solve(h.matrix()).unwrap();
        assert!((id - DMatrix::<f64>::identity(3, 3)).amax() < 1e-14);
        let h7 = build_h_matrix(7).unwrap();
        assert!(h7.matrix().column(6).iter().all(|&x| x == 1.0));
        assert!(build_h_matrix(1).is_err());
    }

    #[test]
    fn lift_examples() {
        let h = build_h_matrix(5).unwrap();
        let id = lift(&DMatrix::identity(5, 5), &h).unwrap();
        assert!((id.matrix.clone() - DMatrix::<f64>::identity(5, 5)).amax() < 1e-14);
        let b = block_structure(&id).unwrap();
        assert!((b.g_norm - 1.0).abs() < 1e-12);
        assert!(b.v.amax() < 1e-14);

        let s = slice_matrices(&cubic().mask(1), 5).unwrap();
        let l1 = lift(&s.s1, &h).unwrap();
        assert!(l1.reproduces_constants);
        assert!(block_structure(&l1).unwrap().last_column_error < 1e-10);

        let half = slice_matrices(&Mask::new(0, vec![0.25, 0.25, 0.25, 0.25]).unwrap(), 5).unwrap();
        let lh = lift(&half.s1, &h).unwrap();
        assert!(!lh.reproduces_constants);
        assert!(matches!(block_structure(&lh), Err(Error::ConstantsNotReproduced)));
    }

    #[test]
    fn cubic_eight_fold_compositions_contract() {
        let sl = SubdivisionLift::new(cubic(), build_h_matrix(5).unwrap()).unwrap();
        let one = sl.block_factor(1, 1).unwrap();
        assert!(one >= 1.0, "single maps are not contractive: {one}");
        assert!(sl.block_factor(1, 8).unwrap() < 1.0);
        let search = sl.composition_search(1, 10).unwrap();
        assert!(search.certified_length.unwrap() <= 8);
    }

    #[test]
    fn word_parameters() {
        assert_eq!(word_parameter(&IndexWord::new(vec![1, 1, 1]).unwrap()), 0.0);
        assert_eq!(word_parameter(&IndexWord::new(vec![2]).unwrap()), 0.5);
        let w = IndexWord::new(vec![2; 20]).unwrap();
        assert_eq!(word_parameter(&w), 1.0 - 2f64.powi(-20));
        assert!(IndexWord::new(vec![0]).is_err());
    }

    #[test]
    fn word_limits() {
        let p0 = polygon();
        let w = IndexWord::new(vec![1; 12]).unwrap();
        let lim = word_limit(&cubic(), &w, &p0).unwrap();
        // spread scales with the polygon; relative to its diameter
        assert!(lim.spread / diameter(&p0) < 1e-3, "spread {}", lim.spread);
        let longer = word_limit(&cubic(), &IndexWord::new(vec![1; 13]).unwrap(), &p0).unwrap();
        assert!(longer.spread < 1e-3);
        let dense = subdivide_levels(&cubic(), &p0, 12).unwrap();
        let first = dense.point(0);
        assert!(((lim.point[0] - first[0]).powi(2) + (lim.point[1] - first[1]).powi(2)).sqrt() < 1e-3);

        let one = word_limit(&cubic(), &IndexWord::new(vec![2]).unwrap(), &p0).unwrap();
        let s = slice_matrices(&cubic().mask(1), 5).unwrap();
        let rows = matrix_rows(&(&s.s2 * DMatrix::from_row_slice(5, 2, p0.as_flat())));
        assert_eq!(one.spread, diameter(&rows));
    }

    #[test]
    fn projection() {
        let p = build_p_matrix(&polygon()).unwrap();
        let proj = project(&p.rows(), 2).unwrap();
        assert_eq!(proj, polygon());
        let r = p.rows();
        assert_eq!(project(&r, 5).unwrap(), r);
    }

    #[test]
    fn basis_attractor_reuse() {
        let h = build_h_matrix(5).unwrap();
        let hinf = h.rows();
        let first_cols = project(&h.rows(), 2).unwrap();
        // p0 equal to H's first two columns gives back H's projection
        let all_rows = matrix_rows(&h.matrix().columns(0, 2).into_owned());
        let back = attractor_from_basis(&hinf, &h, &all_rows).unwrap();
        assert!(hausdorff(&back, &first_cols).unwrap() < 1e-14);
        // depth 0: H⁻¹ applied to H's own rows returns p0
        let p0 = polygon();
        let init = attractor_from_basis(&hinf, &h, &p0).unwrap();
        assert!(hausdorff(&init, &p0).unwrap() < 1e-14);
    }

    #[test]
    fn row_and_column_conventions_agree() {
        let p = build_p_matrix(&polygon()).unwrap();
        let s = slice_matrices(&cubic().mask(1), 5).unwrap();
        let lifted = lift(&s.s2, &p).unwrap();
        let f = lifted.to_affine();
        let r = DMatrix::from_row_slice(1, 5, &[0.3, -1.0, 2.0, 0.5, 1.0]);
        let row_action = &r * &lifted.matrix;
        let col_action = f.apply(r.as_slice());
        for c in 0..5 {
            assert!((row_action[(0, c)] - col_action[c]).abs() < 1e-14);
        }
    }

    #[test]
    fn descriptor() {
        let d = LiftDescriptor::from_json_str(r#"{"n": 4, "m": 0, "p0": []}"#).unwrap();
        assert_eq!(d.build().unwrap(), build_h_matrix(4).unwrap());
        let d = LiftDescriptor::from_json_str(
            r#"{"n": 5, "m": 2, "p0": [[0,0],[1,2],[2,-1],[3,1],[4,0]], "fill": "h-pattern"}"#,
        )
        .unwrap();
        assert_eq!(d.build().unwrap(), build_p_matrix(&polygon()).unwrap());
        let bad = LiftDescriptor::from_json_str(r#"{"n": 5, "m": 2, "p0": [[0,0]], "fill": "h-pattern"}"#).unwrap();
        assert!(bad.build().is_err());
        let fill = LiftDescriptor::from_json_str(r#"{"n": 3, "m": 0, "fill": "random"}"#).unwrap();
        assert!(fill.build().is_err());
    }
}
