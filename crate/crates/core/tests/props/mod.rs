//! Property checks driven by explicit proptest runners so that both the
//! `properties` test target and the acceptance runner can call them.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use sfs_core::catalog::{
    cubic_bspline_mask, default_polygon, exponential_spline_mask, fourpoint_mask, fourpoint_polygon,
};
use sfs_core::function_systems::{
    ball_constants, contraction_factor, hutchinson_apply, invariant_ball, lipschitz, AffineMap, FunctionSystem,
};
use sfs_core::metric_sets::{euclidean, hausdorff, PointSet};
use sfs_core::sfs_bridge::{block_structure, build_p_matrix, lift};
use sfs_core::subdivision::{check_constant_reproduction, min_slice_size, refine, slice_matrices, Mask};
use sfs_core::Point;

pub const METRIC_CASES: u32 = 1000;
pub const CONTRACTION_CASES: u32 = 500;
pub const BALL_CASES: u32 = 200;
pub const SUBDIVISION_CASES: u32 = 256;

fn runner(cases: u32) -> TestRunner {
    // fixed seed: the acceptance output must not depend on the run
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    )
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn point_set(dim: usize, max_len: usize) -> impl Strategy<Value = PointSet> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), 1..=max_len)
        .prop_map(|pts| PointSet::from_points(pts).unwrap())
}

fn three_sets() -> impl Strategy<Value = (PointSet, PointSet, PointSet)> {
    (1usize..=3).prop_flat_map(|d| (point_set(d, 12), point_set(d, 12), point_set(d, 12)))
}

fn planar_system() -> impl Strategy<Value = FunctionSystem> {
    let map = (prop::collection::vec(-0.8f64..0.8, 4), prop::collection::vec(-3.0f64..3.0, 2))
        .prop_map(|(a, b)| AffineMap::new(2, a, b).unwrap());
    prop::collection::vec(map, 1..=3).prop_map(|maps| FunctionSystem::new(maps, "random").unwrap())
}

/// A mask with Σ even = Σ odd = 1 built from arbitrary positive weights.
fn reproducing_mask() -> impl Strategy<Value = Mask> {
    (-2i64..=2, prop::collection::vec(0.05f64..1.0, 3..=7)).prop_map(|(offset, raw)| {
        let parity = |r: usize| (offset + r as i64).rem_euclid(2);
        let even: f64 = raw.iter().enumerate().filter(|(r, _)| parity(*r) == 0).map(|(_, c)| c).sum();
        let odd: f64 = raw.iter().enumerate().filter(|(r, _)| parity(*r) == 1).map(|(_, c)| c).sum();
        let coeffs = raw
            .iter()
            .enumerate()
            .map(|(r, c)| if parity(r) == 0 { c / even } else { c / odd })
            .collect();
        Mask::new(offset, coeffs).unwrap()
    })
}

/// Identity, symmetry, triangle inequality, and h = 0 only for equal sets.
pub fn hausdorff_axioms() -> Result<(), String> {
    run(METRIC_CASES, three_sets(), |(a, b, c)| {
        let ab = hausdorff(&a, &b).unwrap();
        let ba = hausdorff(&b, &a).unwrap();
        let ac = hausdorff(&a, &c).unwrap();
        let cb = hausdorff(&c, &b).unwrap();
        prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, ba);
        prop_assert!(ab <= ac + cb + 1e-12 * (1.0 + ab));
        let same_points = a.points().all(|p| b.points().any(|q| q == p))
            && b.points().all(|q| a.points().any(|p| p == q));
        prop_assert_eq!(ab == 0.0, same_points);
        Ok(())
    })
}

/// h(𝓕A, 𝓕B) ≤ L_𝓕·h(A, B).
pub fn hutchinson_contraction() -> Result<(), String> {
    run(
        CONTRACTION_CASES,
        (planar_system(), point_set(2, 10), point_set(2, 10)),
        |(f, a, b)| {
            let l = contraction_factor(&f);
            let fa = hutchinson_apply(&f, &a, 0.0).unwrap();
            let fb = hutchinson_apply(&f, &b, 0.0).unwrap();
            let lhs = hausdorff(&fa, &fb).unwrap();
            let rhs = l * hausdorff(&a, &b).unwrap();
            prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs), "{} > {}", lhs, rhs);
            Ok(())
        },
    )
}

/// Maps with ‖A‖ ≤ 0.9 send B(q, M/(1−μ)) into itself.
pub fn invariant_ball_containment() -> Result<(), String> {
    let family = prop::collection::vec(
        (
            prop::collection::vec(-1.0f64..1.0, 4),
            prop::collection::vec(-5.0f64..5.0, 2),
            0.0f64..=0.9,
        ),
        1..=3,
    );
    let center = prop::collection::vec(-5.0f64..5.0, 2);
    let samples = prop::collection::vec((0.0f64..=1.0, 0.0f64..std::f64::consts::TAU), 20);
    run(BALL_CASES, (family, center, samples), |(maps, q, samples)| {
        let maps: Vec<AffineMap> = maps
            .into_iter()
            .map(|(a, b, target)| {
                let norm = lipschitz(&AffineMap::new(2, a.clone(), b.clone()).unwrap());
                let scale = if norm > 0.0 { target / norm } else { 0.0 };
                AffineMap::new(2, a.iter().map(|x| x * scale).collect(), b).unwrap()
            })
            .collect();
        let f = FunctionSystem::new(maps, "random").unwrap();
        let q = Point::new(q).unwrap();
        let (mu, m) = ball_constants(&f, &q).unwrap();
        prop_assert!(mu <= 0.9 + 1e-12);
        let ball = invariant_ball(q.clone(), mu, m).unwrap();
        for (t, angle) in samples {
            // t = 1 lands on the boundary
            let r = ball.radius * t.sqrt();
            let x = [q.coords()[0] + r * angle.cos(), q.coords()[1] + r * angle.sin()];
            for map in f.maps() {
                let y = map.apply(&x);
                prop_assert!(
                    ball.contains(&y, 1e-9),
                    "image at distance {} outside radius {}",
                    euclidean(&y, q.coords()),
                    ball.radius
                );
            }
        }
        Ok(())
    })
}

/// S(αp + βq) = αS(p) + βS(q).
pub fn refine_linearity() -> Result<(), String> {
    let data = (
        prop::collection::vec(-5.0f64..5.0, 48),
        prop::collection::vec(-5.0f64..5.0, 48),
        8usize..=24,
    );
    run(
        SUBDIVISION_CASES,
        (data, -3.0f64..3.0, -3.0f64..3.0, reproducing_mask()),
        |((p, q, n), alpha, beta, mask)| {
            let p = PointSet::from_flat(2, p[..2 * n].to_vec()).unwrap();
            let q = PointSet::from_flat(2, q[..2 * n].to_vec()).unwrap();
            let combo = PointSet::from_flat(
                2,
                p.as_flat().iter().zip(q.as_flat()).map(|(x, y)| alpha * x + beta * y).collect(),
            )
            .unwrap();
            let rp = refine(&mask, &p).unwrap();
            let rq = refine(&mask, &q).unwrap();
            let rc = refine(&mask, &combo).unwrap();
            prop_assert_eq!(rc.len(), rp.len());
            for ((c, x), y) in rc.as_flat().iter().zip(rp.as_flat()).zip(rq.as_flat()) {
                let want = alpha * x + beta * y;
                prop_assert!((c - want).abs() <= 1e-10 * (1.0 + want.abs()));
            }
            Ok(())
        },
    )
}

/// S_r·𝟙 = 𝟙 for masks reproducing constants.
pub fn slices_fix_constants() -> Result<(), String> {
    run(SUBDIVISION_CASES, (reproducing_mask(), 0usize..4), |(mask, extra)| {
        prop_assert!(check_constant_reproduction(&mask).holds);
        let n = min_slice_size(&mask) + extra;
        let s = slice_matrices(&mask, n).unwrap();
        for r in [1u8, 2] {
            for row in s.get(r).row_iter() {
                prop_assert!((row.sum() - 1.0).abs() <= 1e-12);
            }
        }
        Ok(())
    })
}

/// S₁p and S₂p are the first and last n rows of one refinement of p.
pub fn slices_match_refinement() -> Result<(), String> {
    run(
        SUBDIVISION_CASES,
        (reproducing_mask(), 0usize..4, prop::collection::vec(-5.0f64..5.0, 40)),
        |(mask, extra, seed)| {
            let n = min_slice_size(&mask) + extra;
            let p = PointSet::from_flat(2, seed[..2 * n].to_vec()).unwrap();
            let refined = refine(&mask, &p).unwrap();
            let s = slice_matrices(&mask, n).unwrap();
            let pm = nalgebra::DMatrix::from_row_slice(n, 2, p.as_flat());
            let first = &s.s1 * &pm;
            let last = &s.s2 * &pm;
            let offset = refined.len() - n;
            for i in 0..n {
                for c in 0..2 {
                    prop_assert!((first[(i, c)] - refined.point(i)[c]).abs() <= 1e-12);
                    prop_assert!((last[(i, c)] - refined.point(offset + i)[c]).abs() <= 1e-12);
                }
            }
            Ok(())
        },
    )
}

fn last_column(mask: &Mask, polygon: &PointSet) -> Result<(), TestCaseError> {
    prop_assert!(check_constant_reproduction(mask).holds);
    let l = build_p_matrix(polygon).unwrap();
    let s = slice_matrices(mask, polygon.len()).unwrap();
    for r in [1u8, 2] {
        let m = lift(s.get(r), &l).unwrap();
        let block = block_structure(&m).unwrap();
        prop_assert!(block.last_column_error <= 1e-10, "last column off by {}", block.last_column_error);
    }
    Ok(())
}

/// Lifted maps of every constants-reproducing catalog mask have last
/// column (0, …, 0, 1)ᵀ.
pub fn lifted_last_column() -> Result<(), String> {
    run(
        SUBDIVISION_CASES,
        (1usize..200, -0.5f64..0.5, 0usize..3, -4.0f64..4.0),
        |(level, w, n_extra, lambda)| {
            let polygon = default_polygon(5 + n_extra);
            last_column(&cubic_bspline_mask(), &polygon)?;
            last_column(&exponential_spline_mask(lambda, level), &polygon)?;
            last_column(&fourpoint_mask(w), &fourpoint_polygon())
        },
    )
}

/// Every suite with its name.
pub fn all() -> Vec<(&'static str, fn() -> Result<(), String>)> {
    vec![
        ("hausdorff metric axioms", hausdorff_axioms),
        ("hutchinson contraction", hutchinson_contraction),
        ("invariant ball", invariant_ball_containment),
        ("refine linearity", refine_linearity),
        ("constant reproduction", slices_fix_constants),
        ("slices vs refinement", slices_match_refinement),
        ("lifted last column", lifted_last_column),
    ]
}
