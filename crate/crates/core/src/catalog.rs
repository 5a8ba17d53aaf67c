//! Named masks, function systems and schedules, addressable as
//! `name:key=value,key=value` strings.
//!
//! Random 4-point weights use ChaCha8 seeded with `seed_from_u64(seed)`.
//! Draw k (1-based) is the k-th `u64` of the stream, read after
//! `set_word_pos(2·(k−1))`, so any level can be evaluated alone:
//! u = (x >> 11)·2⁻⁵³ ∈ [0, 1) and w_k = center + b·(2u − 1).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function_systems::{AffineMap, FunctionSystem, SfsSchedule};
use crate::metric_sets::PointSet;
use crate::sfs_bridge::{build_p_matrix, LiftMatrix, SubdivisionLift};
use crate::subdivision::{Mask, MaskSequence};

pub fn cubic_bspline_mask() -> Mask {
    Mask::new(0, vec![0.125, 0.5, 0.75, 0.5, 0.125]).expect("constant mask")
}

/// Level-k coefficients of b_k(1+z)(1+c_k z)³ with c_k = exp(λ·2^{−k−1})
/// and b_k = 1/(1+c_k)³.
pub fn exponential_spline_mask(lambda: f64, k: usize) -> Mask {
    let c = (lambda * 0.5f64.powi(k as i32 + 1)).exp();
    let b = 1.0 / (1.0 + c).powi(3);
    let (c2, c3) = (c * c, c * c * c);
    Mask::with_support(
        0,
        vec![b, b * (1.0 + 3.0 * c), b * (3.0 * c + 3.0 * c2), b * (3.0 * c2 + c3), b * c3],
    )
    .expect("finite coefficients")
}

pub fn exponential_spline_masks(lambda: f64) -> Result<MaskSequence> {
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter("lambda must be finite".into()));
    }
    Ok(MaskSequence::new(format!("expspline(lambda={lambda})"), 5, move |k| {
        exponential_spline_mask(lambda, k)
    }))
}

/// w_k for the random 4-point family.
pub fn fourpoint_weight(b: f64, seed: u64, center: f64, k: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * (k.max(1) as u128 - 1));
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    center + b * (2.0 * u - 1.0)
}

/// −w(z^{−3}+z³) + (1/2+w)(z^{−1}+z) + 1 on the fixed support −3..=3.
pub fn fourpoint_mask(w: f64) -> Mask {
    Mask::with_support(-3, vec![-w, 0.0, 0.5 + w, 1.0, 0.5 + w, 0.0, -w]).expect("finite weight")
}

pub fn random_fourpoint_masks(b: f64, seed: u64) -> Result<MaskSequence> {
    random_fourpoint_masks_centered(b, seed, 0.0)
}

/// w_k uniform in [center − b, center + b].
pub fn random_fourpoint_masks_centered(b: f64, seed: u64, center: f64) -> Result<MaskSequence> {
    if !(b >= 0.0) || !b.is_finite() || !center.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need finite b >= 0 and finite center, got b={b}, center={center}"
        )));
    }
    Ok(MaskSequence::new(
        format!("random4pt(b={b},seed={seed},center={center})"),
        7,
        move |k| fourpoint_mask(fourpoint_weight(b, seed, center, k)),
    ))
}

/// Four similitudes of ratio 1/3 taking [0,1]×{0} onto the Koch generator.
pub fn koch_ifs() -> FunctionSystem {
    let third = 1.0 / 3.0;
    let maps = vec![
        AffineMap::similitude(third, 0.0, [0.0, 0.0]),
        AffineMap::similitude(third, PI / 3.0, [third, 0.0]),
        AffineMap::similitude(third, -PI / 3.0, [0.5, 3f64.sqrt() / 6.0]),
        AffineMap::similitude(third, 0.0, [2.0 * third, 0.0]),
    ];
    FunctionSystem::new(maps.into_iter().collect::<Result<_>>().expect("finite"), "koch")
        .expect("four planar maps")
}

pub fn cantor_ifs() -> FunctionSystem {
    FunctionSystem::new(
        vec![
            AffineMap::scalar(1.0 / 3.0, 0.0).expect("finite"),
            AffineMap::scalar(1.0 / 3.0, 2.0 / 3.0).expect("finite"),
        ],
        "cantor",
    )
    .expect("two maps")
}

pub fn dyadic_ifs() -> FunctionSystem {
    FunctionSystem::new(
        vec![
            AffineMap::scalar(0.5, 0.0).expect("finite"),
            AffineMap::scalar(0.5, 0.5).expect("finite"),
        ],
        "dyadic",
    )
    .expect("two maps")
}

/// Planar polygon (j, y_j) with y cycling through 0, 2, −1, 1, 0.
pub fn default_polygon(n: usize) -> PointSet {
    const Y: [f64; 5] = [0.0, 2.0, -1.0, 1.0, 0.0];
    PointSet::from_points((0..n).map(|j| [j as f64, Y[j % 5]])).expect("n >= 1")
}

/// Control polygon used with the 4-point family.
pub fn fourpoint_polygon() -> PointSet {
    PointSet::from_points([[0.0, 2.0], [1.0, 1.0], [2.0, 1.0], [3.0, 2.0], [2.0, 4.0], [1.0, 4.0]])
        .expect("constant polygon")
}

/// Lift of the cubic B-spline slices with the default polygon's P matrix.
pub fn cubic_spline_lift(n: usize) -> Result<SubdivisionLift> {
    if n < 5 {
        return Err(Error::InvalidParameter(format!("cubic lift needs n >= 5, got {n}")));
    }
    SubdivisionLift::new(
        MaskSequence::constant(cubic_bspline_mask()),
        build_p_matrix(&default_polygon(n))?,
    )
}

/// Two-map lifted cubic system on ℝⁿ.
pub fn cubic_spline_fs(n: usize) -> Result<FunctionSystem> {
    Ok(cubic_spline_lift(n)?.system(1))
}

/// Planar reduction of the lifted cubic maps at n = 5: a point (x, y) is
/// embedded as the row (x, y, 0, 0, 1), mapped by M_r and truncated back to
/// its first two coordinates.
pub fn planar_cubic_pair() -> FunctionSystem {
    let lift = cubic_spline_lift(5).expect("default polygon is generic");
    let maps = lift
        .lifted(1)
        .iter()
        .map(|m| {
            let a = m.matrix.view((0, 0), (2, 2)).transpose();
            let b = [m.matrix[(4, 0)], m.matrix[(4, 1)]];
            AffineMap::from_matrix(&a.into_owned(), &b).expect("finite")
        })
        .collect();
    FunctionSystem::new(maps, "planar-cubic").expect("two maps")
}

/// `block` levels of the planar cubic pair, then `block` levels of Koch,
/// repeated.
pub fn hidden_fractal_schedule(block: usize) -> Result<SfsSchedule> {
    if block == 0 {
        return Err(Error::InvalidParameter("block must be >= 1".into()));
    }
    SfsSchedule::periodic(vec![planar_cubic_pair(), koch_ifs()], vec![block, block])
}

/// T_odd = x/2, T_even = x/2 + c.
pub fn alternating_halves(c: f64) -> Result<SfsSchedule> {
    let odd = FunctionSystem::new(vec![AffineMap::scalar(0.5, 0.0)?], "x/2")?;
    let even = FunctionSystem::new(vec![AffineMap::scalar(0.5, c)?], format!("x/2+{c}"))?;
    SfsSchedule::periodic(vec![odd, even], vec![1, 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Mask,
    MaskSequence,
    FunctionSystem,
    Schedule,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub integer: bool,
    pub help: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub kind: EntryKind,
    pub params: Vec<ParamSpec>,
    pub help: &'static str,
}

fn p(name: &'static str, default: f64, help: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        default,
        integer: false,
        help,
    }
}

fn int(name: &'static str, default: f64, help: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        default,
        integer: true,
        help,
    }
}

pub fn entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "cubic",
            kind: EntryKind::Mask,
            params: vec![int("n", 5.0, "slice size")],
            help: "cubic B-spline mask (1,4,6,4,1)/8",
        },
        CatalogEntry {
            name: "expspline",
            kind: EntryKind::MaskSequence,
            params: vec![p("lambda", 3.0, "exponent parameter"), int("n", 5.0, "slice size")],
            help: "non-stationary exponential-spline masks",
        },
        CatalogEntry {
            name: "random4pt",
            kind: EntryKind::MaskSequence,
            params: vec![
                p("b", 0.4, "half-width of the weight interval"),
                int("seed", 7.0, "ChaCha8 seed"),
                p("center", 0.0, "center of the weight interval"),
            ],
            help: "4-point masks with seeded uniform weights in [center-b, center+b], n = 6",
        },
        CatalogEntry {
            name: "koch",
            kind: EntryKind::FunctionSystem,
            params: vec![],
            help: "Koch curve, four similitudes of ratio 1/3",
        },
        CatalogEntry {
            name: "cantor",
            kind: EntryKind::FunctionSystem,
            params: vec![],
            help: "middle-thirds Cantor set {x/3, x/3+2/3}",
        },
        CatalogEntry {
            name: "dyadic",
            kind: EntryKind::FunctionSystem,
            params: vec![],
            help: "{x/2, x/2+1/2}, attractor [0,1]",
        },
        CatalogEntry {
            name: "cubic-fs",
            kind: EntryKind::FunctionSystem,
            params: vec![int("n", 5.0, "lift size")],
            help: "lifted cubic B-spline pair on R^n with the default polygon",
        },
        CatalogEntry {
            name: "hidden",
            kind: EntryKind::Schedule,
            params: vec![int("block", 5.0, "levels per block")],
            help: "alternating blocks of the planar cubic pair and Koch maps",
        },
        CatalogEntry {
            name: "halves",
            kind: EntryKind::Schedule,
            params: vec![p("c", 3.0, "shift of the even maps")],
            help: "alternating x/2 and x/2+c",
        },
    ]
}

/// A parsed `name:key=value,…` reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRef {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl SchemeRef {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (text, None),
        };
        if name.is_empty() {
            return Err(Error::Parse("empty scheme name".into()));
        }
        let mut params = BTreeMap::new();
        if let Some(rest) = rest {
            for part in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("expected key=value, got `{part}`")))?;
                let (k, v) = (k.trim(), v.trim());
                if k.is_empty() || v.is_empty() {
                    return Err(Error::Parse(format!("expected key=value, got `{part}`")));
                }
                if params.insert(k.to_string(), v.to_string()).is_some() {
                    return Err(Error::Parse(format!("parameter `{k}` given twice")));
                }
            }
        }
        Ok(SchemeRef {
            name: name.to_string(),
            params,
        })
    }

    pub fn from_parts(name: &str, params: &BTreeMap<String, serde_json::Value>) -> Result<Self> {
        let params = params
            .iter()
            .map(|(k, v)| {
                let s = match v {
                    serde_json::Value::Number(n) => n.to_string(),
                    serde_json::Value::String(s) => s.clone(),
                    other => {
                        return Err(Error::Parse(format!("parameter `{k}` has unsupported value {other}")))
                    }
                };
                Ok((k.clone(), s))
            })
            .collect::<Result<_>>()?;
        Ok(SchemeRef {
            name: name.to_string(),
            params,
        })
    }
}

impl fmt::Display for SchemeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { ':' } else { ',' })?;
        }
        Ok(())
    }
}

/// Parameter values after defaults and validation.
struct Params {
    values: BTreeMap<&'static str, f64>,
}

impl Params {
    fn get(&self, name: &str) -> f64 {
        self.values[name]
    }

    fn usize(&self, name: &str) -> usize {
        self.values[name] as usize
    }
}

fn bind(entry: &CatalogEntry, r: &SchemeRef) -> Result<Params> {
    let mut values = BTreeMap::new();
    for param in &entry.params {
        let v = match r.params.get(param.name) {
            Some(text) => {
                let v: f64 = text.parse().map_err(|_| {
                    Error::Parse(format!("parameter `{}`: `{text}` is not a number", param.name))
                })?;
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(format!("parameter `{}` must be finite", param.name)));
                }
                if param.integer && (v < 0.0 || v.fract() != 0.0 || v > 2f64.powi(53)) {
                    return Err(Error::InvalidParameter(format!(
                        "parameter `{}` must be a nonnegative integer",
                        param.name
                    )));
                }
                v
            }
            None => param.default,
        };
        values.insert(param.name, v);
    }
    if let Some(k) = r.params.keys().find(|k| !entry.params.iter().any(|s| s.name == k.as_str())) {
        return Err(Error::InvalidParameter(format!(
            "`{}` takes no parameter `{k}`",
            entry.name
        )));
    }
    Ok(Params { values })
}

/// Largest lift size accepted from references.
pub const MAX_CATALOG_N: usize = 64;

/// A catalog reference resolved to something runnable.
#[derive(Debug, Clone)]
pub enum Resolved {
    /// A mask sequence with its lift; constant masks appear as constant
    /// sequences.
    Subdivision {
        lift: SubdivisionLift,
        polygon: PointSet,
    },
    System {
        system: FunctionSystem,
        /// Only some ℓ-fold composition contracts (lifted maps on ℝⁿ).
        eventually_contractive: bool,
        initial: PointSet,
        /// Coordinates kept when projecting for output.
        visible_dim: usize,
    },
    Schedule {
        schedule: SfsSchedule,
        initial: PointSet,
    },
}

impl Resolved {
    /// The schedule: constant for plain systems.
    pub fn schedule(&self) -> SfsSchedule {
        match self {
            Resolved::Subdivision { lift, .. } => lift.schedule(),
            Resolved::System { system, .. } => SfsSchedule::constant(system.clone()),
            Resolved::Schedule { schedule, .. } => schedule.clone(),
        }
    }

    /// Default start set: rows of the lift matrix, or the listed initial set.
    pub fn initial_set(&self) -> PointSet {
        match self {
            Resolved::Subdivision { lift, .. } => lift.lift_matrix().rows(),
            Resolved::System { initial, .. } | Resolved::Schedule { initial, .. } => initial.clone(),
        }
    }

    /// Dimension of the points shown to users: m for lifts.
    pub fn display_dim(&self) -> usize {
        match self {
            Resolved::Subdivision { polygon, .. } => polygon.dim(),
            Resolved::System { visible_dim, .. } => *visible_dim,
            Resolved::Schedule { schedule, .. } => schedule.dim(),
        }
    }
}

fn lift_for(masks: MaskSequence, polygon: PointSet) -> Result<Resolved> {
    let lift = SubdivisionLift::new(masks, build_p_matrix(&polygon)?)?;
    Ok(Resolved::Subdivision { lift, polygon })
}

fn check_n(n: usize) -> Result<usize> {
    if !(5..=MAX_CATALOG_N).contains(&n) {
        return Err(Error::InvalidParameter(format!("n must be in 5..={MAX_CATALOG_N}, got {n}")));
    }
    Ok(n)
}

pub fn resolve(r: &SchemeRef) -> Result<Resolved> {
    let list = entries();
    let entry = list
        .iter()
        .find(|e| e.name == r.name)
        .ok_or_else(|| Error::UnknownScheme(r.name.clone()))?;
    let ps = bind(entry, r)?;
    let segment = || PointSet::from_points([[0.0, 0.0], [1.0, 0.0]]).expect("constant set");
    match entry.name {
        "cubic" => {
            let n = check_n(ps.usize("n"))?;
            lift_for(MaskSequence::constant(cubic_bspline_mask()), default_polygon(n))
        }
        "expspline" => {
            let n = check_n(ps.usize("n"))?;
            lift_for(exponential_spline_masks(ps.get("lambda"))?, default_polygon(n))
        }
        "random4pt" => {
            let seed = ps.get("seed") as u64;
            let masks = random_fourpoint_masks_centered(ps.get("b"), seed, ps.get("center"))?;
            lift_for(masks, fourpoint_polygon())
        }
        "koch" => Ok(Resolved::System {
            system: koch_ifs(),
            eventually_contractive: false,
            initial: segment(),
            visible_dim: 2,
        }),
        "cantor" => Ok(Resolved::System {
            system: cantor_ifs(),
            eventually_contractive: false,
            initial: PointSet::from_scalars(&[0.0, 1.0]).expect("constant set"),
            visible_dim: 1,
        }),
        "dyadic" => Ok(Resolved::System {
            system: dyadic_ifs(),
            eventually_contractive: false,
            initial: PointSet::from_scalars(&[0.0]).expect("constant set"),
            visible_dim: 1,
        }),
        "cubic-fs" => {
            let n = check_n(ps.usize("n"))?;
            let lift = cubic_spline_lift(n)?;
            let system = FunctionSystem::new(lift.system(1).maps().to_vec(), format!("cubic-fs(n={n})"))?;
            Ok(Resolved::System {
                system,
                eventually_contractive: true,
                initial: lift.lift_matrix().rows(),
                visible_dim: 2,
            })
        }
        "hidden" => {
            let block = ps.usize("block");
            Ok(Resolved::Schedule {
                schedule: hidden_fractal_schedule(block)?,
                initial: segment(),
            })
        }
        "halves" => Ok(Resolved::Schedule {
            schedule: alternating_halves(ps.get("c"))?,
            initial: PointSet::from_scalars(&[0.0]).expect("constant set"),
        }),
        other => Err(Error::UnknownScheme(other.to_string())),
    }
}

/// Parses and resolves a reference string.
pub fn lookup(text: &str) -> Result<Resolved> {
    resolve(&SchemeRef::parse(text)?)
}

/// The lift basis for a resolved subdivision entry.
pub fn lift_matrix_of(r: &Resolved) -> Option<&LiftMatrix> {
    match r {
        Resolved::Subdivision { lift, .. } => Some(lift.lift_matrix()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_systems::{contraction_factor, iterate_fixed};
    use crate::metric_sets::hausdorff;
    use crate::subdivision::check_constant_reproduction;

    #[test]
    fn cubic_mask_facts() {
        let m = cubic_bspline_mask();
        assert_eq!(m.coeffs().iter().sum::<f64>(), 2.0);
        assert!(check_constant_reproduction(&m).holds);
    }

    #[test]
    fn exponential_masks() {
        let c1 = exponential_spline_mask(3.0, 1).coeffs()[4].cbrt() / exponential_spline_mask(3.0, 1).coeffs()[0].cbrt();
        assert!((c1 - 2.1170000166).abs() < 1e-9);
        let seq = exponential_spline_masks(3.0).unwrap();
        let cubic = cubic_bspline_mask();
        for k in 22..30 {
            assert!(seq.mask(k).max_difference(&cubic) < 1e-6);
        }
        let zero = exponential_spline_masks(0.0).unwrap();
        for k in 1..10 {
            assert_eq!(zero.mask(k), cubic);
        }
        for k in 1..10 {
            assert!(check_constant_reproduction(&seq.mask(k)).holds);
        }
    }

    #[test]
    fn fourpoint_family() {
        let classic = random_fourpoint_masks_centered(0.0, 1, 1.0 / 16.0).unwrap().mask(3);
        assert_eq!(
            classic.coeffs(),
            &[-1.0 / 16.0, 0.0, 9.0 / 16.0, 1.0, 9.0 / 16.0, 0.0, -1.0 / 16.0]
        );
        let seq = random_fourpoint_masks(0.4, 7).unwrap();
        for k in 1..50 {
            let m = seq.mask(k);
            assert_eq!((m.get(-2), m.get(0), m.get(2)), (0.0, 1.0, 0.0));
            assert!(check_constant_reproduction(&m).holds);
            assert!(m.get(-3).abs() <= 0.4);
        }
        // evaluation order does not matter
        let again = random_fourpoint_masks(0.4, 7).unwrap();
        assert_eq!(again.mask(9), seq.mask(9));
        assert_ne!(seq.mask(1), seq.mask(2));
        assert_ne!(random_fourpoint_masks(0.4, 8).unwrap().mask(1), seq.mask(1));
    }

    #[test]
    fn koch_facts() {
        let k = koch_ifs();
        assert!((contraction_factor(&k) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(k.maps()[0].apply(&[0.0, 0.0]), vec![0.0, 0.0]);
        let end = k.maps()[3].apply(&[1.0, 0.0]);
        assert!((end[0] - 1.0).abs() < 1e-15 && end[1].abs() < 1e-15);
        let seg = PointSet::from_points([[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let d8 = iterate_fixed(&k, &seg, 8, 0.0, None).unwrap().set;
        let d9 = iterate_fixed(&k, &seg, 9, 0.0, None).unwrap().set;
        assert!(hausdorff(&d8, &d9).unwrap() < 2.0 * 3f64.powi(-8));
    }

    #[test]
    fn hidden_schedule_blocks() {
        let s = hidden_fractal_schedule(5).unwrap();
        for k in 1..=5 {
            assert_eq!(s.system(k).label(), "planar-cubic");
            assert_eq!(s.system(k + 5).label(), "koch");
            assert_eq!(s.system(k + 10).label(), "planar-cubic");
        }
        let pair = planar_cubic_pair();
        assert!(contraction_factor(&pair) < 0.6);
    }

    #[test]
    fn scheme_refs() {
        let r = SchemeRef::parse("random4pt:b=0.4,seed=7").unwrap();
        assert_eq!(r.name, "random4pt");
        assert_eq!(r.params["b"], "0.4");
        assert_eq!(r.to_string(), "random4pt:b=0.4,seed=7");
        assert!(SchemeRef::parse(":b=1").is_err());
        assert!(SchemeRef::parse("x:b").is_err());
        assert!(SchemeRef::parse("x:b=1,b=2").is_err());
        assert!(matches!(lookup("nope"), Err(Error::UnknownScheme(_))));
        assert!(lookup("koch:b=1").is_err());
        assert!(lookup("random4pt:seed=1.5").is_err());
        assert!(lookup("cubic:n=500").is_err());
        assert!(lookup("expspline:lambda=3").is_ok());
    }

    #[test]
    fn every_entry_resolves_with_defaults() {
        for e in entries() {
            let r = resolve(&SchemeRef::parse(e.name).unwrap()).unwrap();
            let s = r.schedule();
            assert_eq!(s.dim(), r.initial_set().dim(), "{}", e.name);
        }
    }

    #[test]
    fn default_polygons() {
        let p = default_polygon(5);
        assert_eq!(p.as_flat(), &[0.0, 0.0, 1.0, 2.0, 2.0, -1.0, 3.0, 1.0, 4.0, 0.0]);
        assert_eq!(default_polygon(7).point(6), &[6.0, 2.0]);
    }
}
