//! Convergence diagnostics for schedules built from subdivision.
//!
//! A lifted mask sequence falls into one of three cases for which backward
//! trajectories are expected to converge:
//!
//! * Case (ii): constants reproduced and the masks converge to a mask whose
//!   stationary lifted system has a contractive ℓ-fold composition;
//! * Case (iii): constants reproduced and Σ_k ∏_{i≤k} s_i appears finite for
//!   the per-level factors s_i;
//! * Case (i): the scheme itself looks C⁰-convergent.
//!
//! The cases are tried in that order. Everything here reads a finite
//! truncation, so verdicts other than a certified ℓ-composition are
//! empirical.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::function_systems::{product_diagnostic, ProductClass, ProductDiagnostic, SfsSchedule};
use crate::sfs_bridge::{build_h_matrix, CompositionSearch, SubdivisionLift};
use crate::subdivision::{
    c0_convergence_estimate, check_constant_reproduction, ConvergenceClass, MaskSequence,
};

/// Mask-change threshold for "the masks converge".
pub const MASK_CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    II,
    #[serde(rename = "iii")]
    III,
    #[serde(rename = "none")]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Evidence {
    /// A contractive composition was found by exhaustive enumeration.
    Certified,
    /// Based on a finite truncation of an infinite series.
    Empirical,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOptions {
    /// Horizon K.
    pub levels: usize,
    /// Longest composition tried, ℓ = 1..=max_ell.
    pub max_ell: usize,
    /// Subdivision depth for the C⁰ estimate.
    pub c0_levels: usize,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            levels: 200,
            max_ell: 10,
            c0_levels: 10,
        }
    }
}

/// Σ∏ test on ℓ-block factors max_words ‖G^[a+ℓ−1]⋯G^[a]‖₂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTest {
    pub ell: usize,
    pub factors: Vec<f64>,
    pub products: ProductDiagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdivisionDiagnosis {
    pub label: String,
    pub levels: usize,
    /// L_{𝓕_k}: max over both maps of the Lipschitz constant on Q^{n−1}
    /// (on ℝⁿ when constants are not reproduced).
    pub lipschitz_factors: Vec<f64>,
    pub lipschitz_products: ProductDiagnostic,
    /// μ_k = max_r ρ(G_r^[k]); absent when constants are not reproduced.
    pub spectral_factors: Option<Vec<f64>>,
    pub spectral_products: Option<ProductDiagnostic>,
    /// First ℓ-block Σ∏ test that passes, or the last one tried.
    pub block_test: Option<BlockTest>,
    pub constants_reproduced: bool,
    /// max_j |a^[K]_j − a^[K−1]_j|.
    pub mask_tail_difference: f64,
    pub masks_converge: bool,
    /// ℓ-search on the stationary system of the last mask with the H basis.
    pub limit_composition: Option<CompositionSearch>,
    pub c0_class: Option<ConvergenceClass>,
    pub case: Case,
    pub evidence: Evidence,
}

/// Classifies a lifted mask sequence.
pub fn diagnose_subdivision(
    lift: &SubdivisionLift,
    polygon: &crate::metric_sets::PointSet,
    opts: &DiagnoseOptions,
) -> Result<SubdivisionDiagnosis> {
    let k_max = opts.levels.max(2);
    let masks = lift.masks();
    let constants_reproduced = (1..=k_max).all(|k| check_constant_reproduction(&masks.mask(k)).holds);
    let lipschitz_factors: Vec<f64> = (1..=k_max).map(|k| lift.factor(k)).collect();
    let lipschitz_products = product_diagnostic(&lipschitz_factors);

    let mask_tail_difference = masks.mask(k_max).max_difference(&masks.mask(k_max - 1));
    let masks_converge = mask_tail_difference < MASK_CONVERGENCE_TOL;

    let (spectral_factors, spectral_products, block_test, limit_composition) = if constants_reproduced {
        let mu = (1..=k_max)
            .map(|k| lift.spectral_factor(k))
            .collect::<Result<Vec<_>>>()?;
        let mu_products = product_diagnostic(&mu);
        let limit = if masks_converge {
            let stationary = SubdivisionLift::new(
                MaskSequence::constant(masks.mask(k_max)),
                build_h_matrix(lift.n())?,
            )?;
            Some(stationary.composition_search(1, opts.max_ell)?)
        } else {
            None
        };
        let blocks = block_series(lift, k_max, opts.max_ell)?;
        (Some(mu), Some(mu_products), blocks, limit)
    } else {
        (None, None, None, None)
    };

    let c0_class = c0_convergence_estimate(masks, polygon, opts.c0_levels.max(2))
        .ok()
        .map(|e| e.classification);

    let sum_converges = |p: &Option<ProductDiagnostic>| {
        p.as_ref().is_some_and(|d| d.classification == ProductClass::SumConverges)
    };
    let block_ok = block_test
        .as_ref()
        .is_some_and(|b| b.products.classification == ProductClass::SumConverges);
    let lipschitz_ok = lipschitz_products.classification == ProductClass::SumConverges;

    let (case, evidence) = if constants_reproduced
        && masks_converge
        && limit_composition.as_ref().is_some_and(|c| c.certified_length.is_some())
    {
        (Case::II, Evidence::Certified)
    } else if constants_reproduced && (lipschitz_ok || block_ok || sum_converges(&spectral_products)) {
        // a passing Lipschitz series is a bound, the spectral one an estimate
        let ev = if lipschitz_ok || block_ok {
            Evidence::Certified
        } else {
            Evidence::Empirical
        };
        (Case::III, ev)
    } else if c0_class == Some(ConvergenceClass::C0Like) {
        (Case::I, Evidence::Empirical)
    } else {
        (Case::None, Evidence::None)
    };

    Ok(SubdivisionDiagnosis {
        label: masks.label().to_string(),
        levels: k_max,
        lipschitz_factors,
        lipschitz_products,
        spectral_factors,
        spectral_products,
        block_test,
        constants_reproduced,
        mask_tail_difference,
        masks_converge,
        limit_composition,
        c0_class,
        case,
        evidence,
    })
}

fn block_series(lift: &SubdivisionLift, levels: usize, max_ell: usize) -> Result<Option<BlockTest>> {
    let mut last = None;
    for ell in 2..=max_ell {
        let blocks = levels / ell;
        if blocks == 0 {
            break;
        }
        let factors = (0..blocks)
            .map(|b| lift.block_factor(1 + b * ell, ell))
            .collect::<Result<Vec<_>>>()?;
        let products = product_diagnostic(&factors);
        let pass = products.classification == ProductClass::SumConverges;
        last = Some(BlockTest {
            ell,
            factors,
            products,
        });
        if pass {
            break;
        }
    }
    Ok(last)
}

/// Factor series of an arbitrary schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDiagnosis {
    pub label: String,
    pub levels: usize,
    pub factors: Vec<f64>,
    pub products: ProductDiagnostic,
}

pub fn diagnose_schedule(s: &SfsSchedule, levels: usize) -> ScheduleDiagnosis {
    let factors = s.factors(levels);
    let products = product_diagnostic(&factors);
    ScheduleDiagnosis {
        label: s.label().to_string(),
        levels,
        factors,
        products,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{fourpoint_polygon, lookup, Resolved};

    fn diagnose(text: &str, levels: usize) -> SubdivisionDiagnosis {
        let Resolved::Subdivision { lift, polygon } = lookup(text).unwrap() else {
            panic!("not a subdivision entry")
        };
        let opts = DiagnoseOptions {
            levels,
            ..DiagnoseOptions::default()
        };
        diagnose_subdivision(&lift, &polygon, &opts).unwrap()
    }

    #[test]
    fn exponential_is_case_two() {
        let d = diagnose("expspline:lambda=3", 60);
        assert!(d.constants_reproduced && d.masks_converge);
        assert_eq!(d.case, Case::II);
    }

    #[test]
    fn moderate_random_fourpoint_is_case_three() {
        let d = diagnose("random4pt:b=0.4,seed=7", 200);
        assert!(!d.masks_converge);
        assert_eq!(d.case, Case::III);
        assert_eq!(fourpoint_polygon().len(), 6);
    }

    #[test]
    fn wide_random_fourpoint_is_unclassified() {
        let d = diagnose("random4pt:b=2,seed=7", 200);
        assert_eq!(d.case, Case::None);
    }

    #[test]
    fn hidden_schedule_factors() {
        let Resolved::Schedule { schedule, .. } = lookup("hidden").unwrap() else {
            panic!()
        };
        let d = diagnose_schedule(&schedule, 40);
        assert_eq!(d.products.classification, ProductClass::SumConverges);
    }
}
