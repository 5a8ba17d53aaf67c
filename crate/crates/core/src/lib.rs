//! Attractors of iterated function systems and of forward and backward
//! trajectories of sequences of function systems, plus the lift that turns
//! (non-stationary) binary subdivision into such sequences.
//!
//! Modules, bottom up:
//!
//! * [`metric_sets`]: finite point sets and the Hausdorff metric;
//! * [`function_systems`]: affine systems, schedules, trajectories;
//! * [`subdivision`]: masks, refinement, slice matrices;
//! * [`sfs_bridge`]: lift matrices and lifted level maps;
//! * [`catalog`]: named schemes and systems;
//! * [`diagnostics`]: convergence case classification.

pub mod catalog;
pub mod descriptor;
pub mod diagnostics;
pub mod error;
pub mod function_systems;
pub mod linalg;
pub mod metric_sets;
pub mod sfs_bridge;
pub mod subdivision;

pub use error::{Error, Result};
pub use function_systems::{AffineMap, FunctionSystem, SfsSchedule};
pub use metric_sets::{PointSet, Point};
pub use subdivision::{Mask, MaskSequence};
