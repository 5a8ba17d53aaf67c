//! JSON schedule descriptors.
//!
//! ```json
//! {"kind": "constant", "system": {...}}
//! {"kind": "periodic", "systems": [{...}, {...}], "block_lengths": [5, 5]}
//! {"kind": "catalog", "name": "random4pt", "params": {"b": 0.4, "seed": 7}}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{resolve, Resolved, SchemeRef};
use crate::error::{Error, Result};
use crate::function_systems::{FunctionSystemDescriptor, SfsSchedule};
use crate::metric_sets::PointSet;

/// Upper bound on the number of systems or maps read from JSON.
pub const MAX_DESCRIPTOR_ITEMS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScheduleDescriptor {
    Constant {
        system: FunctionSystemDescriptor,
    },
    Periodic {
        systems: Vec<FunctionSystemDescriptor>,
        block_lengths: Vec<usize>,
    },
    Catalog {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, serde_json::Value>,
    },
}

fn check_size(d: &FunctionSystemDescriptor) -> Result<()> {
    if d.maps.len() > MAX_DESCRIPTOR_ITEMS || d.dim > MAX_DESCRIPTOR_ITEMS {
        return Err(Error::InvalidParameter("descriptor too large".into()));
    }
    Ok(())
}

impl ScheduleDescriptor {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Builds the schedule. Systems given inline start from the origin.
    pub fn resolve(&self) -> Result<Resolved> {
        match self {
            ScheduleDescriptor::Constant { system } => {
                check_size(system)?;
                let system = system.build()?;
                let initial = PointSet::singleton(&vec![0.0; system.dim()])?;
                Ok(Resolved::Schedule {
                    schedule: SfsSchedule::constant(system),
                    initial,
                })
            }
            ScheduleDescriptor::Periodic {
                systems,
                block_lengths,
            } => {
                if systems.len() > MAX_DESCRIPTOR_ITEMS {
                    return Err(Error::InvalidParameter("descriptor too large".into()));
                }
                let built = systems
                    .iter()
                    .map(|s| {
                        check_size(s)?;
                        s.build()
                    })
                    .collect::<Result<Vec<_>>>()?;
                let schedule = SfsSchedule::periodic(built, block_lengths.clone())?;
                let initial = PointSet::singleton(&vec![0.0; schedule.dim()])?;
                Ok(Resolved::Schedule { schedule, initial })
            }
            ScheduleDescriptor::Catalog { name, params } => resolve(&SchemeRef::from_parts(name, params)?),
        }
    }
}

/// A schedule given either as a catalog reference or as JSON text.
pub fn resolve_schedule_text(text: &str) -> Result<Resolved> {
    if text.trim_start().starts_with('{') {
        ScheduleDescriptor::from_json_str(text)?.resolve()
    } else {
        crate::catalog::lookup(text)
    }
}
