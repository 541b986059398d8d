//! JSON document form of a [`PerturbationSpec`].
//!
//! ```json
//! {"n": 1, "mode": "four-zone", "zones": {"1": {"a": [[0, 0, 1.0]], "b": []}}}
//! ```
//!
//! Zones and coefficients that are absent are zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Mode;
use crate::perturbation::{PerturbationSpec, Table};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneEntry {
    #[serde(default)]
    pub a: Vec<(u32, u32, f64)>,
    #[serde(default)]
    pub b: Vec<(u32, u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub n: u32,
    pub mode: Mode,
    #[serde(default)]
    pub zones: BTreeMap<String, ZoneEntry>,
}

impl SpecFile {
    /// Parses JSON, reporting the offending key path and line on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::InvalidSpec(format!("at `{path}`: {}", e.into_inner()))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec files always serialize")
    }

    pub fn to_spec(&self) -> Result<PerturbationSpec> {
        let mut spec = PerturbationSpec::zero(self.n, self.mode);
        for (key, entry) in &self.zones {
            let zone: u8 = key
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("zone key `{key}` is not an integer")))?;
            if !self.mode.zones().contains(&zone) {
                return Err(Error::InvalidSpec(format!(
                    "zone {zone} does not exist in {} mode (zones {:?})",
                    self.mode,
                    self.mode.zones()
                )));
            }
            for (table, list, name) in [(Table::A, &entry.a, "a"), (Table::B, &entry.b, "b")] {
                let mut seen = std::collections::BTreeSet::new();
                for &(i, j, v) in list {
                    if !seen.insert((i, j)) {
                        return Err(Error::InvalidSpec(format!(
                            "zones.{key}.{name}: coefficient ({i}, {j}) given twice"
                        )));
                    }
                    spec.set(table, zone, i, j, v)
                        .map_err(|e| Error::InvalidSpec(format!("zones.{key}.{name}: {e}")))?;
                }
            }
        }
        Ok(spec)
    }

    /// Lists the nonzero coefficients only.
    pub fn from_spec(spec: &PerturbationSpec) -> Self {
        let zones = spec
            .zones()
            .map(|(z, c)| {
                (
                    z.index().to_string(),
                    ZoneEntry {
                        a: c.a.nonzero().collect(),
                        b: c.b.nonzero().collect(),
                    },
                )
            })
            .filter(|(_, e)| !e.a.is_empty() || !e.b.is_empty())
            .collect();
        Self {
            n: spec.degree(),
            mode: spec.mode(),
            zones,
        }
    }
}

pub fn parse_spec(text: &str) -> Result<PerturbationSpec> {
    SpecFile::from_json(text)?.to_spec()
}
