use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ParityError;

/// A named region and the country codes it covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub countries: BTreeSet<String>,
}

/// How a region code on a record resolved against a partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolved<'a> {
    /// The code names, or belongs to, this region.
    Region(&'a str),
    /// The code is the global domain tag itself.
    Global,
}

/// Global domain split into disjoint regions, one of which is the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionPartition {
    global_name: String,
    regions: Vec<Region>,
    target: String,
    country_index: BTreeMap<String, usize>,
}

#[derive(Deserialize)]
struct PartitionFile {
    global: String,
    target: String,
    regions: BTreeMap<String, Vec<String>>,
}

impl RegionPartition {
    /// Builds a partition, checking disjointness and that the target exists.
    /// Country codes are stored upper-cased.
    pub fn new(
        global_name: impl Into<String>,
        regions: Vec<Region>,
        target: impl Into<String>,
    ) -> Result<Self, ParityError> {
        let global_name = global_name.into();
        let target = target.into();
        let mut seen_ids = BTreeSet::new();
        let mut country_index = BTreeMap::new();
        let mut normalized = Vec::with_capacity(regions.len());
        for (idx, region) in regions.into_iter().enumerate() {
            if region.id.is_empty() || region.id == global_name {
                return Err(ParityError::InvalidPartition(format!(
                    "region id {:?} is empty or collides with the global name",
                    region.id
                )));
            }
            if !seen_ids.insert(region.id.clone()) {
                return Err(ParityError::InvalidPartition(format!(
                    "duplicate region id {:?}",
                    region.id
                )));
            }
            let countries: BTreeSet<String> =
                region.countries.iter().map(|c| c.trim().to_ascii_uppercase()).collect();
            for code in &countries {
                if let Some(&prev) = country_index.get(code) {
                    let prev: &Region = &normalized[prev];
                    return Err(ParityError::InvalidPartition(format!(
                        "country {code} appears in both {} and {}",
                        prev.id, region.id
                    )));
                }
                country_index.insert(code.clone(), idx);
            }
            normalized.push(Region { id: region.id, countries });
        }
        if let Some(code) = country_index.keys().find(|c| seen_ids.contains(*c)) {
            return Err(ParityError::InvalidPartition(format!(
                "country code {code} collides with a region id"
            )));
        }
        if !seen_ids.contains(&target) {
            return Err(ParityError::InvalidPartition(format!(
                "target region {target:?} is not one of the partition's regions"
            )));
        }
        Ok(Self { global_name, regions: normalized, target, country_index })
    }

    /// Parses the TOML partition format:
    ///
    /// ```toml
    /// global = "World"
    /// target = "SEA"
    /// [regions]
    /// SEA = ["SG", "ID"]
    /// EA = ["JP"]
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self, ParityError> {
        let file: PartitionFile =
            toml::from_str(text).map_err(|e| ParityError::InvalidPartition(e.to_string()))?;
        let regions = file
            .regions
            .into_iter()
            .map(|(id, countries)| Region { id, countries: countries.into_iter().collect() })
            .collect();
        Self::new(file.global, regions, file.target)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self, ParityError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ParityError::InvalidPartition(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// The bundled partition: SEA as target, remaining countries grouped by
    /// the regional blocs used in the bundled globalization table.
    pub fn bundled() -> Self {
        Self::from_toml_str(crate::data::PARTITION_TOML).expect("bundled partition is valid")
    }

    /// Same regions with a different target.
    pub fn with_target(&self, target: &str) -> Result<Self, ParityError> {
        Self::new(self.global_name.clone(), self.regions.clone(), target)
    }

    pub fn global_name(&self) -> &str {
        &self.global_name
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn region(&self, id: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    /// Every region except the target, in declaration order.
    pub fn others(&self) -> impl Iterator<Item = &Region> {
        self.regions.iter().filter(move |r| r.id != self.target)
    }

    /// Resolves a country code or region tag. Region ids and the global
    /// name match exactly; country codes match case-insensitively.
    pub fn resolve(&self, code: &str) -> Option<Resolved<'_>> {
        if code == self.global_name {
            return Some(Resolved::Global);
        }
        if let Some(region) = self.regions.iter().find(|r| r.id == code) {
            return Some(Resolved::Region(&region.id));
        }
        let upper = code.trim().to_ascii_uppercase();
        self.country_index.get(&upper).map(|&i| Resolved::Region(&self.regions[i].id))
    }
}
