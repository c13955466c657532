//! Data files compiled into the crate.

pub const PARTITION_TOML: &str = include_str!("../data/partition.toml");
pub const KOF_CSV: &str = include_str!("../data/kof_interpersonal.csv");
