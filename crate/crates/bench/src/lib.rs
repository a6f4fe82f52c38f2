//! Shared setup for the benchmarks.

use std::path::PathBuf;

use opts_core::{parse_feeder, FeederModel};

/// Loads one of the feeders shipped with the core crate.
pub fn fixture(name: &str) -> FeederModel {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_feeder(&text).unwrap()
}
