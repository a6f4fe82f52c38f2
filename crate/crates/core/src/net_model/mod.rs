//! Feeder data model: phases, masked vectors and matrices, buses, lines,
//! regulators, the feeder file format, validation and tap algebra.

mod io;
mod model;
mod phase;
pub mod taps;
mod topology;
mod validate;
mod vectors;

pub use io::{parse_feeder, parse_unvalidated, serialize_feeder, FeederFileError, FORMAT_VERSION};
pub use model::{BusSpec, FeederDefaults, FeederModel, LineSpec, RatioVector, SvrSpec, TapVector};
pub use phase::{Phase, PhaseParseError, PhaseSet};
pub use taps::{ratio_to_tap, tap_to_ratio, SvrKind, TapError, TapRange};
pub use topology::{edge_from, edge_phases, edge_to, EdgeRef, Topology, TopologyError};
pub use validate::{validate, Rule, Violation};
pub use vectors::{MaskError, PhaseMatrix, PhaseVector};
