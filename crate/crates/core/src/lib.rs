//! Optimal tap selection for wye-connected step-voltage regulators in
//! unbalanced three-phase distribution feeders.
//!
//! The pipeline solves a base nonlinear power flow, builds linearized
//! branch-flow constants from it, selects continuous regulator ratios with a
//! linear program, snaps them to the tap grid and verifies the result with the
//! exact nonlinear power flow.

pub mod lin3f;
pub mod lp;
pub mod net_model;
pub mod opts;
pub mod sparse;
pub mod ybus;
pub mod zbus_pf;

pub use num_complex::Complex64;

pub use lin3f::{constants_balanced, constants_from_solution, linear_powerflow, LinearFlow, LinearizationConstants};
pub use lp::{residuals, solve_lp, LpSolution, LpStatus, SimplexOptions, SparseLp};
pub use net_model::{
    parse_feeder, serialize_feeder, validate, FeederModel, Phase, PhaseMatrix, PhaseSet, PhaseVector, RatioVector,
    SvrKind, TapVector,
};
pub use opts::{build_lp, optimality_gap, recover_ratios, run_opts, ConstantsMode, OptsConfig, OptsReport};
pub use ybus::{assemble, AdmittanceSystem};
pub use zbus_pf::{import_objective, solve_zbus, voltage_envelope, voltage_unbalance, PowerFlowSolution, ZbusOptions};
