//! Bus admittance matrix assembly with ideal-regulator elimination.
//!
//! Coordinates are `(bus, phase)` pairs. The slack bus and every regulator
//! secondary bus are excluded from the retained set: a regulator `n -> n'`
//! followed by the line `n' -> m` with `W = Z^-1` and secondary gain
//! `G = diag(g)` (`v_n' = G v_n`) contributes
//!
//! ```text
//! Y_nn += G W G    Y_nm += -G W
//! Y_mn += -W G     Y_mm += W
//! ```

use std::collections::HashMap;

use num_complex::Complex64;

use crate::net_model::{taps, FeederModel, Phase, PhaseSet, PhaseVector, RatioVector, Topology, TopologyError};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum YbusError {
    #[error("line {index} ({from}->{to}) has a singular impedance matrix")]
    SingularImpedance { index: usize, from: String, to: String },
    #[error("regulator {svr} has no valid ratio for phase {phase}")]
    MissingRatio { svr: usize, phase: Phase },
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone)]
pub struct AdmittanceSystem {
    /// Retained (non-slack, non-eliminated) coordinates in row/column order.
    pub index: Vec<(usize, Phase)>,
    coord_of: HashMap<(usize, Phase), usize>,
    /// Slack coordinates, in slack-mask order.
    pub slack_phases: Vec<Phase>,
    /// Retained block.
    pub y: CscMatrix,
    /// Retained rows, slack columns.
    pub y_ns: CscMatrix,
    /// Slack rows over `[retained..., slack...]` columns.
    pub y_s: CscMatrix,
    /// Eliminated regulator secondary bus ids.
    pub eliminated: Vec<String>,
    /// Per regulator, per phase gain `v_secondary = g * v_primary`.
    pub gains: Vec<PhaseVector<f64>>,
}

impl AdmittanceSystem {
    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn coord(&self, bus: usize, p: Phase) -> Option<usize> {
        self.coord_of.get(&(bus, p)).copied()
    }

    /// Current injected by the slack into the network, `Y_S [v; v_S]`.
    pub fn slack_injection(&self, v: &[Complex64], v_slack: &[Complex64]) -> Vec<Complex64> {
        let full: Vec<Complex64> = v.iter().chain(v_slack).copied().collect();
        self.y_s.mul_vec(&full)
    }
}

pub(crate) fn secondary_gains(model: &FeederModel, ratios: &RatioVector) -> Result<Vec<PhaseVector<f64>>, YbusError> {
    model
        .svrs
        .iter()
        .enumerate()
        .map(|(i, svr)| {
            let mut vals = Vec::with_capacity(svr.phases.len());
            for p in svr.phases.iter() {
                let r = ratios
                    .ratio(i, p)
                    .filter(|r| r.is_finite() && *r > 0.0)
                    .ok_or(YbusError::MissingRatio { svr: i, phase: p })?;
                vals.push(taps::secondary_gain(svr.kind, r));
            }
            Ok(PhaseVector::new(svr.phases, vals).expect("mask arity"))
        })
        .collect()
}

/// Assembles the admittance blocks of a valid feeder at the given ratios.
pub fn assemble(model: &FeederModel, ratios: &RatioVector) -> Result<AdmittanceSystem, YbusError> {
    let topo = Topology::build(model)?;
    let gains = secondary_gains(model, ratios)?;

    // secondary bus -> (regulator, primary bus)
    let mut elim: HashMap<usize, (usize, usize)> = HashMap::new();
    for (i, svr) in model.svrs.iter().enumerate() {
        elim.insert(topo.bus_index[&svr.to], (i, topo.bus_index[&svr.from]));
    }

    let mut index = Vec::new();
    for (b, bus) in model.buses.iter().enumerate() {
        if b == topo.slack || elim.contains_key(&b) {
            continue;
        }
        index.extend(bus.phases.iter().map(|p| (b, p)));
    }
    let n = index.len();
    let slack_mask: PhaseSet = model.buses[topo.slack].phases;
    let slack_phases: Vec<Phase> = slack_mask.iter().collect();
    let mut coord_of: HashMap<(usize, Phase), usize> = index.iter().enumerate().map(|(k, c)| (*c, k)).collect();
    for (k, p) in slack_phases.iter().enumerate() {
        coord_of.insert((topo.slack, *p), n + k);
    }
    let global = |b: usize, p: Phase| coord_of[&(b, p)];

    let mut trip: Vec<(usize, usize, Complex64)> = Vec::new();
    for (li, line) in model.lines.iter().enumerate() {
        let w = line.z.inverse().ok_or_else(|| YbusError::SingularImpedance {
            index: li,
            from: line.from.clone(),
            to: line.to.clone(),
        })?;
        let phases: Vec<Phase> = line.phases().iter().collect();
        let f = topo.bus_index[&line.from];
        let t = topo.bus_index[&line.to];
        // (primary bus, per-phase gain) when the line hangs off a regulator secondary
        let (src, gain): (usize, Vec<f64>) = match elim.get(&f) {
            Some(&(svr, primary)) => (
                primary,
                phases.iter().map(|p| *gains[svr].get(*p).expect("svr covers line")).collect(),
            ),
            None => (f, vec![1.0; phases.len()]),
        };
        for (i, &p) in phases.iter().enumerate() {
            for (j, &q) in phases.iter().enumerate() {
                let wij = w.at(i, j);
                trip.push((global(src, p), global(src, q), wij * gain[i] * gain[j]));
                trip.push((global(src, p), global(t, q), -wij * gain[i]));
                trip.push((global(t, p), global(src, q), -wij * gain[j]));
                trip.push((global(t, p), global(t, q), wij));
            }
        }
    }
    for (b, bus) in model.buses.iter().enumerate() {
        if let Some(y) = &bus.shunt {
            let phases: Vec<Phase> = y.mask().iter().collect();
            for (i, &p) in phases.iter().enumerate() {
                for (j, &q) in phases.iter().enumerate() {
                    trip.push((global(b, p), global(b, q), y.at(i, j)));
                }
            }
        }
    }

    let s = slack_phases.len();
    let mut t_y = Vec::new();
    let mut t_ns = Vec::new();
    let mut t_s = Vec::new();
    for (r, c, v) in trip {
        match (r < n, c < n) {
            (true, true) => t_y.push((r, c, v)),
            (true, false) => t_ns.push((r, c - n, v)),
            (false, _) => t_s.push((r - n, c, v)),
        }
    }

    let eliminated = model.svrs.iter().map(|s| s.to.clone()).collect();
    Ok(AdmittanceSystem {
        index,
        coord_of,
        slack_phases,
        y: CscMatrix::from_triplets(n, n, t_y),
        y_ns: CscMatrix::from_triplets(n, s, t_ns),
        y_s: CscMatrix::from_triplets(s, n + s, t_s),
        eliminated,
        gains,
    })
}

/// Voltages at eliminated regulator secondaries from their primaries:
/// `v_n' = v_n / r` for type B, `v_n' = r v_n` for type A.
///
/// `bus_voltages` is indexed like `model.buses`; only primary entries are read.
pub fn recover_svr_secondary(
    model: &FeederModel,
    ratios: &RatioVector,
    bus_voltages: &[PhaseVector<Complex64>],
) -> Result<Vec<(String, PhaseVector<Complex64>)>, YbusError> {
    let gains = secondary_gains(model, ratios)?;
    let mut out = Vec::with_capacity(model.svrs.len());
    for (svr, g) in model.svrs.iter().zip(&gains) {
        let primary_idx = model
            .bus_index(&svr.from)
            .ok_or_else(|| TopologyError(format!("unknown bus {}", svr.from)))?;
        let primary = &bus_voltages[primary_idx];
        let v = PhaseVector::from_fn(svr.phases, |p| {
            primary.get(p).copied().unwrap_or_default() * *g.get(p).unwrap()
        });
        out.push((svr.to.clone(), v));
    }
    Ok(out)
}
