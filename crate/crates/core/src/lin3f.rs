//! Linearized three-phase branch flow model: linearization constants and
//! fixed-ratio evaluation.
//!
//! Per line `n -> m` with sending-end flow `S` and receiving-end flow `S - L`:
//!
//! ```text
//! v_n = v_m + 2 Re{ (Γ_m ⊙ conj(Z)) (S - L) } + H
//! S   = Σ_k S_mk + load_m + (Γ_m ⊙ conj(Y_m)) v_m + L
//! ```
//!
//! where `v` are squared magnitudes. Both are exact when `Γ`, `H` and `L` come
//! from the true solution.

use num_complex::Complex64;

use crate::net_model::{
    EdgeRef, FeederModel, Phase, PhaseMatrix, PhaseSet, PhaseVector, RatioVector, Topology, TopologyError,
};
use crate::ybus::{secondary_gains, YbusError};
use crate::zbus_pf::{line_current, PowerFlowSolution, ZbusError};

const H_IMAG_TOL: f64 = 1e-10;
const SWEEP_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationConstants {
    /// Per bus, `γ^{φψ} = v^φ / v^ψ`.
    pub gamma: Vec<PhaseMatrix>,
    /// Per line, voltage-drop loss term.
    pub h: Vec<PhaseVector<f64>>,
    /// Per line, series power loss.
    pub l: Vec<PhaseVector<Complex64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum LinError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Ybus(#[from] YbusError),
    #[error(transparent)]
    Zbus(#[from] ZbusError),
    #[error("base solution has not converged")]
    Unconverged,
    #[error("zero voltage at bus {bus} phase {phase}")]
    ZeroVoltage { bus: String, phase: Phase },
    #[error("line {line}: loss term has imaginary residue {residue:e}")]
    ImaginaryLoss { line: usize, residue: f64 },
    #[error("constants do not match the feeder: {0}")]
    MaskMismatch(String),
    #[error("sweeps did not settle after {0} passes")]
    NoSettle(usize),
}

fn alpha() -> Complex64 {
    Complex64::from_polar(1.0, 120f64.to_radians())
}

/// `γ^{ab} = γ^{bc} = γ^{ca} = α`, the reverse pairs `α²`, unit diagonal.
pub fn balanced_gamma(mask: PhaseSet) -> PhaseMatrix {
    let a = alpha();
    PhaseMatrix::from_fn(mask, |p, q| match (q.index() + 3 - p.index()) % 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => a,
        _ => a * a,
    })
}

/// Balanced-voltage constants with zero higher-order terms.
pub fn constants_balanced(model: &FeederModel) -> LinearizationConstants {
    LinearizationConstants {
        gamma: model.buses.iter().map(|b| balanced_gamma(b.phases)).collect(),
        h: model
            .lines
            .iter()
            .map(|l| PhaseVector::filled(l.phases(), 0.0))
            .collect(),
        l: model
            .lines
            .iter()
            .map(|l| PhaseVector::filled(l.phases(), Complex64::default()))
            .collect(),
    }
}

/// Constants taken from a converged power-flow solution.
pub fn constants_from_solution(model: &FeederModel, base: &PowerFlowSolution) -> Result<LinearizationConstants, LinError> {
    if !base.converged {
        return Err(LinError::Unconverged);
    }
    let mut gamma = Vec::with_capacity(model.buses.len());
    for (bus, v) in model.buses.iter().zip(&base.voltages) {
        for (p, x) in v.iter() {
            if x.norm() == 0.0 {
                return Err(LinError::ZeroVoltage {
                    bus: bus.id.clone(),
                    phase: p,
                });
            }
        }
        gamma.push(PhaseMatrix::from_fn(bus.phases, |p, q| {
            v.get(p).unwrap() / v.get(q).unwrap()
        }));
    }

    let mut h = Vec::with_capacity(model.lines.len());
    let mut l = Vec::with_capacity(model.lines.len());
    for (li, line) in model.lines.iter().enumerate() {
        let i = line_current(model, base, li)?;
        let iv = i.values();
        let k = line.z.dim();
        // diag(Z i iᴴ Zᴴ) and diag(Z i iᴴ)
        let mut hv = Vec::with_capacity(k);
        let mut lv = Vec::with_capacity(k);
        for r in 0..k {
            let mut hr = Complex64::default();
            let mut lr = Complex64::default();
            for a in 0..k {
                lr += line.z.at(r, a) * iv[a] * iv[r].conj();
                for b in 0..k {
                    hr += line.z.at(r, a) * iv[a] * iv[b].conj() * line.z.at(r, b).conj();
                }
            }
            if hr.im.abs() > H_IMAG_TOL {
                return Err(LinError::ImaginaryLoss {
                    line: li,
                    residue: hr.im.abs(),
                });
            }
            hv.push(hr.re);
            lv.push(lr);
        }
        h.push(PhaseVector::new(line.phases(), hv).expect("mask arity"));
        l.push(PhaseVector::new(line.phases(), lv).expect("mask arity"));
    }
    Ok(LinearizationConstants { gamma, h, l })
}

impl LinearizationConstants {
    pub fn check(&self, model: &FeederModel) -> Result<(), LinError> {
        if self.gamma.len() != model.buses.len() || self.h.len() != model.lines.len() || self.l.len() != model.lines.len() {
            return Err(LinError::MaskMismatch("element counts differ".into()));
        }
        for (g, b) in self.gamma.iter().zip(&model.buses) {
            if g.mask() != b.phases {
                return Err(LinError::MaskMismatch(format!("gamma of bus {}", b.id)));
            }
        }
        for (i, line) in model.lines.iter().enumerate() {
            if self.h[i].mask() != line.phases() || self.l[i].mask() != line.phases() {
                return Err(LinError::MaskMismatch(format!("loss terms of line {i}")));
            }
        }
        Ok(())
    }
}

/// Squared voltage magnitudes per bus and sending-end flows per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFlow {
    pub v2: Vec<PhaseVector<f64>>,
    pub line_flows: Vec<PhaseVector<Complex64>>,
    pub svr_flows: Vec<PhaseVector<Complex64>>,
    pub sweeps: usize,
}

impl LinearFlow {
    pub fn magnitudes(&self) -> Vec<PhaseVector<f64>> {
        self.v2.iter().map(|v| v.map(|x| x.max(0.0).sqrt())).collect()
    }
}

/// `Σ_ψ (Γ ⊙ conj(M))^{φψ} x^ψ` over `M`'s mask.
fn weighted(gamma: &PhaseMatrix, m: &PhaseMatrix, x: impl Fn(Phase) -> Complex64) -> PhaseVector<Complex64> {
    PhaseVector::from_fn(m.mask(), |p| {
        m.mask()
            .iter()
            .map(|q| gamma.get(p, q).unwrap() * m.get(p, q).unwrap().conj() * x(q))
            .sum()
    })
}

/// Evaluates the linear model at fixed regulator ratios.
///
/// The flow and voltage recursions are coupled only through shunts; the
/// backward and forward sweeps are repeated until they agree.
pub fn linear_powerflow(
    model: &FeederModel,
    constants: &LinearizationConstants,
    ratios: &RatioVector,
) -> Result<LinearFlow, LinError> {
    constants.check(model)?;
    let topo = Topology::build(model)?;
    let gains = secondary_gains(model, ratios)?;
    let nb = model.buses.len();

    let slack_v2 = model.slack_voltage.map(|v| v.norm_sqr());
    let mut v2: Vec<PhaseVector<f64>> = model
        .buses
        .iter()
        .map(|b| PhaseVector::from_fn(b.phases, |p| slack_v2.get(p).copied().unwrap_or(1.0)))
        .collect();
    let mut line_flows: Vec<PhaseVector<Complex64>> = model
        .lines
        .iter()
        .map(|l| PhaseVector::filled(l.phases(), Complex64::default()))
        .collect();
    let mut svr_flows: Vec<PhaseVector<Complex64>> = model
        .svrs
        .iter()
        .map(|s| PhaseVector::filled(s.phases, Complex64::default()))
        .collect();
    let has_shunt = model.buses.iter().any(|b| b.shunt.is_some());

    let mut sweeps = 0;
    loop {
        sweeps += 1;
        // backward: flow into each bus from its parent edge
        let mut into: Vec<PhaseVector<Complex64>> = (0..nb)
            .map(|b| {
                let bus = &model.buses[b];
                let mut s = PhaseVector::from_fn(bus.phases, |p| bus.load.get(p).copied().unwrap_or_default());
                if let Some(y) = &bus.shunt {
                    let sh = weighted(&constants.gamma[b], y, |q| Complex64::new(*v2[b].get(q).unwrap(), 0.0));
                    for (p, x) in sh.iter() {
                        *s.get_mut(p).unwrap() += x;
                    }
                }
                s
            })
            .collect();
        for &b in topo.order.iter().rev() {
            let Some(e) = topo.parent[b] else { continue };
            let f = topo.from_index(model, e);
            let flow = match e {
                EdgeRef::Line(i) => {
                    let s = PhaseVector::from_fn(model.lines[i].phases(), |p| {
                        into[b].get(p).unwrap() + constants.l[i].get(p).unwrap()
                    });
                    line_flows[i] = s.clone();
                    s
                }
                EdgeRef::Svr(i) => {
                    let s = PhaseVector::from_fn(model.svrs[i].phases, |p| *into[b].get(p).unwrap());
                    svr_flows[i] = s.clone();
                    s
                }
            };
            for (p, x) in flow.iter() {
                *into[f].get_mut(p).unwrap() += x;
            }
        }

        // forward: squared magnitudes down from the slack
        let mut next = v2.clone();
        next[topo.slack] = slack_v2.clone();
        for &b in &topo.order {
            let Some(e) = topo.parent[b] else { continue };
            let f = topo.from_index(model, e);
            next[b] = match e {
                EdgeRef::Line(i) => {
                    let line = &model.lines[i];
                    let recv = |q: Phase| line_flows[i].get(q).unwrap() - constants.l[i].get(q).unwrap();
                    let drop = weighted(&constants.gamma[b], &line.z, recv);
                    PhaseVector::from_fn(line.phases(), |p| {
                        next[f].get(p).unwrap() - 2.0 * drop.get(p).unwrap().re - constants.h[i].get(p).unwrap()
                    })
                }
                EdgeRef::Svr(i) => PhaseVector::from_fn(model.svrs[i].phases, |p| {
                    let g = gains[i].get(p).unwrap();
                    g * g * next[f].get(p).unwrap()
                }),
            };
        }
        let change = next
            .iter()
            .zip(&v2)
            .flat_map(|(a, b)| a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        v2 = next;
        if !has_shunt || change < SWEEP_TOL {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(LinError::NoSettle(sweeps));
        }
    }
    Ok(LinearFlow {
        v2,
        line_flows,
        svr_flows,
        sweeps,
    })
}

/// Per-phase comparison of the linear model against an exact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LinDiff {
    /// Max |sqrt(ṽ) - |v|| per phase a, b, c (`None` if no bus has the phase).
    pub max_diff: [Option<f64>; 3],
    pub min_linear: f64,
    pub min_exact: f64,
}

/// Compares over non-slack buses.
pub fn compare(flow: &LinearFlow, exact: &PowerFlowSolution) -> LinDiff {
    let mut max_diff = [None; 3];
    let mut min_linear = f64::INFINITY;
    let mut min_exact = f64::INFINITY;
    for (b, (lin, ex)) in flow.magnitudes().iter().zip(&exact.voltages).enumerate() {
        if b == exact.slack {
            continue;
        }
        for (p, m) in lin.iter() {
            let e = ex.get(p).unwrap().norm();
            let d = (m - e).abs();
            let slot = &mut max_diff[p.index()];
            *slot = Some(slot.map_or(d, |x: f64| x.max(d)));
            min_linear = min_linear.min(*m);
            min_exact = min_exact.min(e);
        }
    }
    LinDiff {
        max_diff,
        min_linear,
        min_exact,
    }
}
