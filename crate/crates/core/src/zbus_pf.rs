//! Z-bus fixed-point power flow and the verification metrics computed on
//! its solutions.

use std::io::{self, Write};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::net_model::{FeederModel, PhaseVector, RatioVector, Topology, TopologyError, EdgeRef};
use crate::ybus::{assemble, recover_svr_secondary, secondary_gains, AdmittanceSystem, YbusError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZbusOptions {
    /// Stop once the largest per-coordinate voltage update is below this.
    pub tol: f64,
    pub max_iter: usize,
    /// KCL residual required before a solution counts as converged.
    pub residual_tol: f64,
}

impl Default for ZbusOptions {
    fn default() -> Self {
        ZbusOptions {
            tol: 1e-9,
            max_iter: 200,
            residual_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    /// Indexed like `model.buses`; includes the slack and regulator secondaries.
    pub voltages: Vec<PhaseVector<Complex64>>,
    pub ratios: RatioVector,
    pub slack: usize,
    pub iterations: usize,
    /// Infinity norm of the current mismatch at the last iterate.
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ZbusError {
    #[error(transparent)]
    Ybus(#[from] YbusError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("admittance matrix is singular")]
    SingularY,
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("regulator {svr} ratio {ratio} is outside [{lo}, {hi}]")]
    RatioOutOfRange { svr: usize, ratio: f64, lo: f64, hi: f64 },
    #[error("start point does not match the feeder's bus/phase layout")]
    StartMismatch,
    #[error("zero voltage at bus {0}")]
    ZeroVoltage(String),
    #[error("power flow did not converge ({iterations} iterations, residual {residual:e})")]
    Unconverged { iterations: usize, residual: f64 },
}

fn check_ratios(model: &FeederModel, ratios: &RatioVector) -> Result<(), ZbusError> {
    for (i, svr) in model.svrs.iter().enumerate() {
        let (lo, hi) = svr.ratio_bounds();
        for p in svr.phases.iter() {
            if let Some(r) = ratios.ratio(i, p) {
                if !(r >= lo - 1e-12 && r <= hi + 1e-12) {
                    return Err(ZbusError::RatioOutOfRange { svr: i, ratio: r, lo, hi });
                }
            }
        }
    }
    Ok(())
}

fn injections(model: &FeederModel, sys: &AdmittanceSystem, v: &DVector<Complex64>) -> Result<DVector<Complex64>, ZbusError> {
    let mut out = DVector::zeros(v.len());
    for (k, &(b, p)) in sys.index.iter().enumerate() {
        let s = model.buses[b].load.get(p).copied().unwrap_or_default();
        if s == Complex64::default() {
            continue;
        }
        if v[k].norm() == 0.0 {
            return Err(ZbusError::ZeroVoltage(model.buses[b].id.clone()));
        }
        // injected power is minus the load
        out[k] = (-s / v[k]).conj();
    }
    Ok(out)
}

/// Solves the nonlinear power flow at fixed regulator ratios.
///
/// Non-convergence is not an error: the returned solution carries
/// `converged = false` and the last iterate.
pub fn solve_zbus(
    model: &FeederModel,
    ratios: &RatioVector,
    opts: &ZbusOptions,
    v0: Option<&[PhaseVector<Complex64>]>,
) -> Result<PowerFlowSolution, ZbusError> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(ZbusError::BadTolerance(opts.tol));
    }
    check_ratios(model, ratios)?;
    let sys = assemble(model, ratios)?;
    let slack = Topology::build(model)?.slack;
    let v_s: Vec<Complex64> = sys
        .slack_phases
        .iter()
        .map(|p| *model.slack_voltage.get(*p).expect("slack mask"))
        .collect();

    let n = sys.dim();
    let mut v = DVector::from_fn(n, |k, _| {
        let p = sys.index[k].1;
        model.slack_voltage.get(p).copied().unwrap_or(Complex64::new(1.0, 0.0))
    });
    if let Some(start) = v0 {
        if start.len() != model.buses.len() {
            return Err(ZbusError::StartMismatch);
        }
        for (k, &(b, p)) in sys.index.iter().enumerate() {
            v[k] = *start[b].get(p).map_err(|_| ZbusError::StartMismatch)?;
        }
    }

    let lu = sys.y.to_dense().lu();
    if !lu.is_invertible() {
        return Err(ZbusError::SingularY);
    }
    let w_s = DVector::from_vec(sys.y_ns.mul_vec(&v_s));
    let y = sys.y.to_dense();

    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let rhs = injections(model, &sys, &v)? - &w_s;
        let next = lu.solve(&rhs).ok_or(ZbusError::SingularY)?;
        let dv = (&next - &v).iter().map(|d| d.norm()).fold(0.0, f64::max);
        v = next;
        if dv < opts.tol {
            let mismatch = &y * &v + &w_s - injections(model, &sys, &v)?;
            residual = mismatch.iter().map(|d| d.norm()).fold(0.0, f64::max);
            if residual <= opts.residual_tol {
                converged = true;
                break;
            }
        }
    }
    if !converged && residual.is_infinite() {
        let mismatch = &y * &v + &w_s - injections(model, &sys, &v)?;
        residual = mismatch.iter().map(|d| d.norm()).fold(0.0, f64::max);
    }

    let mut voltages: Vec<PhaseVector<Complex64>> = model
        .buses
        .iter()
        .map(|b| PhaseVector::filled(b.phases, Complex64::default()))
        .collect();
    voltages[slack] = model.slack_voltage.clone();
    for (k, &(b, p)) in sys.index.iter().enumerate() {
        *voltages[b].get_mut(p).expect("bus mask") = v[k];
    }
    for (id, vs) in recover_svr_secondary(model, ratios, &voltages)? {
        let b = model.bus_index(&id).expect("secondary exists");
        voltages[b] = vs;
    }

    Ok(PowerFlowSolution {
        voltages,
        ratios: ratios.clone(),
        slack,
        iterations,
        residual,
        converged,
    })
}

fn require_converged(sol: &PowerFlowSolution) -> Result<(), ZbusError> {
    if sol.converged {
        Ok(())
    } else {
        Err(ZbusError::Unconverged {
            iterations: sol.iterations,
            residual: sol.residual,
        })
    }
}

/// Real power drawn from the substation, from the slack rows of the
/// admittance matrix.
pub fn import_objective(sol: &PowerFlowSolution, model: &FeederModel) -> Result<f64, ZbusError> {
    require_converged(sol)?;
    let sys = assemble(model, &sol.ratios)?;
    let v: Vec<Complex64> = sys
        .index
        .iter()
        .map(|&(b, p)| *sol.voltages[b].get(p).expect("bus mask"))
        .collect();
    let v_s: Vec<Complex64> = sys
        .slack_phases
        .iter()
        .map(|p| *sol.voltages[sol.slack].get(*p).expect("slack mask"))
        .collect();
    let i_s = sys.slack_injection(&v, &v_s);
    Ok(v_s.iter().zip(&i_s).map(|(v, i)| (v * i.conj()).re).sum())
}

/// Series current of a line, sending end to receiving end.
pub fn line_current(model: &FeederModel, sol: &PowerFlowSolution, line: usize) -> Result<PhaseVector<Complex64>, ZbusError> {
    let l = &model.lines[line];
    let f = model.bus_index(&l.from).expect("valid");
    let t = model.bus_index(&l.to).expect("valid");
    let mask = l.phases();
    let dv: Vec<Complex64> = mask
        .iter()
        .map(|p| sol.voltages[f].get(p).unwrap() - sol.voltages[t].get(p).unwrap())
        .collect();
    let w = l.z.inverse().ok_or(YbusError::SingularImpedance {
        index: line,
        from: l.from.clone(),
        to: l.to.clone(),
    })?;
    Ok(PhaseVector::new(mask, w.mul_vec(&dv)).expect("mask arity"))
}

/// Current leaving the sending end of an edge, per phase.
fn edge_current(model: &FeederModel, sol: &PowerFlowSolution, gains: &[PhaseVector<f64>], e: EdgeRef) -> Result<PhaseVector<Complex64>, ZbusError> {
    match e {
        EdgeRef::Line(i) => line_current(model, sol, i),
        EdgeRef::Svr(s) => {
            let svr = &model.svrs[s];
            let down = model
                .lines
                .iter()
                .position(|l| l.from == svr.to)
                .expect("regulator secondary feeds one line");
            let i = line_current(model, sol, down)?;
            Ok(PhaseVector::from_fn(svr.phases, |p| {
                *i.get(p).unwrap() * *gains[s].get(p).unwrap()
            }))
        }
    }
}

/// The same quantity as [`import_objective`], summed edge by edge over the
/// edges leaving the slack bus.
pub fn import_objective_edges(sol: &PowerFlowSolution, model: &FeederModel) -> Result<f64, ZbusError> {
    require_converged(sol)?;
    let topo = Topology::build(model)?;
    let gains = secondary_gains(model, &sol.ratios)?;
    let v_s = &sol.voltages[topo.slack];
    let mut total = 0.0;
    for &e in topo.head_edges() {
        let i = edge_current(model, sol, &gains, e)?;
        for (p, ip) in i.iter() {
            total += (v_s.get(p).unwrap() * ip.conj()).re;
        }
    }
    Ok(total)
}

/// Largest per-coordinate KCL mismatch over all buses except the slack and
/// regulator secondaries, computed directly from branch currents.
pub fn kcl_residual(model: &FeederModel, sol: &PowerFlowSolution) -> Result<f64, ZbusError> {
    let topo = Topology::build(model)?;
    let gains = secondary_gains(model, &sol.ratios)?;
    let mut leaving: Vec<PhaseVector<Complex64>> = model
        .buses
        .iter()
        .map(|b| PhaseVector::filled(b.phases, Complex64::default()))
        .collect();
    let edges = (0..model.lines.len())
        .map(EdgeRef::Line)
        .chain((0..model.svrs.len()).map(EdgeRef::Svr));
    for e in edges {
        let f = topo.from_index(model, e);
        let i = edge_current(model, sol, &gains, e)?;
        for (p, ip) in i.iter() {
            *leaving[f].get_mut(p).unwrap() += ip;
        }
        if let EdgeRef::Line(_) = e {
            let t = topo.to_index(model, e);
            for (p, ip) in i.iter() {
                *leaving[t].get_mut(p).unwrap() -= ip;
            }
        }
    }
    let secondaries: Vec<usize> = model.svrs.iter().map(|s| topo.bus_index[&s.to]).collect();
    let mut worst: f64 = 0.0;
    for (b, bus) in model.buses.iter().enumerate() {
        if b == topo.slack || secondaries.contains(&b) {
            continue;
        }
        let v = &sol.voltages[b];
        let shunt_i = bus.shunt.as_ref().map(|y| {
            let vv: Vec<Complex64> = y.mask().iter().map(|p| *v.get(p).unwrap()).collect();
            PhaseVector::new(y.mask(), y.mul_vec(&vv)).unwrap()
        });
        for (p, vp) in v.iter() {
            let s = bus.load.get(p).copied().unwrap_or_default();
            let inj = if s == Complex64::default() { s } else { (-s / vp).conj() };
            let sh = shunt_i.as_ref().and_then(|x| x.get(p).ok().copied()).unwrap_or_default();
            worst = worst.max((leaving[b].get(p).unwrap() + sh - inj).norm());
        }
    }
    Ok(worst)
}

/// Maximum percent unbalance over buses with at least two phases.
pub fn voltage_unbalance(sol: &PowerFlowSolution) -> f64 {
    sol.voltages
        .iter()
        .filter(|v| v.mask().len() >= 2)
        .map(|v| {
            let mags: Vec<f64> = v.values().iter().map(|x| x.norm()).collect();
            let avg = mags.iter().sum::<f64>() / mags.len() as f64;
            100.0 * mags.iter().map(|m| (m - avg).abs()).fold(0.0, f64::max) / avg
        })
        .fold(0.0, f64::max)
}

/// `(min, max)` voltage magnitude over non-slack buses and phases.
pub fn voltage_envelope(sol: &PowerFlowSolution) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (b, v) in sol.voltages.iter().enumerate() {
        if b == sol.slack {
            continue;
        }
        for x in v.values() {
            lo = lo.min(x.norm());
            hi = hi.max(x.norm());
        }
    }
    (lo, hi)
}

pub fn feasibility(sol: &PowerFlowSolution, v_min: f64, v_max: f64) -> bool {
    let (lo, hi) = voltage_envelope(sol);
    v_min <= lo && hi <= v_max
}

/// CSV dump: `bus,phase,re,im,magnitude,angle_deg`.
pub fn write_solution_csv<W: Write>(model: &FeederModel, sol: &PowerFlowSolution, mut w: W) -> io::Result<()> {
    writeln!(w, "bus,phase,re,im,magnitude,angle_deg")?;
    for (bus, v) in model.buses.iter().zip(&sol.voltages) {
        for (p, x) in v.iter() {
            writeln!(
                w,
                "{},{},{:.12},{:.12},{:.12},{:.9}",
                bus.id,
                p.as_char(),
                x.re,
                x.im,
                x.norm(),
                x.arg().to_degrees()
            )?;
        }
    }
    Ok(())
}
