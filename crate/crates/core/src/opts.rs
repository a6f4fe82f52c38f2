//! Optimal regulator tap selection: LP construction over the linearized
//! model, ratio recovery, tap snapping and nonlinear verification.

use std::collections::HashMap;
use std::io::{self, Write};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::lin3f::{constants_balanced, constants_from_solution, LinError, LinearizationConstants};
use crate::lp::{residuals, solve_lp, LpSolution, LpStatus, SimplexOptions, SparseLp, SparseMatrix};
use crate::net_model::{
    EdgeRef, FeederModel, Phase, PhaseVector, RatioVector, SvrKind, TapVector, Topology, TopologyError,
};
use crate::zbus_pf::{
    feasibility, import_objective, solve_zbus, voltage_envelope, voltage_unbalance, PowerFlowSolution, ZbusError,
    ZbusOptions,
};

/// Recovered ratios this far outside their bounds are clamped silently.
const CLAMP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsMode {
    Balanced,
    FromZeroTapSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptsConfig {
    /// Voltage limits imposed inside the LP.
    pub v_min: f64,
    pub v_max: f64,
    /// Band used to judge the verified profile.
    pub verify_vmin: f64,
    pub verify_vmax: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub zbus: ZbusOptions,
    pub constants_mode: ConstantsMode,
    pub lp_max_iter: usize,
}

impl Default for OptsConfig {
    fn default() -> Self {
        OptsConfig {
            v_min: 0.9,
            v_max: 1.1,
            verify_vmin: 0.9,
            verify_vmax: 1.1,
            r_min: 0.9,
            r_max: 1.1,
            zbus: ZbusOptions::default(),
            constants_mode: ConstantsMode::FromZeroTapSolution,
            lp_max_iter: SimplexOptions::default().max_iter,
        }
    }
}

impl OptsConfig {
    /// Built-in defaults overridden by whatever the feeder file specifies.
    pub fn for_feeder(model: &FeederModel) -> OptsConfig {
        let d = &model.defaults;
        let base = OptsConfig::default();
        let zbus = ZbusOptions {
            tol: d.tol.unwrap_or(base.zbus.tol),
            max_iter: d.max_iter.unwrap_or(base.zbus.max_iter),
            ..base.zbus
        };
        OptsConfig {
            v_min: d.vmin.unwrap_or(base.v_min),
            v_max: d.vmax.unwrap_or(base.v_max),
            verify_vmin: d.verify_vmin.unwrap_or(base.verify_vmin),
            verify_vmax: d.verify_vmax.unwrap_or(base.verify_vmax),
            zbus,
            ..base
        }
    }

    pub fn check(&self) -> Result<(), OptsError> {
        let ok = 0.0 < self.v_min
            && self.v_min < self.v_max
            && 0.0 < self.verify_vmin
            && self.verify_vmin < self.verify_vmax
            && 0.0 < self.r_min
            && self.r_min < self.r_max
            && self.zbus.tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(OptsError::Config(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    BasePowerFlow,
    Constants,
    BuildLp,
    SolveLp,
    Recover,
    Verify,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::BasePowerFlow => "base_power_flow",
            Stage::Constants => "constants",
            Stage::BuildLp => "build_lp",
            Stage::SolveLp => "solve_lp",
            Stage::Recover => "recover",
            Stage::Verify => "verify",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OptsError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("constants do not cover the feeder: {0}")]
    Constants(String),
    #[error("regulator {svr} phase {phase}: nonpositive squared voltage in LP solution")]
    NonPositiveVoltage { svr: usize, phase: Phase },
    #[error("regulator {svr} phase {phase}: recovered ratio {ratio} outside [{lo}, {hi}]")]
    RatioOutOfRange { svr: usize, phase: Phase, ratio: f64, lo: f64, hi: f64 },
    #[error("{}: {source}", stage.name())]
    Stage {
        stage: Stage,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("{}: power flow did not converge ({iterations} iterations, residual {residual:e})", stage.name())]
    Diverged { stage: Stage, iterations: usize, residual: f64 },
    #[error("LP {status:?} after {iterations} iterations")]
    Lp { status: LpStatus, iterations: usize },
}

impl OptsError {
    fn at(stage: Stage, e: impl std::error::Error + Send + Sync + 'static) -> OptsError {
        OptsError::Stage {
            stage,
            source: Box::new(e),
        }
    }
}

/// Column indices of the LP variables.
#[derive(Debug, Clone)]
pub struct VariableMap {
    /// Squared magnitude per non-slack (bus, phase).
    pub v: HashMap<(usize, Phase), usize>,
    /// `(Re, Im)` of the sending-end flow per (edge, phase).
    pub s: HashMap<(EdgeRef, Phase), (usize, usize)>,
    /// Nonnegative surplus columns of the two regulator inequalities.
    pub svr_slack: HashMap<(usize, Phase), (usize, usize)>,
    /// Fixed squared slack voltage per phase.
    pub slack: usize,
    pub slack_v2: PhaseVector<f64>,
    pub num_vars: usize,
    /// Rows by kind: voltage drop, power balance (Re and Im each counted),
    /// regulator inequality, regulator balance.
    pub rows_voltage: usize,
    pub rows_balance: usize,
    pub rows_svr_ineq: usize,
    pub rows_svr_balance: usize,
}

impl VariableMap {
    /// Squared magnitude at a bus: an LP column or the fixed slack value.
    fn v_term(&self, bus: usize, p: Phase) -> Result<usize, f64> {
        if bus == self.slack {
            Err(*self.slack_v2.get(p).expect("slack phase"))
        } else {
            Ok(self.v[&(bus, p)])
        }
    }

    pub fn v_value(&self, x: &[f64], bus: usize, p: Phase) -> f64 {
        match self.v_term(bus, p) {
            Ok(j) => x[j],
            Err(c) => c,
        }
    }
}

/// Effective ratio bounds of one regulator: the configured band intersected
/// with what its tap range can reach.
pub fn svr_ratio_bounds(model: &FeederModel, svr: usize, config: &OptsConfig) -> (f64, f64) {
    let (lo, hi) = model.svrs[svr].ratio_bounds();
    (lo.max(config.r_min), hi.min(config.r_max))
}

struct Builder {
    trip: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
}

impl Builder {
    fn row(&mut self, terms: &[(Result<usize, f64>, f64)], rhs: f64) {
        let r = self.b.len();
        let mut rhs = rhs;
        for &(t, coef) in terms {
            match t {
                Ok(j) => self.trip.push((r, j, coef)),
                Err(constant) => rhs -= coef * constant,
            }
        }
        self.b.push(rhs);
    }
}

/// Builds the tap-selection LP.
pub fn build_lp(
    model: &FeederModel,
    constants: &LinearizationConstants,
    config: &OptsConfig,
) -> Result<(SparseLp, VariableMap), OptsError> {
    constants
        .check(model)
        .map_err(|e| OptsError::Constants(e.to_string()))?;
    let topo = Topology::build(model)?;
    let mut map = VariableMap {
        v: HashMap::new(),
        s: HashMap::new(),
        svr_slack: HashMap::new(),
        slack: topo.slack,
        slack_v2: model.slack_voltage.map(|v| v.norm_sqr()),
        num_vars: 0,
        rows_voltage: 0,
        rows_balance: 0,
        rows_svr_ineq: 0,
        rows_svr_balance: 0,
    };
    let mut names = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut new_var = |name: String, lo: f64, hi: f64| {
        names.push(name);
        lower.push(lo);
        upper.push(hi);
        names.len() - 1
    };

    let (v2_lo, v2_hi) = (config.v_min * config.v_min, config.v_max * config.v_max);
    for &b in &topo.order {
        if b == topo.slack {
            continue;
        }
        let bus = &model.buses[b];
        for p in bus.phases.iter() {
            let j = new_var(format!("v[{}.{}]", bus.id, p.as_char()), v2_lo, v2_hi);
            map.v.insert((b, p), j);
        }
    }
    let edge_name = |e: EdgeRef| format!("{}->{}", crate::net_model::edge_from(model, e), crate::net_model::edge_to(model, e));
    for &b in &topo.order {
        let Some(e) = topo.parent[b] else { continue };
        for p in crate::net_model::edge_phases(model, e).iter() {
            let name = edge_name(e);
            let re = new_var(format!("P[{name}.{}]", p.as_char()), f64::NEG_INFINITY, f64::INFINITY);
            let im = new_var(format!("Q[{name}.{}]", p.as_char()), f64::NEG_INFINITY, f64::INFINITY);
            map.s.insert((e, p), (re, im));
        }
    }
    for (i, svr) in model.svrs.iter().enumerate() {
        for p in svr.phases.iter() {
            let lo = new_var(format!("slo[{}.{}]", svr.label(), p.as_char()), 0.0, f64::INFINITY);
            let hi = new_var(format!("shi[{}.{}]", svr.label(), p.as_char()), 0.0, f64::INFINITY);
            map.svr_slack.insert((i, p), (lo, hi));
        }
    }
    map.num_vars = names.len();

    let mut bld = Builder {
        trip: Vec::new(),
        b: Vec::new(),
    };
    for &m in &topo.order {
        let Some(e) = topo.parent[m] else { continue };
        let n = topo.from_index(model, e);
        let gamma = &constants.gamma[m];
        match e {
            EdgeRef::Line(li) => {
                let line = &model.lines[li];
                let mask = line.phases();
                // v_n - v_m - 2 Re{Σ γ conj(z) (S - L)} = H
                for p in mask.iter() {
                    let mut terms = vec![(map.v_term(n, p), 1.0), (map.v_term(m, p), -1.0)];
                    let mut rhs = *constants.h[li].get(p).unwrap();
                    for q in mask.iter() {
                        let c = gamma.get(p, q).unwrap() * line.z.get(p, q).unwrap().conj();
                        let (re, im) = map.s[&(e, q)];
                        terms.push((Ok(re), -2.0 * c.re));
                        terms.push((Ok(im), 2.0 * c.im));
                        rhs -= 2.0 * (c * constants.l[li].get(q).unwrap()).re;
                    }
                    bld.row(&terms, rhs);
                    map.rows_voltage += 1;
                }
                // S - Σ S_out - (γ ⊙ conj(Y)) v = load + L
                let bus = &model.buses[m];
                for p in mask.iter() {
                    let load = bus.load.get(p).copied().unwrap_or_default() + constants.l[li].get(p).unwrap();
                    let (re, im) = map.s[&(e, p)];
                    let mut re_terms = vec![(Ok(re), 1.0)];
                    let mut im_terms = vec![(Ok(im), 1.0)];
                    for &out in &topo.children[m] {
                        if let Some(&(ore, oim)) = map.s.get(&(out, p)) {
                            re_terms.push((Ok(ore), -1.0));
                            im_terms.push((Ok(oim), -1.0));
                        }
                    }
                    if let Some(y) = &bus.shunt {
                        if y.mask().contains(p) {
                            for q in y.mask().iter() {
                                let c: Complex64 = gamma.get(p, q).unwrap() * y.get(p, q).unwrap().conj();
                                re_terms.push((map.v_term(m, q), -c.re));
                                im_terms.push((map.v_term(m, q), -c.im));
                            }
                        }
                    }
                    bld.row(&re_terms, load.re);
                    bld.row(&im_terms, load.im);
                    map.rows_balance += 2;
                }
            }
            EdgeRef::Svr(si) => {
                let svr = &model.svrs[si];
                let (r_lo, r_hi) = svr_ratio_bounds(model, si, config);
                for p in svr.phases.iter() {
                    // type B: v_n = r² v_n'; type A: v_n' = r² v_n
                    let (big, small) = match svr.kind {
                        SvrKind::B => (map.v_term(n, p), map.v_term(m, p)),
                        SvrKind::A => (map.v_term(m, p), map.v_term(n, p)),
                    };
                    let (slo, shi) = map.svr_slack[&(si, p)];
                    bld.row(&[(big, 1.0), (small, -r_lo * r_lo), (Ok(slo), -1.0)], 0.0);
                    bld.row(&[(small, r_hi * r_hi), (big, -1.0), (Ok(shi), -1.0)], 0.0);
                    map.rows_svr_ineq += 2;

                    let (re, im) = map.s[&(e, p)];
                    let mut re_terms = vec![(Ok(re), 1.0)];
                    let mut im_terms = vec![(Ok(im), 1.0)];
                    for &out in &topo.children[m] {
                        if let Some(&(ore, oim)) = map.s.get(&(out, p)) {
                            re_terms.push((Ok(ore), -1.0));
                            im_terms.push((Ok(oim), -1.0));
                        }
                    }
                    bld.row(&re_terms, 0.0);
                    bld.row(&im_terms, 0.0);
                    map.rows_svr_balance += 2;
                }
            }
        }
    }

    let mut c = vec![0.0; map.num_vars];
    for &e in topo.head_edges() {
        for p in crate::net_model::edge_phases(model, e).iter() {
            c[map.s[&(e, p)].0] = 1.0;
        }
    }
    let rows = bld.b.len();
    let lp = SparseLp {
        a: SparseMatrix::from_triplets(rows, map.num_vars, bld.trip),
        b: bld.b,
        c,
        lower,
        upper,
        names: Some(names),
    };
    Ok((lp, map))
}

/// Ratios implied by the squared voltages across each regulator.
pub fn recover_ratios(
    sol: &LpSolution,
    map: &VariableMap,
    model: &FeederModel,
    config: &OptsConfig,
) -> Result<RatioVector, OptsError> {
    let topo = Topology::build(model)?;
    let mut out = Vec::with_capacity(model.svrs.len());
    for (i, svr) in model.svrs.iter().enumerate() {
        let (lo, hi) = svr_ratio_bounds(model, i, config);
        let (n, m) = (topo.bus_index[&svr.from], topo.bus_index[&svr.to]);
        let mut vals = Vec::with_capacity(svr.phases.len());
        for p in svr.phases.iter() {
            let (vn, vm) = (map.v_value(&sol.x, n, p), map.v_value(&sol.x, m, p));
            if !(vn > 0.0 && vm > 0.0) {
                return Err(OptsError::NonPositiveVoltage { svr: i, phase: p });
            }
            let r = match svr.kind {
                SvrKind::B => (vn / vm).sqrt(),
                SvrKind::A => (vm / vn).sqrt(),
            };
            if r < lo - CLAMP_TOL || r > hi + CLAMP_TOL {
                return Err(OptsError::RatioOutOfRange {
                    svr: i,
                    phase: p,
                    ratio: r,
                    lo,
                    hi,
                });
            }
            vals.push(r.clamp(lo, hi));
        }
        out.push(PhaseVector::new(svr.phases, vals).expect("mask arity"));
    }
    Ok(RatioVector(out))
}

/// `(verified − lower_bound) / lower_bound` in percent. Negative results are
/// returned unchanged.
pub fn optimality_gap(verified: f64, lower_bound: f64) -> Result<f64, OptsError> {
    if lower_bound.is_nan() || lower_bound <= 0.0 {
        return Err(OptsError::Config(format!("lower bound must be positive, got {lower_bound}")));
    }
    Ok((verified - lower_bound) / lower_bound * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptsReport {
    pub taps: TapVector,
    pub ratios: RatioVector,
    /// Continuous ratios straight from the LP, before snapping.
    pub lp_ratios: RatioVector,
    /// `None` when there is no regulator and the LP is skipped.
    pub objective_lp: Option<f64>,
    pub objective_verified: f64,
    pub v_envelope: (f64, f64),
    pub feasible: bool,
    pub unbalance: f64,
    pub gap_percent: Option<f64>,
    pub lp_iterations: usize,
    pub zbus_iterations: usize,
    pub timings: Vec<StageTiming>,
    pub solution: PowerFlowSolution,
}

fn converged(sol: PowerFlowSolution, stage: Stage) -> Result<PowerFlowSolution, OptsError> {
    if sol.converged {
        Ok(sol)
    } else {
        Err(OptsError::Diverged {
            stage,
            iterations: sol.iterations,
            residual: sol.residual,
        })
    }
}

fn zbus_at(model: &FeederModel, ratios: &RatioVector, config: &OptsConfig, stage: Stage) -> Result<PowerFlowSolution, OptsError> {
    let sol = solve_zbus(model, ratios, &config.zbus, None).map_err(|e| OptsError::at(stage, e))?;
    converged(sol, stage)
}

/// The full pipeline: base power flow at taps 0, constants, LP, ratio
/// recovery and snapping, verification at the snapped taps.
pub fn run_opts(model: &FeederModel, config: &OptsConfig) -> Result<OptsReport, OptsError> {
    config.check()?;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |stage: Stage, timings: &mut Vec<StageTiming>| {
        timings.push(StageTiming {
            stage,
            seconds: clock.elapsed().as_secs_f64(),
        });
        clock = Instant::now();
    };

    let zero = RatioVector::identity(model);
    let base = zbus_at(model, &zero, config, Stage::BasePowerFlow)?;
    lap(Stage::BasePowerFlow, &mut timings);

    let (ratios, taps, lp_ratios, objective_lp, lp_iterations) = if model.svrs.is_empty() {
        (zero.clone(), TapVector(vec![]), zero, None, 0)
    } else {
        let constants = match config.constants_mode {
            ConstantsMode::Balanced => constants_balanced(model),
            ConstantsMode::FromZeroTapSolution => {
                constants_from_solution(model, &base).map_err(|e: LinError| OptsError::at(Stage::Constants, e))?
            }
        };
        lap(Stage::Constants, &mut timings);

        let (lp, map) = build_lp(model, &constants, config)?;
        lap(Stage::BuildLp, &mut timings);

        let sol = solve_lp(
            &lp,
            &SimplexOptions {
                max_iter: config.lp_max_iter,
            },
        )
        .map_err(|e| OptsError::at(Stage::SolveLp, e))?;
        if sol.status != LpStatus::Optimal {
            return Err(OptsError::Lp {
                status: sol.status,
                iterations: sol.iterations,
            });
        }
        debug_assert!(residuals(&lp, &sol.x).0 <= 1e-7);
        lap(Stage::SolveLp, &mut timings);

        let lp_ratios = recover_ratios(&sol, &map, model, config)?;
        let taps = lp_ratios.to_taps(model);
        let snapped = taps.to_ratios(model).map_err(|e| OptsError::at(Stage::Recover, e))?;
        lap(Stage::Recover, &mut timings);
        (snapped, taps, lp_ratios, Some(sol.objective), sol.iterations)
    };

    let verified = if model.svrs.is_empty() {
        base
    } else {
        zbus_at(model, &ratios, config, Stage::Verify)?
    };
    let objective_verified = import_objective(&verified, model).map_err(|e: ZbusError| OptsError::at(Stage::Verify, e))?;
    let v_envelope = voltage_envelope(&verified);
    let feasible = feasibility(&verified, config.verify_vmin, config.verify_vmax);
    let unbalance = voltage_unbalance(&verified);
    lap(Stage::Verify, &mut timings);

    Ok(OptsReport {
        taps,
        ratios,
        lp_ratios,
        objective_lp,
        objective_verified,
        v_envelope,
        feasible,
        unbalance,
        gap_percent: None,
        lp_iterations,
        zbus_iterations: verified.iterations,
        timings,
        solution: verified,
    })
}

/// Number of points in the full tap grid (every regulator phase over its
/// range), saturating.
pub fn tap_combinations(model: &FeederModel) -> usize {
    model
        .svrs
        .iter()
        .flat_map(|s| std::iter::repeat_n(s.tap_range().count(), s.phases.len()))
        .fold(1usize, |acc, k| acc.saturating_mul(k))
}

/// The `index`-th tap vector of the grid in lexicographic order (regulator,
/// then phase, most significant first).
pub fn taps_from_index(model: &FeederModel, mut index: usize) -> TapVector {
    let ranges: Vec<_> = model
        .svrs
        .iter()
        .flat_map(|s| std::iter::repeat_n(s.tap_range(), s.phases.len()))
        .collect();
    let mut flat = vec![0i32; ranges.len()];
    for (k, r) in ranges.iter().enumerate().rev() {
        let n = r.count();
        flat[k] = r.min + (index % n) as i32;
        index /= n;
    }
    TapVector::from_flat(model, &flat).expect("grid matches regulators")
}

/// Verified import and feasibility at fixed taps. `Ok(None)` when the power
/// flow does not converge.
pub fn evaluate_taps(model: &FeederModel, taps: &TapVector, config: &OptsConfig) -> Result<Option<(f64, bool)>, OptsError> {
    let ratios = taps.to_ratios(model).map_err(|e| OptsError::at(Stage::Verify, e))?;
    let sol = solve_zbus(model, &ratios, &config.zbus, None).map_err(|e| OptsError::at(Stage::Verify, e))?;
    if !sol.converged {
        return Ok(None);
    }
    let obj = import_objective(&sol, model).map_err(|e| OptsError::at(Stage::Verify, e))?;
    Ok(Some((obj, feasibility(&sol, config.verify_vmin, config.verify_vmax))))
}

#[derive(Debug, Serialize)]
struct SvrSettingJson {
    svr: String,
    phases: String,
    taps: Vec<i32>,
    ratios: Vec<f64>,
    lp_ratios: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct ReportJson<'a> {
    feeder: Option<&'a str>,
    svrs: Vec<SvrSettingJson>,
    objective_lp: Option<f64>,
    objective_verified: f64,
    v_min: f64,
    v_max: f64,
    feasible: bool,
    unbalance: f64,
    gap_percent: Option<f64>,
    lp_iterations: usize,
    zbus_iterations: usize,
    timings: &'a [StageTiming],
}

impl OptsReport {
    pub fn to_json(&self, model: &FeederModel) -> serde_json::Value {
        let svrs = model
            .svrs
            .iter()
            .enumerate()
            .map(|(i, s)| SvrSettingJson {
                svr: s.label(),
                phases: s.phases.to_string(),
                taps: self.taps.0[i].values().to_vec(),
                ratios: self.ratios.0[i].values().to_vec(),
                lp_ratios: self.lp_ratios.0[i].values().to_vec(),
            })
            .collect();
        serde_json::to_value(ReportJson {
            feeder: model.name.as_deref(),
            svrs,
            objective_lp: self.objective_lp,
            objective_verified: self.objective_verified,
            v_min: self.v_envelope.0,
            v_max: self.v_envelope.1,
            feasible: self.feasible,
            unbalance: self.unbalance,
            gap_percent: self.gap_percent,
            lp_iterations: self.lp_iterations,
            zbus_iterations: self.zbus_iterations,
            timings: &self.timings,
        })
        .expect("report serializes")
    }

    /// One summary row: `objective,gap_percent,v_min,v_max,feasible,unbalance`.
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "objective,gap_percent,v_min,v_max,feasible,unbalance")?;
        let gap = self.gap_percent.map(|g| format!("{g:.4}")).unwrap_or_default();
        writeln!(
            w,
            "{:.6},{},{:.6},{:.6},{},{:.4}",
            self.objective_verified, gap, self.v_envelope.0, self.v_envelope.1, self.feasible, self.unbalance
        )
    }

    /// One row per regulator phase: `svr,phase,tap,ratio`.
    pub fn write_taps_csv<W: Write>(&self, model: &FeederModel, mut w: W) -> io::Result<()> {
        writeln!(w, "svr,phase,tap,ratio")?;
        for (i, s) in model.svrs.iter().enumerate() {
            for (p, t) in self.taps.0[i].iter() {
                writeln!(w, "{},{},{},{:.6}", s.label(), p.as_char(), t, self.ratios.0[i].get(p).unwrap())?;
            }
        }
        Ok(())
    }
}
