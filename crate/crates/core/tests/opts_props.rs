mod common;

use common::{c, fixture, mid_regulator, random_feeder, svr_balance_gap, FeederGen};
use opts_core::opts::{evaluate_taps, svr_ratio_bounds, tap_combinations, taps_from_index, VariableMap};
use opts_core::{
    build_lp, constants_from_solution, linear_powerflow, recover_ratios, residuals, run_opts, solve_lp, solve_zbus,
    FeederModel, LpSolution, LpStatus, OptsConfig, PhaseVector, RatioVector, SimplexOptions,
    SparseLp, SvrKind, ZbusOptions,
};
use proptest::prelude::*;

/// Census computed from the model alone.
fn census(model: &FeederModel) -> (usize, usize) {
    let slack = model.slack_index().unwrap();
    let bus_phases: usize = model
        .buses
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != slack)
        .map(|(_, b)| b.phases.len())
        .sum();
    let line_phases: usize = model.lines.iter().map(|l| l.phases().len()).sum();
    let svr_phases: usize = model.svrs.iter().map(|s| s.phases.len()).sum();
    (bus_phases + 2 * (line_phases + svr_phases) + 2 * svr_phases, 3 * line_phases + 4 * svr_phases)
}

fn lp_for(model: &FeederModel, config: &OptsConfig) -> (SparseLp, VariableMap) {
    let base = solve_zbus(model, &RatioVector::identity(model), &config.zbus, None).unwrap();
    let k = constants_from_solution(model, &base).unwrap();
    build_lp(model, &k, config).unwrap()
}

#[test]
fn census_on_fixtures() {
    let cfg = OptsConfig::default();
    for (name, vars, rows) in [("ieee13.json", 111, 108), ("tiny3.json", 8, 7), ("two_bus.json", 3, 3)] {
        let model = fixture(name);
        let (lp, map) = lp_for(&model, &cfg);
        assert_eq!((lp.num_vars(), lp.num_rows()), (vars, rows), "{name}");
        assert_eq!(census(&model), (vars, rows), "{name}");
        assert_eq!(
            map.rows_voltage + map.rows_balance + map.rows_svr_ineq + map.rows_svr_balance,
            rows
        );
    }
    // a single-phase regulator adds two inequality and two balance rows
    let tiny = fixture("tiny3.json");
    let (_, map) = lp_for(&tiny, &cfg);
    assert_eq!((map.rows_svr_ineq, map.rows_svr_balance), (2, 2));
    let two = fixture("two_bus.json");
    let (_, map) = lp_for(&two, &cfg);
    assert_eq!((map.v.len(), map.s.len(), map.rows_voltage, map.rows_balance), (1, 1, 1, 2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn regulator_inequalities_hold_for_exact_ratios(r_frac in 0.0f64..=1.0, v_sec in 0.5f64..1.5, type_a in any::<bool>()) {
        let kind = if type_a { SvrKind::A } else { SvrKind::B };
        let model = mid_regulator(kind);
        let cfg = OptsConfig::default();
        let (lp, map) = lp_for(&model, &cfg);
        let (lo, hi) = svr_ratio_bounds(&model, 0, &cfg);
        let r = lo + r_frac * (hi - lo);
        let a = opts_core::Phase::A;
        let (p, s) = (model.bus_index("p").unwrap(), model.bus_index("r").unwrap());
        // the exact relation for each kind
        let (vp, vs) = match kind {
            SvrKind::B => (r * r * v_sec, v_sec),
            SvrKind::A => (v_sec, r * r * v_sec),
        };
        let mut x = vec![0.0; lp.num_vars()];
        x[map.v[&(p, a)]] = vp;
        x[map.v[&(s, a)]] = vs;
        let (big, small) = if kind == SvrKind::B { (vp, vs) } else { (vs, vp) };
        let (slo, shi) = map.svr_slack[&(0, a)];
        x[slo] = big - lo * lo * small;
        x[shi] = hi * hi * small - big;
        prop_assert!(x[slo] >= -1e-12 && x[shi] >= -1e-12);
        // the two inequality rows are satisfied exactly by these surpluses
        let ax = lp.a.mul_vec(&x);
        for (row, _, _) in lp.a.iter().filter(|&(_, j, _)| j == slo || j == shi) {
            prop_assert!((ax[row] - lp.b[row]).abs() < 1e-12);
        }
        // and recovery lands back on r
        let sol = LpSolution { status: LpStatus::Optimal, x, objective: 0.0, iterations: 0 };
        let rec = recover_ratios(&sol, &map, &model, &cfg).unwrap();
        let got = rec.ratio(0, a).unwrap();
        prop_assert!((got - r).abs() < 1e-12);
        prop_assert!(got >= lo && got <= hi);
    }
}

#[test]
fn recover_ratio_examples() {
    let model = mid_regulator(SvrKind::B);
    let cfg = OptsConfig::default();
    let (lp, map) = lp_for(&model, &cfg);
    let a = opts_core::Phase::A;
    let (p, s) = (model.bus_index("p").unwrap(), model.bus_index("r").unwrap());
    let mut x = vec![0.0; lp.num_vars()];
    let mut sol = |vp: f64, vs: f64| {
        x[map.v[&(p, a)]] = vp;
        x[map.v[&(s, a)]] = vs;
        LpSolution {
            status: LpStatus::Optimal,
            x: x.clone(),
            objective: 0.0,
            iterations: 0,
        }
    };
    let r = |s: &LpSolution| recover_ratios(s, &map, &model, &cfg).map(|v| v.ratio(0, a).unwrap());
    assert!((r(&sol(1.0, 1.0)).unwrap() - 1.0).abs() < 1e-15);
    assert!((r(&sol(0.81, 1.0)).unwrap() - 0.9).abs() < 1e-15);
    // within the clamp tolerance
    assert_eq!(r(&sol(0.81 * (1.0 - 1e-7), 1.0)).unwrap(), 0.9);
    assert!(r(&sol(0.7, 1.0)).is_err());
    assert!(r(&sol(0.0, 1.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn optimal_lp_solutions_balance_at_secondaries(seed in any::<u64>(), svrs in 1usize..3) {
        let model = random_feeder(seed, &FeederGen { svrs, ..FeederGen::default() });
        let cfg = OptsConfig { v_min: 0.8, v_max: 1.2, ..OptsConfig::default() };
        let (lp, map) = lp_for(&model, &cfg);
        let sol = solve_lp(&lp, &SimplexOptions::default()).unwrap();
        if sol.status == LpStatus::Optimal {
            prop_assert!(svr_balance_gap(&model, &map, &sol.x) <= 1e-7);
            prop_assert!(residuals(&lp, &sol.x).0 <= 1e-7);
        }
    }

    #[test]
    fn lp_optimum_never_exceeds_zero_tap_point(seed in any::<u64>()) {
        let model = random_feeder(seed, &FeederGen::default());
        let cfg = OptsConfig { v_min: 0.8, v_max: 1.2, ..OptsConfig::default() };
        let zero = RatioVector::identity(&model);
        let base = solve_zbus(&model, &zero, &cfg.zbus, None).unwrap();
        let k = constants_from_solution(&model, &base).unwrap();
        let lin = linear_powerflow(&model, &k, &zero).unwrap();
        let inside = lin.v2.iter().enumerate().filter(|(b, _)| *b != base.slack).all(|(_, v)| {
            v.values().iter().all(|x| *x >= cfg.v_min * cfg.v_min && *x <= cfg.v_max * cfg.v_max)
        });
        prop_assume!(inside);
        let topo = opts_core::net_model::Topology::build(&model).unwrap();
        let zero_obj: f64 = topo
            .head_edges()
            .iter()
            .map(|e| match e {
                opts_core::net_model::EdgeRef::Line(i) => lin.line_flows[*i].values().iter().map(|s| s.re).sum::<f64>(),
                opts_core::net_model::EdgeRef::Svr(i) => lin.svr_flows[*i].values().iter().map(|s| s.re).sum::<f64>(),
            })
            .sum();
        let report = run_opts(&model, &cfg).unwrap();
        prop_assert!(report.objective_lp.unwrap() <= zero_obj + 1e-9);
    }

    #[test]
    fn snapped_ratios_match_taps(seed in any::<u64>()) {
        let model = random_feeder(seed, &FeederGen::default());
        let cfg = OptsConfig { v_min: 0.8, v_max: 1.2, ..OptsConfig::default() };
        let report = run_opts(&model, &cfg).unwrap();
        prop_assert_eq!(report.taps.to_ratios(&model).unwrap(), report.ratios.clone());
        prop_assert_eq!(report.lp_ratios.to_taps(&model), report.taps);
    }
}

#[test]
fn ieee13_balance_and_monotone_import() {
    let model = fixture("ieee13.json");
    let cfg = OptsConfig::for_feeder(&model);
    let (lp, map) = lp_for(&model, &cfg);
    let sol = solve_lp(&lp, &SimplexOptions::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!(svr_balance_gap(&model, &map, &sol.x) <= 1e-7);
    assert!(residuals(&lp, &sol.x).0 <= 1e-7);

    let with = run_opts(&model, &cfg).unwrap();
    let without = run_opts(&model.without_svrs(), &cfg).unwrap();
    assert!(with.objective_verified <= without.objective_verified);
    assert!(without.taps.0.is_empty());
    assert!(without.objective_lp.is_none());
}

#[test]
fn tiny3_within_half_percent_of_exhaustive_best() {
    let model = fixture("tiny3.json");
    let cfg = OptsConfig::for_feeder(&model);
    assert_eq!(tap_combinations(&model), 33);
    let mut best: Option<(f64, Vec<i32>)> = None;
    for k in 0..tap_combinations(&model) {
        let taps = taps_from_index(&model, k);
        if let Some((obj, true)) = evaluate_taps(&model, &taps, &cfg).unwrap() {
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, taps.flat()));
            }
        }
    }
    let (best, _) = best.expect("some tap setting is feasible");
    let report = run_opts(&model, &cfg).unwrap();
    assert!(report.feasible);
    assert!(report.objective_verified <= best * 1.005, "{} vs {best}", report.objective_verified);
}

#[test]
fn tap_grid_is_lexicographic() {
    let model = fixture("ieee13.json");
    assert_eq!(tap_combinations(&model), 33 * 33 * 33);
    assert_eq!(taps_from_index(&model, 0).flat(), vec![-16, -16, -16]);
    assert_eq!(taps_from_index(&model, 1).flat(), vec![-16, -16, -15]);
    assert_eq!(taps_from_index(&model, 33).flat(), vec![-16, -15, -16]);
    assert_eq!(taps_from_index(&model, 33 * 33 * 33 - 1).flat(), vec![16, 16, 16]);
}

#[test]
fn unconverged_base_is_a_stage_error() {
    let mut model = fixture("tiny3.json");
    model.buses[2].load = PhaseVector::filled("a".parse().unwrap(), c(30.0, 10.0));
    let cfg = OptsConfig {
        zbus: ZbusOptions {
            max_iter: 20,
            ..ZbusOptions::default()
        },
        ..OptsConfig::for_feeder(&model)
    };
    let err = run_opts(&model, &cfg).unwrap_err();
    assert!(err.to_string().starts_with("base_power_flow"), "{err}");
}
