mod common;

use std::collections::HashMap;

use common::{random_feeder, random_ratios, FeederGen};
use nalgebra::{DMatrix, DVector};
use opts_core::net_model::taps::secondary_gain;
use opts_core::{assemble, solve_zbus, Complex64, FeederModel, Phase, RatioVector, ZbusOptions};
use proptest::prelude::*;

/// Power flow with every regulator kept as an ideal transformer: unknowns are
/// all non-slack bus voltages plus the secondary-side transformer currents.
fn mna_reference(model: &FeederModel, ratios: &RatioVector) -> HashMap<(usize, Phase), Complex64> {
    let slack = model.slack_index().unwrap();
    let mut idx: HashMap<(usize, Phase), usize> = HashMap::new();
    for (b, bus) in model.buses.iter().enumerate() {
        if b != slack {
            for p in bus.phases.iter() {
                let k = idx.len();
                idx.insert((b, p), k);
            }
        }
    }
    let nv = idx.len();
    let mut t_idx: HashMap<(usize, Phase), usize> = HashMap::new();
    for (i, s) in model.svrs.iter().enumerate() {
        for p in s.phases.iter() {
            let k = nv + t_idx.len();
            t_idx.insert((i, p), k);
        }
    }
    let dim = nv + t_idx.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut m = DMatrix::from_element(dim, dim, zero);
    let mut rhs_const = DVector::from_element(dim, zero);
    let vs = |p: Phase| *model.slack_voltage.get(p).unwrap();

    // adds coef * v(b, p) to row `row`, moving slack terms to the right side
    let put = |m: &mut DMatrix<Complex64>, rhs: &mut DVector<Complex64>, row: usize, b: usize, p: Phase, coef: Complex64| {
        if b == slack {
            rhs[row] -= coef * vs(p);
        } else {
            m[(row, idx[&(b, p)])] += coef;
        }
    };

    for line in &model.lines {
        let w = line.z.inverse().unwrap();
        let f = model.bus_index(&line.from).unwrap();
        let t = model.bus_index(&line.to).unwrap();
        let ph: Vec<Phase> = line.phases().iter().collect();
        for (i, &p) in ph.iter().enumerate() {
            for (j, &q) in ph.iter().enumerate() {
                let y = w.at(i, j);
                if f != slack {
                    let r = idx[&(f, p)];
                    put(&mut m, &mut rhs_const, r, f, q, y);
                    put(&mut m, &mut rhs_const, r, t, q, -y);
                }
                let r = idx[&(t, p)];
                put(&mut m, &mut rhs_const, r, t, q, y);
                put(&mut m, &mut rhs_const, r, f, q, -y);
            }
        }
    }
    for (b, bus) in model.buses.iter().enumerate() {
        if let Some(y) = &bus.shunt {
            for p in y.mask().iter() {
                for q in y.mask().iter() {
                    m[(idx[&(b, p)], idx[&(b, q)])] += y.get(p, q).unwrap();
                }
            }
        }
    }
    for (i, s) in model.svrs.iter().enumerate() {
        let n = model.bus_index(&s.from).unwrap();
        let sec = model.bus_index(&s.to).unwrap();
        for p in s.phases.iter() {
            let g = secondary_gain(s.kind, ratios.ratio(i, p).unwrap());
            let k = t_idx[&(i, p)];
            // current g i_t leaves the primary, i_t enters the secondary
            if n != slack {
                m[(idx[&(n, p)], k)] += Complex64::new(g, 0.0);
            }
            m[(idx[&(sec, p)], k)] -= Complex64::new(1.0, 0.0);
            // v_sec − g v_n = 0
            m[(k, idx[&(sec, p)])] += Complex64::new(1.0, 0.0);
            put(&mut m, &mut rhs_const, k, n, p, Complex64::new(-g, 0.0));
        }
    }

    let lu = m.lu();
    let mut v = DVector::from_fn(dim, |k, _| {
        idx.iter()
            .find(|(_, &kk)| kk == k)
            .map(|((_, p), _)| vs(*p))
            .unwrap_or(zero)
    });
    for _ in 0..500 {
        let mut rhs = rhs_const.clone();
        for (&(b, p), &k) in &idx {
            let s = model.buses[b].load.get(p).copied().unwrap_or(zero);
            if s != zero {
                rhs[k] += (-s / v[k]).conj();
            }
        }
        let next = lu.solve(&rhs).unwrap();
        let dv = (&next - &v).iter().map(|d| d.norm()).fold(0.0, f64::max);
        v = next;
        if dv < 1e-14 {
            break;
        }
    }
    idx.into_iter().map(|(key, k)| (key, v[k])).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn elimination_matches_explicit_transformers(seed in any::<u64>(), svrs in 1usize..3) {
        let model = random_feeder(seed, &FeederGen { svrs, ..FeederGen::default() });
        let ratios = random_ratios(&model, seed);
        let opts = ZbusOptions { tol: 1e-14, residual_tol: 1e-12, max_iter: 500 };
        let sol = solve_zbus(&model, &ratios, &opts, None).unwrap();
        prop_assert!(sol.converged);
        for ((b, p), v) in mna_reference(&model, &ratios) {
            let got = sol.voltages[b].get(p).unwrap();
            prop_assert!((got - v).norm() <= 1e-10, "bus {} phase {p}: {got} vs {v}", model.buses[b].id);
        }
    }

    #[test]
    fn admittance_is_symmetric(seed in any::<u64>(), svrs in 0usize..3) {
        let model = random_feeder(seed, &FeederGen { svrs, ..FeederGen::default() });
        let sys = assemble(&model, &random_ratios(&model, seed)).unwrap();
        prop_assert!(sys.y.is_symmetric(1e-12));
    }

    #[test]
    fn unit_gains_and_no_shunts_give_zero_row_sums(seed in any::<u64>()) {
        let model = random_feeder(seed, &FeederGen { shunts: false, ..FeederGen::default() });
        let sys = assemble(&model, &RatioVector::identity(&model)).unwrap();
        let ones = vec![Complex64::new(1.0, 0.0); sys.dim()];
        let s1 = vec![Complex64::new(1.0, 0.0); sys.slack_phases.len()];
        let a = sys.y.mul_vec(&ones);
        let b = sys.y_ns.mul_vec(&s1);
        for k in 0..sys.dim() {
            // only phases present at the slack couple to it
            prop_assert!((a[k] + b[k]).norm() < 1e-9);
        }
    }
}

#[test]
fn matrix_market_dump_of_ieee13() {
    let model = common::fixture("ieee13.json");
    let sys = assemble(&model, &RatioVector::identity(&model)).unwrap();
    let mut buf = Vec::new();
    sys.y.write_matrix_market(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header: Vec<usize> = text.lines().nth(1).unwrap().split(' ').map(|x| x.parse().unwrap()).collect();
    // rg60 is eliminated: 35 non-slack bus phases minus 3
    assert_eq!(&header[..2], &[32, 32]);
    assert_eq!(header[2], sys.y.nnz());
}
