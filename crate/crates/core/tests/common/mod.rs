#![allow(dead_code)]

use std::path::PathBuf;

use opts_core::net_model::{BusSpec, FeederDefaults, LineSpec, SvrSpec};
use opts_core::net_model::{EdgeRef, Topology};
use opts_core::opts::VariableMap;
use opts_core::{parse_feeder, Complex64, FeederModel, PhaseMatrix, PhaseSet, PhaseVector, SvrKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> FeederModel {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_feeder(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn balanced_slack(mask: PhaseSet) -> PhaseVector<Complex64> {
    PhaseVector::from_fn(mask, |p| Complex64::from_polar(1.0, -120f64.to_radians() * p.index() as f64))
}

fn random_mask(rng: &mut ChaCha8Rng, within: PhaseSet) -> PhaseSet {
    let phases: Vec<_> = within.iter().collect();
    loop {
        let m = PhaseSet::from_phases(phases.iter().copied().filter(|_| rng.gen_bool(0.7)));
        if !m.is_empty() {
            return m;
        }
    }
}

/// Symmetric, resistive-inductive series impedance with weaker mutual terms.
fn random_z(rng: &mut ChaCha8Rng, mask: PhaseSet, scale: f64) -> PhaseMatrix {
    let n = mask.len();
    let mut rows = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        rows[i][i] = c(rng.gen_range(0.005..0.03), rng.gen_range(0.01..0.06)) * scale;
        for j in 0..i {
            let m = c(rng.gen_range(0.0..0.008), rng.gen_range(0.0..0.02)) * scale;
            rows[i][j] = m;
            rows[j][i] = m;
        }
    }
    PhaseMatrix::new(mask, rows).unwrap()
}

pub struct FeederGen {
    pub max_buses: usize,
    pub svrs: usize,
    pub load_scale: f64,
    pub shunts: bool,
    pub three_phase_root: bool,
}

impl Default for FeederGen {
    fn default() -> Self {
        FeederGen {
            max_buses: 7,
            svrs: 1,
            load_scale: 0.15,
            shunts: true,
            three_phase_root: true,
        }
    }
}

/// Random valid radial feeder. The first regulator (if any) sits at the
/// feeder head; further regulators are placed mid-feeder.
pub fn random_feeder(seed: u64, gen: &FeederGen) -> FeederModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root_mask = if gen.three_phase_root {
        PhaseSet::ABC
    } else {
        random_mask(&mut rng, PhaseSet::ABC)
    };
    let mut buses = vec![BusSpec {
        id: "s".into(),
        phases: root_mask,
        load: PhaseVector::filled(root_mask, c(0.0, 0.0)),
        shunt: None,
        is_slack: true,
    }];
    let mut lines = Vec::new();
    let mut svrs = Vec::new();
    // buses that may receive children (not regulator secondaries)
    let mut open: Vec<usize> = vec![0];

    let add_bus = |buses: &mut Vec<BusSpec>, mask: PhaseSet, rng: &mut ChaCha8Rng, loaded: bool| {
        let id = format!("b{}", buses.len());
        let load = PhaseVector::from_fn(mask, |_| {
            if loaded && rng.gen_bool(0.8) {
                c(rng.gen_range(0.0..1.0), rng.gen_range(-0.2..0.6)) * gen.load_scale
            } else {
                c(0.0, 0.0)
            }
        });
        let shunt = (loaded && gen.shunts && rng.gen_bool(0.3)).then(|| {
            PhaseMatrix::from_fn(mask, |p, q| if p == q { c(0.0, rng.gen_range(0.0..0.03)) } else { c(0.0, 0.0) })
        });
        buses.push(BusSpec {
            id: id.clone(),
            phases: mask,
            load,
            shunt,
            is_slack: false,
        });
        buses.len() - 1
    };

    let mut regs_left = gen.svrs;
    let target = rng.gen_range(2..=gen.max_buses.max(2));
    while buses.len() < target || regs_left > 0 {
        let parent = if regs_left == gen.svrs && regs_left > 0 {
            0
        } else {
            *open.choose(&mut rng).unwrap()
        };
        let mask = random_mask(&mut rng, buses[parent].phases);
        let mut from = parent;
        if regs_left > 0 {
            regs_left -= 1;
            let sec = add_bus(&mut buses, mask, &mut rng, false);
            svrs.push(SvrSpec {
                id: None,
                from: buses[parent].id.clone(),
                to: buses[sec].id.clone(),
                kind: if rng.gen_bool(0.5) { SvrKind::B } else { SvrKind::A },
                phases: mask,
                tap_min: -16,
                tap_max: 16,
                step: 0.00625,
            });
            from = sec;
        }
        let child = add_bus(&mut buses, mask, &mut rng, true);
        lines.push(LineSpec {
            from: buses[from].id.clone(),
            to: buses[child].id.clone(),
            z: random_z(&mut rng, mask, 1.0),
        });
        open.push(child);
    }

    FeederModel {
        name: Some(format!("random-{seed}")),
        buses,
        lines,
        svrs,
        slack_voltage: balanced_slack(root_mask),
        defaults: FeederDefaults::default(),
    }
}

/// Random in-range ratios for every regulator phase.
pub fn random_ratios(model: &FeederModel, seed: u64) -> opts_core::RatioVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    opts_core::RatioVector(
        model
            .svrs
            .iter()
            .map(|s| {
                let (lo, hi) = s.ratio_bounds();
                PhaseVector::from_fn(s.phases, |_| rng.gen_range(lo..=hi))
            })
            .collect(),
    )
}

/// Tiny feeder: slack, one single-phase regulator, one line, one loaded bus
/// (plus an optional extra bus).
pub fn tiny_feeder(seed: u64) -> FeederModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: PhaseSet = "a".parse().unwrap();
    let bus = |id: &str, load: Complex64, slack: bool| BusSpec {
        id: id.into(),
        phases: a,
        load: PhaseVector::filled(a, load),
        shunt: None,
        is_slack: slack,
    };
    let mut buses = vec![bus("s", c(0.0, 0.0), true), bus("r", c(0.0, 0.0), false)];
    let z = |rng: &mut ChaCha8Rng| PhaseMatrix::diagonal(a, c(rng.gen_range(0.01..0.04), rng.gen_range(0.02..0.08)));
    let load = |rng: &mut ChaCha8Rng| c(rng.gen_range(0.3..1.2), rng.gen_range(0.0..0.5));
    buses.push(bus("m", load(&mut rng), false));
    let mut lines = vec![LineSpec {
        from: "r".into(),
        to: "m".into(),
        z: z(&mut rng),
    }];
    if rng.gen_bool(0.5) {
        buses.push(bus("k", load(&mut rng), false));
        lines.push(LineSpec {
            from: "m".into(),
            to: "k".into(),
            z: z(&mut rng),
        });
    }
    FeederModel {
        name: Some(format!("tiny-{seed}")),
        buses,
        lines,
        svrs: vec![SvrSpec {
            id: None,
            from: "s".into(),
            to: "r".into(),
            kind: if rng.gen_bool(0.5) { SvrKind::B } else { SvrKind::A },
            phases: a,
            tap_min: -16,
            tap_max: 16,
            step: 0.00625,
        }],
        slack_voltage: PhaseVector::filled(a, c(1.0, 0.0)),
        defaults: FeederDefaults::default(),
    }
}

/// s -> p (line) -> r (regulator) -> m (line), single phase.
pub fn mid_regulator(kind: SvrKind) -> FeederModel {
    let a: PhaseSet = "a".parse().unwrap();
    let bus = |id: &str, load: f64, slack: bool| BusSpec {
        id: id.into(),
        phases: a,
        load: PhaseVector::filled(a, c(load, load / 3.0)),
        shunt: None,
        is_slack: slack,
    };
    let line = |f: &str, t: &str| LineSpec {
        from: f.into(),
        to: t.into(),
        z: PhaseMatrix::diagonal(a, c(0.01, 0.02)),
    };
    FeederModel {
        name: None,
        buses: vec![bus("s", 0.0, true), bus("p", 0.2, false), bus("r", 0.0, false), bus("m", 0.5, false)],
        lines: vec![line("s", "p"), line("r", "m")],
        svrs: vec![SvrSpec {
            id: None,
            from: "p".into(),
            to: "r".into(),
            kind,
            phases: a,
            tap_min: -16,
            tap_max: 16,
            step: 0.00625,
        }],
        slack_voltage: PhaseVector::filled(a, c(1.0, 0.0)),
        defaults: FeederDefaults::default(),
    }
}

/// Largest mismatch between the flow into a regulator and the flows leaving its secondary.
pub fn svr_balance_gap(model: &FeederModel, map: &VariableMap, x: &[f64]) -> f64 {
    let topo = Topology::build(model).unwrap();
    let mut worst: f64 = 0.0;
    for (i, svr) in model.svrs.iter().enumerate() {
        let sec = topo.bus_index[&svr.to];
        for p in svr.phases.iter() {
            let (re, im) = map.s[&(EdgeRef::Svr(i), p)];
            let (mut ore, mut oim) = (0.0, 0.0);
            for e in &topo.children[sec] {
                if let Some(&(a, b)) = map.s.get(&(*e, p)) {
                    ore += x[a];
                    oim += x[b];
                }
            }
            worst = worst.max((x[re] - ore).abs()).max((x[im] - oim).abs());
        }
    }
    worst
}

pub mod lp_oracle;

