use num_complex::Complex64;

use super::phase::{Phase, PhaseSet};
use super::taps::{self, SvrKind, TapError, TapRange};
use super::vectors::{PhaseMatrix, PhaseVector};

#[derive(Debug, Clone, PartialEq)]
pub struct BusSpec {
    pub id: String,
    pub phases: PhaseSet,
    /// Constant-power wye load in p.u., consumption positive.
    pub load: PhaseVector<Complex64>,
    /// Constant-admittance shunt in p.u.
    pub shunt: Option<PhaseMatrix>,
    pub is_slack: bool,
}

impl BusSpec {
    pub fn has_load(&self) -> bool {
        self.load.values().iter().any(|s| *s != Complex64::new(0.0, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSpec {
    pub from: String,
    pub to: String,
    pub z: PhaseMatrix,
}

impl LineSpec {
    pub fn phases(&self) -> PhaseSet {
        self.z.mask()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrSpec {
    pub id: Option<String>,
    pub from: String,
    pub to: String,
    pub kind: SvrKind,
    pub phases: PhaseSet,
    pub tap_min: i32,
    pub tap_max: i32,
    pub step: f64,
}

impl SvrSpec {
    pub fn tap_range(&self) -> TapRange {
        TapRange {
            min: self.tap_min,
            max: self.tap_max,
        }
    }

    pub fn label(&self) -> String {
        self.id
            .clone()
            .unwrap_or_else(|| format!("{}->{}", self.from, self.to))
    }

    pub fn tap_to_ratio(&self, tap: i32) -> Result<f64, TapError> {
        taps::tap_to_ratio(tap, self.kind, self.step, self.tap_range())
    }

    pub fn ratio_to_tap(&self, ratio: f64) -> i32 {
        taps::ratio_to_tap(ratio, self.kind, self.step, self.tap_range())
    }

    pub fn ratio_bounds(&self) -> (f64, f64) {
        taps::ratio_bounds(self.kind, self.step, self.tap_range())
    }
}

/// Optional per-feeder run defaults carried by the feeder file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeederDefaults {
    pub vmin: Option<f64>,
    pub vmax: Option<f64>,
    pub verify_vmin: Option<f64>,
    pub verify_vmax: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeederModel {
    pub name: Option<String>,
    pub buses: Vec<BusSpec>,
    pub lines: Vec<LineSpec>,
    pub svrs: Vec<SvrSpec>,
    pub slack_voltage: PhaseVector<Complex64>,
    pub defaults: FeederDefaults,
}

impl FeederModel {
    pub fn bus(&self, id: &str) -> Option<&BusSpec> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack_index(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.is_slack)
    }

    pub fn slack(&self) -> &BusSpec {
        self.buses
            .iter()
            .find(|b| b.is_slack)
            .expect("validated model has a slack bus")
    }

    /// Copy of the model with every regulator replaced by a closed ideal
    /// connection (secondary bus merged into primary).
    pub fn without_svrs(&self) -> FeederModel {
        let mut m = self.clone();
        for svr in &self.svrs {
            m.buses.retain(|b| b.id != svr.to);
            for line in m.lines.iter_mut() {
                if line.from == svr.to {
                    line.from = svr.from.clone();
                }
            }
        }
        m.svrs.clear();
        m
    }
}

/// Integer taps per regulator, per phase; aligned with `FeederModel::svrs`.
#[derive(Debug, Clone, PartialEq)]
pub struct TapVector(pub Vec<PhaseVector<i32>>);

/// Effective ratios per regulator, per phase; aligned with `FeederModel::svrs`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioVector(pub Vec<PhaseVector<f64>>);

impl TapVector {
    pub fn zeros(model: &FeederModel) -> TapVector {
        TapVector(
            model
                .svrs
                .iter()
                .map(|s| PhaseVector::filled(s.phases, 0))
                .collect(),
        )
    }

    /// Builds a tap vector from a flat list ordered by regulator, then phase.
    pub fn from_flat(model: &FeederModel, flat: &[i32]) -> Option<TapVector> {
        let total: usize = model.svrs.iter().map(|s| s.phases.len()).sum();
        if flat.len() != total {
            return None;
        }
        let mut it = flat.iter().copied();
        Some(TapVector(
            model
                .svrs
                .iter()
                .map(|s| PhaseVector::from_fn(s.phases, |_| it.next().unwrap()))
                .collect(),
        ))
    }

    pub fn flat(&self) -> Vec<i32> {
        self.0.iter().flat_map(|v| v.values().to_vec()).collect()
    }

    pub fn to_ratios(&self, model: &FeederModel) -> Result<RatioVector, TapError> {
        let mut out = Vec::with_capacity(self.0.len());
        for (svr, taps) in model.svrs.iter().zip(&self.0) {
            let mut vals = Vec::with_capacity(taps.values().len());
            for (_, t) in taps.iter() {
                vals.push(svr.tap_to_ratio(*t)?);
            }
            out.push(PhaseVector::new(taps.mask(), vals).expect("same mask"));
        }
        Ok(RatioVector(out))
    }
}

impl RatioVector {
    pub fn identity(model: &FeederModel) -> RatioVector {
        RatioVector(
            model
                .svrs
                .iter()
                .map(|s| PhaseVector::filled(s.phases, 1.0))
                .collect(),
        )
    }

    pub fn ratio(&self, svr: usize, p: Phase) -> Option<f64> {
        self.0.get(svr).and_then(|v| v.get(p).ok()).copied()
    }

    pub fn to_taps(&self, model: &FeederModel) -> TapVector {
        TapVector(
            model
                .svrs
                .iter()
                .zip(&self.0)
                .map(|(svr, r)| r.map(|x| svr.ratio_to_tap(*x)))
                .collect(),
        )
    }
}
