use std::collections::{HashMap, HashSet};
use std::fmt;

use super::model::FeederModel;
use super::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    DuplicateBusId,
    SlackCount,
    SlackHasLoadOrShunt,
    SlackVoltageMask,
    LoadMask,
    ShuntMask,
    NonFinite,
    UnknownBus,
    LineMask,
    AsymmetricImpedance,
    ZeroImpedanceDiagonal,
    SvrTapRange,
    SvrStep,
    SvrPhases,
    SvrSecondaryIsolation,
    NotATree,
    PhaseNotSupplied,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::DuplicateBusId => "duplicate-bus-id",
            Rule::SlackCount => "slack-count",
            Rule::SlackHasLoadOrShunt => "slack-load-or-shunt",
            Rule::SlackVoltageMask => "slack-voltage-mask",
            Rule::LoadMask => "load-mask",
            Rule::ShuntMask => "shunt-mask",
            Rule::NonFinite => "non-finite",
            Rule::UnknownBus => "unknown-bus",
            Rule::LineMask => "line-mask",
            Rule::AsymmetricImpedance => "asymmetric-impedance",
            Rule::ZeroImpedanceDiagonal => "zero-impedance-diagonal",
            Rule::SvrTapRange => "svr-tap-range",
            Rule::SvrStep => "svr-step",
            Rule::SvrPhases => "svr-phases",
            Rule::SvrSecondaryIsolation => "svr-secondary-isolation",
            Rule::NotATree => "not-a-tree",
            Rule::PhaseNotSupplied => "phase-not-supplied",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub element: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.element, self.rule.name(), self.detail)
    }
}

const SYMMETRY_TOL: f64 = 1e-12;

/// Checks every structural invariant of a feeder. An empty list means valid.
pub fn validate(model: &FeederModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |element: String, rule: Rule, detail: String| {
        out.push(Violation {
            element,
            rule,
            detail,
        })
    };

    let mut ids: HashMap<&str, usize> = HashMap::new();
    for (i, b) in model.buses.iter().enumerate() {
        if ids.insert(b.id.as_str(), i).is_some() {
            push(format!("bus {}", b.id), Rule::DuplicateBusId, "id used twice".into());
        }
    }

    let slacks: Vec<_> = model.buses.iter().filter(|b| b.is_slack).collect();
    if slacks.len() != 1 {
        push(
            "feeder".into(),
            Rule::SlackCount,
            format!("expected exactly one slack bus, found {}", slacks.len()),
        );
    }
    for s in &slacks {
        if s.has_load() || s.shunt.is_some() {
            push(
                format!("bus {}", s.id),
                Rule::SlackHasLoadOrShunt,
                "slack bus must carry no load and no shunt".into(),
            );
        }
        if model.slack_voltage.mask() != s.phases {
            push(
                format!("bus {}", s.id),
                Rule::SlackVoltageMask,
                format!(
                    "slack voltage phases {} differ from bus phases {}",
                    model.slack_voltage.mask(),
                    s.phases
                ),
            );
        }
    }
    if model
        .slack_voltage
        .values()
        .iter()
        .any(|v| !v.re.is_finite() || !v.im.is_finite())
    {
        push("slack_voltage".into(), Rule::NonFinite, "non-finite entry".into());
    }

    for b in &model.buses {
        let el = format!("bus {}", b.id);
        if !b.load.mask().is_subset(b.phases) {
            push(
                el.clone(),
                Rule::LoadMask,
                format!("load phases {} not within bus phases {}", b.load.mask(), b.phases),
            );
        }
        if b.load.values().iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            push(el.clone(), Rule::NonFinite, "non-finite load".into());
        }
        if let Some(y) = &b.shunt {
            if !y.mask().is_subset(b.phases) {
                push(
                    el.clone(),
                    Rule::ShuntMask,
                    format!("shunt phases {} not within bus phases {}", y.mask(), b.phases),
                );
            }
            if !y.is_finite() {
                push(el.clone(), Rule::NonFinite, "non-finite shunt".into());
            }
        }
    }

    let mut endpoints_ok = true;
    for (i, l) in model.lines.iter().enumerate() {
        let el = format!("line {} {}->{}", i, l.from, l.to);
        let (Some(&f), Some(&t)) = (ids.get(l.from.as_str()), ids.get(l.to.as_str())) else {
            push(el, Rule::UnknownBus, "endpoint bus does not exist".into());
            endpoints_ok = false;
            continue;
        };
        let common = model.buses[f].phases.intersection(model.buses[t].phases);
        if l.z.mask() != common {
            push(
                el.clone(),
                Rule::LineMask,
                format!("impedance phases {} differ from endpoint intersection {}", l.z.mask(), common),
            );
        }
        if !l.z.is_finite() {
            push(el.clone(), Rule::NonFinite, "non-finite impedance".into());
        } else {
            if !l.z.is_symmetric(SYMMETRY_TOL) {
                push(el.clone(), Rule::AsymmetricImpedance, "impedance matrix is not symmetric".into());
            }
            if (0..l.z.dim()).any(|k| l.z.at(k, k).norm() == 0.0) {
                push(el, Rule::ZeroImpedanceDiagonal, "zero self-impedance".into());
            }
        }
    }

    for (i, s) in model.svrs.iter().enumerate() {
        let el = format!("svr {} {}", i, s.label());
        if !(s.tap_min <= 0 && 0 <= s.tap_max) {
            push(
                el.clone(),
                Rule::SvrTapRange,
                format!("tap range [{}, {}] must contain 0", s.tap_min, s.tap_max),
            );
        }
        if !(s.step > 0.0 && s.step.is_finite()) {
            push(el.clone(), Rule::SvrStep, format!("step {} must be positive", s.step));
        } else {
            let (lo, _) = s.ratio_bounds();
            if lo <= 0.0 {
                push(el.clone(), Rule::SvrStep, "tap range reaches a nonpositive ratio".into());
            }
        }
        let (Some(&f), Some(&t)) = (ids.get(s.from.as_str()), ids.get(s.to.as_str())) else {
            push(el, Rule::UnknownBus, "endpoint bus does not exist".into());
            endpoints_ok = false;
            continue;
        };
        let (pf, pt) = (model.buses[f].phases, model.buses[t].phases);
        if !s.phases.is_subset(pf) || s.phases != pt {
            push(
                el.clone(),
                Rule::SvrPhases,
                format!("regulator phases {} must be within primary {} and equal secondary {}", s.phases, pf, pt),
            );
        }
        let sec = &model.buses[t];
        if sec.has_load() || sec.shunt.is_some() || sec.is_slack {
            push(
                el.clone(),
                Rule::SvrSecondaryIsolation,
                format!("secondary bus {} carries a load, shunt or slack", sec.id),
            );
        }
        let outgoing_lines = model.lines.iter().filter(|l| l.from == s.to).count();
        let other = model.lines.iter().filter(|l| l.to == s.to).count()
            + model
                .svrs
                .iter()
                .enumerate()
                .filter(|(j, o)| *j != i && (o.from == s.to || o.to == s.to))
                .count();
        if outgoing_lines != 1 || other != 0 {
            push(
                el,
                Rule::SvrSecondaryIsolation,
                format!(
                    "secondary bus {} must have exactly one outgoing line and no other edges ({} outgoing, {} other)",
                    sec.id, outgoing_lines, other
                ),
            );
        }
    }

    if endpoints_ok && slacks.len() == 1 && ids.len() == model.buses.len() {
        match Topology::build(model) {
            Err(e) => push("feeder".into(), Rule::NotATree, e.0),
            Ok(topo) => {
                for (b, parent) in model.buses.iter().zip(&topo.parent) {
                    if let Some(e) = parent {
                        let supplied = super::topology::edge_phases(model, *e);
                        if supplied != b.phases {
                            push(
                                format!("bus {}", b.id),
                                Rule::PhaseNotSupplied,
                                format!("bus phases {} but incoming edge carries {}", b.phases, supplied),
                            );
                        }
                    }
                }
            }
        }
    }

    // stable, de-duplicated report
    let mut seen = HashSet::new();
    out.retain(|v| seen.insert((v.element.clone(), v.rule, v.detail.clone())));
    out
}
