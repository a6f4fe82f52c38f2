use std::collections::{HashMap, VecDeque};

use super::model::FeederModel;
use super::phase::PhaseSet;

/// A directed edge of the feeder tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeRef {
    Line(usize),
    Svr(usize),
}

/// Index structure over a valid (radial) feeder.
#[derive(Debug, Clone)]
pub struct Topology {
    pub bus_index: HashMap<String, usize>,
    pub slack: usize,
    pub parent: Vec<Option<EdgeRef>>,
    pub children: Vec<Vec<EdgeRef>>,
    /// Buses in breadth-first order from the slack.
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("feeder is not a tree rooted at a unique slack bus: {0}")]
pub struct TopologyError(pub String);

impl Topology {
    pub fn build(model: &FeederModel) -> Result<Topology, TopologyError> {
        let n = model.buses.len();
        let mut bus_index = HashMap::with_capacity(n);
        for (i, b) in model.buses.iter().enumerate() {
            if bus_index.insert(b.id.clone(), i).is_some() {
                return Err(TopologyError(format!("duplicate bus id {}", b.id)));
            }
        }
        let slacks: Vec<usize> = (0..n).filter(|&i| model.buses[i].is_slack).collect();
        if slacks.len() != 1 {
            return Err(TopologyError(format!("{} slack buses", slacks.len())));
        }
        let slack = slacks[0];
        let lookup = |id: &str| {
            bus_index
                .get(id)
                .copied()
                .ok_or_else(|| TopologyError(format!("unknown bus {id}")))
        };

        let mut parent: Vec<Option<EdgeRef>> = vec![None; n];
        let mut children: Vec<Vec<EdgeRef>> = vec![Vec::new(); n];
        let edges = model
            .lines
            .iter()
            .enumerate()
            .map(|(i, l)| (EdgeRef::Line(i), l.from.as_str(), l.to.as_str()))
            .chain(
                model
                    .svrs
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (EdgeRef::Svr(i), s.from.as_str(), s.to.as_str())),
            );
        for (e, from, to) in edges {
            let (f, t) = (lookup(from)?, lookup(to)?);
            if t == slack {
                return Err(TopologyError(format!("edge {from}->{to} enters the slack bus")));
            }
            if parent[t].is_some() {
                return Err(TopologyError(format!("bus {to} has more than one incoming edge")));
            }
            parent[t] = Some(e);
            children[f].push(e);
        }

        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([slack]);
        seen[slack] = true;
        while let Some(b) = queue.pop_front() {
            order.push(b);
            for e in &children[b] {
                let t = bus_index[edge_to(model, *e)];
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        if order.len() != n {
            let lost: Vec<&str> = (0..n)
                .filter(|&i| !seen[i])
                .map(|i| model.buses[i].id.as_str())
                .collect();
            return Err(TopologyError(format!(
                "buses not reachable from the slack (cycle or island): {}",
                lost.join(", ")
            )));
        }
        Ok(Topology {
            bus_index,
            slack,
            parent,
            children,
            order,
        })
    }

    pub fn from_index(&self, model: &FeederModel, e: EdgeRef) -> usize {
        self.bus_index[edge_from(model, e)]
    }

    pub fn to_index(&self, model: &FeederModel, e: EdgeRef) -> usize {
        self.bus_index[edge_to(model, e)]
    }

    /// Edges leaving the slack bus.
    pub fn head_edges(&self) -> &[EdgeRef] {
        &self.children[self.slack]
    }
}

pub fn edge_from(model: &FeederModel, e: EdgeRef) -> &str {
    match e {
        EdgeRef::Line(i) => &model.lines[i].from,
        EdgeRef::Svr(i) => &model.svrs[i].from,
    }
}

pub fn edge_to(model: &FeederModel, e: EdgeRef) -> &str {
    match e {
        EdgeRef::Line(i) => &model.lines[i].to,
        EdgeRef::Svr(i) => &model.svrs[i].to,
    }
}

pub fn edge_phases(model: &FeederModel, e: EdgeRef) -> PhaseSet {
    match e {
        EdgeRef::Line(i) => model.lines[i].phases(),
        EdgeRef::Svr(i) => model.svrs[i].phases,
    }
}
