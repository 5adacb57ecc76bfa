//! Power dissemination from non-participants to participants.
//!
//! Every member starts with one unit of power. Active members absorb whatever
//! they hold or receive; inactive members forward their pending power along
//! their normalized out-edges, all at once, one hop per step. Whatever is
//! still pending when the flow stops is reported as stranded.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::network::{DelegationNetwork, Depth, EdgeSet, MemberId};

/// Step cap for unbounded-depth dissemination.
pub const MAX_STEPS: u32 = 100;
/// Unbounded flow stops once the movable pending power drops below this.
pub const PENDING_TOLERANCE: f64 = 1e-9;

/// Largest network the path-enumeration oracle accepts.
pub const ORACLE_MAX_MEMBERS: usize = 8;
pub const ORACLE_MAX_DEPTH: u32 = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct PowerAssignment {
    /// Absorbed power for every active member.
    pub absorbed: BTreeMap<MemberId, f64>,
    /// Power that never reached an active member.
    pub stranded: f64,
    pub steps_run: u32,
}

impl PowerAssignment {
    pub fn power_of(&self, id: MemberId) -> Option<f64> {
        self.absorbed.get(&id).copied()
    }

    pub fn total_absorbed(&self) -> f64 {
        self.absorbed.values().sum()
    }

    /// `sum(absorbed) + stranded`, which should equal the member count.
    pub fn total(&self) -> f64 {
        self.total_absorbed() + self.stranded
    }
}

/// Run the synchronous power flow.
///
/// A bounded depth runs that many hops. Unbounded depth runs until the power
/// still able to move is below [`PENDING_TOLERANCE`], or [`MAX_STEPS`] hops.
/// Power parked on an inactive member without out-edges can never move, so
/// it does not keep the flow running.
pub fn disseminate(network: &DelegationNetwork, depth: Depth) -> Result<PowerAssignment> {
    if let Depth::Limited(0) = depth {
        return Err(Error::invalid("depth must be positive"));
    }
    let members = network.members();
    let n = members.len();
    if !members.iter().any(|m| m.active) {
        return Err(Error::NoAbsorber);
    }
    let limit = match depth {
        Depth::Limited(d) => d,
        Depth::Unbounded => MAX_STEPS,
    };

    let has_edges: Vec<bool> = match &network.edges {
        EdgeSet::Explicit { offsets, .. } => (0..n).map(|i| offsets[i + 1] > offsets[i]).collect(),
        EdgeSet::Complete(_) => vec![n > 1; n],
    };

    let mut absorbed = vec![0.0; n];
    let mut pending = vec![0.0; n];
    for (i, m) in members.iter().enumerate() {
        if m.active {
            absorbed[i] = 1.0;
        } else {
            pending[i] = 1.0;
        }
    }

    let movable = |pending: &[f64]| -> f64 {
        pending
            .iter()
            .zip(&has_edges)
            .filter(|(_, &e)| e)
            .map(|(p, _)| p)
            .sum()
    };

    let mut received = vec![0.0; n];
    let mut steps_run = 0;
    while steps_run < limit {
        let moving = movable(&pending);
        if moving == 0.0 || (depth == Depth::Unbounded && moving < PENDING_TOLERANCE) {
            break;
        }
        received.iter_mut().for_each(|r| *r = 0.0);
        match &network.edges {
            EdgeSet::Explicit {
                edges,
                targets,
                offsets,
            } => {
                for i in 0..n {
                    let p = pending[i];
                    if p == 0.0 {
                        continue;
                    }
                    for at in offsets[i]..offsets[i + 1] {
                        received[targets[at]] += p * edges[at].weight;
                    }
                }
            }
            EdgeSet::Complete(graph) => graph.spread(members, &pending, &mut received),
        }
        for i in 0..n {
            if members[i].active {
                absorbed[i] += received[i];
                pending[i] = 0.0;
            } else if has_edges[i] {
                pending[i] = received[i];
            } else {
                pending[i] += received[i];
            }
        }
        steps_run += 1;
    }

    Ok(PowerAssignment {
        absorbed: members
            .iter()
            .zip(absorbed)
            .filter(|(m, _)| m.active)
            .map(|(m, p)| (m.id, p))
            .collect(),
        stranded: pending.iter().sum(),
        steps_run,
    })
}

/// Independent check of [`disseminate`] by enumerating every walk of length
/// at most `depth` from each inactive member whose intermediate nodes are all
/// inactive and whose last node is active.
pub fn disseminate_oracle(network: &DelegationNetwork, depth: u32) -> Result<PowerAssignment> {
    let members = network.members();
    let n = members.len();
    if n > ORACLE_MAX_MEMBERS {
        return Err(Error::invalid(format!(
            "oracle supports at most {ORACLE_MAX_MEMBERS} members, got {n}"
        )));
    }
    if depth == 0 || depth > ORACLE_MAX_DEPTH {
        return Err(Error::invalid(format!(
            "oracle depth must be in 1..={ORACLE_MAX_DEPTH}, got {depth}"
        )));
    }
    if !members.iter().any(|m| m.active) {
        return Err(Error::NoAbsorber);
    }

    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in network.edges() {
        let from = network.index_of(e.from).expect("edge source is a member");
        let to = network.index_of(e.to).expect("edge target is a member");
        adjacency[from].push((to, e.weight));
    }

    fn walk(
        node: usize,
        mass: f64,
        hops: u32,
        depth: u32,
        adjacency: &[Vec<(usize, f64)>],
        active: &[bool],
        absorbed: &mut [f64],
    ) {
        for &(to, w) in &adjacency[node] {
            if active[to] {
                absorbed[to] += mass * w;
            } else if hops + 1 < depth {
                walk(to, mass * w, hops + 1, depth, adjacency, active, absorbed);
            }
        }
    }

    let active: Vec<bool> = members.iter().map(|m| m.active).collect();
    let mut absorbed: Vec<f64> = active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
    for start in 0..n {
        if !active[start] {
            walk(start, 1.0, 0, depth, &adjacency, &active, &mut absorbed);
        }
    }

    let absorbed: BTreeMap<MemberId, f64> = members
        .iter()
        .zip(absorbed)
        .filter(|(m, _)| m.active)
        .map(|(m, p)| (m.id, p))
        .collect();
    let stranded = n as f64 - absorbed.values().sum::<f64>();
    Ok(PowerAssignment {
        absorbed,
        stranded,
        steps_run: depth,
    })
}
