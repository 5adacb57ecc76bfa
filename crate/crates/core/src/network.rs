//! Populations and representative delegation networks.
//!
//! Two constructions are supported. Model 1 connects every inactive member to
//! the single active member closest in opinion. Model 2 lets every member pick
//! `k` representatives regardless of their activity, weighting each edge by
//! opinion proximity (`1 - |a - b|`) and normalizing the member's out-weights
//! to one. `k0` builds no edges at all and `full` is Model 2 with `k = n - 1`.
//!
//! The complete graph is stored implicitly: its weights are a closed-form
//! function of the opinions, so `n (n - 1)` edges never need to be allocated.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type MemberId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub id: MemberId,
    pub opinion: f64,
    pub active: bool,
}

impl Member {
    pub fn new(id: MemberId, opinion: f64, active: bool) -> Self {
        Member {
            id,
            opinion,
            active,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DelegationEdge {
    pub from: MemberId,
    pub to: MemberId,
    pub weight: f64,
    pub domain: Option<String>,
}

/// Raw proximity value of a delegation edge between two opinions.
pub fn edge_value(a: f64, b: f64) -> f64 {
    1.0 - (a - b).abs()
}

/// Maximum number of hops power may travel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Depth {
    Limited(u32),
    Unbounded,
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Limited(d) => write!(f, "{d}"),
            Depth::Unbounded => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NetworkModel {
    /// Inactive members delegate everything to the nearest active member.
    Model1,
    /// Every member picks `k` representatives, active or not.
    Model2,
    /// No delegation: power equals participation.
    K0,
    /// Model 2 over every other member.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Selection {
    #[default]
    NearestOpinion,
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TopologyConfig {
    pub model: NetworkModel,
    /// Representatives per member. Ignored for `K0` and `Full`.
    pub k: usize,
    pub depth: Depth,
    pub selection: Selection,
}

impl TopologyConfig {
    pub fn k0() -> Self {
        TopologyConfig {
            model: NetworkModel::K0,
            k: 0,
            depth: Depth::Limited(1),
            selection: Selection::NearestOpinion,
        }
    }

    pub fn model1() -> Self {
        TopologyConfig {
            model: NetworkModel::Model1,
            k: 1,
            depth: Depth::Limited(1),
            selection: Selection::NearestOpinion,
        }
    }

    pub fn model2(k: usize, depth: Depth) -> Self {
        TopologyConfig {
            model: NetworkModel::Model2,
            k,
            depth,
            selection: Selection::NearestOpinion,
        }
    }

    pub fn full(depth: Depth) -> Self {
        TopologyConfig {
            model: NetworkModel::Full,
            k: 0,
            depth,
            selection: Selection::NearestOpinion,
        }
    }

    pub fn with_selection(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == Depth::Limited(0) {
            return Err(Error::invalid("depth must be positive"));
        }
        match self.model {
            NetworkModel::Model1 if self.k != 1 || self.depth != Depth::Limited(1) => {
                Err(Error::invalid("model1 requires k = 1 and depth = 1"))
            }
            NetworkModel::Model2 if self.k == 0 => Err(Error::invalid("model2 requires k >= 1")),
            _ => Ok(()),
        }
    }

    /// Short label in the `k0` / `k1d1` / `k<K>d<D|inf>` / `full` vocabulary.
    pub fn label(&self) -> String {
        let base = match self.model {
            NetworkModel::K0 => "k0".to_string(),
            NetworkModel::Model1 => "k1d1".to_string(),
            NetworkModel::Model2 => format!("k{}d{}", self.k, self.depth),
            NetworkModel::Full => match self.depth {
                Depth::Unbounded => "full".to_string(),
                d => format!("fulld{d}"),
            },
        };
        match (self.model, self.selection) {
            (NetworkModel::Model2, Selection::Random) => format!("{base}-random"),
            _ => base,
        }
    }
}

impl fmt::Display for TopologyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for TopologyConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unknown topology '{s}'"));
        let (body, selection) = match s.strip_suffix("-random") {
            Some(body) => (body, Selection::Random),
            None => (s, Selection::NearestOpinion),
        };
        let parse_depth = |d: &str| -> Result<Depth> {
            if d == "inf" {
                return Ok(Depth::Unbounded);
            }
            match d.parse::<u32>() {
                Ok(v) if v > 0 => Ok(Depth::Limited(v)),
                _ => Err(bad()),
            }
        };

        let config = if body == "k0" {
            TopologyConfig::k0()
        } else if body == "k1d1" && selection == Selection::NearestOpinion {
            TopologyConfig::model1()
        } else if body == "full" {
            TopologyConfig::full(Depth::Unbounded)
        } else if let Some(d) = body.strip_prefix("fulld") {
            TopologyConfig::full(parse_depth(d)?)
        } else if let Some(rest) = body.strip_prefix('k') {
            let (k, d) = rest.split_once('d').ok_or_else(bad)?;
            let k: usize = k.parse().map_err(|_| bad())?;
            if k == 0 {
                return Err(bad());
            }
            TopologyConfig::model2(k, parse_depth(d)?)
        } else {
            return Err(bad());
        };
        if selection == Selection::Random && config.model != NetworkModel::Model2 {
            return Err(bad());
        }
        Ok(config.with_selection(selection))
    }
}

/// Draw `n` members with i.i.d. uniform opinions, all inactive.
pub fn generate_population(n: usize, seed: u64) -> Result<Vec<Member>> {
    if n == 0 {
        return Err(Error::invalid("population size must be at least 1"));
    }
    if n > MemberId::MAX as usize {
        return Err(Error::invalid("population size exceeds id range"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|i| Member::new(i as MemberId, rng.gen::<f64>(), false))
        .collect())
}

/// Number of participants for a fraction, rounding half up.
pub fn participant_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 + 0.5).floor() as usize).min(n)
}

/// Mark exactly `round(fraction * n)` members active, chosen uniformly
/// without replacement. Positions refer to the order of `members`.
pub fn set_activity(members: &[Member], fraction: f64, seed: u64) -> Result<Vec<Member>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid(format!(
            "participation fraction {fraction} outside [0, 1]"
        )));
    }
    let n = members.len();
    let count = participant_count(fraction, n);
    let mut out: Vec<Member> = members
        .iter()
        .map(|m| Member {
            active: false,
            ..*m
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in index::sample(&mut rng, n, count) {
        out[i].active = true;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub(crate) enum EdgeSet {
    /// Edges grouped by source (member index order), sorted by target id.
    Explicit {
        edges: Vec<DelegationEdge>,
        targets: Vec<usize>,
        offsets: Vec<usize>,
    },
    Complete(CompleteGraph),
}

/// Implicit all-pairs network with proximity weights.
#[derive(Clone, Debug)]
pub(crate) struct CompleteGraph {
    /// Sum of raw edge values over all other members; `None` when every raw
    /// value is zero and the weights fall back to uniform.
    raw_sums: Vec<Option<f64>>,
    /// Member indices sorted by (opinion, id).
    order: Vec<usize>,
}

impl CompleteGraph {
    fn new(members: &[Member]) -> Self {
        let n = members.len();
        let order = opinion_order(members, (0..n).collect());
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        for &i in &order {
            prefix.push(prefix.last().unwrap() + members[i].opinion);
        }
        let zeros = members.iter().filter(|m| m.opinion == 0.0).count();
        let ones = members.iter().filter(|m| m.opinion == 1.0).count();

        let mut raw_sums = vec![None; n];
        for (pos, &i) in order.iter().enumerate() {
            let o = members[i].opinion;
            let all_opposite = (o == 0.0 && ones == n - 1) || (o == 1.0 && zeros == n - 1);
            if all_opposite {
                continue;
            }
            let left = o * pos as f64 - prefix[pos];
            let right = (prefix[n] - prefix[pos + 1]) - o * (n - pos - 1) as f64;
            raw_sums[i] = Some((n - 1) as f64 - (left + right));
        }
        CompleteGraph { raw_sums, order }
    }

    fn weight(&self, members: &[Member], from: usize, to: usize) -> f64 {
        match self.raw_sums[from] {
            Some(sum) => edge_value(members[from].opinion, members[to].opinion) / sum,
            None => 1.0 / (members.len() - 1) as f64,
        }
    }

    /// One synchronous hop: every source with `pending[i] > 0` spreads it
    /// over all other members. `received` is overwritten.
    pub(crate) fn spread(&self, members: &[Member], pending: &[f64], received: &mut [f64]) {
        let n = members.len();
        let uniform_share = 1.0 / (n - 1) as f64;

        // Proportional sources contribute q_i (1 - |o_i - o_j|) with
        // q_i = p_i / raw_sum_i; uniform sources contribute p_i / (n - 1).
        let mut q = vec![0.0; n];
        let mut q_total = 0.0;
        let mut uniform_total = 0.0;
        for i in 0..n {
            let p = pending[i];
            if p == 0.0 {
                continue;
            }
            match self.raw_sums[i] {
                Some(sum) => {
                    q[i] = p / sum;
                    q_total += q[i];
                }
                None => uniform_total += p,
            }
        }

        // sum_i q_i |o_i - o_j| via prefix sums in opinion order
        let mut q_prefix = Vec::with_capacity(n + 1);
        let mut qo_prefix = Vec::with_capacity(n + 1);
        q_prefix.push(0.0);
        qo_prefix.push(0.0);
        for &i in &self.order {
            q_prefix.push(q_prefix.last().unwrap() + q[i]);
            qo_prefix.push(qo_prefix.last().unwrap() + q[i] * members[i].opinion);
        }
        for (pos, &j) in self.order.iter().enumerate() {
            let o = members[j].opinion;
            let left = o * q_prefix[pos] - qo_prefix[pos];
            let right = (qo_prefix[n] - qo_prefix[pos + 1]) - o * (q_prefix[n] - q_prefix[pos + 1]);
            let mut value = q_total - (left + right) - q[j];
            if self.raw_sums[j].is_none() {
                value += (uniform_total - pending[j]) * uniform_share;
            } else {
                value += uniform_total * uniform_share;
            }
            received[j] = value.max(0.0);
        }
    }
}

fn opinion_order(members: &[Member], mut idx: Vec<usize>) -> Vec<usize> {
    idx.sort_by(|&a, &b| {
        members[a]
            .opinion
            .total_cmp(&members[b].opinion)
            .then(members[a].id.cmp(&members[b].id))
    });
    idx
}

/// Members plus weighted delegation edges. Out-weights of every member with
/// at least one edge sum to one.
#[derive(Clone, Debug)]
pub struct DelegationNetwork {
    members: Vec<Member>,
    topology: TopologyConfig,
    pub(crate) edges: EdgeSet,
}

fn validate_members(members: &[Member]) -> Result<Vec<Member>> {
    let mut sorted = members.to_vec();
    sorted.sort_by_key(|m| m.id);
    for pair in sorted.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(Error::invalid(format!(
                "duplicate member id {}",
                pair[0].id
            )));
        }
    }
    if let Some(m) = sorted.iter().find(|m| !(0.0..=1.0).contains(&m.opinion)) {
        return Err(Error::invalid(format!(
            "member {} has opinion {} outside [0, 1]",
            m.id, m.opinion
        )));
    }
    Ok(sorted)
}

/// Build grouped edges from per-member target lists holding raw weights.
fn explicit_from_groups(
    members: &[Member],
    groups: Vec<Vec<(usize, f64, Option<String>)>>,
) -> EdgeSet {
    let mut edges = Vec::new();
    let mut targets = Vec::new();
    let mut offsets = Vec::with_capacity(members.len() + 1);
    offsets.push(0);
    for (from, mut group) in groups.into_iter().enumerate() {
        group.sort_by_key(|(to, _, _)| members[*to].id);
        let total: f64 = group.iter().map(|(_, w, _)| w).sum();
        let uniform = 1.0 / group.len() as f64;
        for (to, raw, domain) in group {
            let weight = if total > 0.0 { raw / total } else { uniform };
            edges.push(DelegationEdge {
                from: members[from].id,
                to: members[to].id,
                weight,
                domain,
            });
            targets.push(to);
        }
        offsets.push(edges.len());
    }
    EdgeSet::Explicit {
        edges,
        targets,
        offsets,
    }
}

impl DelegationNetwork {
    /// Assemble a network from arbitrary edges. Per-member out-weights are
    /// normalized to one (uniform when they are all zero).
    pub fn from_edges(
        members: &[Member],
        edges: Vec<DelegationEdge>,
        topology: TopologyConfig,
    ) -> Result<Self> {
        let members = validate_members(members)?;
        let mut groups: Vec<Vec<(usize, f64, Option<String>)>> = vec![Vec::new(); members.len()];
        let mut seen = HashSet::new();
        for e in edges {
            let from = index_in(&members, e.from)
                .ok_or_else(|| Error::invalid(format!("edge source {} is not a member", e.from)))?;
            let to = index_in(&members, e.to)
                .ok_or_else(|| Error::invalid(format!("edge target {} is not a member", e.to)))?;
            if from == to {
                return Err(Error::invalid(format!(
                    "self-delegation by member {}",
                    e.from
                )));
            }
            if !(0.0..=1.0).contains(&e.weight) {
                return Err(Error::invalid(format!(
                    "edge {} -> {} has weight {} outside [0, 1]",
                    e.from, e.to, e.weight
                )));
            }
            if !seen.insert((from, to)) {
                return Err(Error::invalid(format!(
                    "duplicate edge {} -> {}",
                    e.from, e.to
                )));
            }
            groups[from].push((to, e.weight, e.domain));
        }
        let edges = explicit_from_groups(&members, groups);
        Ok(DelegationNetwork {
            members,
            topology,
            edges,
        })
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn topology(&self) -> &TopologyConfig {
        &self.topology
    }

    pub fn member(&self, id: MemberId) -> Option<&Member> {
        self.index_of(id).map(|i| &self.members[i])
    }

    pub fn index_of(&self, id: MemberId) -> Option<usize> {
        index_in(&self.members, id)
    }

    pub fn active_count(&self) -> usize {
        self.members.iter().filter(|m| m.active).count()
    }

    pub fn edge_count(&self) -> usize {
        match &self.edges {
            EdgeSet::Explicit { edges, .. } => edges.len(),
            EdgeSet::Complete(_) => {
                let n = self.members.len();
                n * (n - 1)
            }
        }
    }

    /// True when the network is the implicit complete graph.
    pub fn is_complete(&self) -> bool {
        matches!(self.edges, EdgeSet::Complete(_))
    }

    /// All edges, grouped by source in id order and sorted by target id.
    pub fn edges(&self) -> Box<dyn Iterator<Item = DelegationEdge> + '_> {
        match &self.edges {
            EdgeSet::Explicit { edges, .. } => Box::new(edges.iter().cloned()),
            EdgeSet::Complete(graph) => {
                let n = self.members.len();
                Box::new((0..n).flat_map(move |from| {
                    (0..n)
                        .filter(move |&to| to != from)
                        .map(move |to| DelegationEdge {
                            from: self.members[from].id,
                            to: self.members[to].id,
                            weight: graph.weight(&self.members, from, to),
                            domain: None,
                        })
                }))
            }
        }
    }

    /// Outgoing edges of one member.
    pub fn out_edges(&self, id: MemberId) -> Vec<DelegationEdge> {
        let Some(from) = self.index_of(id) else {
            return Vec::new();
        };
        match &self.edges {
            EdgeSet::Explicit { edges, offsets, .. } => {
                edges[offsets[from]..offsets[from + 1]].to_vec()
            }
            EdgeSet::Complete(graph) => (0..self.members.len())
                .filter(|&to| to != from)
                .map(|to| DelegationEdge {
                    from: id,
                    to: self.members[to].id,
                    weight: graph.weight(&self.members, from, to),
                    domain: None,
                })
                .collect(),
        }
    }

    /// Same network with every edge stored explicitly.
    pub fn to_explicit(&self) -> DelegationNetwork {
        match &self.edges {
            EdgeSet::Explicit { .. } => self.clone(),
            EdgeSet::Complete(_) => {
                let n = self.members.len();
                let mut edges = Vec::with_capacity(self.edge_count());
                let mut targets = Vec::with_capacity(self.edge_count());
                let mut offsets = Vec::with_capacity(n + 1);
                offsets.push(0);
                for from in 0..n {
                    for e in self.out_edges(self.members[from].id) {
                        targets.push(self.index_of(e.to).unwrap());
                        edges.push(e);
                    }
                    offsets.push(edges.len());
                }
                DelegationNetwork {
                    members: self.members.clone(),
                    topology: self.topology.clone(),
                    edges: EdgeSet::Explicit {
                        edges,
                        targets,
                        offsets,
                    },
                }
            }
        }
    }

    /// Same network with every edge labeled by `domain`.
    pub fn with_domain(&self, domain: &str) -> DelegationNetwork {
        let mut out = self.to_explicit();
        if let EdgeSet::Explicit { edges, .. } = &mut out.edges {
            for e in edges {
                e.domain = Some(domain.to_string());
            }
        }
        out
    }

    /// Keep only edges labeled `label`, re-normalizing surviving out-weights.
    pub fn filter_by_domain(&self, label: &str) -> DelegationNetwork {
        let mut groups: Vec<Vec<(usize, f64, Option<String>)>> =
            vec![Vec::new(); self.members.len()];
        if let EdgeSet::Explicit {
            edges,
            targets,
            offsets,
        } = &self.edges
        {
            for from in 0..self.members.len() {
                for at in offsets[from]..offsets[from + 1] {
                    let e = &edges[at];
                    if e.domain.as_deref() == Some(label) {
                        groups[from].push((targets[at], e.weight, e.domain.clone()));
                    }
                }
            }
        }
        DelegationNetwork {
            members: self.members.clone(),
            topology: self.topology.clone(),
            edges: explicit_from_groups(&self.members, groups),
        }
    }

    /// Sum of a member's outgoing weights (0 when it has no edges).
    pub fn out_weight_sum(&self, id: MemberId) -> f64 {
        self.out_edges(id).iter().map(|e| e.weight).sum()
    }
}

fn index_in(sorted: &[Member], id: MemberId) -> Option<usize> {
    sorted.binary_search_by_key(&id, |m| m.id).ok()
}

/// Build a delegation network. `seed` only matters for random selection.
pub fn build_network(
    members: &[Member],
    config: &TopologyConfig,
    seed: u64,
) -> Result<DelegationNetwork> {
    config.validate()?;
    let members = validate_members(members)?;
    let n = members.len();

    let edges = match config.model {
        NetworkModel::K0 => explicit_from_groups(&members, vec![Vec::new(); n]),
        NetworkModel::Model1 => model1_edges(&members)?,
        NetworkModel::Model2 => {
            if n <= config.k {
                return Err(Error::invalid(format!(
                    "model2 with k = {} needs more than {} members, got {n}",
                    config.k, config.k
                )));
            }
            model2_edges(&members, config.k, config.selection, seed)
        }
        NetworkModel::Full => {
            if n < 2 {
                return Err(Error::invalid("full network needs at least 2 members"));
            }
            EdgeSet::Complete(CompleteGraph::new(&members))
        }
    };
    Ok(DelegationNetwork {
        members,
        topology: config.clone(),
        edges,
    })
}

fn model1_edges(members: &[Member]) -> Result<EdgeSet> {
    let actives = opinion_order(
        members,
        (0..members.len()).filter(|&i| members[i].active).collect(),
    );
    if actives.is_empty() {
        return Err(Error::NoRepresentative);
    }
    let opinion = |i: usize| members[i].opinion;
    let groups = members
        .iter()
        .map(|m| {
            if m.active {
                return Vec::new();
            }
            let o = m.opinion;
            let pos = actives.partition_point(|&a| opinion(a) < o);
            // candidate runs of equal opinion either side; the first entry of a
            // run carries the smallest id
            let right = actives.get(pos).copied();
            let left = (pos > 0).then(|| {
                let value = opinion(actives[pos - 1]);
                actives[actives.partition_point(|&a| opinion(a) < value)]
            });
            let best = match (left, right) {
                (Some(l), Some(r)) => {
                    let (dl, dr) = ((o - opinion(l)).abs(), (opinion(r) - o).abs());
                    if dl < dr || (dl == dr && members[l].id < members[r].id) {
                        l
                    } else {
                        r
                    }
                }
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => unreachable!(),
            };
            vec![(best, 1.0, None)]
        })
        .collect();
    Ok(explicit_from_groups(members, groups))
}

fn model2_edges(members: &[Member], k: usize, selection: Selection, seed: u64) -> EdgeSet {
    let n = members.len();
    let targets: Vec<Vec<usize>> = match selection {
        Selection::NearestOpinion => {
            let order = opinion_order(members, (0..n).collect());
            let mut pos_of = vec![0; n];
            for (p, &i) in order.iter().enumerate() {
                pos_of[i] = p;
            }
            (0..n)
                .map(|i| nearest_k(members, &order, pos_of[i], k))
                .collect()
        }
        Selection::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|i| {
                    index::sample(&mut rng, n - 1, k)
                        .into_iter()
                        .map(|j| if j < i { j } else { j + 1 })
                        .collect()
                })
                .collect()
        }
    };
    let groups = targets
        .into_iter()
        .enumerate()
        .map(|(i, ts)| {
            ts.into_iter()
                .map(|j| (j, edge_value(members[i].opinion, members[j].opinion), None))
                .collect()
        })
        .collect();
    explicit_from_groups(members, groups)
}

/// The `k` members nearest in opinion to the member at sorted position `pos`,
/// ties broken by smaller id.
fn nearest_k(members: &[Member], order: &[usize], pos: usize, k: usize) -> Vec<usize> {
    let o = members[order[pos]].opinion;
    let dist = |p: usize| (members[order[p]].opinion - o).abs();

    // Greedy two-pointer walk finds the k-th smallest distance.
    let (mut lo, mut hi) = (pos, pos + 1);
    let mut threshold = 0.0_f64;
    for _ in 0..k {
        let take_left = match (lo > 0, hi < order.len()) {
            (true, true) => dist(lo - 1) <= dist(hi),
            (true, false) => true,
            (false, true) => false,
            (false, false) => unreachable!("k < n"),
        };
        if take_left {
            lo -= 1;
            threshold = threshold.max(dist(lo));
        } else {
            threshold = threshold.max(dist(hi));
            hi += 1;
        }
    }
    // Widen to every member at the threshold so ties resolve by id.
    while lo > 0 && dist(lo - 1) <= threshold {
        lo -= 1;
    }
    while hi < order.len() && dist(hi) <= threshold {
        hi += 1;
    }
    let mut candidates: Vec<usize> = (lo..hi).filter(|&p| p != pos).collect();
    candidates.sort_by(|&a, &b| {
        dist(a)
            .total_cmp(&dist(b))
            .then(members[order[a]].id.cmp(&members[order[b]].id))
    });
    candidates.truncate(k);
    candidates.into_iter().map(|p| order[p]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(id: MemberId, opinion: f64, active: bool) -> Member {
        Member::new(id, opinion, active)
    }

    /// Brute-force k-nearest by full sort over (distance, id).
    fn nearest_brute(members: &[Member], i: usize, k: usize) -> Vec<MemberId> {
        let mut others: Vec<&Member> = members.iter().filter(|x| x.id != members[i].id).collect();
        others.sort_by(|a, b| {
            (a.opinion - members[i].opinion)
                .abs()
                .total_cmp(&(b.opinion - members[i].opinion).abs())
                .then(a.id.cmp(&b.id))
        });
        let mut ids: Vec<MemberId> = others[..k].iter().map(|x| x.id).collect();
        ids.sort();
        ids
    }

    #[test]
    fn population_is_deterministic() {
        let a = generate_population(3, 9).unwrap();
        let b = generate_population(3, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_population(3, 10).unwrap());
    }

    #[test]
    fn thousand_member_population() {
        let pop = generate_population(1000, 42).unwrap();
        assert_eq!(pop.len(), 1000);
        assert!(pop
            .iter()
            .all(|m| (0.0..=1.0).contains(&m.opinion) && !m.active));
        assert!(pop.iter().enumerate().all(|(i, m)| m.id as usize == i));
    }

    #[test]
    fn population_mean_near_half() {
        for seed in 0..20 {
            let pop = generate_population(10_000, seed).unwrap();
            let mean = pop.iter().map(|m| m.opinion).sum::<f64>() / 1e4;
            assert!((mean - 0.5).abs() < 0.02, "seed {seed}: {mean}");
        }
    }

    #[test]
    fn empty_population_rejected() {
        assert!(matches!(
            generate_population(0, 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn activity_counts() {
        let pop = generate_population(1000, 1).unwrap();
        let count = |f| {
            set_activity(&pop, f, 5)
                .unwrap()
                .iter()
                .filter(|m| m.active)
                .count()
        };
        assert_eq!(count(1.0), 1000);
        assert_eq!(count(0.5), 500);
        assert_eq!(count(0.0), 0);
        // round half up: 0.0005 * 1000 = 0.5 -> 1
        assert_eq!(count(0.0005), 1);
        assert!(set_activity(&pop, 1.5, 0).is_err());
    }

    #[test]
    fn activity_is_deterministic() {
        let pop = generate_population(50, 1).unwrap();
        assert_eq!(
            set_activity(&pop, 0.3, 8).unwrap(),
            set_activity(&pop, 0.3, 8).unwrap()
        );
    }

    #[test]
    fn single_edge_weight() {
        assert_eq!(edge_value(0.3, 0.8), 0.5);
        let members = [m(0, 0.3, false), m(1, 0.8, false)];
        let net = build_network(&members, &TopologyConfig::model2(1, Depth::Unbounded), 0).unwrap();
        let out = net.out_edges(0);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].to, 1);
        assert_eq!(out[0].weight, 1.0);
    }

    #[test]
    fn two_representatives_split_proportionally() {
        // 0.5 -> {0.4, 0.9}: raw 0.9 and 0.6, normalized 0.6 / 0.4
        let members = [m(0, 0.5, false), m(1, 0.4, true), m(2, 0.9, true)];
        let net = build_network(&members, &TopologyConfig::model2(2, Depth::Unbounded), 0).unwrap();
        let out = net.out_edges(0);
        assert_eq!(out.len(), 2);
        assert!((out[0].weight - 0.9 / 1.5).abs() < 1e-15);
        assert!((out[1].weight - 0.6 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn model1_picks_closest_active() {
        let members = [m(0, 0.2, false), m(1, 0.25, true), m(2, 0.9, true)];
        let net = build_network(&members, &TopologyConfig::model1(), 0).unwrap();
        assert_eq!(net.edge_count(), 1);
        let e = &net.out_edges(0)[0];
        assert_eq!((e.to, e.weight), (1, 1.0));
        assert!(net.out_edges(1).is_empty());
    }

    #[test]
    fn model1_tie_goes_to_smaller_id() {
        let members = [
            m(5, 0.5, false),
            m(7, 0.25, true),
            m(3, 0.75, true),
            m(1, 0.25, true),
        ];
        let net = build_network(&members, &TopologyConfig::model1(), 0).unwrap();
        assert_eq!(net.out_edges(5)[0].to, 1);
    }

    #[test]
    fn model1_without_actives() {
        let members = [m(0, 0.2, false), m(1, 0.4, false)];
        assert!(matches!(
            build_network(&members, &TopologyConfig::model1(), 0),
            Err(Error::NoRepresentative)
        ));
    }

    #[test]
    fn model2_needs_enough_members() {
        let members = [m(0, 0.2, false), m(1, 0.4, true), m(2, 0.5, false)];
        assert!(matches!(
            build_network(&members, &TopologyConfig::model2(3, Depth::Unbounded), 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_raw_values_fall_back_to_uniform() {
        let members = [m(0, 0.0, false), m(1, 1.0, true), m(2, 1.0, false)];
        let net = build_network(&members, &TopologyConfig::model2(2, Depth::Unbounded), 0).unwrap();
        for e in net.out_edges(0) {
            assert_eq!(e.weight, 0.5);
        }
        let full = build_network(&members, &TopologyConfig::full(Depth::Unbounded), 0).unwrap();
        for e in full.out_edges(0) {
            assert_eq!(e.weight, 0.5);
        }
    }

    #[test]
    fn nearest_selection_matches_brute_force() {
        for seed in 0..30 {
            let mut pop = generate_population(40, seed).unwrap();
            // force opinion ties
            for i in (0..40).step_by(7) {
                pop[i].opinion = 0.5;
            }
            for k in [1, 3, 5] {
                let net =
                    build_network(&pop, &TopologyConfig::model2(k, Depth::Unbounded), 0).unwrap();
                for i in 0..pop.len() {
                    let got: Vec<MemberId> =
                        net.out_edges(pop[i].id).iter().map(|e| e.to).collect();
                    assert_eq!(
                        got,
                        nearest_brute(&pop, i, k),
                        "seed {seed} k {k} member {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn random_selection_is_seeded() {
        let pop = set_activity(&generate_population(30, 3).unwrap(), 0.5, 1).unwrap();
        let config = TopologyConfig::model2(3, Depth::Unbounded).with_selection(Selection::Random);
        let a: Vec<_> = build_network(&pop, &config, 11).unwrap().edges().collect();
        let b: Vec<_> = build_network(&pop, &config, 11).unwrap().edges().collect();
        let c: Vec<_> = build_network(&pop, &config, 12).unwrap().edges().collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 90);
        assert!(a.iter().all(|e| e.from != e.to));
    }

    #[test]
    fn complete_graph_weights_match_direct_sum() {
        let pop = generate_population(25, 4).unwrap();
        let net = build_network(&pop, &TopologyConfig::full(Depth::Unbounded), 0).unwrap();
        assert!(net.is_complete());
        assert_eq!(net.edge_count(), 25 * 24);
        for member in &pop {
            let direct: f64 = pop
                .iter()
                .filter(|o| o.id != member.id)
                .map(|o| edge_value(member.opinion, o.opinion))
                .sum();
            for e in net.out_edges(member.id) {
                let expected = edge_value(member.opinion, pop[e.to as usize].opinion) / direct;
                assert!((e.weight - expected).abs() < 1e-14);
            }
            assert!((net.out_weight_sum(member.id) - 1.0).abs() < 1e-12);
        }
        assert_eq!(net.to_explicit().edges().count(), 600);
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        let members = [m(0, 0.1, false), m(1, 0.2, true)];
        let edge = |from, to, weight| DelegationEdge {
            from,
            to,
            weight,
            domain: None,
        };
        let topo = TopologyConfig::model2(1, Depth::Unbounded);
        assert!(
            DelegationNetwork::from_edges(&members, vec![edge(0, 0, 1.0)], topo.clone()).is_err()
        );
        assert!(
            DelegationNetwork::from_edges(&members, vec![edge(0, 9, 1.0)], topo.clone()).is_err()
        );
        assert!(
            DelegationNetwork::from_edges(&members, vec![edge(0, 1, 1.5)], topo.clone()).is_err()
        );
        assert!(DelegationNetwork::from_edges(
            &members,
            vec![edge(0, 1, 0.5), edge(0, 1, 0.5)],
            topo.clone()
        )
        .is_err());
        let dup = [m(0, 0.1, false), m(0, 0.2, true)];
        assert!(DelegationNetwork::from_edges(&dup, vec![], topo.clone()).is_err());
        let out_of_range = [m(0, 1.1, false)];
        assert!(DelegationNetwork::from_edges(&out_of_range, vec![], topo).is_err());
    }

    fn labeled_network() -> DelegationNetwork {
        let members = [
            m(0, 0.5, false),
            m(1, 0.4, true),
            m(2, 0.9, true),
            m(3, 0.1, true),
        ];
        let edge = |to, weight: f64, domain: &str| DelegationEdge {
            from: 0,
            to,
            weight,
            domain: Some(domain.to_string()),
        };
        DelegationNetwork::from_edges(
            &members,
            vec![
                edge(1, 0.3, "tax"),
                edge(2, 0.2, "tax"),
                edge(3, 0.5, "health"),
            ],
            TopologyConfig::model2(3, Depth::Unbounded),
        )
        .unwrap()
    }

    #[test]
    fn domain_filter_keeps_matching_edges() {
        let net = labeled_network();
        let tax = net.filter_by_domain("tax");
        assert_eq!(tax.edge_count(), 2);
        assert_eq!(tax.members(), net.members());
        let out = tax.out_edges(0);
        assert!((out[0].weight - 0.6).abs() < 1e-15);
        assert!((out[1].weight - 0.4).abs() < 1e-15);
        assert_eq!(net.filter_by_domain("health").edge_count(), 1);
        assert_eq!(net.filter_by_domain("defence").edge_count(), 0);
    }

    #[test]
    fn unlabeled_network_filters_to_nothing() {
        let pop = set_activity(&generate_population(20, 1).unwrap(), 0.5, 1).unwrap();
        for config in [
            TopologyConfig::model2(3, Depth::Unbounded),
            TopologyConfig::full(Depth::Unbounded),
        ] {
            let net = build_network(&pop, &config, 0).unwrap();
            let filtered = net.filter_by_domain("tax");
            assert_eq!(filtered.edge_count(), 0);
            assert_eq!(filtered.members().len(), 20);
            assert_eq!(
                net.with_domain("tax").filter_by_domain("tax").edge_count(),
                net.edge_count()
            );
        }
    }

    #[test]
    fn topology_labels_round_trip() {
        for label in [
            "k0",
            "k1d1",
            "k3dinf",
            "k2d4",
            "full",
            "fulld3",
            "k3dinf-random",
        ] {
            let config: TopologyConfig = label.parse().unwrap();
            config.validate().unwrap();
            assert_eq!(config.label(), label);
        }
        for bad in [
            "",
            "k",
            "kxd1",
            "k0d1",
            "k3d0",
            "k3",
            "full-random",
            "k1d1-random2",
            "k3dinfinity",
        ] {
            assert!(bad.parse::<TopologyConfig>().is_err(), "{bad}");
        }
        assert_eq!(
            "k1d1".parse::<TopologyConfig>().unwrap().model,
            NetworkModel::Model1
        );
        assert_eq!(
            "k1d2".parse::<TopologyConfig>().unwrap().model,
            NetworkModel::Model2
        );
    }
}
