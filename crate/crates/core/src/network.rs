//! Domain types: the road network, OD demand and priority profiles, and the
//! assembled design problem.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{self, ArcView, DistanceMatrix};
use crate::priority;

/// Absolute tolerance used by post-condition comparisons on O(1) quantities.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ArcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ordered origin-destination pair. Ordering is lexicographic on
/// `(origin, destination)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OdPair {
    pub origin: NodeId,
    pub destination: NodeId,
}

impl OdPair {
    pub fn new(origin: usize, destination: usize) -> Self {
        OdPair {
            origin: NodeId(origin),
            destination: NodeId(destination),
        }
    }
}

impl fmt::Display for OdPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.origin, self.destination)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub label: String,
    pub lat: f64,
    pub lon: f64,
}

impl Node {
    pub fn new(label: impl Into<String>, lat: f64, lon: f64) -> Self {
        Node {
            label: label.into(),
            lat,
            lon,
        }
    }

    /// A node without meaningful coordinates, for abstract test graphs.
    pub fn abstract_node(label: impl Into<String>) -> Self {
        Node::new(label, 0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub tail: NodeId,
    pub head: NodeId,
    /// Kilometers.
    pub length: f64,
    /// Budget units.
    pub cost: f64,
}

impl Arc {
    pub fn new(tail: usize, head: usize, length: f64, cost: f64) -> Self {
        Arc {
            tail: NodeId(tail),
            head: NodeId(head),
            length,
            cost,
        }
    }
}

/// A set of arcs stored as a membership bitmap over the network's arc ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArcSet {
    members: Vec<bool>,
}

impl ArcSet {
    pub fn empty(arc_count: usize) -> Self {
        ArcSet {
            members: vec![false; arc_count],
        }
    }

    pub fn full(arc_count: usize) -> Self {
        ArcSet {
            members: vec![true; arc_count],
        }
    }

    pub fn from_ids(arc_count: usize, ids: impl IntoIterator<Item = ArcId>) -> Self {
        let mut set = ArcSet::empty(arc_count);
        for id in ids {
            set.insert(id);
        }
        set
    }

    /// Bit `i` of `mask` selects arc `i`.
    pub fn from_mask(arc_count: usize, mask: u64) -> Self {
        ArcSet {
            members: (0..arc_count).map(|i| mask >> i & 1 == 1).collect(),
        }
    }

    pub fn insert(&mut self, id: ArcId) {
        self.members[id.0] = true;
    }

    pub fn contains(&self, id: ArcId) -> bool {
        self.members.get(id.0).copied().unwrap_or(false)
    }

    pub fn capacity(&self) -> usize {
        self.members.len()
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> impl Iterator<Item = ArcId> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| ArcId(i))
    }

    pub fn is_subset(&self, other: &ArcSet) -> bool {
        self.ids().all(|a| other.contains(a))
    }
}

/// Directed graph of tract centroids with per-arc length and installation
/// cost. Construction rejects self-loops, parallel arcs, negative or
/// non-finite attributes and graphs that are not strongly connected.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    outgoing: Vec<Vec<ArcId>>,
    incoming: Vec<Vec<ArcId>>,
}

impl RoadNetwork {
    pub fn new(nodes: Vec<Node>, arcs: Vec<Arc>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidNetwork("network has no nodes".into()));
        }
        let n = nodes.len();
        let mut seen = std::collections::HashSet::new();
        for (i, arc) in arcs.iter().enumerate() {
            if arc.tail.0 >= n || arc.head.0 >= n {
                return Err(Error::InvalidNetwork(format!(
                    "arc {i} references a node outside 0..{n}"
                )));
            }
            if arc.tail == arc.head {
                return Err(Error::InvalidNetwork(format!("arc {i} is a self-loop")));
            }
            if !seen.insert((arc.tail, arc.head)) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate arc {}->{}",
                    arc.tail, arc.head
                )));
            }
            if !(arc.length.is_finite() && arc.length >= 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "arc {i} has invalid length {}",
                    arc.length
                )));
            }
            if !(arc.cost.is_finite() && arc.cost >= 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "arc {i} has invalid cost {}",
                    arc.cost
                )));
            }
        }
        let mut outgoing = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); n];
        for (i, arc) in arcs.iter().enumerate() {
            outgoing[arc.tail.0].push(ArcId(i));
            incoming[arc.head.0].push(ArcId(i));
        }
        let network = RoadNetwork {
            nodes,
            arcs,
            outgoing,
            incoming,
        };
        if !graph::is_strongly_connected(&network) {
            return Err(Error::InvalidNetwork(
                "network is not strongly connected".into(),
            ));
        }
        Ok(network)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn arc(&self, id: ArcId) -> &Arc {
        &self.arcs[id.0]
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn outgoing(&self, node: NodeId) -> &[ArcId] {
        &self.outgoing[node.0]
    }

    pub fn incoming(&self, node: NodeId) -> &[ArcId] {
        &self.incoming[node.0]
    }

    pub fn total_cost(&self) -> f64 {
        self.arcs.iter().map(|a| a.cost).sum()
    }

    pub fn cost_of(&self, set: &ArcSet) -> f64 {
        set.ids().map(|a| self.arcs[a.0].cost).sum()
    }

    pub fn find_arc(&self, tail: NodeId, head: NodeId) -> Option<ArcId> {
        self.outgoing[tail.0]
            .iter()
            .copied()
            .find(|&a| self.arcs[a.0].head == head)
    }

    /// Every ordered pair of distinct nodes, in lexicographic order.
    pub fn all_pairs(&self) -> Vec<OdPair> {
        let n = self.nodes.len();
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1));
        for o in 0..n {
            for d in 0..n {
                if o != d {
                    pairs.push(OdPair::new(o, d));
                }
            }
        }
        pairs
    }

    pub fn pair_label(&self, pair: OdPair) -> String {
        format!(
            "{}->{}",
            self.nodes[pair.origin.0].label, self.nodes[pair.destination.0].label
        )
    }
}

impl ArcView for RoadNetwork {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn arcs(&self) -> &[Arc] {
        &self.arcs
    }
}

/// Riders per time window for each OD pair. Pairs without an entry have zero
/// demand.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DemandProfile {
    counts: BTreeMap<OdPair, u64>,
}

impl DemandProfile {
    pub fn new(counts: impl IntoIterator<Item = (OdPair, u64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (pair, count) in counts {
            if pair.origin == pair.destination {
                return Err(Error::InvalidArgument(format!(
                    "demand entry {pair} has origin equal to destination"
                )));
            }
            *map.entry(pair).or_insert(0) += count;
        }
        Ok(DemandProfile { counts: map })
    }

    pub fn get(&self, pair: OdPair) -> u64 {
        self.counts.get(&pair).copied().unwrap_or(0)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (OdPair, u64)> + '_ {
        self.counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&p, &c)| (p, c))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Per-pair priority scores in `(0, 1)` together with their priority group
/// (group 1 holds the highest priorities).
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityProfile {
    priorities: BTreeMap<OdPair, f64>,
    groups: BTreeMap<OdPair, usize>,
    group_count: usize,
}

impl PriorityProfile {
    /// Builds the profile and bins it into `k` uniform priority groups.
    pub fn new(priorities: BTreeMap<OdPair, f64>, k: usize) -> Result<Self> {
        for (pair, &p) in &priorities {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "priority {p} of pair {pair} is outside (0, 1)"
                )));
            }
        }
        let groups = priority::assign_groups(&priorities, k)?;
        Ok(PriorityProfile {
            priorities,
            groups,
            group_count: k,
        })
    }

    /// Every pair gets the same priority and falls in group 1.
    pub fn uniform(pairs: &[OdPair], value: f64) -> Result<Self> {
        PriorityProfile::new(pairs.iter().map(|&p| (p, value)).collect(), 1)
    }

    /// Keeps the group labels of `self` but replaces every priority by
    /// `value`; used for the equal-priority baseline.
    pub fn flattened(&self, value: f64) -> Result<Self> {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "priority {value} is outside (0, 1)"
            )));
        }
        Ok(PriorityProfile {
            priorities: self.priorities.keys().map(|&p| (p, value)).collect(),
            groups: self.groups.clone(),
            group_count: self.group_count,
        })
    }

    pub fn get(&self, pair: OdPair) -> Option<f64> {
        self.priorities.get(&pair).copied()
    }

    pub fn group(&self, pair: OdPair) -> Option<usize> {
        self.groups.get(&pair).copied()
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn priorities(&self) -> &BTreeMap<OdPair, f64> {
        &self.priorities
    }

    pub fn groups(&self) -> &BTreeMap<OdPair, usize> {
        &self.groups
    }
}

/// Per-pair utilities in `[0, 1]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UtilityProfile {
    values: BTreeMap<OdPair, f64>,
}

impl UtilityProfile {
    pub fn new(values: BTreeMap<OdPair, f64>) -> Result<Self> {
        for (pair, &u) in &values {
            if !(-EPS..=1.0 + EPS).contains(&u) {
                return Err(Error::InvalidArgument(format!(
                    "utility {u} of pair {pair} is outside [0, 1]"
                )));
            }
        }
        Ok(UtilityProfile { values })
    }

    pub fn constant(pairs: &[OdPair], value: f64) -> Self {
        UtilityProfile {
            values: pairs.iter().map(|&p| (p, value)).collect(),
        }
    }

    pub fn get(&self, pair: OdPair) -> Option<f64> {
        self.values.get(&pair).copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = OdPair> + '_ {
        self.values.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (OdPair, f64)> + '_ {
        self.values.iter().map(|(&p, &u)| (p, u))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.values().sum::<f64>() / self.values.len() as f64
    }
}

/// The full input of one MILP solve: network, OD set, demand, priorities,
/// detour tolerance and budget, plus the precomputed shortest distances.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    network: RoadNetwork,
    pairs: Vec<OdPair>,
    demand: DemandProfile,
    priority: PriorityProfile,
    alpha: f64,
    budget: f64,
    shortest: DistanceMatrix,
}

impl DesignProblem {
    /// Problem over the full OD set (every ordered pair of distinct nodes).
    pub fn new(
        network: RoadNetwork,
        demand: DemandProfile,
        priority: PriorityProfile,
        alpha: f64,
        budget: f64,
    ) -> Result<Self> {
        let pairs = network.all_pairs();
        DesignProblem::with_pairs(network, pairs, demand, priority, alpha, budget)
    }

    /// Problem over an explicit OD set.
    pub fn with_pairs(
        network: RoadNetwork,
        mut pairs: Vec<OdPair>,
        demand: DemandProfile,
        priority: PriorityProfile,
        alpha: f64,
        budget: f64,
    ) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(Error::InvalidProblem(format!(
                "detour tolerance alpha must be > 1, got {alpha}"
            )));
        }
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(Error::InvalidProblem(format!(
                "budget must be a finite nonnegative number, got {budget}"
            )));
        }
        pairs.sort();
        pairs.dedup();
        if pairs.is_empty() {
            return Err(Error::InvalidProblem("OD set is empty".into()));
        }
        let n = network.nodes().len();
        for pair in &pairs {
            if pair.origin == pair.destination || pair.origin.0 >= n || pair.destination.0 >= n {
                return Err(Error::InvalidProblem(format!("invalid OD pair {pair}")));
            }
            if priority.get(*pair).is_none() {
                return Err(Error::InvalidProblem(format!(
                    "pair {pair} has no priority"
                )));
            }
        }
        for (pair, _) in demand.nonzero() {
            if pairs.binary_search(&pair).is_err() {
                return Err(Error::InvalidProblem(format!(
                    "demand references pair {pair} outside the OD set"
                )));
            }
        }
        let shortest = graph::all_pairs_shortest(&network, None);
        for pair in &pairs {
            let d = shortest.get(pair.origin, pair.destination);
            if !d.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "pair {pair} is unreachable"
                )));
            }
            if d <= 0.0 {
                return Err(Error::InvalidProblem(format!(
                    "pair {} has zero shortest distance; merge coincident centroids",
                    network.pair_label(*pair)
                )));
            }
        }
        Ok(DesignProblem {
            network,
            pairs,
            demand,
            priority,
            alpha,
            budget,
            shortest,
        })
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.network
    }

    pub fn pairs(&self) -> &[OdPair] {
        &self.pairs
    }

    pub fn pair_index(&self, pair: OdPair) -> Option<usize> {
        self.pairs.binary_search(&pair).ok()
    }

    pub fn demand(&self) -> &DemandProfile {
        &self.demand
    }

    pub fn priority(&self) -> &PriorityProfile {
        &self.priority
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn shortest(&self) -> &DistanceMatrix {
        &self.shortest
    }

    pub fn shortest_length(&self, pair: OdPair) -> f64 {
        self.shortest.get(pair.origin, pair.destination)
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(Error::InvalidProblem(format!(
                "budget must be a finite nonnegative number, got {budget}"
            )));
        }
        let mut next = self.clone();
        next.budget = budget;
        Ok(next)
    }

    pub fn with_priority(&self, priority: PriorityProfile) -> Result<Self> {
        for pair in &self.pairs {
            if priority.get(*pair).is_none() {
                return Err(Error::InvalidProblem(format!(
                    "pair {pair} has no priority"
                )));
            }
        }
        let mut next = self.clone();
        next.priority = priority;
        Ok(next)
    }

    /// Recomputes shortest distances and compares them to the stored matrix.
    pub fn shortest_is_consistent(&self) -> bool {
        let fresh = graph::all_pairs_shortest(&self.network, None);
        self.pairs.iter().all(|p| {
            (fresh.get(p.origin, p.destination) - self.shortest_length(*p)).abs() <= EPS
        })
    }
}
