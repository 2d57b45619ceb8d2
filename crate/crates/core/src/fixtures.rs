//! Small reference instances and a seeded random instance generator, shared
//! by unit tests, integration tests and the `oracle-check` command.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::network::{Arc, DemandProfile, DesignProblem, Node, OdPair, PriorityProfile, RoadNetwork};

/// Three nodes labelled "1", "2", "3" (indices 0, 1, 2) with the forward
/// cycle 1->2 (1), 2->3 (1), 3->1 (2) as arcs 0..3 and the reverse arcs
/// 2->1 (1), 3->2 (1), 1->3 (2) as arcs 3..6. Costs equal lengths.
pub fn cycle3() -> RoadNetwork {
    let nodes = ["1", "2", "3"].into_iter().map(Node::abstract_node).collect();
    let arcs = vec![
        Arc::new(0, 1, 1.0, 1.0),
        Arc::new(1, 2, 1.0, 1.0),
        Arc::new(2, 0, 2.0, 2.0),
        Arc::new(1, 0, 1.0, 1.0),
        Arc::new(2, 1, 1.0, 1.0),
        Arc::new(0, 2, 2.0, 2.0),
    ];
    RoadNetwork::new(nodes, arcs).expect("cycle3 is valid")
}

/// [`cycle3`] with the given demand entries, uniform priority 0.5.
pub fn cycle3_problem(demand: &[(OdPair, u64)], alpha: f64, budget: f64) -> DesignProblem {
    let net = cycle3();
    let pairs = net.all_pairs();
    let prio = PriorityProfile::uniform(&pairs, 0.5).unwrap();
    let demand = DemandProfile::new(demand.iter().copied()).unwrap();
    DesignProblem::new(net, demand, prio, alpha, budget).unwrap()
}

/// Single directed cycle over `n` nodes with unit lengths and costs.
pub fn ring(n: usize) -> RoadNetwork {
    let nodes = (0..n).map(|i| Node::abstract_node(format!("r{i}"))).collect();
    let arcs = (0..n).map(|i| Arc::new(i, (i + 1) % n, 1.0, 1.0)).collect();
    RoadNetwork::new(nodes, arcs).expect("ring is valid")
}

#[derive(Debug, Clone)]
pub struct InstanceParams {
    pub nodes: (usize, usize),
    pub arcs: (usize, usize),
    pub length: (f64, f64),
    pub cost: (f64, f64),
    pub demand: (u64, u64),
    pub priority: (f64, f64),
    pub alpha: f64,
    pub groups: usize,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            nodes: (4, 5),
            arcs: (6, 10),
            length: (1.0, 10.0),
            cost: (1.0, 10.0),
            demand: (1, 20),
            priority: (0.05, 0.95),
            alpha: 2.0,
            groups: 5,
        }
    }
}

/// Random strongly connected instance: a random Hamiltonian cycle plus
/// random 2- and 3-cycles (so up to two arcs beyond `params.arcs`), random lengths, costs, demands and priorities, and a
/// budget drawn uniformly from `[0, total cost]`.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, params: &InstanceParams) -> DesignProblem {
    let n = rng.random_range(params.nodes.0..=params.nodes.1);
    let m = rng
        .random_range(params.arcs.0..=params.arcs.1)
        .clamp(n, n * (n - 1));

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut ends: Vec<(usize, usize)> = (0..n).map(|i| (order[i], order[(i + 1) % n])).collect();
    // Extra arcs come as short directed cycles so the full arc set stays
    // balanced and some design serves every pair along a shortest path.
    let mut attempts = 0;
    while ends.len() < m && attempts < 1000 {
        attempts += 1;
        let len = if n >= 3 && rng.random_bool(0.5) { 3 } else { 2 };
        let mut nodes: Vec<usize> = (0..n).collect();
        nodes.shuffle(rng);
        let cycle: Vec<(usize, usize)> = (0..len).map(|i| (nodes[i], nodes[(i + 1) % len])).collect();
        if cycle.iter().all(|e| !ends.contains(e)) {
            ends.extend(cycle);
        }
    }
    ends.sort();

    let arcs = ends
        .into_iter()
        .map(|(t, h)| {
            let length = round3(rng.random_range(params.length.0..=params.length.1));
            let cost = round3(rng.random_range(params.cost.0..=params.cost.1));
            Arc::new(t, h, length, cost)
        })
        .collect();
    let nodes = (0..n).map(|i| Node::abstract_node(format!("n{i}"))).collect();
    let network = RoadNetwork::new(nodes, arcs).expect("random instance is strongly connected");

    let pairs = network.all_pairs();
    let demand = DemandProfile::new(
        pairs
            .iter()
            .map(|&p| (p, rng.random_range(params.demand.0..=params.demand.1)))
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let priorities: BTreeMap<OdPair, f64> = pairs
        .iter()
        .map(|&p| (p, round3(rng.random_range(params.priority.0..=params.priority.1))))
        .collect();
    let priority = PriorityProfile::new(priorities, params.groups).unwrap();
    let budget = round3(rng.random_range(0.0..=network.total_cost()));
    DesignProblem::new(network, demand, priority, params.alpha, budget).unwrap()
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}
