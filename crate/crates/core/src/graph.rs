//! Shortest paths, strong connectivity and circulation checks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::network::{Arc, ArcId, ArcSet, NodeId};

/// Read-only view of a directed graph. Implemented by [`RoadNetwork`] and by
/// the unvalidated [`Digraph`].
///
/// [`RoadNetwork`]: crate::network::RoadNetwork
pub trait ArcView {
    fn node_count(&self) -> usize;
    fn arcs(&self) -> &[Arc];
}

/// A plain arc list with no invariants, for graphs that may not (yet) be
/// strongly connected.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    pub node_count: usize,
    pub arcs: Vec<Arc>,
}

impl ArcView for Digraph {
    fn node_count(&self) -> usize {
        self.node_count
    }

    fn arcs(&self) -> &[Arc] {
        &self.arcs
    }
}

/// Dense `n x n` matrix of shortest distances; `f64::INFINITY` marks
/// unreachable pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: NodeId, to: NodeId) -> f64 {
        self.data[from.0 * self.n + to.0]
    }

    pub fn row(&self, from: NodeId) -> &[f64] {
        &self.data[from.0 * self.n..(from.0 + 1) * self.n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, node)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest path tree over the arcs admitted by `restrict`.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    pub source: NodeId,
    pub dist: Vec<f64>,
    pub pred: Vec<Option<ArcId>>,
}

impl ShortestPathTree {
    /// Arcs of the tree path from the source to `target`, in travel order.
    pub fn path_to<G: ArcView + ?Sized>(&self, graph: &G, target: NodeId) -> Option<Vec<ArcId>> {
        if !self.dist[target.0].is_finite() {
            return None;
        }
        let mut path = Vec::new();
        let mut at = target;
        while at != self.source {
            let arc = self.pred[at.0]?;
            path.push(arc);
            at = graph.arcs()[arc.0].tail;
        }
        path.reverse();
        Some(path)
    }
}

fn adjacency<G: ArcView + ?Sized>(graph: &G, restrict: Option<&ArcSet>) -> Vec<Vec<ArcId>> {
    let mut out = vec![Vec::new(); graph.node_count()];
    for (i, arc) in graph.arcs().iter().enumerate() {
        let id = ArcId(i);
        if restrict.is_none_or(|s| s.contains(id)) {
            out[arc.tail.0].push(id);
        }
    }
    out
}

fn dijkstra<G: ArcView + ?Sized>(
    graph: &G,
    adjacency: &[Vec<ArcId>],
    source: NodeId,
) -> ShortestPathTree {
    let n = graph.node_count();
    let arcs = graph.arcs();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source.0] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        node: source.0,
    });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        for &a in &adjacency[node] {
            let arc = &arcs[a.0];
            let next = d + arc.length;
            let head = arc.head.0;
            if next < dist[head] {
                dist[head] = next;
                pred[head] = Some(a);
                heap.push(HeapEntry {
                    dist: next,
                    node: head,
                });
            }
        }
    }
    ShortestPathTree { source, dist, pred }
}

pub fn shortest_path_tree<G: ArcView + ?Sized>(
    graph: &G,
    source: NodeId,
    restrict: Option<&ArcSet>,
) -> ShortestPathTree {
    let adj = adjacency(graph, restrict);
    dijkstra(graph, &adj, source)
}

/// One tree per source node, sharing a single adjacency build.
pub fn all_shortest_path_trees<G: ArcView + ?Sized>(
    graph: &G,
    restrict: Option<&ArcSet>,
) -> Vec<ShortestPathTree> {
    let adj = adjacency(graph, restrict);
    (0..graph.node_count())
        .map(|s| dijkstra(graph, &adj, NodeId(s)))
        .collect()
}

/// Exact all-pairs shortest distances over the arcs in `restrict` (all arcs
/// when `None`).
pub fn all_pairs_shortest<G: ArcView + ?Sized>(
    graph: &G,
    restrict: Option<&ArcSet>,
) -> DistanceMatrix {
    let n = graph.node_count();
    let adj = adjacency(graph, restrict);
    let mut data = Vec::with_capacity(n * n);
    for s in 0..n {
        data.extend(dijkstra(graph, &adj, NodeId(s)).dist);
    }
    DistanceMatrix { n, data }
}

fn reach(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// True iff every node reaches every other node.
pub fn is_strongly_connected<G: ArcView + ?Sized>(graph: &G) -> bool {
    let n = graph.node_count();
    if n <= 1 {
        return true;
    }
    let mut fwd = vec![Vec::new(); n];
    let mut bwd = vec![Vec::new(); n];
    for arc in graph.arcs() {
        fwd[arc.tail.0].push(arc.head.0);
        bwd[arc.head.0].push(arc.tail.0);
    }
    reach(&fwd, 0).iter().all(|&b| b) && reach(&bwd, 0).iter().all(|&b| b)
}

/// Weakly connected component index for every node.
pub fn weak_components<G: ArcView + ?Sized>(graph: &G) -> Vec<usize> {
    let n = graph.node_count();
    let mut adj = vec![Vec::new(); n];
    for arc in graph.arcs() {
        adj[arc.tail.0].push(arc.head.0);
        adj[arc.head.0].push(arc.tail.0);
    }
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        for (v, &r) in reach(&adj, s).iter().enumerate() {
            if r {
                comp[v] = next;
            }
        }
        next += 1;
    }
    comp
}

/// True iff every node has as many selected outgoing arcs as selected
/// incoming arcs.
pub fn is_circulation<G: ArcView + ?Sized>(graph: &G, subset: &ArcSet) -> bool {
    let mut balance = vec![0i64; graph.node_count()];
    for a in subset.ids() {
        let arc = &graph.arcs()[a.0];
        balance[arc.tail.0] += 1;
        balance[arc.head.0] -= 1;
    }
    balance.iter().all(|&b| b == 0)
}
