//! Exhaustive ground truth for tiny instances: enumerate every budget-feasible
//! circulation and score it by shortest paths on the installed subgraph.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::network::{ArcId, ArcSet, DesignProblem, OdPair, RoadNetwork, UtilityProfile};
use crate::utility::evaluate_utility_profile;

const BUDGET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_arcs: usize,
    pub max_nodes: usize,
    /// Upper bound on complete arc assignments visited.
    pub max_subsets: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_arcs: 12,
            max_nodes: 6,
            max_subsets: 1 << 20,
        }
    }
}

impl EnumerationBudget {
    fn admit(&self, network: &RoadNetwork) -> Result<()> {
        if self.max_arcs == 0 || self.max_nodes == 0 || self.max_subsets == 0 {
            return Err(Error::InvalidArgument("enumeration caps must be positive".into()));
        }
        if network.arc_count() > self.max_arcs.min(63) {
            return Err(Error::OracleCap(format!(
                "{} arcs exceed the cap of {}",
                network.arc_count(),
                self.max_arcs
            )));
        }
        if network.nodes().len() > self.max_nodes {
            return Err(Error::OracleCap(format!(
                "{} nodes exceed the cap of {}",
                network.nodes().len(),
                self.max_nodes
            )));
        }
        Ok(())
    }
}

struct Search<'a> {
    network: &'a RoadNetwork,
    budget: f64,
    /// Nodes whose incident arcs are all decided once arc `i` is decided.
    closes: Vec<Vec<usize>>,
    balance: Vec<i64>,
    visited: u64,
    cap: u64,
}

impl Search<'_> {
    fn closed_ok(&self, i: usize) -> bool {
        self.closes[i].iter().all(|&v| self.balance[v] == 0)
    }

    fn run(&mut self, next: usize, mask: u64, cost: f64, out: &mut dyn FnMut(u64)) -> Result<()> {
        if next == 0 {
            self.visited += 1;
            if self.visited > self.cap {
                return Err(Error::OracleCap(format!(
                    "more than {} subsets visited",
                    self.cap
                )));
            }
            out(mask);
            return Ok(());
        }
        let i = next - 1;
        if self.closed_ok(i) {
            self.run(i, mask, cost, out)?;
        }
        let arc = self.network.arc(ArcId(i));
        if cost + arc.cost <= self.budget + BUDGET_TOL {
            self.balance[arc.tail.0] += 1;
            self.balance[arc.head.0] -= 1;
            if self.closed_ok(i) {
                self.run(i, mask | (1 << i), cost + arc.cost, out)?;
            }
            self.balance[arc.tail.0] -= 1;
            self.balance[arc.head.0] += 1;
        }
        Ok(())
    }
}

/// Every arc subset that is a circulation with cost within `budget`, in
/// ascending bitmask order (bit `i` is arc `i`).
pub fn enumerate_feasible(network: &RoadNetwork, budget: f64, caps: &EnumerationBudget) -> Result<Vec<ArcSet>> {
    caps.admit(network)?;
    let m = network.arc_count();
    let mut lowest = vec![usize::MAX; network.nodes().len()];
    for i in 0..m {
        let arc = network.arc(ArcId(i));
        lowest[arc.tail.0] = lowest[arc.tail.0].min(i);
        lowest[arc.head.0] = lowest[arc.head.0].min(i);
    }
    let mut closes = vec![Vec::new(); m];
    for (v, &i) in lowest.iter().enumerate() {
        if i != usize::MAX {
            closes[i].push(v);
        }
    }
    let mut search = Search {
        network,
        budget,
        closes,
        balance: vec![0; network.nodes().len()],
        visited: 0,
        cap: caps.max_subsets,
    };
    let mut masks = Vec::new();
    search.run(m, 0, 0.0, &mut |mask| masks.push(mask))?;
    Ok(masks.into_iter().map(|mask| ArcSet::from_mask(m, mask)).collect())
}

/// Feasible designs of a problem together with their utility profiles.
#[derive(Debug, Clone)]
pub struct Evaluated {
    pub designs: Vec<(ArcSet, UtilityProfile)>,
}

pub fn evaluate_all(problem: &DesignProblem, caps: &EnumerationBudget) -> Result<Evaluated> {
    let sets = enumerate_feasible(problem.network(), problem.budget(), caps)?;
    let mut designs = Vec::with_capacity(sets.len());
    for set in sets {
        let u = evaluate_utility_profile(problem, &set)?;
        designs.push((set, u));
    }
    Ok(Evaluated { designs })
}

#[derive(Debug, Clone)]
pub struct OracleOptimum {
    pub value: f64,
    pub best: ArcSet,
    pub utilities: UtilityProfile,
    /// Designs that passed the floor filter and were scored.
    pub evaluated: usize,
}

impl Evaluated {
    /// Maximum of `welfare` over designs with `u >= t - 1e-9` for every
    /// floor. The first design reaching the maximum wins.
    pub fn optimum<F>(&self, floors: &BTreeMap<OdPair, f64>, mut welfare: F) -> Result<OracleOptimum>
    where
        F: FnMut(&UtilityProfile) -> Result<f64>,
    {
        let mut best: Option<(f64, usize)> = None;
        let mut evaluated = 0;
        for (idx, (_, u)) in self.designs.iter().enumerate() {
            let meets = floors
                .iter()
                .all(|(&pair, &t)| u.get(pair).is_some_and(|v| v >= t - 1e-9));
            if !meets {
                continue;
            }
            evaluated += 1;
            let value = welfare(u)?;
            if best.is_none_or(|(b, _)| value > b) {
                best = Some((value, idx));
            }
        }
        let (value, idx) = best.ok_or_else(|| Error::Validation("no enumerated design meets the floors".into()))?;
        Ok(OracleOptimum {
            value,
            best: self.designs[idx].0.clone(),
            utilities: self.designs[idx].1.clone(),
            evaluated,
        })
    }
}

/// Best design for `welfare` among all budget-feasible circulations.
pub fn brute_force_optimum<F>(problem: &DesignProblem, caps: &EnumerationBudget, welfare: F) -> Result<OracleOptimum>
where
    F: FnMut(&UtilityProfile) -> Result<f64>,
{
    evaluate_all(problem, caps)?.optimum(&BTreeMap::new(), welfare)
}
