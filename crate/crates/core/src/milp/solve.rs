//! Runs a [`DesignModel`] through a backend and turns the raw solution into a
//! certified [`NetworkDesign`].

use std::collections::BTreeMap;
use std::time::Duration;

use log::debug;

use crate::error::{Error, Result, SolveError};
use crate::graph::{all_shortest_path_trees, is_circulation};
use crate::milp::backend::{SolveStatus, Solver};
use crate::milp::builder::{DesignModel, ModelKind};
use crate::network::{ArcId, ArcSet, DesignProblem, OdPair, UtilityProfile};
use crate::objectives::WelfareKind;
use crate::utility::{utility, welfare_maxmin, welfare_utilitarian};

/// Tolerance used when certifying extracted designs.
pub const CERT_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct NetworkDesign {
    pub installed: ArcSet,
    /// Path of every served pair, in travel order.
    pub paths: BTreeMap<OdPair, Vec<ArcId>>,
    pub path_lengths: BTreeMap<OdPair, f64>,
    /// Utilities recomputed from the installed subgraph.
    pub utilities: UtilityProfile,
    /// Utilities as reported by the solver (after detour-boundary cleanup).
    pub solver_utilities: UtilityProfile,
    /// Objective recomputed from `utilities`.
    pub objective: f64,
    pub solver_objective: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub wall_time: Duration,
    pub cost: f64,
    /// `min (1 - p) u` over the model's active pairs, when it has any.
    pub floor: Option<f64>,
    /// Pairs whose solver path was replaced by a shorter installed path.
    pub rerouted: usize,
    /// Pairs the solver marked served at the detour boundary (zero utility).
    pub cleaned: usize,
}

impl NetworkDesign {
    pub fn is_served(&self, pair: OdPair) -> bool {
        self.paths.contains_key(&pair)
    }

    pub fn served_count(&self) -> usize {
        self.paths.len()
    }
}

/// Solves `model`, optionally warm-started from a design over the same
/// network. The warm start is checked against every row before being passed
/// to the backend.
pub fn solve(model: &DesignModel, solver: &Solver, warm_start: Option<&NetworkDesign>) -> Result<NetworkDesign> {
    let start = match warm_start {
        Some(design) => {
            let values = design_values(model, design)?;
            model
                .milp
                .check(&values, CERT_TOL)
                .map_err(|v| SolveError::WarmStartInfeasible(v.to_string()))?;
            Some(values)
        }
        None => None,
    };
    let raw = solver.run(&model.milp, start.as_deref())?;
    if let Err(v) = model.milp.check(&raw.values, 1e-5) {
        return Err(SolveError::Certification(format!("backend solution: {v}")).into());
    }
    let design = extract(model, &raw.values, raw.objective, raw.gap, raw.status, raw.wall_time)?;
    certify(model, &design)?;
    debug!(
        "solved: objective {:.6} (solver {:.6}), gap {:.2e}, {} arcs, {} served, {:?}",
        design.objective,
        design.solver_objective,
        design.gap,
        design.installed.len(),
        design.served_count(),
        design.wall_time
    );
    Ok(design)
}

/// Full variable vector encoding `design` in `model`'s layout.
pub fn design_values(model: &DesignModel, design: &NetworkDesign) -> Result<Vec<f64>> {
    let problem = &model.problem;
    let layout = &model.layout;
    let net = problem.network();
    if design.installed.capacity() != net.arc_count() {
        return Err(Error::InvalidArgument(
            "warm start designed for a different network".into(),
        ));
    }
    let alpha = problem.alpha();
    let mut values = vec![0.0; model.milp.var_count()];
    for a in design.installed.ids() {
        values[layout.x(a).0] = 1.0;
    }
    let mut u = vec![0.0; problem.pairs().len()];
    for (k, &pair) in problem.pairs().iter().enumerate() {
        let Some(path) = design.paths.get(&pair) else {
            continue;
        };
        let lstar = problem.shortest_length(pair);
        let length: f64 = path.iter().map(|&a| net.arc(a).length).sum();
        if length >= alpha * lstar {
            continue;
        }
        values[layout.y(k).0] = 1.0;
        for &a in path {
            values[layout.f(k, a).0] = 1.0;
        }
        values[layout.l(k).0] = length;
        u[k] = (alpha / (alpha - 1.0) - length / (lstar * (alpha - 1.0))).clamp(0.0, 1.0);
        values[layout.u(k).0] = u[k];
    }
    if let Some(z) = layout.z() {
        let priority = problem.priority();
        let floor = model
            .active
            .iter()
            .map(|&pair| {
                let k = problem.pair_index(pair).expect("active pairs lie in D");
                (1.0 - priority.get(pair).unwrap_or(0.0)) * u[k]
            })
            .fold(f64::INFINITY, f64::min);
        values[z.0] = floor.clamp(0.0, 1.0);
    }
    Ok(values)
}

fn extract(
    model: &DesignModel,
    values: &[f64],
    solver_objective: f64,
    gap: f64,
    status: SolveStatus,
    wall_time: Duration,
) -> Result<NetworkDesign> {
    let problem = &model.problem;
    let layout = &model.layout;
    let net = problem.network();
    let alpha = problem.alpha();

    let installed = ArcSet::from_ids(
        net.arc_count(),
        (0..net.arc_count()).map(ArcId).filter(|&a| values[layout.x(a).0] > 0.5),
    );
    let trees = all_shortest_path_trees(net, Some(&installed));

    let mut paths = BTreeMap::new();
    let mut path_lengths = BTreeMap::new();
    let mut utilities = BTreeMap::new();
    let mut solver_utilities = BTreeMap::new();
    let mut rerouted = 0;
    let mut cleaned = 0;
    for (k, &pair) in problem.pairs().iter().enumerate() {
        let lstar = problem.shortest_length(pair);
        let mut served = values[layout.y(k).0] > 0.5;
        if served && values[layout.l(k).0] >= alpha * lstar - 1e-6 {
            served = false;
            cleaned += 1;
        }
        solver_utilities.insert(pair, if served { values[layout.u(k).0].clamp(0.0, 1.0) } else { 0.0 });

        let tree = &trees[pair.origin.0];
        let best = tree.dist[pair.destination.0];
        let u = if best.is_finite() {
            utility(best, lstar, alpha)?
        } else {
            0.0
        };
        if u > 0.0 {
            let solver_path = if served { trace_path(model, values, k, pair) } else { None };
            let path = match solver_path {
                Some(p) if path_length(problem, &p) <= best + 1e-9 * best.max(1.0) => p,
                _ => {
                    if served {
                        rerouted += 1;
                    }
                    tree.path_to(net, pair.destination).expect("finite distance has a path")
                }
            };
            path_lengths.insert(pair, path_length(problem, &path));
            paths.insert(pair, path);
        }
        utilities.insert(pair, u);
    }
    let utilities = UtilityProfile::new(utilities)?;
    let solver_utilities = UtilityProfile::new(solver_utilities)?;

    let (objective, floor) = match &model.kind {
        ModelKind::MinCostFullService => (net.cost_of(&installed), None),
        ModelKind::Welfare(spec) => {
            let util = welfare_utilitarian(&utilities, problem.demand(), problem.priority())?;
            match spec.kind {
                WelfareKind::Utilitarian => (util, None),
                WelfareKind::Tradeoff | WelfareKind::Leximax => {
                    let floor = welfare_maxmin(&utilities, problem.priority(), Some(&model.active))?;
                    (spec.gamma * util + (1.0 - spec.gamma) * floor, Some(floor))
                }
            }
        }
    };

    Ok(NetworkDesign {
        cost: net.cost_of(&installed),
        installed,
        paths,
        path_lengths,
        utilities,
        solver_utilities,
        objective,
        solver_objective,
        gap,
        status,
        wall_time,
        floor,
        rerouted,
        cleaned,
    })
}

fn path_length(problem: &DesignProblem, path: &[ArcId]) -> f64 {
    path.iter().map(|&a| problem.network().arc(a).length).sum()
}

/// Follows the `f` arcs of pair `k` from origin to destination. Returns
/// `None` if they do not form a simple path (e.g. a path plus a detached
/// cycle, which the flow rows allow).
fn trace_path(model: &DesignModel, values: &[f64], k: usize, pair: OdPair) -> Option<Vec<ArcId>> {
    let net = model.problem.network();
    let mut at = pair.origin;
    let mut path = Vec::new();
    let mut seen = vec![false; net.nodes().len()];
    seen[at.0] = true;
    while at != pair.destination {
        let next = net
            .outgoing(at)
            .iter()
            .copied()
            .find(|&a| values[model.layout.f(k, a).0] > 0.5)?;
        at = net.arc(next).head;
        if seen[at.0] {
            return None;
        }
        seen[at.0] = true;
        path.push(next);
    }
    Some(path)
}

/// Structural checks on an extracted design.
pub fn certify(model: &DesignModel, design: &NetworkDesign) -> Result<()> {
    let problem = &model.problem;
    let net = problem.network();
    let alpha = problem.alpha();
    let fail = |msg: String| -> Result<()> { Err(SolveError::Certification(msg).into()) };

    if !is_circulation(net, &design.installed) {
        return fail("installed arcs are not a circulation".into());
    }
    if let ModelKind::Welfare(_) = model.kind {
        if design.cost > problem.budget() + CERT_TOL * problem.budget().max(1.0) {
            return fail(format!("cost {} exceeds budget {}", design.cost, problem.budget()));
        }
    }
    for &pair in problem.pairs() {
        let u = design.utilities.get(pair).unwrap_or(0.0);
        match design.paths.get(&pair) {
            Some(path) => {
                let mut at = pair.origin;
                for &a in path {
                    let arc = net.arc(a);
                    if !design.installed.contains(a) || arc.tail != at {
                        return fail(format!("path of {pair} is broken at arc {a}"));
                    }
                    at = arc.head;
                }
                if at != pair.destination {
                    return fail(format!("path of {pair} ends at {at}"));
                }
                let lstar = problem.shortest_length(pair);
                let length = path_length(problem, path);
                if length >= alpha * lstar {
                    return fail(format!("path of {pair} exceeds the detour limit"));
                }
                let expect = utility(length, lstar, alpha)?;
                if (expect - u).abs() > CERT_TOL {
                    return fail(format!("utility of {pair} is {u}, path gives {expect}"));
                }
            }
            None if u > CERT_TOL => return fail(format!("unserved pair {pair} has utility {u}")),
            None => {}
        }
    }
    for (&pair, &t) in &model.floors {
        let u = design.utilities.get(pair).unwrap_or(0.0);
        if u < t - CERT_TOL {
            return fail(format!("pair {pair} falls below its floor ({u} < {t})"));
        }
    }
    if let ModelKind::MinCostFullService = model.kind {
        for &pair in problem.pairs() {
            if design.utilities.get(pair).unwrap_or(0.0) < 1.0 - CERT_TOL {
                return fail(format!("pair {pair} is not served at its shortest length"));
            }
        }
    }
    Ok(())
}
