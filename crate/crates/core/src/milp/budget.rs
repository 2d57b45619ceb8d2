//! Budget endpoints: the cheapest full-service design and the smallest grid
//! budget at which the worst-off pair gets positive utility.

use log::info;

use crate::error::{Error, Result, SolveError};
use crate::milp::backend::Solver;
use crate::milp::builder::{build_min_cost_model, build_model};
use crate::milp::solve::{solve, NetworkDesign};
use crate::network::DesignProblem;
use crate::objectives::WelfareSpec;

/// Trade-off weight used when probing for a positive floor.
pub const FLOOR_PROBE_GAMMA: f64 = 0.01;

/// Cost of the cheapest design that serves every pair at its shortest
/// length (`B_max`). The problem's own budget is ignored.
pub fn min_cost_full_service(problem: &DesignProblem, solver: &Solver) -> Result<(f64, NetworkDesign)> {
    let model = build_min_cost_model(problem);
    match solve(&model, solver, None) {
        Ok(design) => Ok((design.cost, design)),
        Err(Error::Solver(SolveError::Infeasible)) => Err(Error::InvalidProblem(
            "no balanced set of arcs serves every pair along a shortest path; \
             add the missing reverse arcs"
                .into(),
        )),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone)]
pub struct FloorBudget {
    pub budget: f64,
    /// Grid index `i`; the budget is `i * step * b_max` (or `b_max` at the top).
    pub index: usize,
    pub design: NetworkDesign,
}

/// The budget grid `{0, step, 2 step, ..., 1} * b_max`, top point pinned to
/// `b_max`.
pub fn budget_grid(b_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "grid step must lie in (0, 1], got {step}"
        )));
    }
    let n = (1.0 / step - 1e-9).ceil() as usize;
    Ok((0..=n)
        .map(|i| if i == n { b_max } else { i as f64 * step * b_max })
        .collect())
}

/// Smallest grid budget (`B_min`) at which the trade-off optimum has a
/// strictly positive floor, found by binary search over `budget_grid`.
pub fn min_budget_positive_floor(
    problem: &DesignProblem,
    b_max: f64,
    step: f64,
    solver: &Solver,
) -> Result<FloorBudget> {
    let grid = budget_grid(b_max, step)?;
    let spec = WelfareSpec::tradeoff(FLOOR_PROBE_GAMMA);
    let probe = |i: usize| -> Result<NetworkDesign> {
        let p = problem.with_budget(grid[i])?;
        let model = build_model(&p, &spec, &Default::default())?;
        solve(&model, solver, None)
    };
    let positive = |d: &NetworkDesign| d.floor.unwrap_or(0.0) > 1e-6;

    let top = grid.len() - 1;
    let top_design = probe(top)?;
    if !positive(&top_design) {
        return Err(Error::Validation(format!(
            "no budget up to {b_max} gives every pair positive utility"
        )));
    }
    let (mut lo, mut hi, mut best) = (0, top, top_design);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let design = probe(mid)?;
        info!("floor probe at budget {:.4}: floor {:?}", grid[mid], design.floor);
        if positive(&design) {
            hi = mid;
            best = design;
        } else {
            lo = mid + 1;
        }
    }
    Ok(FloorBudget {
        budget: grid[lo],
        index: lo,
        design: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cycle3, cycle3_problem, ring};
    use crate::milp::backend::SolverConfig;
    use crate::network::{Arc, DemandProfile, Node, PriorityProfile, RoadNetwork};

    fn solver() -> Solver {
        Solver::highs(SolverConfig::default())
    }

    #[test]
    fn cycle3_full_service_costs_four() {
        // {1->2, 2->1, 2->3, 3->2} reaches every pair at shortest length;
        // 1->3 and 3->1 tie with their two-hop alternatives.
        let demand: Vec<_> = cycle3().all_pairs().into_iter().map(|p| (p, 1)).collect();
        let problem = cycle3_problem(&demand, 2.0, 0.0);
        let (b_max, design) = min_cost_full_service(&problem, &solver()).unwrap();
        assert!((b_max - 4.0).abs() < 1e-9);
        assert_eq!(design.installed.len(), 4);
    }

    #[test]
    fn ring_needs_every_arc() {
        let net = ring(5);
        let pairs = net.all_pairs();
        let prio = PriorityProfile::uniform(&pairs, 0.5).unwrap();
        let problem = DesignProblem::new(net, DemandProfile::default(), prio, 2.0, 0.0).unwrap();
        let (b_max, _) = min_cost_full_service(&problem, &solver()).unwrap();
        assert!((b_max - 5.0).abs() < 1e-9);
        let floor = min_budget_positive_floor(&problem, b_max, 0.05, &solver()).unwrap();
        assert!((floor.budget - 5.0).abs() < 1e-9);
    }

    #[test]
    fn unbalanced_shortest_paths_are_reported() {
        // 0 <-> 1 <-> 2 plus a cheap shortcut 0 -> 2 that no balanced arc set
        // can contain together with the two-way path.
        let nodes = ["a", "b", "c"].into_iter().map(Node::abstract_node).collect();
        let arcs = vec![
            Arc::new(0, 1, 1.0, 1.0),
            Arc::new(1, 0, 1.0, 1.0),
            Arc::new(1, 2, 1.0, 1.0),
            Arc::new(2, 1, 1.0, 1.0),
            Arc::new(0, 2, 1.5, 1.0),
        ];
        let net = RoadNetwork::new(nodes, arcs).unwrap();
        let prio = PriorityProfile::uniform(&net.all_pairs(), 0.5).unwrap();
        let problem = DesignProblem::new(net, DemandProfile::default(), prio, 2.0, 0.0).unwrap();
        assert!(matches!(
            min_cost_full_service(&problem, &solver()),
            Err(Error::InvalidProblem(_))
        ));
    }

    #[test]
    fn grid_has_pinned_endpoints() {
        let grid = budget_grid(8.0, 0.05).unwrap();
        assert_eq!(grid.len(), 21);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[20], 8.0);
        assert!((grid[10] - 4.0).abs() < 1e-12);
        assert!(budget_grid(8.0, 0.0).is_err());
    }

    #[test]
    fn cycle3_positive_floor_needs_the_full_cheap_design() {
        let demand: Vec<_> = cycle3().all_pairs().into_iter().map(|p| (p, 1)).collect();
        let problem = cycle3_problem(&demand, 2.0, 0.0);
        let floor = min_budget_positive_floor(&problem, 4.0, 0.05, &solver()).unwrap();
        assert!(floor.budget <= 4.0 + 1e-9);
        assert!(floor.design.floor.unwrap() > 0.0);
    }
}
