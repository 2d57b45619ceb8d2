//! Utilitarian, trade-off and leximax solve drivers.

use std::collections::BTreeMap;

use log::{info, warn};
use thiserror::Error;

use crate::error::{Error, Result, SolveError};
use crate::milp::backend::Solver;
use crate::milp::builder::build_model;
use crate::milp::solve::{solve, NetworkDesign};
use crate::network::{DesignProblem, OdPair, PriorityProfile, UtilityProfile};
use crate::utility::check_gamma;

/// Trade-off weight used by runs labelled "Rawlsian".
pub const RAWLSIAN_GAMMA: f64 = 0.01;
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WelfareKind {
    Utilitarian,
    Tradeoff,
    Leximax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelfareSpec {
    pub kind: WelfareKind,
    pub gamma: f64,
    /// Pairs in the min term; `None` means every pair of the problem.
    pub active: Option<Vec<OdPair>>,
    pub tie_tolerance: f64,
}

impl WelfareSpec {
    pub fn utilitarian() -> Self {
        WelfareSpec {
            kind: WelfareKind::Utilitarian,
            gamma: 1.0,
            active: None,
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
        }
    }

    pub fn tradeoff(gamma: f64) -> Self {
        WelfareSpec {
            kind: WelfareKind::Tradeoff,
            gamma,
            active: None,
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
        }
    }

    pub fn rawlsian() -> Self {
        Self::tradeoff(RAWLSIAN_GAMMA)
    }

    pub fn leximax(gamma: f64) -> Self {
        WelfareSpec {
            kind: WelfareKind::Leximax,
            ..Self::tradeoff(gamma)
        }
    }

    pub fn with_active(mut self, active: Vec<OdPair>) -> Self {
        self.active = Some(active);
        self
    }

    pub fn with_tie_tolerance(mut self, tol: f64) -> Self {
        self.tie_tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != WelfareKind::Utilitarian {
            check_gamma(self.gamma)?;
            if matches!(&self.active, Some(a) if a.is_empty()) {
                return Err(Error::InvalidArgument("active OD set is empty".into()));
            }
        }
        if self.tie_tolerance.is_nan() || self.tie_tolerance < 0.0 {
            return Err(Error::InvalidArgument("tie tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

pub fn solve_utilitarian(problem: &DesignProblem, solver: &Solver) -> Result<NetworkDesign> {
    let model = build_model(problem, &WelfareSpec::utilitarian(), &BTreeMap::new())?;
    solve(&model, solver, None)
}

pub fn solve_tradeoff(problem: &DesignProblem, gamma: f64, solver: &Solver) -> Result<NetworkDesign> {
    check_gamma(gamma)?;
    let model = build_model(problem, &WelfareSpec::tradeoff(gamma), &BTreeMap::new())?;
    solve(&model, solver, None)
}

/// The pair setting the floor `min (1 - p) u` over `remaining`. Pairs within
/// `tol` of the minimum are ranked by higher priority, then by pair order.
pub fn select_floor_pair(
    u: &UtilityProfile,
    p: &PriorityProfile,
    remaining: &[OdPair],
    tol: f64,
) -> Result<OdPair> {
    if remaining.is_empty() {
        return Err(Error::InvalidArgument("no pairs left to select a floor from".into()));
    }
    let mut scored = Vec::with_capacity(remaining.len());
    for &pair in remaining {
        let value = u.get(pair).ok_or(Error::UnknownPair(pair))?;
        let prio = p.get(pair).ok_or(Error::UnknownPair(pair))?;
        scored.push((pair, prio, (1.0 - prio) * value));
    }
    let floor = scored.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    let best = scored
        .into_iter()
        .filter(|s| s.2 <= floor + tol)
        .min_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)))
        .expect("at least the minimizer survives");
    Ok(best.0)
}

#[derive(Debug, Clone)]
pub struct LeximaxIteration {
    /// 1-based.
    pub iteration: usize,
    pub removed: OdPair,
    /// Frozen utility floor `t` of the removed pair.
    pub frozen: f64,
    /// `min (1 - p) u` over the iteration's active set.
    pub floor: f64,
    pub objective: f64,
    pub avg_u_remaining: f64,
    pub avg_u_all: f64,
    pub design: NetworkDesign,
}

#[derive(Debug, Clone, Default)]
pub struct LeximaxTrace {
    pub iterations: Vec<LeximaxIteration>,
}

impl LeximaxTrace {
    pub fn floors(&self) -> BTreeMap<OdPair, f64> {
        self.iterations.iter().map(|it| (it.removed, it.frozen)).collect()
    }

    pub fn last(&self) -> Option<&LeximaxIteration> {
        self.iterations.last()
    }

    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }
}

#[derive(Debug, Error)]
#[error("leximax aborted after {} iterations: {source}", partial.len())]
pub struct LeximaxError {
    pub partial: LeximaxTrace,
    #[source]
    pub source: Error,
}

/// Runs up to `max_iterations` leximax rounds (all of `D` when `None`).
pub fn solve_leximax(
    problem: &DesignProblem,
    gamma: f64,
    max_iterations: Option<usize>,
    solver: &Solver,
) -> std::result::Result<LeximaxTrace, LeximaxError> {
    let mut trace = LeximaxTrace::default();
    let abort = |trace: LeximaxTrace, source: Error| LeximaxError { partial: trace, source };

    let total = problem.pairs().len();
    let rounds = max_iterations.unwrap_or(total);
    if rounds == 0 || rounds > total {
        return Err(abort(
            trace,
            Error::InvalidArgument(format!("max_iterations must lie in 1..={total}, got {rounds}")),
        ));
    }
    if let Err(e) = check_gamma(gamma) {
        return Err(abort(trace, e));
    }

    let mut remaining = problem.pairs().to_vec();
    let mut floors = BTreeMap::new();
    let mut previous: Option<NetworkDesign> = None;
    for k in 1..=rounds {
        let spec = WelfareSpec::leximax(gamma).with_active(remaining.clone());
        let model = match build_model(problem, &spec, &floors) {
            Ok(m) => m,
            Err(e) => return Err(abort(trace, e)),
        };
        let design = match solve(&model, solver, previous.as_ref()) {
            Err(Error::Solver(SolveError::WarmStartInfeasible(why))) => {
                warn!("leximax iteration {k}: dropping warm start ({why})");
                solve(&model, solver, None)
            }
            other => other,
        };
        let design = match design {
            Ok(d) => d,
            Err(e) => return Err(abort(trace, e)),
        };
        let pair = match select_floor_pair(&design.utilities, problem.priority(), &remaining, spec.tie_tolerance) {
            Ok(p) => p,
            Err(e) => return Err(abort(trace, e)),
        };
        let frozen = design.utilities.get(pair).unwrap_or(0.0);
        let avg_u_remaining =
            remaining.iter().map(|&p| design.utilities.get(p).unwrap_or(0.0)).sum::<f64>() / remaining.len() as f64;
        let record = LeximaxIteration {
            iteration: k,
            removed: pair,
            frozen,
            floor: design.floor.unwrap_or(0.0),
            objective: design.objective,
            avg_u_remaining,
            avg_u_all: design.utilities.mean(),
            design: design.clone(),
        };
        info!(
            "leximax iteration {k}: removed {} (t = {frozen:.6}), floor {:.6}",
            problem.network().pair_label(pair),
            record.floor
        );
        trace.iterations.push(record);
        floors.insert(pair, frozen);
        remaining.retain(|&p| p != pair);
        previous = Some(design);
    }
    Ok(trace)
}
