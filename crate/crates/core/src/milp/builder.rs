//! Translates a [`DesignProblem`] into the arc-selection MILP.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::milp::model::{MilpModel, Sense, VarId, VarKind};
use crate::network::{ArcId, DesignProblem, NodeId, OdPair};
use crate::objectives::{WelfareKind, WelfareSpec};
use crate::utility::check_gamma;

/// Where each variable family lives in the flat variable vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    arcs: usize,
    pairs: usize,
    y0: usize,
    f0: usize,
    l0: usize,
    u0: usize,
    z: Option<VarId>,
}

impl Layout {
    pub fn x(&self, arc: ArcId) -> VarId {
        VarId(arc.0)
    }

    pub fn y(&self, k: usize) -> VarId {
        VarId(self.y0 + k)
    }

    pub fn f(&self, k: usize, arc: ArcId) -> VarId {
        VarId(self.f0 + k * self.arcs + arc.0)
    }

    pub fn l(&self, k: usize) -> VarId {
        VarId(self.l0 + k)
    }

    pub fn u(&self, k: usize) -> VarId {
        VarId(self.u0 + k)
    }

    pub fn z(&self) -> Option<VarId> {
        self.z
    }

    pub fn arc_count(&self) -> usize {
        self.arcs
    }

    pub fn pair_count(&self) -> usize {
        self.pairs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Welfare(WelfareSpec),
    /// Cheapest design serving every pair at its shortest length.
    MinCostFullService,
}

/// A built MILP together with the problem it encodes.
#[derive(Debug, Clone)]
pub struct DesignModel {
    pub milp: MilpModel,
    pub layout: Layout,
    pub kind: ModelKind,
    pub problem: DesignProblem,
    pub floors: BTreeMap<OdPair, f64>,
    /// Pairs entering the min term (empty for purely utilitarian models).
    pub active: Vec<OdPair>,
}

impl DesignModel {
    pub fn spec(&self) -> Option<&WelfareSpec> {
        match &self.kind {
            ModelKind::Welfare(spec) => Some(spec),
            ModelKind::MinCostFullService => None,
        }
    }
}

fn pair_tag(pair: OdPair) -> String {
    format!("{}_{}", pair.origin.0, pair.destination.0)
}

/// Core variables and rows shared by every model kind. With `full_service`
/// every pair must be served at exactly its shortest length and the budget
/// row is dropped.
fn base_model(problem: &DesignProblem, full_service: bool) -> (MilpModel, Layout) {
    let net = problem.network();
    let m = net.arc_count();
    let n = net.nodes().len();
    let pairs = problem.pairs();
    let d = pairs.len();
    let alpha = problem.alpha();

    let mut milp = MilpModel::new();
    for a in 0..m {
        milp.add_var(format!("x_{a}"), VarKind::Binary, 0.0, 1.0);
    }
    let y0 = milp.var_count();
    for &pair in pairs {
        let lo = if full_service { 1.0 } else { 0.0 };
        milp.add_var(format!("y_{}", pair_tag(pair)), VarKind::Binary, lo, 1.0);
    }
    let f0 = milp.var_count();
    for &pair in pairs {
        for a in 0..m {
            milp.add_var(format!("f_{a}_{}", pair_tag(pair)), VarKind::Binary, 0.0, 1.0);
        }
    }
    let l0 = milp.var_count();
    for &pair in pairs {
        milp.add_var(format!("l_{}", pair_tag(pair)), VarKind::Continuous, 0.0, f64::INFINITY);
    }
    let u0 = milp.var_count();
    for &pair in pairs {
        milp.add_var(format!("u_{}", pair_tag(pair)), VarKind::Continuous, 0.0, 1.0);
    }
    let layout = Layout {
        arcs: m,
        pairs: d,
        y0,
        f0,
        l0,
        u0,
        z: None,
    };

    if !full_service {
        let terms = (0..m)
            .map(|a| (layout.x(ArcId(a)), net.arc(ArcId(a)).cost))
            .collect();
        milp.add_le("budget", terms, problem.budget());
    }

    for i in 0..n {
        let node = NodeId(i);
        let mut terms: Vec<(VarId, f64)> = net.outgoing(node).iter().map(|&a| (layout.x(a), 1.0)).collect();
        terms.extend(net.incoming(node).iter().map(|&a| (layout.x(a), -1.0)));
        milp.add_eq(format!("mass_{i}"), terms, 0.0);
    }

    for (k, &pair) in pairs.iter().enumerate() {
        for i in 0..n {
            let node = NodeId(i);
            let mut terms: Vec<(VarId, f64)> =
                net.outgoing(node).iter().map(|&a| (layout.f(k, a), 1.0)).collect();
            terms.extend(net.incoming(node).iter().map(|&a| (layout.f(k, a), -1.0)));
            if node == pair.origin {
                terms.push((layout.y(k), -1.0));
            } else if node == pair.destination {
                terms.push((layout.y(k), 1.0));
            }
            milp.add_eq(format!("flow_{}_{i}", pair_tag(pair)), terms, 0.0);
        }
    }

    for (k, &pair) in pairs.iter().enumerate() {
        for a in 0..m {
            let arc = ArcId(a);
            milp.add_le(
                format!("link_{a}_{}", pair_tag(pair)),
                vec![(layout.f(k, arc), 1.0), (layout.x(arc), -1.0)],
                0.0,
            );
        }
    }

    for (k, &pair) in pairs.iter().enumerate() {
        let mut terms = vec![(layout.l(k), 1.0)];
        terms.extend((0..m).map(|a| (layout.f(k, ArcId(a)), -net.arc(ArcId(a)).length)));
        milp.add_eq(format!("len_{}", pair_tag(pair)), terms, 0.0);
    }

    let stretch = if full_service { 1.0 } else { alpha };
    for (k, &pair) in pairs.iter().enumerate() {
        let lstar = problem.shortest_length(pair);
        milp.add_le(
            format!("detour_{}", pair_tag(pair)),
            vec![(layout.l(k), 1.0), (layout.y(k), -stretch * lstar)],
            0.0,
        );
    }

    for (k, &pair) in pairs.iter().enumerate() {
        let lstar = problem.shortest_length(pair);
        milp.add_eq(
            format!("util_{}", pair_tag(pair)),
            vec![
                (layout.u(k), 1.0),
                (layout.l(k), 1.0 / (lstar * (alpha - 1.0))),
                (layout.y(k), -alpha / (alpha - 1.0)),
            ],
            0.0,
        );
    }

    (milp, layout)
}

/// Builds the welfare-maximizing model. `floors` adds `u_od >= t` rows
/// (in key order) on top of the core constraints.
pub fn build_model(
    problem: &DesignProblem,
    spec: &WelfareSpec,
    floors: &BTreeMap<OdPair, f64>,
) -> Result<DesignModel> {
    for (&pair, &t) in floors {
        if problem.pair_index(pair).is_none() {
            return Err(Error::UnknownPair(pair));
        }
        if !(-1e-9..=1.0 + 1e-9).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "floor {t} for pair {pair} lies outside [0, 1]"
            )));
        }
    }
    let (mut milp, mut layout) = base_model(problem, false);
    let priority = problem.priority();
    let demand = problem.demand();

    let mut util_terms = Vec::with_capacity(problem.pairs().len());
    for (k, &pair) in problem.pairs().iter().enumerate() {
        let p = priority.get(pair).ok_or(Error::UnknownPair(pair))?;
        let coef = demand.get(pair) as f64 * p;
        if coef != 0.0 {
            util_terms.push((layout.u(k), coef));
        }
    }

    let active = match spec.kind {
        WelfareKind::Utilitarian => Vec::new(),
        WelfareKind::Tradeoff | WelfareKind::Leximax => {
            check_gamma(spec.gamma)?;
            let active: Vec<OdPair> = match &spec.active {
                Some(set) => {
                    let mut set = set.clone();
                    set.sort();
                    set.dedup();
                    set
                }
                None => problem.pairs().to_vec(),
            };
            if active.is_empty() {
                return Err(Error::InvalidArgument(
                    "max-min term over an empty OD set".into(),
                ));
            }
            active
        }
    };

    if active.is_empty() {
        milp.set_objective(Sense::Maximize, util_terms);
    } else {
        let z = milp.add_var("z", VarKind::Continuous, 0.0, 1.0);
        layout.z = Some(z);
        for &pair in &active {
            let k = problem.pair_index(pair).ok_or(Error::UnknownPair(pair))?;
            let p = priority.get(pair).ok_or(Error::UnknownPair(pair))?;
            milp.add_le(
                format!("epi_{}", pair_tag(pair)),
                vec![(z, 1.0), (layout.u(k), -(1.0 - p))],
                0.0,
            );
        }
        let gamma = spec.gamma;
        let mut terms: Vec<(VarId, f64)> = util_terms.into_iter().map(|(v, c)| (v, gamma * c)).collect();
        terms.push((z, 1.0 - gamma));
        milp.set_objective(Sense::Maximize, terms);
    }

    for (&pair, &t) in floors {
        let k = problem.pair_index(pair).expect("checked above");
        milp.add_ge(format!("floor_{}", pair_tag(pair)), vec![(layout.u(k), 1.0)], t.clamp(0.0, 1.0));
    }

    Ok(DesignModel {
        milp,
        layout,
        kind: ModelKind::Welfare(spec.clone()),
        problem: problem.clone(),
        floors: floors.clone(),
        active,
    })
}

/// Model whose optimum is the cheapest design connecting every pair along
/// one of its shortest paths.
pub fn build_min_cost_model(problem: &DesignProblem) -> DesignModel {
    let (mut milp, layout) = base_model(problem, true);
    let net = problem.network();
    let terms = (0..net.arc_count())
        .map(|a| (layout.x(ArcId(a)), net.arc(ArcId(a)).cost))
        .collect();
    milp.set_objective(Sense::Minimize, terms);
    DesignModel {
        milp,
        layout,
        kind: ModelKind::MinCostFullService,
        problem: problem.clone(),
        floors: BTreeMap::new(),
        active: Vec::new(),
    }
}
