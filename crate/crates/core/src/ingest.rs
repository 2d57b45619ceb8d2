//! Tract and OD tables, the centroid network and run configuration.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{weak_components, Digraph};
use crate::network::{Arc, DemandProfile, DesignProblem, Node, NodeId, OdPair, RoadNetwork};
use crate::priority::{od_priorities, tract_priority, ScoringConfig, TractAttributes, TractScore};

/// Mean Earth radius in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;
/// Centroids closer than this (km) are treated as the same place.
pub const COINCIDENT_KM: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractRecord {
    pub tract_id: String,
    pub lat: f64,
    pub lon: f64,
    pub median_income: f64,
    pub vehicle_rate: f64,
}

impl TractRecord {
    pub fn attributes(&self) -> TractAttributes {
        TractAttributes {
            tract_id: self.tract_id.clone(),
            median_income: self.median_income,
            vehicle_rate: self.vehicle_rate,
        }
    }
}

#[derive(Debug, Deserialize)]
struct OdRow {
    origin: String,
    destination: String,
    count: i64,
}

/// Great-circle distance in km on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

pub fn great_circle(a: &Node, b: &Node) -> f64 {
    haversine_km(a.lat, a.lon, b.lat, b.lon)
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Reads `tract_id,lat,lon,median_income,vehicle_rate` rows in file order.
pub fn load_tracts(path: &Path) -> Result<Vec<TractRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut tracts: Vec<TractRecord> = Vec::new();
    let mut seen = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = line_of(&row);
        let t: TractRecord = row
            .deserialize(Some(&headers))
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        if t.tract_id.is_empty() {
            return Err(Error::parse(path, line, "empty tract_id"));
        }
        if !(-90.0..=90.0).contains(&t.lat) || !(-180.0..=180.0).contains(&t.lon) {
            return Err(Error::Validation(format!(
                "tract {} (line {line}): coordinates ({}, {}) out of range",
                t.tract_id, t.lat, t.lon
            )));
        }
        if !(t.median_income.is_finite() && t.median_income > 0.0) {
            return Err(Error::Validation(format!(
                "tract {} (line {line}): median income must be positive",
                t.tract_id
            )));
        }
        if !(0.0..=1.0).contains(&t.vehicle_rate) {
            return Err(Error::Validation(format!(
                "tract {} (line {line}): vehicle rate must lie in [0, 1]",
                t.tract_id
            )));
        }
        if let Some(first) = seen.insert(t.tract_id.clone(), line) {
            return Err(Error::Validation(format!(
                "duplicate tract {} on lines {first} and {line}",
                t.tract_id
            )));
        }
        tracts.push(t);
    }
    if tracts.is_empty() {
        return Err(Error::Validation(format!("{}: no tracts", path.display())));
    }
    for (i, a) in tracts.iter().enumerate() {
        for b in &tracts[i + 1..] {
            if haversine_km(a.lat, a.lon, b.lat, b.lon) < COINCIDENT_KM {
                return Err(Error::Validation(format!(
                    "tracts {} and {} have coincident centroids; merge them into one tract",
                    a.tract_id, b.tract_id
                )));
            }
        }
    }
    Ok(tracts)
}

pub fn write_tracts(path: &Path, tracts: &[TractRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for t in tracts {
        writer.serialize(t)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads `origin,destination,count` rows; node `i` is the `i`-th tract id.
pub fn load_od(path: &Path, tract_ids: &[String]) -> Result<DemandProfile> {
    let index: HashMap<&str, usize> = tract_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut entries = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = line_of(&row);
        let r: OdRow = row
            .deserialize(Some(&headers))
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::parse(path, line, format!("unknown tract {id}")))
        };
        let (o, d) = (lookup(&r.origin)?, lookup(&r.destination)?);
        if o == d {
            return Err(Error::parse(path, line, format!("origin equals destination ({})", r.origin)));
        }
        if r.count < 0 {
            return Err(Error::parse(path, line, format!("negative count {}", r.count)));
        }
        entries.push((OdPair::new(o, d), r.count as u64));
    }
    DemandProfile::new(entries)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostRule {
    Identity,
    Scale(f64),
}

impl CostRule {
    pub fn apply(&self, length: f64) -> f64 {
        match *self {
            CostRule::Identity => length,
            CostRule::Scale(f) => f * length,
        }
    }
}

impl FromStr for CostRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "identity" {
            return Ok(CostRule::Identity);
        }
        if let Some(f) = s.strip_prefix("scale:") {
            let f: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad cost scale in {s:?}")))?;
            if f.is_finite() && f >= 0.0 {
                return Ok(CostRule::Scale(f));
            }
        }
        Err(Error::InvalidArgument(format!(
            "cost rule must be identity or scale:<factor>, got {s:?}"
        )))
    }
}

impl fmt::Display for CostRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostRule::Identity => write!(f, "identity"),
            CostRule::Scale(x) => write!(f, "scale:{x}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Complete,
    /// Each centroid links to its `k` nearest neighbours in both directions;
    /// separate components are bridged by their closest centroid pair.
    Knn(usize),
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "complete" {
            return Ok(Topology::Complete);
        }
        if let Some(k) = s.strip_prefix("knn:") {
            if let Ok(k) = k.trim().parse::<usize>() {
                if k > 0 {
                    return Ok(Topology::Knn(k));
                }
            }
        }
        Err(Error::InvalidArgument(format!(
            "topology must be complete or knn:<k>, got {s:?}"
        )))
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Complete => write!(f, "complete"),
            Topology::Knn(k) => write!(f, "knn:{k}"),
        }
    }
}

/// Centroid network over `tracts` (node `i` is tract `i`).
pub fn build_network(
    tracts: &[TractRecord],
    metric: &dyn Fn(&Node, &Node) -> f64,
    cost_rule: CostRule,
    topology: Topology,
) -> Result<RoadNetwork> {
    if tracts.len() < 2 {
        return Err(Error::InvalidNetwork("need at least two tracts".into()));
    }
    let nodes: Vec<Node> = tracts
        .iter()
        .map(|t| Node::new(t.tract_id.clone(), t.lat, t.lon))
        .collect();
    let n = nodes.len();
    let dist = |i: usize, j: usize| metric(&nodes[i], &nodes[j]);

    let mut ends: BTreeSet<(usize, usize)> = BTreeSet::new();
    match topology {
        Topology::Complete => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        ends.insert((i, j));
                    }
                }
            }
        }
        Topology::Knn(k) => {
            for i in 0..n {
                let mut others: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (dist(i, j), j)).collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for &(_, j) in others.iter().take(k) {
                    ends.insert((i, j));
                    ends.insert((j, i));
                }
            }
            loop {
                let g = Digraph {
                    node_count: n,
                    arcs: ends.iter().map(|&(t, h)| Arc::new(t, h, 1.0, 1.0)).collect(),
                };
                let comp = weak_components(&g);
                let mut bridge: Option<(f64, usize, usize)> = None;
                for i in 0..n {
                    for j in i + 1..n {
                        if comp[i] != comp[j] {
                            let d = dist(i, j);
                            if bridge.is_none_or(|(b, _, _)| d < b) {
                                bridge = Some((d, i, j));
                            }
                        }
                    }
                }
                match bridge {
                    Some((_, i, j)) => {
                        ends.insert((i, j));
                        ends.insert((j, i));
                    }
                    None => break,
                }
            }
        }
    }

    let arcs = ends
        .into_iter()
        .map(|(t, h)| {
            let length = dist(t, h);
            Arc::new(t, h, length, cost_rule.apply(length))
        })
        .collect();
    RoadNetwork::new(nodes, arcs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OdSelection {
    /// Every ordered pair of distinct tracts.
    #[default]
    All,
    /// Only pairs with positive demand.
    Positive,
}

impl FromStr for OdSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(OdSelection::All),
            "positive" => Ok(OdSelection::Positive),
            other => Err(Error::InvalidArgument(format!(
                "od_pairs must be all or positive, got {other:?}"
            ))),
        }
    }
}

/// 20 evenly spaced fractions `0.05, 0.10, ..., 1.0`.
pub fn default_fractions() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub alpha: f64,
    /// Number of priority groups.
    pub k: usize,
    pub bins: usize,
    pub epsilon: f64,
    pub p_floor: f64,
    pub p_ceil: f64,
    pub gamma: f64,
    pub gap: f64,
    pub time_limit: f64,
    pub seed: u64,
    pub budget_fractions: Vec<f64>,
    /// Resolution of the positive-floor budget search, as a fraction of `B_max`.
    pub grid_step: f64,
    pub cost_rule: String,
    pub topology: String,
    pub od_pairs: OdSelection,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            alpha: 2.0,
            k: 5,
            bins: 10,
            epsilon: 0.01,
            p_floor: 0.05,
            p_ceil: 0.95,
            gamma: 0.01,
            gap: 1e-4,
            time_limit: 600.0,
            seed: 0,
            budget_fractions: default_fractions(),
            grid_step: 0.05,
            cost_rule: "identity".into(),
            topology: "complete".into(),
            od_pairs: OdSelection::All,
        }
    }
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ProblemConfig =
            toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }

    pub fn scoring(&self) -> ScoringConfig {
        ScoringConfig {
            bins: self.bins,
            epsilon: self.epsilon,
            p_floor: self.p_floor,
            p_ceil: self.p_ceil,
            groups: self.k,
        }
    }

    pub fn cost_rule(&self) -> Result<CostRule> {
        self.cost_rule.parse()
    }

    pub fn topology(&self) -> Result<Topology> {
        self.topology.parse()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must be > 1, got {}", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if !(self.gap >= 0.0 && self.gap < 1.0) {
            return Err(Error::InvalidArgument(format!("gap must lie in [0, 1), got {}", self.gap)));
        }
        if self.time_limit.is_nan() || self.time_limit <= 0.0 {
            return Err(Error::InvalidArgument("time_limit must be positive".into()));
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 1.0) {
            return Err(Error::InvalidArgument("grid_step must lie in (0, 1]".into()));
        }
        check_fractions(&self.budget_fractions)?;
        self.scoring().validate()?;
        self.cost_rule()?;
        self.topology()?;
        Ok(())
    }
}

/// Fractions must be nonempty, within `[0, 1]` and strictly increasing.
pub fn check_fractions(fractions: &[f64]) -> Result<()> {
    if fractions.is_empty() {
        return Err(Error::InvalidArgument("budget_fractions is empty".into()));
    }
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::InvalidArgument("budget fractions must lie in [0, 1]".into()));
    }
    if fractions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("budget fractions must be strictly increasing".into()));
    }
    Ok(())
}

/// Loaded inputs turned into a problem with budget 0 plus the per-tract scores.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub problem: DesignProblem,
    pub scores: Vec<TractScore>,
}

pub fn assemble_problem(tracts: &[TractRecord], demand: DemandProfile, config: &ProblemConfig) -> Result<Assembled> {
    config.validate()?;
    let network = build_network(tracts, &great_circle, config.cost_rule()?, config.topology()?)?;
    let attrs: Vec<TractAttributes> = tracts.iter().map(TractRecord::attributes).collect();
    let scores = tract_priority(&attrs, &config.scoring())?;
    let node_priority: BTreeMap<NodeId, f64> = scores.iter().enumerate().map(|(i, s)| (NodeId(i), s.priority)).collect();
    let pairs = match config.od_pairs {
        OdSelection::All => network.all_pairs(),
        OdSelection::Positive => demand.nonzero().map(|(p, _)| p).collect(),
    };
    if pairs.is_empty() {
        return Err(Error::Validation("no OD pairs with positive demand".into()));
    }
    let priority = od_priorities(&node_priority, &pairs, config.k)?;
    let problem = DesignProblem::with_pairs(network, pairs, demand, priority, config.alpha, 0.0)?;
    Ok(Assembled { problem, scores })
}
