//! Equitable transit network design: pick arcs of a road network under a
//! budget so that origin-destination pairs get short, near-shortest routes,
//! trading total welfare against the worst-off pair.

pub mod error;
pub mod fixtures;
pub mod graph;
pub mod ingest;
pub mod milp;
pub mod network;
pub mod objectives;
pub mod oracle;
pub mod priority;
pub mod sweep;
pub mod utility;

pub use error::{Error, Result, SolveError};
pub use milp::{NetworkDesign, Solver, SolverConfig};
pub use network::{
    Arc, ArcId, ArcSet, DemandProfile, DesignProblem, Node, NodeId, OdPair, PriorityProfile, RoadNetwork,
    UtilityProfile,
};
pub use objectives::{select_floor_pair, solve_leximax, solve_tradeoff, solve_utilitarian, WelfareKind, WelfareSpec};
pub use utility::{evaluate_utility_profile, utility};
