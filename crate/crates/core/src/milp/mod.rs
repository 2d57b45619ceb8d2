//! The arc-selection MILP: model construction, backends, solving and budget
//! endpoints.

pub mod backend;
pub mod budget;
pub mod builder;
pub mod model;
pub mod solve;

pub use backend::{HighsBackend, MilpBackend, SolveStatus, Solver, SolverConfig};
pub use budget::{budget_grid, min_budget_positive_floor, min_cost_full_service, FloorBudget};
pub use builder::{build_min_cost_model, build_model, DesignModel, Layout, ModelKind};
pub use model::{MilpModel, Sense, VarId, VarKind};
pub use solve::{certify, design_values, solve, NetworkDesign};
