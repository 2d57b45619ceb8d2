//! Solver backends. The rest of the crate only sees [`MilpBackend`]; HiGHS is
//! the bundled branch-and-bound engine.

use std::sync::Arc;
use std::time::{Duration, Instant};

use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem};

use crate::error::SolveError;
use crate::milp::model::{MilpModel, Sense, VarKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative optimality gap at which branch-and-bound stops.
    pub gap: f64,
    /// Seconds per solve.
    pub time_limit: f64,
    pub seed: u64,
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gap: 1e-4,
            time_limit: 600.0,
            seed: 0,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Time limit reached; the incumbent is returned with its gap.
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct BackendSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub wall_time: Duration,
}

pub trait MilpBackend: Send + Sync {
    /// Human-readable identity recorded in run manifests.
    fn name(&self) -> String;

    fn solve(
        &self,
        model: &MilpModel,
        config: &SolverConfig,
        start: Option<&[f64]>,
    ) -> Result<BackendSolution, SolveError>;
}

/// A backend plus its configuration.
#[derive(Clone)]
pub struct Solver {
    backend: Arc<dyn MilpBackend>,
    config: SolverConfig,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver")
            .field("backend", &self.backend.name())
            .field("config", &self.config)
            .finish()
    }
}

impl Solver {
    pub fn new(backend: Arc<dyn MilpBackend>, config: SolverConfig) -> Self {
        Solver { backend, config }
    }

    pub fn highs(config: SolverConfig) -> Self {
        Solver::new(Arc::new(HighsBackend), config)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn backend_name(&self) -> String {
        self.backend.name()
    }

    pub fn run(&self, model: &MilpModel, start: Option<&[f64]>) -> Result<BackendSolution, SolveError> {
        self.backend.solve(model, &self.config, start)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend;

impl MilpBackend for HighsBackend {
    fn name(&self) -> String {
        "HiGHS (highs crate 2.4)".into()
    }

    fn solve(
        &self,
        model: &MilpModel,
        config: &SolverConfig,
        start: Option<&[f64]>,
    ) -> Result<BackendSolution, SolveError> {
        let started = Instant::now();
        let mut problem = RowProblem::default();
        let mut costs = vec![0.0; model.var_count()];
        for &(v, c) in model.objective() {
            costs[v.0] += c;
        }
        let cols: Vec<_> = model
            .vars()
            .iter()
            .zip(&costs)
            .map(|(var, &cost)| {
                problem.add_column_with_integrality(
                    cost,
                    var.lower..=var.upper,
                    var.kind == VarKind::Binary,
                )
            })
            .collect();
        for row in model.constraints() {
            let factors = row.terms.iter().map(|&(v, c)| (cols[v.0], c));
            match (row.lower.is_finite(), row.upper.is_finite()) {
                (true, true) => problem.add_row(row.lower..=row.upper, factors),
                (true, false) => problem.add_row(row.lower.., factors),
                (false, true) => problem.add_row(..=row.upper, factors),
                (false, false) => problem.add_row::<f64, _, _, _>(.., factors),
            }
        }
        let sense = match model.sense() {
            Sense::Maximize => highs::Sense::Maximise,
            Sense::Minimize => highs::Sense::Minimise,
        };
        let mut highs_model = problem
            .try_optimise(sense)
            .map_err(|s| SolveError::Backend(format!("could not load model: {s:?}")))?;
        highs_model.set_option("output_flag", config.verbose);
        highs_model.set_option("mip_rel_gap", config.gap);
        highs_model.set_option("time_limit", config.time_limit);
        highs_model.set_option("random_seed", (config.seed % i32::MAX as u64) as i32);
        if let Some(values) = start {
            highs_model
                .try_set_solution(Some(values), None, None, None)
                .map_err(|s| SolveError::Backend(format!("could not pass start values: {s:?}")))?;
        }
        let solved = highs_model
            .try_solve()
            .map_err(|s| SolveError::Backend(format!("run failed: {s:?}")))?;
        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::ReachedTimeLimit => {
                if solved.primal_solution_status() != HighsSolutionStatus::Feasible {
                    return Err(SolveError::NoIncumbent(config.time_limit));
                }
                SolveStatus::TimeLimit
            }
            HighsModelStatus::Infeasible | HighsModelStatus::UnboundedOrInfeasible => {
                return Err(SolveError::Infeasible)
            }
            HighsModelStatus::ModelEmpty => SolveStatus::Optimal,
            other => return Err(SolveError::Backend(format!("unexpected status {other:?}"))),
        };
        let values = solved.get_solution().columns().to_vec();
        let objective = solved.objective_value();
        let gap = match solved.mip_gap() {
            g if g.is_finite() => g.max(0.0),
            _ if status == SolveStatus::Optimal => 0.0,
            _ => f64::INFINITY,
        };
        Ok(BackendSolution {
            values,
            objective,
            gap,
            status,
            wall_time: started.elapsed(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn highs_solves_a_knapsack() {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 4
        let mut m = MilpModel::new();
        let a = m.add_var("a", VarKind::Binary, 0.0, 1.0);
        let b = m.add_var("b", VarKind::Binary, 0.0, 1.0);
        let c = m.add_var("c", VarKind::Binary, 0.0, 1.0);
        m.add_le("cap", vec![(a, 2.0), (b, 3.0), (c, 1.0)], 4.0);
        m.set_objective(Sense::Maximize, vec![(a, 5.0), (b, 4.0), (c, 3.0)]);
        let sol = Solver::highs(SolverConfig::default()).run(&m, None).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 8.0).abs() < 1e-9);
        assert!(m.check(&sol.values, 1e-6).is_ok());

        let warm = Solver::highs(SolverConfig::default())
            .run(&m, Some(&[1.0, 0.0, 0.0]))
            .unwrap();
        assert!((warm.objective - 8.0).abs() < 1e-9);
    }

    #[test]
    fn highs_reports_infeasibility() {
        let mut m = MilpModel::new();
        let a = m.add_var("a", VarKind::Binary, 0.0, 1.0);
        m.add_ge("impossible", vec![(a, 1.0)], 2.0);
        m.set_objective(Sense::Minimize, vec![(a, 1.0)]);
        let err = Solver::highs(SolverConfig::default()).run(&m, None).unwrap_err();
        assert!(matches!(err, SolveError::Infeasible));
    }
}
