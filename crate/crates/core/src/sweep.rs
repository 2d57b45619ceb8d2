//! Budget sweeps, per-group metrics and the CSV files they produce.
#![allow(clippy::result_large_err)] // errors carry the partial sweep by value

use std::io;
use std::path::Path;
use std::time::Duration;

use log::{info, warn};
use thiserror::Error;

use crate::error::{Error, Result, SolveError};
use crate::ingest::check_fractions;
use crate::milp::backend::Solver;
use crate::milp::builder::build_model;
use crate::milp::solve::{design_values, solve, NetworkDesign};
use crate::network::{DemandProfile, DesignProblem, OdPair, PriorityProfile, UtilityProfile};
use crate::objectives::{LeximaxTrace, WelfareSpec};

/// Utility above which a pair counts as served.
pub const SERVED_TOL: f64 = 1e-6;
/// Priority given to every pair in the priority-agnostic baseline.
pub const EQUAL_PRIORITY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupMetrics {
    /// Unweighted mean utility per group (index 0 is group 1). Groups with no
    /// pairs report 0.
    pub avg_utility: Vec<f64>,
    /// Share of the group's demand on served pairs, in percent. Groups with
    /// no demand report 100.
    pub pct_served: Vec<f64>,
}

pub fn group_metrics(
    utilities: &UtilityProfile,
    priority: &PriorityProfile,
    demand: &DemandProfile,
    pairs: &[OdPair],
) -> Result<GroupMetrics> {
    let k = priority.group_count();
    let mut sum_u = vec![0.0; k];
    let mut count = vec![0usize; k];
    let mut served = vec![0u64; k];
    let mut total = vec![0u64; k];
    for &pair in pairs {
        let g = priority.group(pair).ok_or(Error::UnknownPair(pair))? - 1;
        let u = utilities.get(pair).ok_or(Error::UnknownPair(pair))?;
        let b = demand.get(pair);
        sum_u[g] += u;
        count[g] += 1;
        total[g] += b;
        if u > SERVED_TOL {
            served[g] += b;
        }
    }
    Ok(GroupMetrics {
        avg_utility: (0..k)
            .map(|g| if count[g] == 0 { 0.0 } else { sum_u[g] / count[g] as f64 })
            .collect(),
        pct_served: (0..k)
            .map(|g| {
                if total[g] == 0 {
                    100.0
                } else {
                    100.0 * served[g] as f64 / total[g] as f64
                }
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub budget_fraction: f64,
    pub budget: f64,
    pub objective: f64,
    pub gap: f64,
    pub metrics: GroupMetrics,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub groups: usize,
    pub b_max: f64,
    pub rows: Vec<SweepRow>,
    pub designs: Vec<NetworkDesign>,
    pub solve_times: Vec<Duration>,
    /// Whether each solve was seeded with the previous budget's design.
    pub warm_started: Vec<bool>,
}

#[derive(Debug, Error)]
#[error("sweep aborted after {} budgets: {source}", partial.rows.len())]
pub struct SweepError {
    pub partial: SweepResult,
    #[source]
    pub source: Error,
}

/// Solves `problem` at `fraction * b_max` for every fraction, warm-starting
/// each solve from the previous design once it passes the next model's
/// feasibility check.
pub fn run_sweep(
    problem: &DesignProblem,
    spec: &WelfareSpec,
    fractions: &[f64],
    b_max: f64,
    solver: &Solver,
) -> std::result::Result<SweepResult, SweepError> {
    let mut result = SweepResult {
        groups: problem.priority().group_count(),
        b_max,
        ..Default::default()
    };
    if let Err(e) = check_fractions(fractions).and_then(|_| spec.validate()) {
        return Err(SweepError { partial: result, source: e });
    }
    let mut previous: Option<NetworkDesign> = None;
    for &fraction in fractions {
        match sweep_step(problem, spec, fraction, b_max, solver, previous.as_ref()) {
            Ok((row, design, warm)) => {
                info!(
                    "budget {:.4} ({:.0}%): objective {:.6}, gap {:.2e}",
                    row.budget,
                    100.0 * fraction,
                    row.objective,
                    row.gap
                );
                result.rows.push(row);
                result.solve_times.push(design.wall_time);
                result.warm_started.push(warm);
                result.designs.push(design.clone());
                previous = Some(design);
            }
            Err(e) => return Err(SweepError { partial: result, source: e }),
        }
    }
    Ok(result)
}

fn sweep_step(
    problem: &DesignProblem,
    spec: &WelfareSpec,
    fraction: f64,
    b_max: f64,
    solver: &Solver,
    previous: Option<&NetworkDesign>,
) -> Result<(SweepRow, NetworkDesign, bool)> {
    let budget = if fraction == 1.0 { b_max } else { fraction * b_max };
    let at = problem.with_budget(budget)?;
    let model = build_model(&at, spec, &Default::default())?;
    let mut warm = None;
    if let Some(prev) = previous {
        let values = design_values(&model, prev)?;
        match model.milp.check(&values, crate::milp::solve::CERT_TOL) {
            Ok(()) => warm = Some(prev),
            Err(v) => warn!("previous design rejected as warm start at budget {budget}: {v}"),
        }
    }
    let design = match solve(&model, solver, warm) {
        Err(Error::Solver(SolveError::WarmStartInfeasible(_))) => solve(&model, solver, None)?,
        other => other?,
    };
    let metrics = group_metrics(&design.utilities, at.priority(), at.demand(), at.pairs())?;
    let row = SweepRow {
        budget_fraction: fraction,
        budget,
        objective: design.objective,
        gap: design.gap,
        metrics,
    };
    Ok((row, design, warm.is_some()))
}

/// The same problem with every pair at [`EQUAL_PRIORITY`], keeping the
/// original group labels so group metrics stay comparable.
pub fn equal_priority_problem(problem: &DesignProblem) -> Result<DesignProblem> {
    problem.with_priority(problem.priority().flattened(EQUAL_PRIORITY)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainRow {
    pub budget_fraction: f64,
    pub budget: f64,
    /// Priority-aware minus priority-agnostic average utility, per group.
    pub gain: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub aware: SweepResult,
    pub agnostic: SweepResult,
    pub gain: Vec<GainRow>,
}

pub fn gain_rows(aware: &SweepResult, agnostic: &SweepResult) -> Vec<GainRow> {
    aware
        .rows
        .iter()
        .zip(&agnostic.rows)
        .map(|(a, b)| GainRow {
            budget_fraction: a.budget_fraction,
            budget: a.budget,
            gain: a
                .metrics
                .avg_utility
                .iter()
                .zip(&b.metrics.avg_utility)
                .map(|(x, y)| x - y)
                .collect(),
        })
        .collect()
}

/// Runs the priority-aware sweep and its equal-priority counterpart side by
/// side.
pub fn run_comparison(
    problem: &DesignProblem,
    spec: &WelfareSpec,
    fractions: &[f64],
    b_max: f64,
    solver: &Solver,
) -> std::result::Result<Comparison, SweepError> {
    let flat = equal_priority_problem(problem).map_err(|e| SweepError {
        partial: SweepResult::default(),
        source: e,
    })?;
    let (aware, agnostic) = std::thread::scope(|s| {
        let other = s.spawn(|| run_sweep(&flat, spec, fractions, b_max, solver));
        let aware = run_sweep(problem, spec, fractions, b_max, solver);
        (aware, other.join().expect("sweep thread panicked"))
    });
    let aware = aware?;
    let agnostic = agnostic.map_err(|e| SweepError {
        partial: aware.clone(),
        source: e.source,
    })?;
    let gain = gain_rows(&aware, &agnostic);
    Ok(Comparison { aware, agnostic, gain })
}

/// `count` evenly spaced fractions from `start` to 1 inclusive.
pub fn fractions_from(start: f64, count: usize) -> Vec<f64> {
    if count <= 1 || start >= 1.0 {
        return vec![1.0];
    }
    (0..count)
        .map(|i| {
            if i + 1 == count {
                1.0
            } else {
                start + (1.0 - start) * i as f64 / (count - 1) as f64
            }
        })
        .collect()
}

fn sweep_header(k: usize) -> Vec<String> {
    let mut h: Vec<String> = ["budget_fraction", "budget", "objective", "gap"].map(String::from).to_vec();
    h.extend((1..=k).map(|g| format!("avg_u_g{g}")));
    h.extend((1..=k).map(|g| format!("pct_served_g{g}")));
    h
}

pub fn write_sweep<W: io::Write>(out: W, groups: usize, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header(groups))?;
    for row in rows {
        let mut rec = vec![
            row.budget_fraction.to_string(),
            row.budget.to_string(),
            row.objective.to_string(),
            row.gap.to_string(),
        ];
        rec.extend(row.metrics.avg_utility.iter().map(f64::to_string));
        rec.extend(row.metrics.pct_served.iter().map(f64::to_string));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    write_sweep(std::fs::File::create(path)?, result.groups, &result.rows)
}

/// Parses a file written by [`emit_csv`] back into `(groups, rows)`.
pub fn read_sweep_csv(path: &Path) -> Result<(usize, Vec<SweepRow>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let k = header.iter().filter(|h| h.starts_with("avg_u_g")).count();
    if header.iter().collect::<Vec<_>>() != sweep_header(k) {
        return Err(Error::parse(path, 1, "unexpected sweep header"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let values: Vec<f64> = rec
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| Error::parse(path, line, format!("{v:?}: {e}"))))
            .collect::<Result<_>>()?;
        rows.push(SweepRow {
            budget_fraction: values[0],
            budget: values[1],
            objective: values[2],
            gap: values[3],
            metrics: GroupMetrics {
                avg_utility: values[4..4 + k].to_vec(),
                pct_served: values[4 + k..4 + 2 * k].to_vec(),
            },
        });
    }
    Ok((k, rows))
}

pub fn emit_gain_csv(rows: &[GainRow], groups: usize, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = vec!["budget_fraction".into(), "budget".into()];
    header.extend((1..=groups).map(|g| format!("gain_g{g}")));
    w.write_record(header)?;
    for row in rows {
        let mut rec = vec![row.budget_fraction.to_string(), row.budget.to_string()];
        rec.extend(row.gain.iter().map(f64::to_string));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_leximax<W: io::Write>(out: W, trace: &LeximaxTrace, problem: &DesignProblem) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "removed_pair", "floor", "objective", "avg_u_remaining", "avg_u_all"])?;
    for it in &trace.iterations {
        w.write_record([
            it.iteration.to_string(),
            problem.network().pair_label(it.removed),
            it.floor.to_string(),
            it.objective.to_string(),
            it.avg_u_remaining.to_string(),
            it.avg_u_all.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_leximax_csv(trace: &LeximaxTrace, problem: &DesignProblem, path: &Path) -> Result<()> {
    write_leximax(std::fs::File::create(path)?, trace, problem)
}

/// Per-pair outcome of one design.
pub fn emit_design_csv(design: &NetworkDesign, problem: &DesignProblem, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "origin",
        "destination",
        "group",
        "priority",
        "demand",
        "shortest_length",
        "path_length",
        "utility",
    ])?;
    let net = problem.network();
    for &pair in problem.pairs() {
        let path_length = design
            .path_lengths
            .get(&pair)
            .map_or_else(String::new, |l| l.to_string());
        w.write_record([
            net.node(pair.origin).label.clone(),
            net.node(pair.destination).label.clone(),
            problem.priority().group(pair).unwrap_or(0).to_string(),
            problem.priority().get(pair).unwrap_or(0.0).to_string(),
            problem.demand().get(pair).to_string(),
            problem.shortest_length(pair).to_string(),
            path_length,
            design.utilities.get(pair).unwrap_or(0.0).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Installed arcs of one design.
pub fn emit_arcs_csv(design: &NetworkDesign, problem: &DesignProblem, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["tail", "head", "length", "cost"])?;
    let net = problem.network();
    for a in design.installed.ids() {
        let arc = net.arc(a);
        w.write_record([
            net.node(arc.tail).label.clone(),
            net.node(arc.head).label.clone(),
            arc.length.to_string(),
            arc.cost.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
