//! Backend-independent mixed-integer linear program: variables, range rows,
//! a linear objective, a feasibility checker and an LP-format writer.

use std::fmt::Write as _;
use std::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

/// `lower <= sum(coef * var) <= upper`; equality rows have `lower == upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub what: String,
    pub amount: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} violated by {:.3e}", self.what, self.amount)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    vars: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<(VarId, f64)>,
    sense: Sense,
}

impl Default for MilpModel {
    fn default() -> Self {
        MilpModel {
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            sense: Sense::Maximize,
        }
    }
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> VarId {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        self.vars.push(Variable {
            name: name.into(),
            kind,
            lower,
            upper,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        lower: f64,
        upper: f64,
    ) -> usize {
        debug_assert!(terms.iter().all(|(v, _)| v.0 < self.vars.len()));
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            lower,
            upper,
        });
        self.constraints.len() - 1
    }

    pub fn add_le(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, rhs: f64) -> usize {
        self.add_constraint(name, terms, f64::NEG_INFINITY, rhs)
    }

    pub fn add_ge(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, rhs: f64) -> usize {
        self.add_constraint(name, terms, rhs, f64::INFINITY)
    }

    pub fn add_eq(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, rhs: f64) -> usize {
        self.add_constraint(name, terms, rhs, rhs)
    }

    pub fn set_objective(&mut self, sense: Sense, terms: Vec<(VarId, f64)>) {
        self.sense = sense;
        self.objective = terms;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.vars[var.0].lower = lower;
        self.vars[var.0].upper = upper;
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Checks bounds, integrality and every row. Row tolerances scale with
    /// the magnitude of the row's terms.
    pub fn check(&self, values: &[f64], tol: f64) -> Result<(), Violation> {
        if values.len() != self.vars.len() {
            return Err(Violation {
                what: format!("value vector of length {} (expected {})", values.len(), self.vars.len()),
                amount: f64::INFINITY,
            });
        }
        for (var, &x) in self.vars.iter().zip(values) {
            if !x.is_finite() {
                return Err(Violation {
                    what: format!("finiteness of {}", var.name),
                    amount: f64::INFINITY,
                });
            }
            let scale = tol * (1.0 + x.abs());
            if x < var.lower - scale {
                return Err(Violation {
                    what: format!("lower bound of {}", var.name),
                    amount: var.lower - x,
                });
            }
            if x > var.upper + scale {
                return Err(Violation {
                    what: format!("upper bound of {}", var.name),
                    amount: x - var.upper,
                });
            }
            if var.kind == VarKind::Binary && (x - x.round()).abs() > tol {
                return Err(Violation {
                    what: format!("integrality of {}", var.name),
                    amount: (x - x.round()).abs(),
                });
            }
        }
        for row in &self.constraints {
            let mut activity = 0.0;
            let mut magnitude = 0.0;
            for &(v, c) in &row.terms {
                activity += c * values[v.0];
                magnitude += (c * values[v.0]).abs();
            }
            let slack = tol * (1.0 + magnitude);
            if activity < row.lower - slack {
                return Err(Violation {
                    what: format!("row {} (>= {})", row.name, row.lower),
                    amount: row.lower - activity,
                });
            }
            if activity > row.upper + slack {
                return Err(Violation {
                    what: format!("row {} (<= {})", row.name, row.upper),
                    amount: activity - row.upper,
                });
            }
        }
        Ok(())
    }

    /// Writes the model in CPLEX LP text format.
    pub fn write_lp<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        let name = |v: VarId| self.vars[v.0].name.as_str();
        let expr = |terms: &[(VarId, f64)]| {
            let mut s = String::new();
            for (i, &(v, c)) in terms.iter().enumerate() {
                if i == 0 {
                    if c < 0.0 {
                        let _ = write!(s, "- {} {}", -c, name(v));
                    } else {
                        let _ = write!(s, "{} {}", c, name(v));
                    }
                } else if c < 0.0 {
                    let _ = write!(s, " - {} {}", -c, name(v));
                } else {
                    let _ = write!(s, " + {} {}", c, name(v));
                }
            }
            if s.is_empty() {
                s.push('0');
            }
            s
        };
        writeln!(
            out,
            "{}",
            match self.sense {
                Sense::Maximize => "Maximize",
                Sense::Minimize => "Minimize",
            }
        )?;
        writeln!(out, " obj: {}", expr(&self.objective))?;
        writeln!(out, "Subject To")?;
        for row in &self.constraints {
            let lhs = expr(&row.terms);
            if row.lower == row.upper {
                writeln!(out, " {}: {} = {}", row.name, lhs, row.lower)?;
            } else if row.lower.is_finite() && row.upper.is_finite() {
                writeln!(out, " {}_lo: {} >= {}", row.name, lhs, row.lower)?;
                writeln!(out, " {}_hi: {} <= {}", row.name, lhs, row.upper)?;
            } else if row.upper.is_finite() {
                writeln!(out, " {}: {} <= {}", row.name, lhs, row.upper)?;
            } else {
                writeln!(out, " {}: {} >= {}", row.name, lhs, row.lower)?;
            }
        }
        writeln!(out, "Bounds")?;
        for var in self.vars.iter().filter(|v| v.kind == VarKind::Continuous) {
            let lo = if var.lower.is_finite() {
                var.lower.to_string()
            } else {
                "-inf".into()
            };
            let hi = if var.upper.is_finite() {
                var.upper.to_string()
            } else {
                "+inf".into()
            };
            writeln!(out, " {} <= {} <= {}", lo, var.name, hi)?;
        }
        for var in self
            .vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary && (v.lower != 0.0 || v.upper != 1.0))
        {
            writeln!(out, " {} <= {} <= {}", var.lower, var.name, var.upper)?;
        }
        writeln!(out, "Binaries")?;
        for var in self.vars.iter().filter(|v| v.kind == VarKind::Binary) {
            writeln!(out, " {}", var.name)?;
        }
        writeln!(out, "End")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (MilpModel, VarId, VarId) {
        let mut m = MilpModel::new();
        let x = m.add_var("x", VarKind::Binary, 0.0, 1.0);
        let y = m.add_var("y", VarKind::Continuous, 0.0, 2.5);
        m.add_le("cap", vec![(x, 2.0), (y, 1.0)], 3.0);
        m.add_eq("tie", vec![(y, 1.0), (x, -1.0)], 0.0);
        m.set_objective(Sense::Maximize, vec![(x, 1.0), (y, 1.0)]);
        (m, x, y)
    }

    #[test]
    fn checker_flags_each_kind_of_violation() {
        let (m, _, _) = small();
        assert!(m.check(&[1.0, 1.0], 1e-9).is_ok());
        assert!(m.check(&[0.5, 0.5], 1e-9).unwrap_err().what.contains("integrality"));
        assert!(m.check(&[1.0, 3.0], 1e-9).unwrap_err().what.contains("upper bound"));
        assert!(m.check(&[0.0, 1.0], 1e-9).unwrap_err().what.contains("tie"));
        assert!(m.check(&[1.0], 1e-9).is_err());
        assert_eq!(m.objective_value(&[1.0, 1.0]), 2.0);
    }

    #[test]
    fn lp_dump_has_all_sections() {
        let (m, _, _) = small();
        let mut buf = Vec::new();
        m.write_lp(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("Maximize\n obj: 1 x + 1 y\n"));
        assert!(text.contains(" cap: 2 x + 1 y <= 3\n"));
        assert!(text.contains(" tie: 1 y - 1 x = 0\n"));
        assert!(text.contains(" 0 <= y <= 2.5\n"));
        assert!(text.contains("Binaries\n x\nEnd\n"));
    }
}
