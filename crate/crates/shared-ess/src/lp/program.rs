//! Canonical linear-program representation and solution types.

use thiserror::Error;

/// Relation between a constraint row and its right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl std::fmt::Display for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

/// One dense constraint row `coeffs . x  REL  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A maximization LP over box-bounded variables with dense constraint rows.
/// Bounds may be `f64::NEG_INFINITY` / `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    /// Objective coefficients; the solver maximizes `objective . x`.
    pub objective: Vec<f64>,
    /// Per-variable `[lower, upper]` bounds.
    pub bounds: Vec<(f64, f64)>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    /// An LP with `n` variables, zero objective, and free bounds.
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![0.0; n],
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    /// Structural sanity: row lengths, ordered finite-able bounds, finite
    /// coefficients and right-hand sides.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::Shape(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::NonFinite(format!("objective coefficient {j}")));
            }
        }
        for (j, (lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() {
                return Err(LpError::NonFinite(format!("bounds of variable {j}")));
            }
            if lo > hi {
                return Err(LpError::BadBounds {
                    var: j,
                    lower: *lo,
                    upper: *hi,
                });
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::Shape(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("rhs of constraint {i}")));
            }
            if row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(LpError::NonFinite(format!("coefficients of constraint {i}")));
            }
        }
        Ok(())
    }

    pub fn rhs_inf_norm(&self) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.rhs.abs())
            .fold(0.0, f64::max)
    }

    /// Largest violation of any constraint or variable bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.constraints {
            let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let viol = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for ((lo, hi), v) in self.bounds.iter().zip(x) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst.max(0.0)
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver output. `primal`, `objective_value`, and the certificate fields are
/// meaningful only when `status == Optimal`.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective_value: f64,
    /// Largest violation of any original constraint or bound at `primal`.
    pub max_primal_residual: f64,
    /// Absolute difference between the primal objective and the dual bound
    /// assembled from the terminal basis; 0 up to rounding at a clean
    /// optimum.
    pub dual_gap_bound: f64,
    /// Dual value per constraint row.
    pub row_duals: Vec<f64>,
    pub pivot_count: usize,
    /// `(entering, leaving)` variable pairs, recorded when
    /// [`SolverOptions::record_pivots`](super::SolverOptions) is set.
    pub pivot_log: Option<Vec<(usize, usize)>>,
}

/// Outcome of a phase-1 feasibility check.
#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible(Vec<f64>),
    Infeasible,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Shape(String),
    #[error("non-finite data: {0}")]
    NonFinite(String),
    #[error("variable {var} has lower bound {lower} above upper bound {upper}")]
    BadBounds { var: usize, lower: f64, upper: f64 },
    #[error("iteration limit reached after {pivots} pivots")]
    IterationLimit { pivots: usize },
    #[error("numerical breakdown: {0}")]
    Numerical(String),
}

/// Plain-text dump of a program, for solver-to-solver diffing.
///
/// Format: a header line `max <n> objective coefficients`, one line
/// `bound <j> <lower> <upper>` per variable, then one constraint per line as
/// the dense coefficient list, the relation symbol, and the right-hand side.
pub fn dump_program(lp: &LinearProgram) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.17e}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(out, "max {}", join(&lp.objective)).unwrap();
    for (j, (lo, hi)) in lp.bounds.iter().enumerate() {
        writeln!(out, "bound {j} {lo} {hi}").unwrap();
    }
    for row in &lp.constraints {
        writeln!(out, "{} {} {:.17e}", join(&row.coeffs), row.relation, row.rhs).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn violation_measures_rows_and_bounds() {
        let mut lp = LinearProgram::new(2);
        lp.bounds = vec![(0.0, 1.0), (0.0, f64::INFINITY)];
        lp.add_constraint(vec![1.0, 1.0], Relation::Le, 1.5);
        assert_eq!(lp.max_violation(&[1.0, 1.0]), 0.5);
        assert_eq!(lp.max_violation(&[-0.25, 0.0]), 0.25);
        assert_eq!(lp.max_violation(&[0.5, 0.5]), 0.0);
    }

    #[test]
    fn validate_rejects_ragged_rows_and_crossed_bounds() {
        let mut lp = LinearProgram::new(2);
        lp.add_constraint(vec![1.0], Relation::Le, 0.0);
        assert!(matches!(lp.validate(), Err(LpError::Shape(_))));

        let mut lp = LinearProgram::new(1);
        lp.bounds[0] = (2.0, 1.0);
        assert!(matches!(lp.validate(), Err(LpError::BadBounds { var: 0, .. })));
    }

    #[test]
    fn dump_is_one_constraint_per_line() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 0.0];
        lp.bounds = vec![(0.0, 1.0); 2];
        lp.add_constraint(vec![1.0, 2.0], Relation::Ge, 3.0);
        let text = dump_program(&lp);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("max "));
        assert!(lines[3].contains(">="));
    }
}
