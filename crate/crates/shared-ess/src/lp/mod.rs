//! Self-contained linear-programming core: canonical program representation,
//! a dense bounded-variable simplex with anti-cycling, a phase-1 feasibility
//! checker, and a generic bisection driver for monotone feasibility search.

mod bisect;
mod program;
mod simplex;

pub use bisect::{bisect_max, BisectError};
pub use program::{
    dump_program, Constraint, Feasibility, LinearProgram, LpError, LpSolution, LpStatus, Relation,
};
pub use simplex::{check_feasibility, check_feasibility_with, solve_lp, solve_lp_with, Simplex, SolverOptions};
