//! Assembles and solves the scheduling problems: shared storage under
//! proportional profit allocation (directly or by bisection), shared storage
//! maximizing the plain total, and the per-user distributed benchmark.
//!
//! Solver output is never trusted blind: every returned schedule is
//! re-simulated through the storage recursion, re-audited against bounds,
//! and re-priced through the cost model.

use crate::cost::{baseline_cost, recover_grid_draw, GridDrawSchedule, ProfitReport};
use crate::lp::{
    bisect_max, BisectError, Feasibility, LinearProgram, LpError, LpSolution, LpStatus, Relation,
    Simplex, SolverOptions,
};
use crate::scenario::{
    split_consistency, validate_scenario, CostFunction, EssSpec, NetEnergyProfile, Scenario,
    SplitCheck, ValidationReport,
};
use crate::storage::{
    check_feasible, simulate_distributed_state, simulate_shared_state, EssLayout, FeasibilityReport,
    Schedule, ScheduleError, StateTrajectory,
};
use rayon::prelude::*;
use thiserror::Error;

/// Charge/discharge pairs above this threshold (kW) in the same user-slot
/// are flagged as simultaneous.
pub const SIMULTANEOUS_EPS_KW: f64 = 1e-6;

/// Default bisection tolerance on the allocation optimum (absolute, $).
pub const BISECTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Shared,
    SharedUnconstrained,
    Distributed,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Shared => "shared",
            Mode::SharedUnconstrained => "unconstrained",
            Mode::Distributed => "distributed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditKind {
    Optimal,
    FeasibilityProbe,
}

/// Certificate data for one solver call, kept for regression audits.
#[derive(Debug, Clone)]
pub struct SolverAudit {
    pub label: String,
    pub kind: AuditKind,
    pub objective_value: f64,
    pub max_primal_residual: f64,
    pub dual_gap_bound: f64,
    pub rhs_inf_norm: f64,
}

impl SolverAudit {
    fn from_solution(label: String, sol: &LpSolution, lp: &LinearProgram) -> Self {
        Self {
            label,
            kind: AuditKind::Optimal,
            objective_value: sol.objective_value,
            max_primal_residual: sol.max_primal_residual,
            dual_gap_bound: sol.dual_gap_bound,
            rhs_inf_norm: lp.rhs_inf_norm(),
        }
    }
}

/// State trajectories of a solution: one for the shared unit or one per user
/// in distributed mode.
#[derive(Debug, Clone)]
pub enum Trajectories {
    Shared(StateTrajectory),
    PerUser(Vec<StateTrajectory>),
}

/// A solved schedule with everything recomputed from first principles.
#[derive(Debug, Clone)]
pub struct ScheduleResult {
    pub mode: Mode,
    pub schedule: Schedule,
    pub grid_draw: GridDrawSchedule,
    pub trajectories: Trajectories,
    pub profit_report: ProfitReport,
    /// Optimal guaranteed-allocation total (shared mode only): the largest
    /// total profit t such that every user can keep at least `beta[m] * t`.
    pub t_star: Option<f64>,
    /// User-slot pairs (1-based) where charge and discharge are both above
    /// [`SIMULTANEOUS_EPS_KW`]. Reported, not canonicalized.
    pub simultaneous_flags: Vec<(usize, usize)>,
    pub audits: Vec<SolverAudit>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("scenario is invalid:\n{0}")]
    InvalidScenario(ValidationReport),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("{context}: solver returned {status:?}")]
    UnexpectedStatus { context: String, status: LpStatus },
    #[error("solved schedule failed the feasibility audit:\n{report}")]
    FeasibilityAudit { report: FeasibilityReport },
    #[error("comparison requires a distributed ESS list")]
    MissingDistributed,
    #[error("capacity split is inconsistent: residuals s_min {:.3e}, s_max {:.3e}, c_max {:.3e}, d_max {:.3e}",
            .0.residual_s_min, .0.residual_s_max, .0.residual_c_max, .0.residual_d_max)]
    SplitInconsistent(SplitCheck),
    #[error("comparison requires identical efficiencies on the shared and distributed units")]
    MixedEfficiencies,
    #[error(transparent)]
    Bisect(#[from] BisectError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Variable layout of an assembled program: optional allocation variable t
/// first, then the C, D, G, and cost-epigraph blocks, each M x N in
/// user-major order.
#[derive(Debug, Clone, Copy)]
struct VarMap {
    users: usize,
    slots: usize,
    has_t: bool,
}

impl VarMap {
    fn base(&self) -> usize {
        usize::from(self.has_t)
    }

    fn total(&self) -> usize {
        self.base() + 4 * self.users * self.slots
    }

    fn t(&self) -> usize {
        debug_assert!(self.has_t);
        0
    }

    fn charge(&self, m: usize, n: usize) -> usize {
        self.base() + m * self.slots + n
    }

    fn discharge(&self, m: usize, n: usize) -> usize {
        self.base() + self.users * self.slots + m * self.slots + n
    }

    fn grid(&self, m: usize, n: usize) -> usize {
        self.base() + 2 * self.users * self.slots + m * self.slots + n
    }

    fn epi(&self, m: usize, n: usize) -> usize {
        self.base() + 3 * self.users * self.slots + m * self.slots + n
    }
}

/// What the assembled program optimizes.
enum Variant<'a> {
    /// Maximize t subject to per-user allocations `profit_m >= beta_m * t`.
    MaxAllocation { betas: &'a [f64], baselines: &'a [f64] },
    /// Maximize the plain total profit (no allocation rows).
    MaxTotal,
    /// Zero objective; allocation rows pinned at a fixed t. Used by the
    /// bisection path, which edits the allocation rows' rhs between probes.
    FixedAllocation { betas: &'a [f64], baselines: &'a [f64], t: f64 },
}

struct Assembled {
    lp: LinearProgram,
    vars: VarMap,
    /// Row index of each user's allocation row (when present).
    allocation_rows: Vec<usize>,
}

fn build_program(
    slots: usize,
    deltas: &[NetEnergyProfile],
    costs: &[&[CostFunction]],
    spec: &EssSpec,
    terminal_equals_initial: bool,
    variant: Variant<'_>,
) -> Assembled {
    let users = deltas.len();
    let vars = VarMap {
        users,
        slots,
        has_t: matches!(variant, Variant::MaxAllocation { .. }),
    };
    let total = vars.total();
    let mut lp = LinearProgram::new(total);

    for j in 0..total {
        lp.bounds[j] = (0.0, f64::INFINITY);
    }
    for m in 0..users {
        for n in 0..slots {
            lp.bounds[vars.charge(m, n)] = (0.0, spec.c_max);
            lp.bounds[vars.discharge(m, n)] = (0.0, spec.d_max);
        }
    }
    match variant {
        Variant::MaxAllocation { .. } => lp.objective[vars.t()] = 1.0,
        Variant::MaxTotal => {
            for m in 0..users {
                for n in 0..slots {
                    lp.objective[vars.epi(m, n)] = -1.0;
                }
            }
        }
        Variant::FixedAllocation { .. } => {}
    }

    // Storage window: the recursion is eliminated into one cumulative row
    // pair per horizon prefix, bounding every state the recursion reaches
    // (including the post-horizon state).
    let charge_rate = spec.eff_charge;
    let discharge_rate = 1.0 / spec.eff_discharge;
    let mut cum = vec![0.0; total];
    for tau in 0..slots {
        for m in 0..users {
            cum[vars.charge(m, tau)] = charge_rate;
            cum[vars.discharge(m, tau)] = -discharge_rate;
        }
        lp.add_constraint(cum.clone(), Relation::Le, spec.s_max - spec.s_init);
        lp.add_constraint(cum.clone(), Relation::Ge, spec.s_min - spec.s_init);
    }
    if terminal_equals_initial {
        lp.add_constraint(cum, Relation::Eq, 0.0);
    }

    // Load satisfaction: grid draw covers whatever charging exceeds the net
    // profile plus discharge.
    for (m, delta) in deltas.iter().enumerate() {
        for n in 0..slots {
            let mut row = vec![0.0; total];
            row[vars.grid(m, n)] = 1.0;
            row[vars.charge(m, n)] = -1.0;
            row[vars.discharge(m, n)] = 1.0;
            lp.add_constraint(row, Relation::Ge, -delta.net[n]);
        }
    }

    // Cost epigraph: one row per segment keeps each epigraph variable above
    // the piecewise-linear cost of the grid draw.
    for m in 0..users {
        for n in 0..slots {
            for seg in &costs[m][n].segments {
                let mut row = vec![0.0; total];
                row[vars.epi(m, n)] = 1.0;
                row[vars.grid(m, n)] = -seg.slope;
                lp.add_constraint(row, Relation::Ge, seg.intercept);
            }
        }
    }

    // Allocation rows: user m keeps at least beta_m * t of the total.
    let mut allocation_rows = Vec::new();
    match variant {
        Variant::MaxAllocation { betas, baselines } => {
            for m in 0..users {
                let mut row = vec![0.0; total];
                for n in 0..slots {
                    row[vars.epi(m, n)] = 1.0;
                }
                row[vars.t()] = betas[m];
                allocation_rows.push(lp.num_constraints());
                lp.add_constraint(row, Relation::Le, baselines[m]);
            }
        }
        Variant::FixedAllocation { betas, baselines, t } => {
            for m in 0..users {
                let mut row = vec![0.0; total];
                for n in 0..slots {
                    row[vars.epi(m, n)] = 1.0;
                }
                allocation_rows.push(lp.num_constraints());
                lp.add_constraint(row, Relation::Le, baselines[m] - betas[m] * t);
            }
        }
        Variant::MaxTotal => {}
    }

    Assembled {
        lp,
        vars,
        allocation_rows,
    }
}

fn scenario_baselines(s: &Scenario, deltas: &[NetEnergyProfile]) -> Vec<f64> {
    deltas
        .iter()
        .enumerate()
        .map(|(m, d)| baseline_cost(&s.costs[m], d))
        .collect()
}

/// Builds the allocation program for a validated scenario: variables
/// `{t} ∪ {C, D, G, z}` (`1 + 4MN` in total), cumulative state-window rows,
/// load rows, epigraph rows, and one allocation row per user; objective
/// `max t`.
pub fn assemble_shared_program(s: &Scenario) -> Result<LinearProgram, SolveError> {
    let report = validate_scenario(s);
    if !report.is_valid() {
        return Err(SolveError::InvalidScenario(report));
    }
    let deltas = s.net_profiles();
    let baselines = scenario_baselines(s, &deltas);
    let costs: Vec<&[CostFunction]> = s.costs.iter().map(Vec::as_slice).collect();
    Ok(build_program(
        s.num_slots(),
        &deltas,
        &costs,
        &s.shared_ess,
        s.terminal_equals_initial,
        Variant::MaxAllocation {
            betas: &s.coefficients.beta,
            baselines: &baselines,
        },
    )
    .lp)
}

/// Pulls the charge/discharge blocks out of an LP point, snapping solver
/// noise below zero to zero. Anything worse than noise is caught by the
/// feasibility audit downstream.
fn extract_schedule(vars: &VarMap, point: &[f64]) -> Result<Schedule, ScheduleError> {
    let pick = |idx: usize| {
        let v = point[idx];
        if v < 0.0 {
            0.0
        } else {
            v
        }
    };
    let charge: Vec<Vec<f64>> = (0..vars.users)
        .map(|m| (0..vars.slots).map(|n| pick(vars.charge(m, n))).collect())
        .collect();
    let discharge: Vec<Vec<f64>> = (0..vars.users)
        .map(|m| (0..vars.slots).map(|n| pick(vars.discharge(m, n))).collect())
        .collect();
    Schedule::new(charge, discharge)
}

fn simultaneous_flags(schedule: &Schedule) -> Vec<(usize, usize)> {
    let mut flags = Vec::new();
    for m in 0..schedule.num_users() {
        for n in 0..schedule.num_slots() {
            if schedule.charge_row(m)[n] > SIMULTANEOUS_EPS_KW
                && schedule.discharge_row(m)[n] > SIMULTANEOUS_EPS_KW
            {
                flags.push((m + 1, n + 1));
            }
        }
    }
    flags
}

fn finish_result(
    s: &Scenario,
    mode: Mode,
    schedule: Schedule,
    t_star: Option<f64>,
    audits: Vec<SolverAudit>,
) -> Result<ScheduleResult, SolveError> {
    let deltas = s.net_profiles();
    let grid_draw = recover_grid_draw(&schedule, &deltas);

    let (layout_report, trajectories) = match mode {
        Mode::Distributed => {
            let specs = s.distributed_ess.as_ref().expect("checked by caller");
            let report = check_feasible(EssLayout::Distributed(specs), &schedule);
            let trajs = (0..schedule.num_users())
                .map(|m| {
                    simulate_distributed_state(&specs[m], schedule.charge_row(m), schedule.discharge_row(m))
                        .expect("rows share one length")
                })
                .collect();
            (report, Trajectories::PerUser(trajs))
        }
        _ => {
            let report = check_feasible(EssLayout::Shared(&s.shared_ess), &schedule);
            let traj = simulate_shared_state(&s.shared_ess, &schedule);
            (report, Trajectories::Shared(traj))
        }
    };
    if !layout_report.is_feasible() {
        return Err(SolveError::FeasibilityAudit { report: layout_report });
    }

    let profit_report = ProfitReport::compute(s, &schedule);
    let simultaneous = simultaneous_flags(&schedule);
    Ok(ScheduleResult {
        mode,
        schedule,
        grid_draw,
        trajectories,
        profit_report,
        t_star,
        simultaneous_flags: simultaneous,
        audits,
    })
}

fn expect_optimal(context: &str, lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, SolveError> {
    let sol = crate::lp::solve_lp_with(lp, opts)?;
    if sol.status != LpStatus::Optimal {
        return Err(SolveError::UnexpectedStatus {
            context: context.to_string(),
            status: sol.status,
        });
    }
    Ok(sol)
}

fn validated(s: &Scenario) -> Result<(), SolveError> {
    let report = validate_scenario(s);
    if report.is_valid() {
        Ok(())
    } else {
        Err(SolveError::InvalidScenario(report))
    }
}

/// Solves the proportional-allocation problem with default solver options.
pub fn solve_shared(s: &Scenario, method: Method) -> Result<ScheduleResult, SolveError> {
    solve_shared_opt(s, method, &SolverOptions::default())
}

pub fn solve_shared_opt(s: &Scenario, method: Method, opts: &SolverOptions) -> Result<ScheduleResult, SolveError> {
    validated(s)?;
    let deltas = s.net_profiles();
    let baselines = scenario_baselines(s, &deltas);
    let costs: Vec<&[CostFunction]> = s.costs.iter().map(Vec::as_slice).collect();

    match method {
        Method::Direct => {
            let assembled = build_program(
                s.num_slots(),
                &deltas,
                &costs,
                &s.shared_ess,
                s.terminal_equals_initial,
                Variant::MaxAllocation {
                    betas: &s.coefficients.beta,
                    baselines: &baselines,
                },
            );
            let sol = expect_optimal("shared allocation (direct)", &assembled.lp, opts)?;
            let schedule = extract_schedule(&assembled.vars, &sol.primal)?;
            let audits = vec![SolverAudit::from_solution(
                "shared-direct".into(),
                &sol,
                &assembled.lp,
            )];
            finish_result(s, Mode::Shared, schedule, Some(sol.objective_value.max(0.0)), audits)
        }
        Method::Bisection => {
            let total_baseline: f64 = baselines.iter().sum();
            let assembled = build_program(
                s.num_slots(),
                &deltas,
                &costs,
                &s.shared_ess,
                s.terminal_equals_initial,
                Variant::FixedAllocation {
                    betas: &s.coefficients.beta,
                    baselines: &baselines,
                    t: 0.0,
                },
            );
            let mut engine = Simplex::new(&assembled.lp, opts.clone())?;
            let mut best_point: Option<Vec<f64>> = None;
            let mut probes = 0usize;
            let betas = &s.coefficients.beta;

            let t_star = {
                let probe = |t: f64| -> Result<bool, LpError> {
                    for (m, row) in assembled.allocation_rows.iter().enumerate() {
                        engine.set_rhs(*row, baselines[m] - betas[m] * t);
                    }
                    probes += 1;
                    match engine.refeasibilize()? {
                        Feasibility::Feasible(point) => {
                            best_point = Some(point);
                            Ok(true)
                        }
                        Feasibility::Infeasible => Ok(false),
                    }
                };
                // The closure interface of the bisection driver is pure
                // bool, so LP errors are stashed and rethrown.
                let mut failure: Option<LpError> = None;
                let mut probe = probe;
                let t = bisect_max(
                    |t| {
                        if failure.is_some() {
                            return false;
                        }
                        match probe(t) {
                            Ok(ok) => ok,
                            Err(e) => {
                                failure = Some(e);
                                false
                            }
                        }
                    },
                    0.0,
                    total_baseline,
                    BISECTION_TOL,
                )?;
                if let Some(e) = failure {
                    return Err(SolveError::Lp(e));
                }
                t
            };

            let point = best_point.expect("the lower bracket end is always probed");
            let schedule = extract_schedule(&assembled.vars, &point)?;
            // Residual re-measured against the final allocation rhs.
            let mut final_lp = assembled.lp.clone();
            for (m, row) in assembled.allocation_rows.iter().enumerate() {
                final_lp.constraints[*row].rhs = baselines[m] - betas[m] * t_star;
            }
            let audits = vec![SolverAudit {
                label: format!("shared-bisection ({probes} probes)"),
                kind: AuditKind::FeasibilityProbe,
                objective_value: t_star,
                max_primal_residual: final_lp.max_violation(&point),
                dual_gap_bound: 0.0,
                rhs_inf_norm: final_lp.rhs_inf_norm(),
            }];
            finish_result(s, Mode::Shared, schedule, Some(t_star), audits)
        }
    }
}

/// Maximizes the plain total profit of the shared unit, with no allocation
/// rows. Upper-bounds the allocation optimum and anchors the
/// shared-vs-distributed benchmark.
pub fn solve_shared_unconstrained(s: &Scenario) -> Result<ScheduleResult, SolveError> {
    solve_shared_unconstrained_opt(s, &SolverOptions::default())
}

pub fn solve_shared_unconstrained_opt(s: &Scenario, opts: &SolverOptions) -> Result<ScheduleResult, SolveError> {
    validated(s)?;
    let deltas = s.net_profiles();
    let costs: Vec<&[CostFunction]> = s.costs.iter().map(Vec::as_slice).collect();
    let assembled = build_program(
        s.num_slots(),
        &deltas,
        &costs,
        &s.shared_ess,
        s.terminal_equals_initial,
        Variant::MaxTotal,
    );
    let sol = expect_optimal("shared total (unconstrained)", &assembled.lp, opts)?;
    let schedule = extract_schedule(&assembled.vars, &sol.primal)?;
    let audits = vec![SolverAudit::from_solution(
        "shared-unconstrained".into(),
        &sol,
        &assembled.lp,
    )];
    finish_result(s, Mode::SharedUnconstrained, schedule, None, audits)
}

/// Solves one independent profit-maximization problem per user against that
/// user's own storage unit. Requires `distributed_ess`.
pub fn solve_distributed(s: &Scenario) -> Result<ScheduleResult, SolveError> {
    solve_distributed_opt(s, &SolverOptions::default())
}

pub fn solve_distributed_opt(s: &Scenario, opts: &SolverOptions) -> Result<ScheduleResult, SolveError> {
    validated(s)?;
    let specs = s.distributed_ess.as_ref().ok_or(SolveError::MissingDistributed)?;
    let deltas = s.net_profiles();

    let per_user: Vec<Result<(Vec<f64>, Vec<f64>, SolverAudit), SolveError>> = (0..s.num_users())
        .into_par_iter()
        .map(|m| {
            let user_delta = std::slice::from_ref(&deltas[m]);
            let user_costs: Vec<&[CostFunction]> = vec![s.costs[m].as_slice()];
            let assembled = build_program(
                s.num_slots(),
                user_delta,
                &user_costs,
                &specs[m],
                s.terminal_equals_initial,
                Variant::MaxTotal,
            );
            let sol = expect_optimal(&format!("distributed user {}", m + 1), &assembled.lp, opts)?;
            let schedule = extract_schedule(&assembled.vars, &sol.primal)?;
            let audit = SolverAudit::from_solution(format!("distributed-user-{}", m + 1), &sol, &assembled.lp);
            Ok((
                schedule.charge_row(0).to_vec(),
                schedule.discharge_row(0).to_vec(),
                audit,
            ))
        })
        .collect();

    let mut charge = Vec::with_capacity(s.num_users());
    let mut discharge = Vec::with_capacity(s.num_users());
    let mut audits = Vec::with_capacity(s.num_users());
    for item in per_user {
        let (c, d, audit) = item?;
        charge.push(c);
        discharge.push(d);
        audits.push(audit);
    }
    let schedule = Schedule::new(charge, discharge)?;
    finish_result(s, Mode::Distributed, schedule, None, audits)
}

/// Side-by-side comparison of the three modes on one scenario.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub shared: ScheduleResult,
    pub unconstrained: ScheduleResult,
    pub distributed: ScheduleResult,
    pub total_baseline: f64,
    pub shared_gain_pct: f64,
    pub unconstrained_gain_pct: f64,
    pub distributed_gain_pct: f64,
    /// Pooling check: the unconstrained shared total must be at least the
    /// distributed total (within [`DOMINANCE_TOL`]).
    pub dominance_ok: bool,
    pub dominance_margin: f64,
}

/// Slack allowed on the shared-vs-distributed dominance check ($).
pub const DOMINANCE_TOL: f64 = 1e-6;

/// Runs all three solves and reports totals, gains (percent of the total
/// no-storage baseline), and the dominance verdict. Refuses to run when the
/// capacity split is inconsistent or efficiencies differ across units, since
/// the pooling argument needs both.
pub fn compare(s: &Scenario) -> Result<CompareReport, SolveError> {
    compare_opt(s, &SolverOptions::default())
}

pub fn compare_opt(s: &Scenario, opts: &SolverOptions) -> Result<CompareReport, SolveError> {
    validated(s)?;
    let specs = s.distributed_ess.as_ref().ok_or(SolveError::MissingDistributed)?;
    let split = split_consistency(&s.shared_ess, specs);
    if !split.consistent {
        return Err(SolveError::SplitInconsistent(split));
    }
    let eff_tol = 1e-12;
    let uniform = specs.iter().all(|e| {
        (e.eff_charge - s.shared_ess.eff_charge).abs() <= eff_tol
            && (e.eff_discharge - s.shared_ess.eff_discharge).abs() <= eff_tol
    });
    if !uniform {
        return Err(SolveError::MixedEfficiencies);
    }

    let shared = solve_shared_opt(s, Method::Direct, opts)?;
    let unconstrained = solve_shared_unconstrained_opt(s, opts)?;
    let distributed = solve_distributed_opt(s, opts)?;

    let total_baseline = shared.profit_report.total_baseline();
    let margin = unconstrained.profit_report.total_profit - distributed.profit_report.total_profit;
    Ok(CompareReport {
        shared_gain_pct: shared.profit_report.gain_percent(),
        unconstrained_gain_pct: unconstrained.profit_report.gain_percent(),
        distributed_gain_pct: distributed.profit_report.gain_percent(),
        dominance_ok: margin >= -DOMINANCE_TOL,
        dominance_margin: margin,
        total_baseline,
        shared,
        unconstrained,
        distributed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{CostFunction, ProfitCoefficients, TimeGrid, UserProfile};

    fn two_user_transfer_scenario(lossless: bool) -> Scenario {
        // User 1 holds a surplus in slot 1, user 2 a deficit in slot 2.
        let ess = if lossless {
            EssSpec::lossless(0.0, 20.0, 20.0, 20.0)
        } else {
            EssSpec::new(0.0, 20.0, 20.0, 20.0, 0.7, 0.8)
        };
        Scenario {
            grid: TimeGrid::new(2),
            users: vec![
                UserProfile {
                    user_id: 1,
                    generation: vec![10.0, 0.0],
                    load: vec![0.0, 0.0],
                },
                UserProfile {
                    user_id: 2,
                    generation: vec![0.0, 0.0],
                    load: vec![0.0, 10.0],
                },
            ],
            shared_ess: ess,
            distributed_ess: Some(vec![
                {
                    let mut e = ess;
                    e.s_max = 10.0;
                    e.c_max = 10.0;
                    e.d_max = 10.0;
                    e
                },
                {
                    let mut e = ess;
                    e.s_max = 10.0;
                    e.c_max = 10.0;
                    e.d_max = 10.0;
                    e
                },
            ]),
            costs: vec![vec![CostFunction::linear(1.0); 2]; 2],
            coefficients: ProfitCoefficients::new(vec![0.0, 1.0]),
            terminal_equals_initial: false,
        }
    }

    #[test]
    fn assembled_program_has_pinned_dimensions() {
        let s = two_user_transfer_scenario(true);
        let lp = assemble_shared_program(&s).unwrap();
        // 1 + 4MN variables.
        assert_eq!(lp.num_vars(), 1 + 4 * 2 * 2);
        // 2N window rows + MN load rows + MN single-segment epigraph rows
        // + M allocation rows.
        assert_eq!(lp.num_constraints(), 4 + 4 + 4 + 2);
    }

    #[test]
    fn lossless_transfer_moves_full_surplus() {
        let s = two_user_transfer_scenario(true);
        let result = solve_shared(&s, Method::Direct).unwrap();
        assert!((result.t_star.unwrap() - 10.0).abs() < 1e-6, "{:?}", result.t_star);
        let bis = solve_shared(&s, Method::Bisection).unwrap();
        assert!((bis.t_star.unwrap() - 10.0).abs() < 1e-5);
    }

    #[test]
    fn lossy_transfer_caps_at_efficiency_product() {
        let s = two_user_transfer_scenario(false);
        let result = solve_shared(&s, Method::Direct).unwrap();
        assert!((result.t_star.unwrap() - 5.6).abs() < 1e-6, "{:?}", result.t_star);
    }

    #[test]
    fn unconstrained_total_meets_transfer_bound() {
        let s = two_user_transfer_scenario(false);
        let result = solve_shared_unconstrained(&s).unwrap();
        assert!((result.profit_report.total_profit - 5.6).abs() < 1e-6);
    }

    #[test]
    fn distributed_cannot_cross_transfer() {
        let s = two_user_transfer_scenario(true);
        let result = solve_distributed(&s).unwrap();
        assert!(result.profit_report.total_profit.abs() < 1e-9);
    }

    #[test]
    fn single_slot_yields_no_profit() {
        let mut s = two_user_transfer_scenario(true);
        s.grid = TimeGrid::new(1);
        s.users = vec![UserProfile {
            user_id: 1,
            generation: vec![5.0],
            load: vec![2.0],
        }];
        s.costs = vec![vec![CostFunction::linear(45.0)]];
        s.coefficients = ProfitCoefficients::new(vec![1.0]);
        s.distributed_ess = None;
        let result = solve_shared(&s, Method::Direct).unwrap();
        assert!(result.t_star.unwrap().abs() < 1e-9);
    }

    #[test]
    fn zero_rate_distributed_yields_zero_total() {
        let mut s = two_user_transfer_scenario(true);
        // Rates must stay positive; shrink them to a hair above zero.
        let specs = s.distributed_ess.as_mut().unwrap();
        for spec in specs.iter_mut() {
            spec.c_max = 1e-9;
            spec.d_max = 1e-9;
        }
        let result = solve_distributed(&s).unwrap();
        assert!(result.profit_report.total_profit.abs() < 1e-6);
    }

    #[test]
    fn relaxation_orders_objectives() {
        let s = two_user_transfer_scenario(false);
        let shared = solve_shared(&s, Method::Direct).unwrap();
        let unconstrained = solve_shared_unconstrained(&s).unwrap();
        assert!(
            unconstrained.profit_report.total_profit >= shared.t_star.unwrap() - 1e-9,
            "relaxation must dominate"
        );
    }

    #[test]
    fn compare_reports_dominance() {
        let s = two_user_transfer_scenario(false);
        let report = compare(&s).unwrap();
        assert!(report.dominance_ok);
        assert!(report.unconstrained_gain_pct >= report.distributed_gain_pct - 1e-9);
    }

    #[test]
    fn compare_refuses_inconsistent_split() {
        let mut s = two_user_transfer_scenario(false);
        s.distributed_ess.as_mut().unwrap()[0].s_max = 1.0;
        assert!(matches!(compare(&s), Err(SolveError::SplitInconsistent(_))));
    }

    #[test]
    fn allocation_constraint_holds_on_recomputed_profits() {
        let s = two_user_transfer_scenario(false);
        let result = solve_shared(&s, Method::Direct).unwrap();
        let t = result.t_star.unwrap();
        for (m, p) in result.profit_report.profits.iter().enumerate() {
            assert!(
                *p >= s.coefficients.beta[m] * t - 1e-6,
                "user {} profit {} below share {}",
                m + 1,
                p,
                s.coefficients.beta[m] * t
            );
        }
    }

    #[test]
    fn terminal_state_switch_forces_drainback() {
        let mut s = two_user_transfer_scenario(true);
        s.shared_ess.s_init = 0.0;
        s.terminal_equals_initial = true;
        let result = solve_shared(&s, Method::Direct).unwrap();
        match &result.trajectories {
            Trajectories::Shared(traj) => {
                let last = *traj.states.last().unwrap();
                assert!((last - s.shared_ess.s_init).abs() < 1e-6, "terminal state {last}");
            }
            _ => unreachable!(),
        }
    }
}
