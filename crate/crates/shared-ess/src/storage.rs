//! Storage state recursions and schedule feasibility checks.
//!
//! Simulation never clamps: an infeasible schedule produces an out-of-range
//! trajectory, and [`check_feasible`] reports where and by how much it left
//! the allowed window. This keeps the model arithmetic independent of the
//! solver, so optimizer output can be audited from first principles.

use crate::scenario::EssSpec;
use thiserror::Error;

/// Absolute tolerance (kW) for every feasibility comparison.
pub const FEAS_TOL_KW: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("charge matrix is {charge_users}x? but discharge matrix is {discharge_users}x?")]
    UserCountMismatch { charge_users: usize, discharge_users: usize },
    #[error("user {user} rows have {got} slots, expected {expected}")]
    RaggedRow { user: usize, got: usize, expected: usize },
    #[error("user {user} slot {slot} {which} is {value} (must be finite and >= 0)")]
    BadEntry { user: usize, slot: usize, which: &'static str, value: f64 },
}

/// Per-user charge and discharge matrices, M x N, in kW. Entries are
/// nonnegative and finite by construction; rate-limit compliance is checked
/// separately by [`check_feasible`].
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    charge: Vec<Vec<f64>>,
    discharge: Vec<Vec<f64>>,
}

impl Schedule {
    pub fn new(charge: Vec<Vec<f64>>, discharge: Vec<Vec<f64>>) -> Result<Self, ScheduleError> {
        if charge.len() != discharge.len() {
            return Err(ScheduleError::UserCountMismatch {
                charge_users: charge.len(),
                discharge_users: discharge.len(),
            });
        }
        let n = charge.first().map_or(0, Vec::len);
        for (m, (c_row, d_row)) in charge.iter().zip(&discharge).enumerate() {
            for (row, which) in [(c_row, "charge"), (d_row, "discharge")] {
                if row.len() != n {
                    return Err(ScheduleError::RaggedRow {
                        user: m + 1,
                        got: row.len(),
                        expected: n,
                    });
                }
                for (i, v) in row.iter().enumerate() {
                    if !v.is_finite() || *v < 0.0 {
                        return Err(ScheduleError::BadEntry {
                            user: m + 1,
                            slot: i + 1,
                            which,
                            value: *v,
                        });
                    }
                }
            }
        }
        Ok(Self { charge, discharge })
    }

    /// All-zero schedule for M users over N slots.
    pub fn zeros(num_users: usize, num_slots: usize) -> Self {
        Self {
            charge: vec![vec![0.0; num_slots]; num_users],
            discharge: vec![vec![0.0; num_slots]; num_users],
        }
    }

    pub fn num_users(&self) -> usize {
        self.charge.len()
    }

    pub fn num_slots(&self) -> usize {
        self.charge.first().map_or(0, Vec::len)
    }

    pub fn charge(&self) -> &[Vec<f64>] {
        &self.charge
    }

    pub fn discharge(&self) -> &[Vec<f64>] {
        &self.discharge
    }

    pub fn charge_row(&self, user: usize) -> &[f64] {
        &self.charge[user]
    }

    pub fn discharge_row(&self, user: usize) -> &[f64] {
        &self.discharge[user]
    }
}

/// Storage states over the horizon: `states[n-1]` is the energy available at
/// the beginning of slot n, for n = 1..=N+1. Length is always N+1; the last
/// entry is the post-horizon state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub states: Vec<f64>,
}

impl StateTrajectory {
    pub fn num_slots(&self) -> usize {
        self.states.len().saturating_sub(1)
    }
}

/// Runs the shared-storage recursion: each step adds `eff_charge * sum(C)`
/// and removes `sum(D) / eff_discharge`. No clamping.
pub fn simulate_shared_state(spec: &EssSpec, sched: &Schedule) -> StateTrajectory {
    let n = sched.num_slots();
    let mut states = Vec::with_capacity(n + 1);
    let mut s = spec.s_init;
    states.push(s);
    for slot in 0..n {
        let total_charge: f64 = sched.charge.iter().map(|row| row[slot]).sum();
        let total_discharge: f64 = sched.discharge.iter().map(|row| row[slot]).sum();
        s += spec.eff_charge * total_charge - total_discharge / spec.eff_discharge;
        states.push(s);
    }
    StateTrajectory { states }
}

#[derive(Debug, Error, PartialEq)]
#[error("charge row has {charge_len} slots but discharge row has {discharge_len}")]
pub struct RowLengthMismatch {
    pub charge_len: usize,
    pub discharge_len: usize,
}

/// Single-user recursion for one distributed unit; identical dynamics with
/// the user's own efficiencies.
pub fn simulate_distributed_state(
    spec: &EssSpec,
    charge_row: &[f64],
    discharge_row: &[f64],
) -> Result<StateTrajectory, RowLengthMismatch> {
    if charge_row.len() != discharge_row.len() {
        return Err(RowLengthMismatch {
            charge_len: charge_row.len(),
            discharge_len: discharge_row.len(),
        });
    }
    let mut states = Vec::with_capacity(charge_row.len() + 1);
    let mut s = spec.s_init;
    states.push(s);
    for (c, d) in charge_row.iter().zip(discharge_row) {
        s += spec.eff_charge * c - d / spec.eff_discharge;
        states.push(s);
    }
    Ok(StateTrajectory { states })
}

/// Which storage layout a schedule is checked against.
#[derive(Debug, Clone, Copy)]
pub enum EssLayout<'a> {
    Shared(&'a EssSpec),
    Distributed(&'a [EssSpec]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    StateBelowMin,
    StateAboveMax,
    ChargeRateExceeded,
    DischargeRateExceeded,
    LayoutMismatch,
}

/// One feasibility violation: where it happened and by how much (kW).
#[derive(Debug, Clone)]
pub struct FeasibilityViolation {
    pub kind: ViolationKind,
    /// 1-based user index; `None` for shared-state violations.
    pub user: Option<usize>,
    /// 1-based slot index. For state violations this is the slot at whose
    /// beginning the state is out of range (1..=N+1).
    pub slot: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FeasibilityReport {
    pub violations: Vec<FeasibilityViolation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "feasible");
        }
        for v in &self.violations {
            match v.user {
                Some(u) => writeln!(f, "{:?} user {} slot {} by {:.3e} kW", v.kind, u, v.slot, v.magnitude)?,
                None => writeln!(f, "{:?} slot {} by {:.3e} kW", v.kind, v.slot, v.magnitude)?,
            }
        }
        Ok(())
    }
}

fn check_states(report: &mut FeasibilityReport, spec: &EssSpec, traj: &StateTrajectory, user: Option<usize>) {
    for (i, s) in traj.states.iter().enumerate() {
        if *s < spec.s_min - FEAS_TOL_KW {
            report.violations.push(FeasibilityViolation {
                kind: ViolationKind::StateBelowMin,
                user,
                slot: i + 1,
                magnitude: spec.s_min - s,
            });
        }
        if *s > spec.s_max + FEAS_TOL_KW {
            report.violations.push(FeasibilityViolation {
                kind: ViolationKind::StateAboveMax,
                user,
                slot: i + 1,
                magnitude: s - spec.s_max,
            });
        }
    }
}

fn check_rates(report: &mut FeasibilityReport, spec: &EssSpec, sched: &Schedule, user: usize) {
    for (i, c) in sched.charge[user].iter().enumerate() {
        if *c > spec.c_max + FEAS_TOL_KW {
            report.violations.push(FeasibilityViolation {
                kind: ViolationKind::ChargeRateExceeded,
                user: Some(user + 1),
                slot: i + 1,
                magnitude: c - spec.c_max,
            });
        }
    }
    for (i, d) in sched.discharge[user].iter().enumerate() {
        if *d > spec.d_max + FEAS_TOL_KW {
            report.violations.push(FeasibilityViolation {
                kind: ViolationKind::DischargeRateExceeded,
                user: Some(user + 1),
                slot: i + 1,
                magnitude: d - spec.d_max,
            });
        }
    }
}

/// Audits a schedule against storage bounds: state window over all N+1
/// states (including the post-horizon state) and per-user rate limits, each
/// compared at [`FEAS_TOL_KW`] absolute tolerance. Reports every violation;
/// an empty report means feasible.
pub fn check_feasible(layout: EssLayout<'_>, sched: &Schedule) -> FeasibilityReport {
    let mut report = FeasibilityReport::default();
    match layout {
        EssLayout::Shared(spec) => {
            let traj = simulate_shared_state(spec, sched);
            check_states(&mut report, spec, &traj, None);
            for m in 0..sched.num_users() {
                check_rates(&mut report, spec, sched, m);
            }
        }
        EssLayout::Distributed(specs) => {
            if specs.len() != sched.num_users() {
                report.violations.push(FeasibilityViolation {
                    kind: ViolationKind::LayoutMismatch,
                    user: None,
                    slot: 0,
                    magnitude: specs.len() as f64 - sched.num_users() as f64,
                });
                return report;
            }
            for (m, spec) in specs.iter().enumerate() {
                let traj = simulate_distributed_state(spec, &sched.charge[m], &sched.discharge[m])
                    .expect("schedule rows have equal length by construction");
                check_states(&mut report, spec, &traj, Some(m + 1));
                check_rates(&mut report, spec, sched, m);
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lossy_spec() -> EssSpec {
        EssSpec::new(0.0, 100.0, 50.0, 50.0, 0.7, 0.8)
    }

    #[test]
    fn one_step_with_lossy_efficiencies() {
        let spec = lossy_spec();
        let sched = Schedule::new(vec![vec![4.0], vec![6.0]], vec![vec![0.0], vec![0.0]]).unwrap();
        let traj = simulate_shared_state(&spec, &sched);
        assert_eq!(traj.states, vec![0.0, 7.0]);
    }

    #[test]
    fn zero_schedule_holds_initial_state() {
        let spec = lossy_spec().with_initial_state(42.0);
        let sched = Schedule::zeros(3, 5);
        let traj = simulate_shared_state(&spec, &sched);
        assert_eq!(traj.states, vec![42.0; 6]);
    }

    #[test]
    fn discharge_drains_with_efficiency_division() {
        let spec = lossy_spec().with_initial_state(7.0);
        let sched = Schedule::new(vec![vec![0.0]], vec![vec![5.6]]).unwrap();
        let traj = simulate_shared_state(&spec, &sched);
        assert!((traj.states[1] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn distributed_matches_shared_at_single_user() {
        let spec = lossy_spec();
        let c = vec![3.0, 0.0, 1.0];
        let d = vec![0.0, 1.6, 0.0];
        let traj_d = simulate_distributed_state(&spec, &c, &d).unwrap();
        let sched = Schedule::new(vec![c], vec![d]).unwrap();
        let traj_s = simulate_shared_state(&spec, &sched);
        assert_eq!(traj_d, traj_s);
    }

    #[test]
    fn lossless_round_trip_returns_to_start() {
        let spec = EssSpec::lossless(0.0, 10.0, 5.0, 5.0);
        let traj = simulate_distributed_state(&spec, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(traj.states, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn half_efficiencies_cancel() {
        let mut spec = EssSpec::new(0.0, 10.0, 5.0, 5.0, 0.5, 0.5);
        spec.s_init = 0.0;
        let traj = simulate_distributed_state(&spec, &[2.0, 0.0], &[0.0, 0.5]).unwrap();
        assert_eq!(traj.states, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_schedule_in_bounds_is_feasible() {
        let spec = lossy_spec().with_initial_state(10.0);
        let report = check_feasible(EssLayout::Shared(&spec), &Schedule::zeros(2, 4));
        assert!(report.is_feasible());
    }

    #[test]
    fn overcharge_reports_state_violation_with_magnitude() {
        let spec = EssSpec::new(0.0, 5.0, 50.0, 50.0, 0.7, 0.8);
        let sched = Schedule::new(vec![vec![10.0]], vec![vec![0.0]]).unwrap();
        let report = check_feasible(EssLayout::Shared(&spec), &sched);
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.kind, ViolationKind::StateAboveMax);
        assert_eq!(v.slot, 2);
        assert!((v.magnitude - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rate_violation_names_user_and_slot() {
        let spec = EssSpec::new(0.0, 1000.0, 50.0, 50.0, 0.7, 0.8);
        let sched = Schedule::new(
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![vec![0.0, 0.0], vec![0.0, 51.0]],
        )
        .unwrap();
        let spec_start = spec.with_initial_state(1000.0);
        let report = check_feasible(EssLayout::Shared(&spec_start), &sched);
        let rate = report
            .violations
            .iter()
            .find(|v| v.kind == ViolationKind::DischargeRateExceeded)
            .unwrap();
        assert_eq!(rate.user, Some(2));
        assert_eq!(rate.slot, 2);
        assert!((rate.magnitude - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_schedule_entries_rejected_at_construction() {
        let err = Schedule::new(vec![vec![-0.1]], vec![vec![0.0]]).unwrap_err();
        assert!(matches!(err, ScheduleError::BadEntry { which: "charge", .. }));
    }
}
