//! Grid-purchase costs, the no-storage baseline, grid-draw recovery, and
//! user profits.
//!
//! Profit is always measured against the no-storage baseline: what the user
//! would have paid covering every deficit slot straight from the grid.

use crate::scenario::{CostFunction, NetEnergyProfile, Scenario};
use crate::storage::Schedule;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("grid draw {0} is negative")]
    NegativeDraw(f64),
    #[error("grid draw is not finite")]
    NonFiniteDraw,
}

/// Evaluates a piecewise-linear cost at draw `g >= 0`: the maximum of
/// `slope * g + intercept` over all segments.
pub fn eval_cost(f: &CostFunction, g: f64) -> Result<f64, CostError> {
    if !g.is_finite() {
        return Err(CostError::NonFiniteDraw);
    }
    if g < 0.0 {
        return Err(CostError::NegativeDraw(g));
    }
    Ok(f.segments
        .iter()
        .map(|s| s.slope * g + s.intercept)
        .fold(f64::NEG_INFINITY, f64::max))
}

fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

/// Cost of covering every deficit slot from the grid with no storage at all:
/// the sum over slots of `f_n(max(0, -net_n))`.
pub fn baseline_cost(user_costs: &[CostFunction], delta: &NetEnergyProfile) -> f64 {
    debug_assert_eq!(user_costs.len(), delta.net.len());
    user_costs
        .iter()
        .zip(&delta.net)
        .map(|(f, d)| eval_cost(f, positive_part(-d)).expect("positive part is nonnegative"))
        .sum()
}

/// The M x N grid-purchase matrix, entries >= 0 (kW).
#[derive(Debug, Clone, PartialEq)]
pub struct GridDrawSchedule {
    pub draw: Vec<Vec<f64>>,
}

/// The pointwise-minimal grid draw that satisfies every load:
/// `G = max(0, C - D - net)` per user per slot. Any other feasible draw is
/// at least this large elementwise, so with nondecreasing costs it can only
/// cost more.
pub fn recover_grid_draw(sched: &Schedule, deltas: &[NetEnergyProfile]) -> GridDrawSchedule {
    debug_assert_eq!(sched.num_users(), deltas.len());
    let draw = deltas
        .iter()
        .enumerate()
        .map(|(m, delta)| {
            sched
                .charge_row(m)
                .iter()
                .zip(sched.discharge_row(m))
                .zip(&delta.net)
                .map(|((c, d), net)| positive_part(c - d - net))
                .collect()
        })
        .collect();
    GridDrawSchedule { draw }
}

fn scheduled_cost(user_costs: &[CostFunction], delta: &NetEnergyProfile, c_row: &[f64], d_row: &[f64]) -> f64 {
    user_costs
        .iter()
        .zip(&delta.net)
        .zip(c_row.iter().zip(d_row))
        .map(|((f, net), (c, d))| {
            eval_cost(f, positive_part(c - d - net)).expect("positive part is nonnegative")
        })
        .sum()
}

/// One user's profit: baseline cost minus the cost of the minimal grid draw
/// under the given charge/discharge rows.
pub fn user_profit(user_costs: &[CostFunction], delta: &NetEnergyProfile, c_row: &[f64], d_row: &[f64]) -> f64 {
    baseline_cost(user_costs, delta) - scheduled_cost(user_costs, delta, c_row, d_row)
}

/// Per-user baseline costs, scheduled costs, and profits for a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfitReport {
    pub baseline_costs: Vec<f64>,
    pub scheduled_costs: Vec<f64>,
    pub profits: Vec<f64>,
    pub total_profit: f64,
}

impl ProfitReport {
    /// Recomputes everything from the schedule and scenario data alone;
    /// nothing is taken on trust from a solver.
    pub fn compute(scenario: &Scenario, sched: &Schedule) -> Self {
        let deltas = scenario.net_profiles();
        let mut baseline_costs = Vec::with_capacity(deltas.len());
        let mut scheduled_costs = Vec::with_capacity(deltas.len());
        let mut profits = Vec::with_capacity(deltas.len());
        for (m, delta) in deltas.iter().enumerate() {
            let base = baseline_cost(&scenario.costs[m], delta);
            let spent = scheduled_cost(&scenario.costs[m], delta, sched.charge_row(m), sched.discharge_row(m));
            baseline_costs.push(base);
            scheduled_costs.push(spent);
            profits.push(base - spent);
        }
        let total_profit = profits.iter().sum();
        Self {
            baseline_costs,
            scheduled_costs,
            profits,
            total_profit,
        }
    }

    pub fn total_baseline(&self) -> f64 {
        self.baseline_costs.iter().sum()
    }

    /// Profit gain as a percentage of the total no-storage baseline cost:
    /// `100 * total_profit / total_baseline`, or 0 when the baseline is 0.
    pub fn gain_percent(&self) -> f64 {
        let base = self.total_baseline();
        if base > 0.0 {
            100.0 * self.total_profit / base
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::CostFunction;

    fn delta(net: Vec<f64>) -> NetEnergyProfile {
        NetEnergyProfile { user_id: 1, net }
    }

    #[test]
    fn linear_price_evaluation() {
        let f = CostFunction::linear(45.0);
        assert_eq!(eval_cost(&f, 2.0).unwrap(), 90.0);
    }

    #[test]
    fn zero_draw_costs_max_intercept() {
        let f = CostFunction::from_segments([(1.0, 0.0), (2.0, -1.0)]);
        assert_eq!(eval_cost(&f, 0.0).unwrap(), 0.0);
        assert_eq!(eval_cost(&CostFunction::linear(45.0), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn envelope_crossover() {
        let f = CostFunction::from_segments([(1.0, 0.0), (2.0, -1.0)]);
        assert_eq!(eval_cost(&f, 0.5).unwrap(), 0.5);
        assert_eq!(eval_cost(&f, 2.0).unwrap(), 3.0);
    }

    #[test]
    fn negative_draw_is_an_error() {
        let f = CostFunction::linear(1.0);
        assert_eq!(eval_cost(&f, -0.5), Err(CostError::NegativeDraw(-0.5)));
    }

    #[test]
    fn baseline_charges_only_deficit_slots() {
        let costs = vec![CostFunction::linear(45.0); 2];
        assert_eq!(baseline_cost(&costs, &delta(vec![-2.0, 3.0])), 90.0);
    }

    #[test]
    fn baseline_zero_when_no_deficit() {
        let costs = vec![CostFunction::linear(45.0); 3];
        assert_eq!(baseline_cost(&costs, &delta(vec![0.0, 1.0, 2.5])), 0.0);
    }

    #[test]
    fn baseline_sums_constant_deficit() {
        let costs = vec![CostFunction::linear(45.0); 3];
        assert_eq!(baseline_cost(&costs, &delta(vec![-1.0, -1.0, -1.0])), 135.0);
    }

    #[test]
    fn grid_draw_recovery_cases() {
        let sched = Schedule::new(vec![vec![5.0, 0.0, 0.0]], vec![vec![0.0, 0.0, 2.0]]).unwrap();
        let out = recover_grid_draw(&sched, &[delta(vec![-3.0, 4.0, -5.0])]);
        assert_eq!(out.draw[0], vec![8.0, 0.0, 3.0]);
    }

    #[test]
    fn zero_schedule_profit_is_zero() {
        let costs = vec![CostFunction::linear(45.0); 4];
        let d = delta(vec![-1.0, 2.0, -3.5, 0.0]);
        let p = user_profit(&costs, &d, &[0.0; 4], &[0.0; 4]);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn full_cover_profit_equals_baseline() {
        let costs = vec![CostFunction::linear(1.0); 2];
        let d = delta(vec![10.0, -10.0]);
        let p = user_profit(&costs, &d, &[10.0, 0.0], &[0.0, 10.0]);
        assert_eq!(p, 10.0);
    }

    #[test]
    fn lossy_cap_limits_profit() {
        // Charging 10 stores 7; draining back to empty releases 5.6.
        let costs = vec![CostFunction::linear(1.0); 2];
        let d = delta(vec![10.0, -10.0]);
        let p = user_profit(&costs, &d, &[10.0, 0.0], &[0.0, 5.6]);
        assert!((p - 5.6).abs() < 1e-12);
    }
}
