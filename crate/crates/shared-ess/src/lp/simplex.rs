//! Dense bounded-variable simplex.
//!
//! Every constraint row gets a slack variable (`a.x + s = b` with the slack
//! boxed by the row relation), so the all-slack basis is always available and
//! no artificial variables are needed:
//!
//! * phase 1 runs the dual simplex under a zero objective, where any basis is
//!   dual-feasible, until the basis is primal-feasible or a row certifies
//!   infeasibility;
//! * phase 2 runs the primal simplex with the real objective from that basis.
//!
//! Pricing is Dantzig (steepest reduced cost / largest violation) with a
//! permanent switch to Bland's smallest-index rule once a phase exceeds
//! `stall_factor * (rows + cols)` pivots, which guarantees termination under
//! degeneracy. All selection rules break ties deterministically, so identical
//! inputs replay identical pivot sequences.
//!
//! Terminal claims are verified against the original data, never the drifted
//! tableau: optimality re-checks residuals and reduced-cost signs,
//! infeasibility re-derives the blocking row's aggregated bound, and
//! unboundedness re-checks the improving ray. A claim that fails verification
//! surfaces as [`LpError::Numerical`], never as a silent wrong answer.

use super::program::{Feasibility, LinearProgram, LpError, LpSolution, LpStatus, Relation};

/// Numerical knobs for the solver. Defaults match the documented tolerances;
/// [`SolverOptions::from_env`] lets batch runs override them.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Smallest coefficient magnitude admitted as a pivot.
    pub pivot_tol: f64,
    /// Primal feasibility tolerance, scaled by `1 + max |rhs|`.
    pub feas_tol: f64,
    /// Reduced-cost optimality tolerance, scaled by `1 + max |objective|`.
    pub dual_tol: f64,
    /// Bland's rule kicks in after `stall_factor * (rows + cols)` pivots in
    /// one phase.
    pub stall_factor: usize,
    /// Hard per-phase pivot cap is `iter_factor * (rows + cols) + 1000`.
    pub iter_factor: usize,
    /// Reduced costs and basic values are recomputed every this many pivots.
    pub refresh_every: usize,
    /// Record the (entering, leaving) pivot sequence in the solution.
    pub record_pivots: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-10,
            feas_tol: 1e-8,
            dual_tol: 1e-9,
            stall_factor: 5,
            iter_factor: 200,
            refresh_every: 128,
            record_pivots: false,
        }
    }
}

impl SolverOptions {
    /// Defaults overridden by `SESS_PIVOT_TOL`, `SESS_FEAS_TOL`, and
    /// `SESS_DUAL_TOL` when those are set to valid positive numbers.
    pub fn from_env() -> Self {
        let mut opts = Self::default();
        let read = |name: &str| {
            std::env::var(name)
                .ok()
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| *v > 0.0 && v.is_finite())
        };
        if let Some(v) = read("SESS_PIVOT_TOL") {
            opts.pivot_tol = v;
        }
        if let Some(v) = read("SESS_FEAS_TOL") {
            opts.feas_tol = v;
        }
        if let Some(v) = read("SESS_DUAL_TOL") {
            opts.dual_tol = v;
        }
        opts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at 0.
    Free,
}

#[derive(Debug, Clone, Copy)]
enum DualOutcome {
    Feasible,
    Infeasible { row: usize },
}

#[derive(Debug, Clone, Copy)]
enum PrimalOutcome {
    Optimal,
    Unbounded { col: usize, sigma: f64 },
}

/// A solver instance: one program plus the mutable solve state. Stateful
/// during a solve; separate instances are independent. The right-hand side
/// can be edited between solves ([`Simplex::set_rhs`]), which re-solves
/// warm from the current basis.
pub struct Simplex<'a> {
    lp: &'a LinearProgram,
    n: usize,
    m: usize,
    ntot: usize,
    width: usize,
    tab: Vec<f64>,
    scratch: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    vstat: Vec<VarState>,
    xval: Vec<f64>,
    dj: Vec<f64>,
    rhs: Vec<f64>,
    phase2: bool,
    opts: SolverOptions,
    pivots: usize,
    phase_pivots: usize,
    bland: bool,
    pivot_log: Vec<(usize, usize)>,
}

impl<'a> Simplex<'a> {
    pub fn new(lp: &'a LinearProgram, opts: SolverOptions) -> Result<Self, LpError> {
        lp.validate()?;
        let n = lp.num_vars();
        let m = lp.num_constraints();
        let ntot = n + m;
        let width = ntot + 1;

        let mut lb = vec![0.0; ntot];
        let mut ub = vec![0.0; ntot];
        let mut cost = vec![0.0; ntot];
        for j in 0..n {
            lb[j] = lp.bounds[j].0;
            ub[j] = lp.bounds[j].1;
            cost[j] = lp.objective[j];
        }
        for (i, row) in lp.constraints.iter().enumerate() {
            let (lo, hi) = match row.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Eq => (0.0, 0.0),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
            };
            lb[n + i] = lo;
            ub[n + i] = hi;
        }

        let mut tab = vec![0.0; m * width];
        let mut rhs = Vec::with_capacity(m);
        for (i, row) in lp.constraints.iter().enumerate() {
            let t = &mut tab[i * width..(i + 1) * width];
            t[..n].copy_from_slice(&row.coeffs);
            t[n + i] = 1.0;
            t[ntot] = row.rhs;
            rhs.push(row.rhs);
        }

        let mut vstat = vec![VarState::Free; ntot];
        let mut xval = vec![0.0; ntot];
        for j in 0..n {
            if lb[j].is_finite() {
                vstat[j] = VarState::AtLower;
                xval[j] = lb[j];
            } else if ub[j].is_finite() {
                vstat[j] = VarState::AtUpper;
                xval[j] = ub[j];
            } else {
                vstat[j] = VarState::Free;
                xval[j] = 0.0;
            }
        }
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            basis.push(n + i);
            vstat[n + i] = VarState::Basic(i);
        }
        // Slack values consistent with the nonbasic assignment.
        for i in 0..m {
            let row = &tab[i * width..i * width + n];
            let dot: f64 = row.iter().zip(&xval[..n]).map(|(a, v)| a * v).sum();
            xval[n + i] = rhs[i] - dot;
        }

        Ok(Self {
            lp,
            n,
            m,
            ntot,
            width,
            tab,
            scratch: vec![0.0; width],
            lb,
            ub,
            cost,
            basis,
            vstat,
            xval,
            dj: vec![0.0; ntot],
            rhs,
            phase2: false,
            opts,
            pivots: 0,
            phase_pivots: 0,
            bland: false,
            pivot_log: Vec::new(),
        })
    }

    pub fn pivot_count(&self) -> usize {
        self.pivots
    }

    /// Edits one right-hand side and shifts the factorized state to match.
    /// The basis is kept; call [`Simplex::refeasibilize`] afterwards.
    pub fn set_rhs(&mut self, row: usize, value: f64) {
        let delta = value - self.rhs[row];
        if delta == 0.0 {
            return;
        }
        self.rhs[row] = value;
        let col = self.n + row;
        for i in 0..self.m {
            let f = self.tab[i * self.width + col];
            if f != 0.0 {
                self.tab[i * self.width + self.ntot] += delta * f;
                self.xval[self.basis[i]] += delta * f;
            }
        }
    }

    fn tab_row(&self, i: usize) -> &[f64] {
        &self.tab[i * self.width..(i + 1) * self.width]
    }

    fn feas_scale(&self) -> f64 {
        1.0 + self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }

    fn cost_scale(&self) -> f64 {
        1.0 + self.cost.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lb[j] == self.ub[j]
    }

    /// Violation of constraint rows (against the current rhs) and variable
    /// bounds at the structural point `x`.
    fn max_violation_current(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.lp.constraints.iter().enumerate() {
            let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let viol = match row.relation {
                Relation::Le => lhs - self.rhs[i],
                Relation::Ge => self.rhs[i] - lhs,
                Relation::Eq => (lhs - self.rhs[i]).abs(),
            };
            worst = worst.max(viol);
        }
        for j in 0..self.n {
            worst = worst.max(self.lb[j] - x[j]).max(x[j] - self.ub[j]);
        }
        worst.max(0.0)
    }

    fn refresh_dj(&mut self) {
        if !self.phase2 {
            self.dj.iter_mut().for_each(|d| *d = 0.0);
            return;
        }
        self.dj.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.tab[i * self.width..i * self.width + self.ntot];
                for (d, t) in self.dj.iter_mut().zip(row) {
                    *d -= cb * *t;
                }
            }
        }
        for i in 0..self.m {
            self.dj[self.basis[i]] = 0.0;
        }
    }

    fn refresh_xval(&mut self) {
        let nz: Vec<(usize, f64)> = (0..self.ntot)
            .filter(|j| !matches!(self.vstat[*j], VarState::Basic(_)))
            .map(|j| (j, self.xval[j]))
            .filter(|(_, v)| *v != 0.0)
            .collect();
        for i in 0..self.m {
            let row = self.tab_row(i);
            let mut v = row[self.ntot];
            for (j, xj) in &nz {
                v -= row[*j] * xj;
            }
            self.xval[self.basis[i]] = v;
        }
    }

    fn refresh(&mut self) {
        self.refresh_dj();
        self.refresh_xval();
    }

    /// Shared pivot bookkeeping. `step` is the signed movement of the
    /// entering variable `q`; the leaving variable snaps to `target`.
    fn apply_pivot(&mut self, r: usize, q: usize, step: f64, leaving_to: VarState, target: f64) {
        let leave = self.basis[r];
        let width = self.width;

        // Basic values move along the entering column (pre-elimination).
        if step != 0.0 {
            for i in 0..self.m {
                if i != r {
                    let w = self.tab[i * width + q];
                    if w != 0.0 {
                        self.xval[self.basis[i]] -= step * w;
                    }
                }
            }
        }
        self.xval[q] += step;
        self.xval[leave] = target;

        // Reduced costs: one dual step along the pivot row.
        let piv = self.tab[r * width + q];
        if self.phase2 {
            let t = self.dj[q] / piv;
            if t != 0.0 {
                let row = &self.tab[r * width..r * width + self.ntot];
                for (d, w) in self.dj.iter_mut().zip(row) {
                    *d -= t * *w;
                }
            }
            self.dj[q] = 0.0;
        }

        // Eliminate the entering column from every other row.
        self.scratch.copy_from_slice(&self.tab[r * width..(r + 1) * width]);
        let inv = 1.0 / piv;
        self.scratch.iter_mut().for_each(|v| *v *= inv);
        self.scratch[q] = 1.0;
        self.tab[r * width..(r + 1) * width].copy_from_slice(&self.scratch);
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * width + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.tab[i * width..(i + 1) * width];
            for (a, b) in row.iter_mut().zip(&self.scratch) {
                *a -= f * *b;
            }
            row[q] = 0.0;
        }

        self.basis[r] = q;
        self.vstat[q] = VarState::Basic(r);
        self.vstat[leave] = leaving_to;

        self.pivots += 1;
        self.phase_pivots += 1;
        if self.opts.record_pivots {
            self.pivot_log.push((q, leave));
        }
        if self.phase_pivots % self.opts.refresh_every == 0 {
            self.refresh();
        }
    }

    fn phase_limits(&self) -> (usize, usize) {
        let dim = self.m + self.ntot;
        (self.opts.stall_factor * dim, self.opts.iter_factor * dim + 1000)
    }

    /// Dual simplex until the basis is primal-feasible or some row proves
    /// the program infeasible. Requires dual feasibility on entry, which is
    /// trivial in phase 1 (zero objective) and holds after a primal-optimal
    /// phase 2.
    fn dual_phase(&mut self) -> Result<DualOutcome, LpError> {
        self.phase_pivots = 0;
        self.bland = false;
        let (stall, cap) = self.phase_limits();
        let tol_x = 0.5 * self.opts.feas_tol * self.feas_scale();
        let pivot_tol = self.opts.pivot_tol;

        loop {
            if self.phase_pivots >= cap {
                return Err(LpError::IterationLimit { pivots: self.pivots });
            }
            if self.phase_pivots >= stall {
                self.bland = true;
            }

            // Leaving row: a basic variable outside its bounds.
            let mut pick: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let b = self.basis[i];
                let v = self.xval[b];
                let viol = (self.lb[b] - v).max(v - self.ub[b]);
                if viol > tol_x {
                    let better = match pick {
                        None => true,
                        Some((pi, pv)) => {
                            if self.bland {
                                b < self.basis[pi]
                            } else {
                                viol > pv
                            }
                        }
                    };
                    if better {
                        pick = Some((i, viol));
                    }
                }
            }
            let Some((r, _)) = pick else {
                return Ok(DualOutcome::Feasible);
            };
            let leave = self.basis[r];
            let below = self.xval[leave] < self.lb[leave];

            // Entering column: sign-compatible, minimal dual ratio.
            let row = &self.tab[r * self.width..r * self.width + self.ntot];
            let mut entering: Option<(usize, f64, f64)> = None; // (col, |ratio|, |w|)
            for j in 0..self.ntot {
                if matches!(self.vstat[j], VarState::Basic(_)) || self.is_fixed(j) {
                    continue;
                }
                let w = row[j];
                if w.abs() <= pivot_tol {
                    continue;
                }
                let dir_ok = match self.vstat[j] {
                    VarState::AtLower => {
                        if below {
                            w < 0.0
                        } else {
                            w > 0.0
                        }
                    }
                    VarState::AtUpper => {
                        if below {
                            w > 0.0
                        } else {
                            w < 0.0
                        }
                    }
                    VarState::Free => true,
                    VarState::Basic(_) => unreachable!(),
                };
                if !dir_ok {
                    continue;
                }
                let ratio = (self.dj[j] / w).abs();
                let better = match entering {
                    None => true,
                    Some((ej, er, ew)) => {
                        let tie = 1e-9 * (1.0 + er);
                        if ratio < er - tie {
                            true
                        } else if ratio <= er + tie {
                            if self.bland {
                                j < ej
                            } else {
                                w.abs() > ew
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    entering = Some((j, ratio, w.abs()));
                }
            }
            let Some((q, _, _)) = entering else {
                return Ok(DualOutcome::Infeasible { row: r });
            };

            let w_q = row[q];
            let target = if below { self.lb[leave] } else { self.ub[leave] };
            let step = -(target - self.xval[leave]) / w_q;
            let leaving_to = if below { VarState::AtLower } else { VarState::AtUpper };
            self.apply_pivot(r, q, step, leaving_to, target);
        }
    }

    /// Primal simplex from a primal-feasible basis to optimality or an
    /// unbounded ray.
    fn primal_phase(&mut self) -> Result<PrimalOutcome, LpError> {
        self.phase_pivots = 0;
        self.bland = false;
        let (stall, cap) = self.phase_limits();
        let tol_d = self.opts.dual_tol * self.cost_scale();
        let pivot_tol = self.opts.pivot_tol;

        loop {
            if self.phase_pivots >= cap {
                return Err(LpError::IterationLimit { pivots: self.pivots });
            }
            if self.phase_pivots >= stall {
                self.bland = true;
            }

            // Pricing.
            let mut pick: Option<(usize, f64)> = None;
            for j in 0..self.ntot {
                let score = match self.vstat[j] {
                    VarState::Basic(_) => continue,
                    VarState::AtLower => self.dj[j],
                    VarState::AtUpper => -self.dj[j],
                    VarState::Free => self.dj[j].abs(),
                };
                if self.is_fixed(j) || score <= tol_d {
                    continue;
                }
                match pick {
                    None => pick = Some((j, score)),
                    Some((_, ps)) if !self.bland && score > ps => pick = Some((j, score)),
                    _ => {}
                }
                if self.bland {
                    break; // smallest index already found
                }
            }
            let Some((q, _)) = pick else {
                return Ok(PrimalOutcome::Optimal);
            };
            let sigma = match self.vstat[q] {
                VarState::AtLower => 1.0,
                VarState::AtUpper => -1.0,
                VarState::Free => {
                    if self.dj[q] > 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                VarState::Basic(_) => unreachable!(),
            };

            // Ratio test: the entering variable's own span competes with
            // every basic variable's distance to the bound it approaches.
            let own_limit = if self.lb[q].is_finite() && self.ub[q].is_finite() {
                self.ub[q] - self.lb[q]
            } else {
                f64::INFINITY
            };
            let mut best = own_limit;
            let mut block: Option<(usize, bool, f64)> = None; // (row, hits_lower, |w|)
            for i in 0..self.m {
                let w = self.tab[i * self.width + q];
                if w.abs() <= pivot_tol {
                    continue;
                }
                let b = self.basis[i];
                let v = self.xval[b];
                let rate = -sigma * w;
                let (allowed, hits_lower) = if rate < 0.0 {
                    if self.lb[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    (((v - self.lb[b]) / -rate).max(0.0), true)
                } else {
                    if self.ub[b] == f64::INFINITY {
                        continue;
                    }
                    (((self.ub[b] - v) / rate).max(0.0), false)
                };
                let tie = 1e-9 * (1.0 + best.min(allowed));
                let better = if allowed < best - tie {
                    true
                } else if allowed <= best + tie {
                    match block {
                        None => false, // prefer the cheap bound flip on a tie
                        Some((bi, _, bw)) => {
                            if self.bland {
                                self.basis[i] < self.basis[bi]
                            } else {
                                w.abs() > bw
                            }
                        }
                    }
                } else {
                    false
                };
                if better {
                    best = allowed.min(best);
                    block = Some((i, hits_lower, w.abs()));
                }
            }

            if best.is_infinite() {
                return Ok(PrimalOutcome::Unbounded { col: q, sigma });
            }

            match block {
                None => {
                    // Bound flip: the entering variable crosses its box.
                    let step = sigma * own_limit;
                    for i in 0..self.m {
                        let w = self.tab[i * self.width + q];
                        if w != 0.0 {
                            self.xval[self.basis[i]] -= step * w;
                        }
                    }
                    self.xval[q] = if sigma > 0.0 { self.ub[q] } else { self.lb[q] };
                    self.vstat[q] = if sigma > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                    self.phase_pivots += 1;
                }
                Some((r, hits_lower, _)) => {
                    let leave = self.basis[r];
                    let target = if hits_lower { self.lb[leave] } else { self.ub[leave] };
                    let leaving_to = if hits_lower { VarState::AtLower } else { VarState::AtUpper };
                    self.apply_pivot(r, q, sigma * best, leaving_to, target);
                }
            }
        }
    }

    fn internal_primal_ok(&self) -> bool {
        let tol = self.opts.feas_tol * self.feas_scale();
        (0..self.m).all(|i| {
            let b = self.basis[i];
            let v = self.xval[b];
            v >= self.lb[b] - tol && v <= self.ub[b] + tol
        })
    }

    fn internal_dual_ok(&self) -> bool {
        let tol = self.opts.dual_tol * self.cost_scale();
        (0..self.ntot).all(|j| match self.vstat[j] {
            VarState::Basic(_) => true,
            VarState::AtLower => self.is_fixed(j) || self.dj[j] <= tol,
            VarState::AtUpper => self.is_fixed(j) || self.dj[j] >= -tol,
            VarState::Free => self.dj[j].abs() <= tol,
        })
    }

    /// Verifies a claimed infeasibility against the original data: the
    /// blocking row aggregates (through the basis inverse) to a bound on the
    /// leaving variable that contradicts its box.
    fn certify_infeasible(&self, r: usize) -> Result<(), LpError> {
        let leave = self.basis[r];
        let below = self.xval[leave] < self.lb[leave];
        let y: Vec<f64> = (0..self.m).map(|i| self.tab_row(r)[self.n + i]).collect();
        let y_scale = 1.0 + y.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let eps = 1e-9 * y_scale;

        // Aggregated coefficients from the original rows.
        let mut coef = vec![0.0; self.ntot];
        for (i, row) in self.lp.constraints.iter().enumerate() {
            if y[i] != 0.0 {
                for (c, a) in coef.iter_mut().zip(&row.coeffs) {
                    *c += y[i] * a;
                }
            }
        }
        for i in 0..self.m {
            coef[self.n + i] = y[i];
        }
        let agg_rhs: f64 = y.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();

        // Extreme achievable value of the leaving variable over the box.
        let mut extreme = agg_rhs;
        for k in 0..self.ntot {
            if k == leave {
                continue;
            }
            let c = coef[k];
            if c.abs() <= eps {
                continue;
            }
            // below: subtract min(c * x_k); above: subtract max(c * x_k).
            let endpoint = if below == (c > 0.0) { self.lb[k] } else { self.ub[k] };
            if !endpoint.is_finite() {
                return Err(LpError::Numerical(
                    "infeasibility certificate touches an unbounded variable".into(),
                ));
            }
            extreme -= c * endpoint;
        }
        let margin = 0.1 * self.opts.feas_tol * self.feas_scale();
        let proven = if below {
            extreme < self.lb[leave] - margin
        } else {
            extreme > self.ub[leave] + margin
        };
        if proven {
            Ok(())
        } else {
            Err(LpError::Numerical(format!(
                "infeasibility certificate failed on row {r}: extreme {extreme} vs [{}, {}]",
                self.lb[leave], self.ub[leave]
            )))
        }
    }

    /// Verifies a claimed unbounded ray against the original data.
    fn certify_unbounded(&self, q: usize, sigma: f64) -> Result<(), LpError> {
        let mut ray = vec![0.0; self.ntot];
        ray[q] = sigma;
        for i in 0..self.m {
            ray[self.basis[i]] = -sigma * self.tab_row(i)[q];
        }
        let scale = 1.0 + ray.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let eps = 1e-7 * scale;

        let gain: f64 = (0..self.ntot).map(|j| self.cost[j] * ray[j]).sum();
        if gain <= 0.0 {
            return Err(LpError::Numerical("unbounded ray does not improve the objective".into()));
        }
        for (j, z) in ray.iter().enumerate() {
            if *z > eps && self.ub[j].is_finite() {
                return Err(LpError::Numerical("unbounded ray blocked by an upper bound".into()));
            }
            if *z < -eps && self.lb[j].is_finite() {
                return Err(LpError::Numerical("unbounded ray blocked by a lower bound".into()));
            }
        }
        for (i, row) in self.lp.constraints.iter().enumerate() {
            let mut along: f64 = row.coeffs.iter().zip(&ray[..self.n]).map(|(a, z)| a * z).sum();
            along += ray[self.n + i];
            if along.abs() > eps * (1.0 + row.coeffs.iter().fold(0.0f64, |a, b| a.max(b.abs()))) {
                return Err(LpError::Numerical("unbounded ray leaves the constraint manifold".into()));
            }
        }
        Ok(())
    }

    /// Phase-1 only: drive the current basis to primal feasibility.
    pub fn refeasibilize(&mut self) -> Result<Feasibility, LpError> {
        for _ in 0..3 {
            match self.dual_phase()? {
                DualOutcome::Infeasible { row } => {
                    self.certify_infeasible(row)?;
                    return Ok(Feasibility::Infeasible);
                }
                DualOutcome::Feasible => {}
            }
            self.refresh_xval();
            let x = self.xval[..self.n].to_vec();
            let budget = self.opts.feas_tol * self.feas_scale();
            if self.max_violation_current(&x) <= budget {
                return Ok(Feasibility::Feasible(x));
            }
        }
        Err(LpError::Numerical("could not stabilize a feasible basis".into()))
    }

    /// Full solve: phase 1, phase 2, then verification of whichever claim
    /// terminated the run.
    pub fn solve(&mut self) -> Result<LpSolution, LpError> {
        for _ in 0..3 {
            match self.dual_phase()? {
                DualOutcome::Infeasible { row } => {
                    self.certify_infeasible(row)?;
                    return Ok(self.status_only(LpStatus::Infeasible));
                }
                DualOutcome::Feasible => {}
            }
            self.phase2 = true;
            self.refresh_dj();
            match self.primal_phase()? {
                PrimalOutcome::Unbounded { col, sigma } => {
                    self.certify_unbounded(col, sigma)?;
                    return Ok(self.status_only(LpStatus::Unbounded));
                }
                PrimalOutcome::Optimal => {}
            }
            self.refresh();
            if self.internal_primal_ok() && self.internal_dual_ok() {
                return self.build_optimal();
            }
        }
        Err(LpError::Numerical("could not stabilize an optimal basis".into()))
    }

    fn status_only(&self, status: LpStatus) -> LpSolution {
        LpSolution {
            status,
            primal: Vec::new(),
            objective_value: f64::NAN,
            max_primal_residual: f64::NAN,
            dual_gap_bound: f64::NAN,
            row_duals: Vec::new(),
            pivot_count: self.pivots,
            pivot_log: self.opts.record_pivots.then(|| self.pivot_log.clone()),
        }
    }

    fn build_optimal(&self) -> Result<LpSolution, LpError> {
        let x = self.xval[..self.n].to_vec();
        let residual = self.max_violation_current(&x);
        let budget = self.opts.feas_tol * self.feas_scale();
        if residual > budget {
            return Err(LpError::Numerical(format!(
                "optimal basis residual {residual:.3e} exceeds budget {budget:.3e}"
            )));
        }

        let y: Vec<f64> = (0..self.m).map(|i| -self.dj[self.n + i]).collect();
        let mut dual_obj: f64 = y.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
        for j in 0..self.ntot {
            if !matches!(self.vstat[j], VarState::Basic(_)) && self.xval[j] != 0.0 {
                dual_obj += self.dj[j] * self.xval[j];
            }
        }
        let objective_value = self.lp.objective_at(&x);

        Ok(LpSolution {
            status: LpStatus::Optimal,
            primal: x,
            objective_value,
            max_primal_residual: residual,
            dual_gap_bound: (dual_obj - objective_value).abs(),
            row_duals: y,
            pivot_count: self.pivots,
            pivot_log: self.opts.record_pivots.then(|| self.pivot_log.clone()),
        })
    }
}

/// Solves a maximization LP with default options.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(lp, &SolverOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    Simplex::new(lp, opts.clone())?.solve()
}

/// Phase-1 feasibility check: returns a point whose residual is within the
/// documented budget, or a verified infeasibility verdict.
pub fn check_feasibility(lp: &LinearProgram) -> Result<Feasibility, LpError> {
    check_feasibility_with(lp, &SolverOptions::default())
}

pub fn check_feasibility_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<Feasibility, LpError> {
    Simplex::new(lp, opts.clone())?.refeasibilize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::program::Relation;

    fn boxed_lp(objective: Vec<f64>, bounds: Vec<(f64, f64)>) -> LinearProgram {
        LinearProgram {
            objective,
            bounds,
            constraints: Vec::new(),
        }
    }

    #[test]
    fn box_only_maximum() {
        let mut lp = boxed_lp(vec![1.0, 1.0], vec![(0.0, 1.0), (0.0, 2.0)]);
        lp.add_constraint(vec![1.0, 0.0], Relation::Le, 5.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - 3.0).abs() < 1e-9);
        assert!((sol.primal[0] - 1.0).abs() < 1e-9);
        assert!((sol.primal[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_box_rows() {
        let mut lp = boxed_lp(vec![1.0], vec![(f64::NEG_INFINITY, f64::INFINITY)]);
        lp.add_constraint(vec![1.0], Relation::Ge, 1.0);
        lp.add_constraint(vec![1.0], Relation::Le, 0.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_above() {
        let lp = boxed_lp(vec![1.0], vec![(0.0, f64::INFINITY)]);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn degenerate_equalities() {
        // x + y = 1, x - y = 1 forces (1, 0); maximize y.
        let mut lp = boxed_lp(vec![0.0, 1.0], vec![(0.0, 10.0), (0.0, 10.0)]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add_constraint(vec![1.0, -1.0], Relation::Eq, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.primal[0] - 1.0).abs() < 1e-9);
        assert!(sol.primal[1].abs() < 1e-9);
    }

    #[test]
    fn classic_two_var() {
        // max x + 2y s.t. x + y <= 4, 2x + y >= 2, x >= 0, 0 <= y <= 3.
        let mut lp = boxed_lp(vec![1.0, 2.0], vec![(0.0, f64::INFINITY), (0.0, 3.0)]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Le, 4.0);
        lp.add_constraint(vec![2.0, 1.0], Relation::Ge, 2.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - 7.0).abs() < 1e-9);
        assert!((sol.primal[0] - 1.0).abs() < 1e-9);
        assert!((sol.primal[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn feasibility_empty_constraints() {
        let lp = boxed_lp(vec![0.0, 0.0], vec![(0.0, 1.0), (-2.0, -1.0)]);
        match check_feasibility(&lp).unwrap() {
            Feasibility::Feasible(x) => {
                assert!(lp.max_violation(&x) <= 1e-8);
            }
            Feasibility::Infeasible => panic!("box is feasible"),
        }
    }

    #[test]
    fn feasibility_detects_conflict() {
        let mut lp = boxed_lp(vec![0.0], vec![(0.0, f64::INFINITY)]);
        lp.add_constraint(vec![1.0], Relation::Ge, 2.0);
        lp.add_constraint(vec![1.0], Relation::Le, 1.0);
        assert_eq!(check_feasibility(&lp).unwrap(), Feasibility::Infeasible);
    }

    #[test]
    fn warm_rhs_resolve_tracks_threshold() {
        // x <= b with x maximized by feasibility of x >= 5: warm-move b.
        let mut lp = boxed_lp(vec![0.0], vec![(0.0, 10.0)]);
        lp.add_constraint(vec![1.0], Relation::Ge, 0.0);
        let mut sim = Simplex::new(&lp, SolverOptions::default()).unwrap();
        assert!(matches!(sim.refeasibilize().unwrap(), Feasibility::Feasible(_)));
        sim.set_rhs(0, 7.5);
        match sim.refeasibilize().unwrap() {
            Feasibility::Feasible(x) => assert!(x[0] >= 7.5 - 1e-8),
            Feasibility::Infeasible => panic!(),
        }
        sim.set_rhs(0, 10.5);
        assert_eq!(sim.refeasibilize().unwrap(), Feasibility::Infeasible);
        sim.set_rhs(0, 3.0);
        assert!(matches!(sim.refeasibilize().unwrap(), Feasibility::Feasible(_)));
    }

    #[test]
    fn duality_certificate_on_optimum() {
        let mut lp = boxed_lp(
            vec![3.0, 2.0, 4.0],
            vec![(0.0, f64::INFINITY); 3],
        );
        lp.add_constraint(vec![1.0, 1.0, 2.0], Relation::Le, 4.0);
        lp.add_constraint(vec![2.0, 0.0, 3.0], Relation::Le, 5.0);
        lp.add_constraint(vec![2.0, 1.0, 3.0], Relation::Le, 7.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.dual_gap_bound <= 1e-8 * (1.0 + sol.objective_value.abs()));
        assert!(sol.max_primal_residual <= 1e-8 * (1.0 + lp.rhs_inf_norm()));
    }

    #[test]
    fn identical_inputs_replay_identical_pivots() {
        let mut lp = boxed_lp(vec![1.0, 2.0, -1.0], vec![(0.0, 5.0), (0.0, 5.0), (0.0, 5.0)]);
        lp.add_constraint(vec![1.0, 1.0, 1.0], Relation::Le, 6.0);
        lp.add_constraint(vec![1.0, -1.0, 2.0], Relation::Ge, -2.0);
        let opts = SolverOptions {
            record_pivots: true,
            ..SolverOptions::default()
        };
        let a = solve_lp_with(&lp, &opts).unwrap();
        let b = solve_lp_with(&lp, &opts).unwrap();
        assert_eq!(a.pivot_log, b.pivot_log);
        assert_eq!(a.primal, b.primal);
    }
}
