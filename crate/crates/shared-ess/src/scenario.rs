//! Problem-instance data: time grid, user profiles, storage specifications,
//! grid-price cost functions, and profit coefficients.
//!
//! All types here are plain immutable data. Validation never panics and never
//! aborts early: [`validate_scenario`] walks the whole instance and reports
//! every violation it finds, each with a machine-readable [`IssueCode`] and a
//! human-readable message.

/// Absolute tolerance on `sum(beta) == 1`.
pub const BETA_SUM_TOL: f64 = 1e-9;

/// Relative tolerance used by [`split_consistency`].
pub const SPLIT_REL_TOL: f64 = 1e-9;

/// The scheduling horizon: `num_slots` slots of one unit of time each.
///
/// Slot duration is fixed at 1, so power (kW) and per-slot energy are
/// numerically interchangeable throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    pub num_slots: usize,
}

impl TimeGrid {
    pub fn new(num_slots: usize) -> Self {
        Self { num_slots }
    }

    /// Always 1; kept as a named constant so unit bookkeeping is explicit.
    pub fn slot_duration(&self) -> f64 {
        1.0
    }
}

/// One user's renewable generation and load series, both of length N, in kW.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    /// 1-based user index.
    pub user_id: usize,
    pub generation: Vec<f64>,
    pub load: Vec<f64>,
}

/// Per-slot net energy of one user: generation minus load. Positive entries
/// are surplus, negative entries are deficit.
#[derive(Debug, Clone, PartialEq)]
pub struct NetEnergyProfile {
    pub user_id: usize,
    pub net: Vec<f64>,
}

/// Net energy series of a profile, computed exactly as `generation - load`
/// per slot.
pub fn build_net_profile(profile: &UserProfile) -> NetEnergyProfile {
    debug_assert_eq!(profile.generation.len(), profile.load.len());
    let net = profile
        .generation
        .iter()
        .zip(&profile.load)
        .map(|(r, l)| r - l)
        .collect();
    NetEnergyProfile {
        user_id: profile.user_id,
        net,
    }
}

/// An energy storage unit: capacity window, initial state, rate limits, and
/// charge/discharge efficiencies. Used both for the shared unit and for the
/// per-user units of the distributed benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssSpec {
    /// Minimum allowed state (kW), `>= 0`.
    pub s_min: f64,
    /// Maximum allowed state (kW).
    pub s_max: f64,
    /// State at the beginning of slot 1 (kW); must lie in `[s_min, s_max]`.
    pub s_init: f64,
    /// Maximum charging rate (kW), `> 0`.
    pub c_max: f64,
    /// Maximum discharging rate (kW), `> 0`.
    pub d_max: f64,
    /// Charging efficiency, strictly in (0, 1) unless
    /// `allow_unit_efficiency` is set, in which case exactly 1 is also legal.
    pub eff_charge: f64,
    /// Discharging efficiency, same admissible range as `eff_charge`.
    pub eff_discharge: f64,
    /// Opt-in switch for lossless storage (`eff_* == 1.0`), used by
    /// closed-form test setups. Off by default.
    pub allow_unit_efficiency: bool,
}

impl EssSpec {
    /// A lossy spec with `s_init = s_min`.
    pub fn new(s_min: f64, s_max: f64, c_max: f64, d_max: f64, eff_charge: f64, eff_discharge: f64) -> Self {
        Self {
            s_min,
            s_max,
            s_init: s_min,
            c_max,
            d_max,
            eff_charge,
            eff_discharge,
            allow_unit_efficiency: false,
        }
    }

    /// A lossless spec (`eff = 1`), flagged as intentionally lossless.
    pub fn lossless(s_min: f64, s_max: f64, c_max: f64, d_max: f64) -> Self {
        Self {
            s_min,
            s_max,
            s_init: s_min,
            c_max,
            d_max,
            eff_charge: 1.0,
            eff_discharge: 1.0,
            allow_unit_efficiency: true,
        }
    }

    pub fn with_initial_state(mut self, s_init: f64) -> Self {
        self.s_init = s_init;
        self
    }
}

/// One linear piece `slope * g + intercept` of a piecewise-linear cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub slope: f64,
    pub intercept: f64,
}

/// Convex increasing grid-purchase cost, represented as the upper envelope of
/// its segments: `f(g) = max_k (slope_k * g + intercept_k)`.
///
/// Slopes must be nonnegative (which makes the envelope nondecreasing on
/// `g >= 0`) and the largest intercept must be 0 so that zero draw costs
/// zero. A single segment `(price, 0)` is the plain linear tariff.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFunction {
    pub segments: Vec<Segment>,
}

impl CostFunction {
    /// Linear tariff `f(g) = price * g`.
    pub fn linear(price: f64) -> Self {
        Self {
            segments: vec![Segment {
                slope: price,
                intercept: 0.0,
            }],
        }
    }

    pub fn from_segments(segments: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Self {
            segments: segments
                .into_iter()
                .map(|(slope, intercept)| Segment { slope, intercept })
                .collect(),
        }
    }

    pub fn max_intercept(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.intercept)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// The fraction of the total profit guaranteed to each user. Entries are in
/// [0, 1] and sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfitCoefficients {
    pub beta: Vec<f64>,
}

impl ProfitCoefficients {
    pub fn new(beta: Vec<f64>) -> Self {
        Self { beta }
    }
}

/// A full problem instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: TimeGrid,
    pub users: Vec<UserProfile>,
    pub shared_ess: EssSpec,
    /// Per-user units for the distributed benchmark; order matches `users`.
    pub distributed_ess: Option<Vec<EssSpec>>,
    /// M x N table of per-user per-slot cost functions.
    pub costs: Vec<Vec<CostFunction>>,
    pub coefficients: ProfitCoefficients,
    /// When set, schedules must return the storage to its initial state at
    /// the end of the horizon. Off by default.
    pub terminal_equals_initial: bool,
}

impl Scenario {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_slots(&self) -> usize {
        self.grid.num_slots
    }

    /// Net profiles of all users, in user order.
    pub fn net_profiles(&self) -> Vec<NetEnergyProfile> {
        self.users.iter().map(build_net_profile).collect()
    }
}

/// Machine-readable classification of a validation failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueCode {
    GridEmpty,
    SeriesLength,
    NegativeEntry,
    NonFiniteEntry,
    EssStateWindow,
    EssInitialState,
    EssRate,
    EssEfficiency,
    CostTableShape,
    CostNoSegments,
    CostNegativeSlope,
    CostNonFinite,
    CostNonzeroAtOrigin,
    BetaLength,
    BetaRange,
    BetaSum,
    DistributedLength,
}

/// One invariant violation found during validation.
#[derive(Debug, Clone)]
pub struct ValidationIssue {
    pub code: IssueCode,
    pub message: String,
}

/// All violations found in a scenario; empty means the scenario is valid.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, code: IssueCode, message: String) {
        self.issues.push(ValidationIssue { code, message });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "valid");
        }
        for issue in &self.issues {
            writeln!(f, "{:?}: {}", issue.code, issue.message)?;
        }
        Ok(())
    }
}

fn validate_series(report: &mut ValidationReport, what: &str, user_id: usize, n: usize, series: &[f64]) {
    if series.len() != n {
        report.push(
            IssueCode::SeriesLength,
            format!("user {user_id} {what} has {} entries, expected {n}", series.len()),
        );
    }
    for (i, v) in series.iter().enumerate() {
        if !v.is_finite() {
            report.push(
                IssueCode::NonFiniteEntry,
                format!("user {user_id} {what} slot {} is not finite", i + 1),
            );
        } else if *v < 0.0 {
            report.push(
                IssueCode::NegativeEntry,
                format!("user {user_id} {what} slot {} is negative ({v})", i + 1),
            );
        }
    }
}

fn validate_ess(report: &mut ValidationReport, label: &str, spec: &EssSpec) {
    for (name, v) in [
        ("s_min", spec.s_min),
        ("s_max", spec.s_max),
        ("s_init", spec.s_init),
        ("c_max", spec.c_max),
        ("d_max", spec.d_max),
        ("eff_charge", spec.eff_charge),
        ("eff_discharge", spec.eff_discharge),
    ] {
        if !v.is_finite() {
            report.push(IssueCode::NonFiniteEntry, format!("{label} {name} is not finite"));
            return;
        }
    }
    if spec.s_min < 0.0 || spec.s_min > spec.s_max {
        report.push(
            IssueCode::EssStateWindow,
            format!("{label} state window [{}, {}] is not 0 <= s_min <= s_max", spec.s_min, spec.s_max),
        );
    }
    if spec.s_init < spec.s_min {
        report.push(
            IssueCode::EssInitialState,
            format!("{label} initial state {} below minimum {}", spec.s_init, spec.s_min),
        );
    }
    if spec.s_init > spec.s_max {
        report.push(
            IssueCode::EssInitialState,
            format!("{label} initial state {} above capacity {}", spec.s_init, spec.s_max),
        );
    }
    if spec.c_max <= 0.0 {
        report.push(IssueCode::EssRate, format!("{label} charging rate {} must be > 0", spec.c_max));
    }
    if spec.d_max <= 0.0 {
        report.push(IssueCode::EssRate, format!("{label} discharging rate {} must be > 0", spec.d_max));
    }
    for (name, eff) in [("eff_charge", spec.eff_charge), ("eff_discharge", spec.eff_discharge)] {
        let strictly_inside = eff > 0.0 && eff < 1.0;
        let unit_ok = spec.allow_unit_efficiency && eff == 1.0;
        if !(strictly_inside || unit_ok) {
            report.push(
                IssueCode::EssEfficiency,
                format!("{label} {name} = {eff} must be in (0, 1), or exactly 1 with allow_unit_efficiency"),
            );
        }
    }
}

fn validate_cost(report: &mut ValidationReport, user_id: usize, slot: usize, f: &CostFunction) {
    if f.segments.is_empty() {
        report.push(
            IssueCode::CostNoSegments,
            format!("cost for user {user_id} slot {slot} has no segments"),
        );
        return;
    }
    for (k, seg) in f.segments.iter().enumerate() {
        if !seg.slope.is_finite() || !seg.intercept.is_finite() {
            report.push(
                IssueCode::CostNonFinite,
                format!("cost for user {user_id} slot {slot} segment {k} is not finite"),
            );
            return;
        }
        if seg.slope < 0.0 {
            report.push(
                IssueCode::CostNegativeSlope,
                format!("cost for user {user_id} slot {slot} segment {k} slope {} < 0", seg.slope),
            );
        }
    }
    // Zero draw must cost zero, i.e. the envelope value at the origin is 0.
    let at_zero = f.max_intercept();
    if at_zero.abs() > 1e-12 {
        report.push(
            IssueCode::CostNonzeroAtOrigin,
            format!("cost for user {user_id} slot {slot} is {at_zero} at zero draw, expected 0"),
        );
    }
}

/// Checks every invariant of a scenario and reports all violations.
pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = s.grid.num_slots;
    let m = s.users.len();

    if n < 1 {
        report.push(IssueCode::GridEmpty, "time grid must have at least one slot".into());
    }
    if m < 1 {
        report.push(IssueCode::SeriesLength, "scenario has no users".into());
    }

    for user in &s.users {
        validate_series(&mut report, "generation", user.user_id, n, &user.generation);
        validate_series(&mut report, "load", user.user_id, n, &user.load);
    }

    validate_ess(&mut report, "shared ESS", &s.shared_ess);
    if let Some(dist) = &s.distributed_ess {
        if dist.len() != m {
            report.push(
                IssueCode::DistributedLength,
                format!("{} distributed ESS specs for {m} users", dist.len()),
            );
        }
        for (i, spec) in dist.iter().enumerate() {
            validate_ess(&mut report, &format!("distributed ESS {}", i + 1), spec);
        }
    }

    if s.costs.len() != m {
        report.push(
            IssueCode::CostTableShape,
            format!("cost table has {} user rows, expected {m}", s.costs.len()),
        );
    }
    for (i, row) in s.costs.iter().enumerate() {
        if row.len() != n {
            report.push(
                IssueCode::CostTableShape,
                format!("cost table row for user {} has {} slots, expected {n}", i + 1, row.len()),
            );
        }
        for (j, f) in row.iter().enumerate() {
            validate_cost(&mut report, i + 1, j + 1, f);
        }
    }

    let beta = &s.coefficients.beta;
    if beta.len() != m {
        report.push(
            IssueCode::BetaLength,
            format!("{} profit coefficients for {m} users", beta.len()),
        );
    }
    let mut sum = 0.0;
    for (i, b) in beta.iter().enumerate() {
        if !b.is_finite() || *b < 0.0 || *b > 1.0 {
            report.push(
                IssueCode::BetaRange,
                format!("coefficient {} for user {} outside [0, 1]", b, i + 1),
            );
        } else {
            sum += b;
        }
    }
    if !beta.is_empty() && (sum - 1.0).abs() > BETA_SUM_TOL {
        report.push(IssueCode::BetaSum, format!("coefficients sum {sum} != 1"));
    }

    report
}

/// Residuals of the shared-vs-distributed capacity split, one per aggregate
/// field, signed as `shared - sum(distributed)`.
#[derive(Debug, Clone, Copy)]
pub struct SplitCheck {
    pub consistent: bool,
    pub residual_s_min: f64,
    pub residual_s_max: f64,
    pub residual_c_max: f64,
    pub residual_d_max: f64,
}

/// Checks the fair-comparison split: the distributed units' state windows and
/// rate limits must sum to the shared unit's, within [`SPLIT_REL_TOL`]
/// relative tolerance per field.
pub fn split_consistency(shared: &EssSpec, distributed: &[EssSpec]) -> SplitCheck {
    let sum = |f: fn(&EssSpec) -> f64| distributed.iter().map(f).sum::<f64>();
    let fields = [
        (shared.s_min, sum(|e| e.s_min)),
        (shared.s_max, sum(|e| e.s_max)),
        (shared.c_max, sum(|e| e.c_max)),
        (shared.d_max, sum(|e| e.d_max)),
    ];
    let residuals: Vec<f64> = fields.iter().map(|(a, b)| a - b).collect();
    let consistent = fields
        .iter()
        .all(|(a, b)| (a - b).abs() <= SPLIT_REL_TOL * f64::max(1.0, a.abs().max(b.abs())));
    SplitCheck {
        consistent,
        residual_s_min: residuals[0],
        residual_s_max: residuals[1],
        residual_c_max: residuals[2],
        residual_d_max: residuals[3],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_costs(m: usize, n: usize, price: f64) -> Vec<Vec<CostFunction>> {
        vec![vec![CostFunction::linear(price); n]; m]
    }

    fn small_scenario() -> Scenario {
        Scenario {
            grid: TimeGrid::new(2),
            users: vec![
                UserProfile {
                    user_id: 1,
                    generation: vec![5.0, 0.0],
                    load: vec![2.0, 3.0],
                },
                UserProfile {
                    user_id: 2,
                    generation: vec![0.0, 1.0],
                    load: vec![1.0, 1.0],
                },
                UserProfile {
                    user_id: 3,
                    generation: vec![0.0, 0.0],
                    load: vec![1.0, 1.0],
                },
            ],
            shared_ess: EssSpec::new(0.0, 10.0, 5.0, 5.0, 0.7, 0.8),
            distributed_ess: None,
            costs: linear_costs(3, 2, 45.0),
            coefficients: ProfitCoefficients::new(vec![0.3, 0.6, 0.1]),
            terminal_equals_initial: false,
        }
    }

    #[test]
    fn net_profile_is_generation_minus_load() {
        let p = UserProfile {
            user_id: 1,
            generation: vec![5.0, 0.0],
            load: vec![2.0, 3.0],
        };
        assert_eq!(build_net_profile(&p).net, vec![3.0, -3.0]);
    }

    #[test]
    fn net_profile_of_balanced_user_is_zero() {
        let p = UserProfile {
            user_id: 1,
            generation: vec![1.5, 2.5, 0.0],
            load: vec![1.5, 2.5, 0.0],
        };
        assert!(build_net_profile(&p).net.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn net_profile_all_deficit() {
        let p = UserProfile {
            user_id: 1,
            generation: vec![0.0; 4],
            load: vec![1.0; 4],
        };
        assert_eq!(build_net_profile(&p).net, vec![-1.0; 4]);
    }

    #[test]
    fn paper_shaped_coefficients_validate() {
        let s = small_scenario();
        let report = validate_scenario(&s);
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn coefficient_sum_violation_reported() {
        let mut s = small_scenario();
        s.users.truncate(2);
        s.costs.truncate(2);
        s.coefficients = ProfitCoefficients::new(vec![0.5, 0.6]);
        let report = validate_scenario(&s);
        assert!(report.issues.iter().any(|i| i.code == IssueCode::BetaSum));
        let msg = &report.issues.iter().find(|i| i.code == IssueCode::BetaSum).unwrap().message;
        assert!(msg.contains("1.1"), "{msg}");
    }

    #[test]
    fn initial_state_above_capacity_reported() {
        let mut s = small_scenario();
        s.shared_ess.s_init = s.shared_ess.s_max + 1.0;
        let report = validate_scenario(&s);
        assert!(report.issues.iter().any(|i| i.code == IssueCode::EssInitialState));
    }

    #[test]
    fn unit_efficiency_requires_flag() {
        let mut s = small_scenario();
        s.shared_ess.eff_charge = 1.0;
        assert!(!validate_scenario(&s).is_valid());
        s.shared_ess.allow_unit_efficiency = true;
        assert!(validate_scenario(&s).is_valid());
    }

    #[test]
    fn nonzero_cost_at_origin_reported() {
        let mut s = small_scenario();
        s.costs[0][0] = CostFunction::from_segments([(45.0, 1.0)]);
        let report = validate_scenario(&s);
        assert!(report.issues.iter().any(|i| i.code == IssueCode::CostNonzeroAtOrigin));
    }

    #[test]
    fn split_matches_paper_capacities() {
        let shared = EssSpec::new(0.0, 1000.0, 250.0, 250.0, 0.7, 0.8);
        let dist = [
            EssSpec::new(0.0, 300.0, 75.0, 75.0, 0.7, 0.8),
            EssSpec::new(0.0, 600.0, 150.0, 150.0, 0.7, 0.8),
            EssSpec::new(0.0, 100.0, 25.0, 25.0, 0.7, 0.8),
        ];
        assert!(split_consistency(&shared, &dist).consistent);
    }

    #[test]
    fn split_matches_scaled_capacities() {
        let shared = EssSpec::new(0.0, 1500.0, 375.0, 375.0, 0.7, 0.8);
        let dist = [
            EssSpec::new(0.0, 450.0, 112.5, 112.5, 0.7, 0.8),
            EssSpec::new(0.0, 900.0, 225.0, 225.0, 0.7, 0.8),
            EssSpec::new(0.0, 150.0, 37.5, 37.5, 0.7, 0.8),
        ];
        assert!(split_consistency(&shared, &dist).consistent);
    }

    #[test]
    fn split_mismatch_reports_residual() {
        let shared = EssSpec::new(0.0, 1000.0, 250.0, 250.0, 0.7, 0.8);
        let dist = [
            EssSpec::new(0.0, 300.0, 75.0, 75.0, 0.7, 0.8),
            EssSpec::new(0.0, 600.0, 150.0, 150.0, 0.7, 0.8),
            EssSpec::new(0.0, 200.0, 25.0, 25.0, 0.7, 0.8),
        ];
        let check = split_consistency(&shared, &dist);
        assert!(!check.consistent);
        assert_eq!(check.residual_s_max, -100.0);
    }
}
