//! Generic bisection for monotone feasibility problems: find the largest
//! scalar where a predicate that is true on an initial segment still holds.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BisectError {
    #[error("tolerance {0} must be positive and finite")]
    BadTolerance(f64),
    #[error("bracket [{lo}, {hi}] is not ordered")]
    BadBracket { lo: f64, hi: f64 },
    #[error("predicate is false at the lower bracket end {0}")]
    LowerEndInfeasible(f64),
}

/// Maximizes `t` over `[t_lo, t_hi]` subject to `feasible_at(t)`, assuming
/// the predicate is monotone (true up to some threshold, false above).
///
/// Returns a `t` at which the predicate was actually evaluated true, within
/// `tol` of the threshold: either `t_hi` itself when feasible, or the lower
/// end of a bracket of width at most `tol` whose upper end evaluated false.
/// Evaluation count is at most `ceil(log2((t_hi - t_lo) / tol)) + 2`.
pub fn bisect_max<F>(mut feasible_at: F, t_lo: f64, t_hi: f64, tol: f64) -> Result<f64, BisectError>
where
    F: FnMut(f64) -> bool,
{
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(BisectError::BadTolerance(tol));
    }
    if !(t_lo <= t_hi) || !t_lo.is_finite() || !t_hi.is_finite() {
        return Err(BisectError::BadBracket { lo: t_lo, hi: t_hi });
    }
    if !feasible_at(t_lo) {
        return Err(BisectError::LowerEndInfeasible(t_lo));
    }
    if t_hi == t_lo {
        return Ok(t_lo);
    }
    if feasible_at(t_hi) {
        return Ok(t_hi);
    }
    let (mut lo, mut hi) = (t_lo, t_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break; // bracket exhausted at float resolution
        }
        if feasible_at(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
