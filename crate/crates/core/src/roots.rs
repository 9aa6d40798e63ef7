//! Scalar bracketing root finder shared by the shooting solvers.

const MAX_ITERS: usize = 200;

/// Bisection for an increasing `f` on `[lo, hi]` with `f(lo) <= 0 <= f(hi)`.
///
/// Stops when the bracket is narrower than `x_tol` or `|f| <= f_tol`. Returns
/// the midpoint of the final bracket. Decreasing functions can be passed as
/// `|x| -f(x)`.
pub(crate) fn bisect_increasing<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    f_tol: f64,
) -> f64
where
    F: FnMut(f64) -> f64,
{
    for _ in 0..MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            return mid;
        }
        let value = f(mid);
        if value.abs() <= f_tol {
            return mid;
        }
        if value < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Doubles `hi` (starting from `start`) until `f(hi) >= 0`. Returns `None` after
/// `max_doublings` attempts.
pub(crate) fn expand_upper<F>(mut f: F, start: f64, max_doublings: usize) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut hi = start;
    for _ in 0..max_doublings {
        if f(hi) >= 0.0 {
            return Some(hi);
        }
        hi *= 2.0;
    }
    None
}
