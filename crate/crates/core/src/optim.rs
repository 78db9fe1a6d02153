//! One-dimensional minimization helpers.

/// Inverse golden ratio, `(sqrt(5) - 1) / 2`.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of `f` on `[a, b]`.
///
/// Returns `(x, f(x))` at the midpoint of the final bracket. The function is
/// assumed unimodal on the bracket; on noisy or flat objectives the result is
/// simply a point with a small function value in the bracket.
pub fn golden_section_min(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    xtol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while (hi - lo).abs() > xtol * (1.0 + lo.abs().max(hi.abs())) && iter < max_iter {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        iter += 1;
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    // return the best point actually evaluated
    if f1 <= fx && f1 <= f2 {
        (x1, f1)
    } else if f2 <= fx {
        (x2, f2)
    } else {
        (x, fx)
    }
}
