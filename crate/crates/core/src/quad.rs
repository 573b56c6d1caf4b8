//! Adaptive Simpson quadrature.
//!
//! Used as the numerical route for integrals that are also available in
//! closed form; the two routes are cross-checked in the test suites.

/// Relative tolerance used by the power-function quadrature routes.
pub const REL_TOL: f64 = 1e-8;
/// Absolute floor below which subintervals are not refined further.
pub const ABS_FLOOR: f64 = 1e-12;

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` with adaptive Simpson refinement.
///
/// The tolerance is `max(rel_tol * |estimate|, abs_floor)` on the whole
/// interval and is split in half at every bisection.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, rel_tol: f64, abs_floor: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let fa = f(lo);
    let fb = f(hi);
    let m = 0.5 * (lo + hi);
    let fm = f(m);
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);

    // a coarse pre-pass gives the scale for the relative tolerance
    let scale = coarse_magnitude(&f, lo, hi).max(whole.abs());
    let tol = (rel_tol * scale).max(abs_floor);
    sign * refine(&f, lo, hi, fa, fm, fb, whole, tol, MAX_DEPTH)
}

fn coarse_magnitude<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    const N: usize = 16;
    let h = (hi - lo) / N as f64;
    (0..N).map(|i| f(lo + (i as f64 + 0.5) * h).abs() * h).sum()
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol || (b - a) <= f64::EPSILON * b.abs().max(1.0) {
        return left + right + diff / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Bisection for the root of a non-decreasing function on `[lo, hi]`.
///
/// Assumes `f(lo) <= 0 <= f(hi)`. Stops when the bracket can no longer be
/// split or after `max_iter` halvings.
pub fn bisect_increasing<F>(f: F, mut lo: f64, mut hi: f64, max_iter: u32) -> f64
where
    F: Fn(f64) -> f64,
{
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
