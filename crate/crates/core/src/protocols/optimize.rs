//! One-dimensional minimisation helpers used by the CAP optimisers.

use crate::real::Real;

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
///
/// Returns the best point seen and its value. On equal values the left
/// sub-interval is kept, so ties resolve toward smaller arguments.
pub fn golden_section_min<R, F>(mut f: F, lo: R, hi: R, x_tol: R) -> (R, R)
where
    R: Real,
    F: FnMut(R) -> R,
{
    // 1/phi
    let inv_phi = (R::of(5.0).sqrt() - R::one()) / R::of(2.0);
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fd < fc { (d, fd) } else { (c, fc) };

    while (b - a) > x_tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            if fc <= best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
        // Bail out once the interval stops shrinking in floating point.
        if c >= d {
            break;
        }
    }
    best
}

/// Smallest value over `points`; the first minimiser wins ties.
/// NaN values are skipped.
pub fn grid_argmin<R, F>(points: impl IntoIterator<Item = R>, mut f: F) -> Option<(R, R)>
where
    R: Real,
    F: FnMut(R) -> R,
{
    let mut best: Option<(R, R)> = None;
    for x in points {
        let v = f(x);
        if v.is_nan() {
            continue;
        }
        match best {
            Some((_, bv)) if v >= bv => {}
            _ => best = Some((x, v)),
        }
    }
    best
}

/// `count` evenly spaced points `1/count, 2/count, ..., 1`.
pub fn unit_grid<R: Real>(count: u64) -> impl Iterator<Item = R> {
    let denom = R::of_count(count);
    (1..=count).map(move |i| R::of_count(i) / denom)
}
