//! One-dimensional convex minimisation and monotone root bracketing.

const GOLD: f64 = 0.381_966_011_250_105_1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Min1d {
    pub x: f64,
    pub value: f64,
}

/// Minimise a convex extended-real function. The bracket `[lo, hi]` is grown
/// (up to `max_doublings` times) until the minimum is interior, then refined
/// by golden-section search on a bracketing triple, which never discards the
/// best finite point found so far. Returns `None` if no finite value is found.
pub fn minimize_convex(f: impl Fn(f64) -> f64, lo: f64, hi: f64, max_doublings: usize) -> Option<Min1d> {
    minimize_convex_tol(f, lo, hi, max_doublings, 0.0)
}

/// As [`minimize_convex`], stopping once the bracket is narrower than `xtol`.
pub fn minimize_convex_tol(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    max_doublings: usize,
    xtol: f64,
) -> Option<Min1d> {
    const K: usize = 17;
    if !(lo < hi) {
        hi = lo + 1.0;
    }
    let mut grid = [0.0; K];
    let mut vals = [0.0; K];
    let mut best = 0;
    let mut found = false;
    for _ in 0..=max_doublings {
        for k in 0..K {
            grid[k] = lo + (hi - lo) * k as f64 / (K - 1) as f64;
            vals[k] = f(grid[k]);
        }
        best = (0..K).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("non-empty");
        let width = hi - lo;
        if !vals[best].is_finite() {
            lo -= width;
            hi += width;
            continue;
        }
        found = true;
        if best == 0 && vals[0] < vals[1] {
            lo -= 2.0 * width;
        } else if best == K - 1 && vals[K - 1] < vals[K - 2] {
            hi += 2.0 * width;
        } else {
            break;
        }
    }
    if !found {
        return None;
    }
    let mut a = grid[best.saturating_sub(1)];
    let mut c = grid[(best + 1).min(K - 1)];
    let mut b = grid[best];
    let mut fb = vals[best];
    for _ in 0..400 {
        if c - a <= (4.0 * f64::EPSILON * b.abs().max(1.0)).max(xtol) {
            break;
        }
        let x = if c - b > b - a { b + GOLD * (c - b) } else { b - GOLD * (b - a) };
        if x <= a || x >= c || x == b {
            break;
        }
        let fx = f(x);
        if fx < fb {
            if x > b {
                a = b;
            } else {
                c = b;
            }
            b = x;
            fb = fx;
        } else if x > b {
            c = x;
        } else {
            a = x;
        }
    }
    Some(Min1d { x: b, value: fb })
}

/// Smallest `x` with `feasible(x)` for a predicate that is false below some
/// threshold and true above it. The bracket is grown geometrically; returns
/// `None` if no feasible (or no infeasible) point is found within
/// `max_doublings`.
pub fn bisect_threshold(
    mut feasible: impl FnMut(f64) -> bool,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
    max_doublings: usize,
) -> Option<f64> {
    if !(lo < hi) {
        hi = lo + 1.0;
    }
    let mut grown = 0;
    while !feasible(hi) {
        let w = hi - lo;
        lo = hi;
        hi += 2.0 * w;
        grown += 1;
        if grown > max_doublings {
            return None;
        }
    }
    grown = 0;
    while feasible(lo) {
        let w = hi - lo;
        hi = lo;
        lo -= 2.0 * w;
        grown += 1;
        if grown > max_doublings {
            return None;
        }
    }
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_with_bracket_growth() {
        let m = minimize_convex(|x| (x - 37.5).powi(2) + 1.0, 0.0, 1.0, 60).unwrap();
        assert!((m.x - 37.5).abs() < 1e-6);
        assert!((m.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn piecewise_linear_and_infinite_regions() {
        let kinked = minimize_convex(|x: f64| (x - 1.0).abs() + 0.5 * x, -10.0, 10.0, 60).unwrap();
        assert!((kinked.x - 1.0).abs() < 1e-9, "{kinked:?}");
        let f = |x: f64| if x < -2.0 { f64::INFINITY } else { x };
        let m = minimize_convex(f, -10.0, 10.0, 60).unwrap();
        assert!((m.x + 2.0).abs() < 1e-9, "{m:?}");
        assert!(minimize_convex(|_| f64::INFINITY, 0.0, 1.0, 5).is_none());
    }

    #[test]
    fn threshold_search() {
        let x = bisect_threshold(|x| x >= 3.25, 0.0, 1.0, 1e-12, 200, 60).unwrap();
        assert!((x - 3.25).abs() < 1e-11);
        let y = bisect_threshold(|x| x >= -100.0, 0.0, 1.0, 1e-12, 200, 60).unwrap();
        assert!((y + 100.0).abs() < 1e-10);
    }
}
