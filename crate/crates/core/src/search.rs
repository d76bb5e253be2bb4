//! One-dimensional minimization and seeded random substreams shared by the
//! metrics and placement modules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[a, b]`. Returns the best
/// point seen, endpoints included.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut best = (lo, f(lo));
    let fh = f(hi);
    if fh < best.1 {
        best = (hi, fh);
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
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
    }
    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Minimum of `f` over `[a, b]`: `points` uniform samples, then a golden
/// refinement between the neighbours of the best sample.
pub(crate) fn grid_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, points: usize, tol: f64) -> (f64, f64) {
    let points = points.max(2);
    let step = (b - a) / (points - 1) as f64;
    let mut best = (0, f64::INFINITY);
    for i in 0..points {
        let v = f(a + step * i as f64);
        if v < best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    let lo = a + step * i.saturating_sub(1) as f64;
    let hi = a + step * (i + 1).min(points - 1) as f64;
    let refined = golden_min(&f, lo, hi, tol);
    if refined.1 < best.1 {
        refined
    } else {
        (a + step * i as f64, best.1)
    }
}

/// Independent generator for `(outer, inner)` under `seed`, so changing how
/// many draws one stream makes never shifts another.
pub(crate) fn substream(seed: u64, outer: u64, inner: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(outer.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ inner);
    rng
}
