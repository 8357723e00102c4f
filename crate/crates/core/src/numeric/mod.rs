//! Numerical building blocks shared by the geometric modules.

pub mod ode;
pub mod quadrature;
pub mod sparse;
pub mod spline;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Counter-based generator for sample stream `stream` of a run seeded by `seed`.
///
/// Streams are independent of thread scheduling, so parallel evaluation in
/// fixed chunks reproduces sequential output exactly.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Bisection for a sign change of `f` on `[a, b]`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> f64 {
    let mut fa = f(a);
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
