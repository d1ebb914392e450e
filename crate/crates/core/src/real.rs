//! Scalar abstraction so the hot loop can run in `f32` or `f64`.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::Float;

/// Floating-point element type for embedding and gradient buffers.
///
/// Reductions (norms, traces, inner products) always widen to `f64`.
pub trait Real: Float + Sum + Send + Sync + Debug + Default + 'static {
    fn from_f64(x: f64) -> Self;
    fn widen(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn widen(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn widen(self) -> f64 {
        self as f64
    }
}

/// `Σ aᵢbᵢ` in `f64` with eight independent accumulators, so the sum is not
/// bound by floating-point add latency. The order is fixed, so results are
/// reproducible.
pub(crate) fn dot_wide<T: Real>(a: &[T], b: &[T]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l].widen() * y[l].widen();
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x.widen() * y.widen()).sum();
    acc.iter().sum::<f64>() + tail
}
