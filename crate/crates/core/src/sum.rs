//! Order-fixed reductions.
//!
//! Every integral in the crate goes through these so the result depends only
//! on the index order of the data, never on how work was split across threads.

use crate::scalar::Real;

const BLOCK: usize = 32;

/// Pairwise (cascade) summation over a fixed index order.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    if xs.len() <= BLOCK {
        let mut acc = T::zero();
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise sum of `f(x)` without allocating an intermediate buffer for
/// short inputs.
pub fn pairwise_map_sum<T: Real, F: Fn(T) -> T + Copy>(xs: &[T], f: F) -> T {
    if xs.len() <= BLOCK {
        let mut acc = T::zero();
        for &x in xs {
            acc += f(x);
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_map_sum(&xs[..mid], f) + pairwise_map_sum(&xs[mid..], f)
}

/// Pairwise dot product.
pub fn pairwise_dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= BLOCK {
        let mut acc = T::zero();
        for (&x, &y) in a.iter().zip(b) {
            acc += x * y;
        }
        return acc;
    }
    let mid = a.len() / 2;
    pairwise_dot(&a[..mid], &b[..mid]) + pairwise_dot(&a[mid..], &b[mid..])
}

pub fn max_abs<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
        assert_eq!(pairwise_dot(&xs, &xs), (0..1000u64).map(|i| (i * i) as f64).sum::<f64>());
    }

    #[test]
    fn pairwise_is_more_accurate_than_left_fold() {
        let xs = vec![0.1f32; 1 << 20];
        let naive: f32 = xs.iter().sum();
        let exact = 0.1f64 * (1 << 20) as f64;
        let pw = pairwise_sum(&xs) as f64;
        assert!((pw - exact).abs() < (naive as f64 - exact).abs());
    }
}
