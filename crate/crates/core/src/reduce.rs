//! Order-fixed reductions.
//!
//! Grid experiments evaluate points in parallel, collect them in index
//! order, and then reduce sequentially with a fixed pairwise tree. The
//! result is a function of the inputs only, never of the thread count.

use rayon::prelude::*;

/// Pairwise (cascade) sum with a fixed split point at `len / 2`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Mean via [`pairwise_sum`]. Empty input gives NaN.
pub fn pairwise_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Evaluate `f` at `0..len` in parallel and return the results in index order.
pub fn ordered_map<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).into_par_iter().map(f).collect()
}

/// Equispaced torus grid `i / n`, `i = 0..n`.
pub fn torus_grid(n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| i as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v = [1.0, 2.0, 3.0];
        assert_eq!(pairwise_sum(&v), 6.0);
        assert!(pairwise_mean(&[]).is_nan());
    }

    #[test]
    fn ordered_map_is_thread_count_independent() {
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (i as f64 + 1.0);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(7).build().unwrap();
        let a = one.install(|| pairwise_sum(&ordered_map(10_001, f)));
        let b = many.install(|| pairwise_sum(&ordered_map(10_001, f)));
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
