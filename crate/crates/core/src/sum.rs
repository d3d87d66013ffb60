//! Fixed-shape pairwise summation.
//!
//! The reduction tree depends only on the slice length, so a sum over the same
//! values is bit-identical no matter how the values were produced.

const LEAF: usize = 16;

pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise reduction of arbitrary mergeable items.
pub(crate) fn pairwise_reduce<T, A>(
    items: &[T],
    leaf: &impl Fn(&T) -> A,
    merge: &impl Fn(A, A) -> A,
    empty: &impl Fn() -> A,
) -> A {
    match items.len() {
        0 => empty(),
        1 => leaf(&items[0]),
        n => {
            let mid = n / 2;
            let left = pairwise_reduce(&items[..mid], leaf, merge, empty);
            let right = pairwise_reduce(&items[mid..], leaf, merge, empty);
            merge(left, right)
        }
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Standard error of the mean, using the unbiased sample variance.
pub(crate) fn std_err(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mu = mean(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - mu) * (v - mu)).collect();
    (pairwise_sum(&dev) / (n - 1) as f64 / n as f64).sqrt()
}
