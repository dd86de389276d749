//! Parallel building blocks with a sequential fallback.
//!
//! All reductions are chunked with a fixed block size and the block results
//! are combined sequentially, so sums are bit-identical regardless of thread
//! count or scheduling.

/// Block size for deterministic chunked reductions.
const BLOCK: usize = 4096;

/// Fill `out[i] = f(i)` for all indices, in parallel when enabled.
#[cfg(feature = "parallel")]
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    out.par_iter_mut().enumerate().for_each(|(i, slot)| *slot = f(i));
}

#[cfg(not(feature = "parallel"))]
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

/// Map each index of `0..n` to a value; results come back in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Deterministic dot-product style reduction: sum of `f(i)` over `0..n`.
///
/// Block sums are computed independently (possibly in parallel) and then
/// added in block order.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let n_blocks = n.div_ceil(BLOCK);
    let partial = map_indexed(n_blocks, |b| {
        let lo = b * BLOCK;
        let hi = (lo + BLOCK).min(n);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    });
    partial.iter().sum()
}

/// Deterministic dot product of two slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum_indexed(a.len(), |i| a[i] * b[i])
}

/// `y += a * x`, elementwise.
#[cfg(feature = "parallel")]
pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    use rayon::prelude::*;
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += a * xi);
}

#[cfg(not(feature = "parallel"))]
pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `y = x + b * y`, elementwise.
#[cfg(feature = "parallel")]
pub fn xpby(y: &mut [f64], b: f64, x: &[f64]) {
    use rayon::prelude::*;
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi = xi + b * *yi);
}

#[cfg(not(feature = "parallel"))]
pub fn xpby(y: &mut [f64], b: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = xi + b * *yi;
    }
}

/// `out = a / b`, elementwise.
#[cfg(feature = "parallel")]
pub fn pointwise_div(out: &mut [f64], a: &[f64], b: &[f64]) {
    use rayon::prelude::*;
    out.par_iter_mut()
        .zip(a.par_iter().zip(b.par_iter()))
        .for_each(|(o, (ai, bi))| *o = ai / bi);
}

#[cfg(not(feature = "parallel"))]
pub fn pointwise_div(out: &mut [f64], a: &[f64], b: &[f64]) {
    for (o, (ai, bi)) in out.iter_mut().zip(a.iter().zip(b)) {
        *o = ai / bi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_matches_sequential() {
        let n = 10_000;
        let v: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let par = sum_indexed(n, |i| v[i]);
        let blocks: Vec<f64> = v
            .chunks(BLOCK)
            .map(|c| c.iter().sum::<f64>())
            .collect();
        let seq: f64 = blocks.iter().sum();
        assert_eq!(par, seq, "chunked reduction must be bit-identical");
    }

    #[test]
    fn fill_is_in_order() {
        let mut out = vec![0usize; 257];
        fill_indexed(&mut out, |i| i * 3);
        assert!(out.iter().enumerate().all(|(i, &v)| v == i * 3));
    }
}
