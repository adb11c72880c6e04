//! Summation with an order fixed independently of the worker count.

use num_complex::Complex64;
use rayon::prelude::*;

/// Terms per parallel chunk. Chunk boundaries depend only on the input
/// length, so the reduction tree is identical for any number of threads.
pub const CHUNK: usize = 1024;

pub fn pairwise_sum(v: &[Complex64]) -> Complex64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

pub fn pairwise_sum_f64(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum_f64(&v[..mid]) + pairwise_sum_f64(&v[mid..])
}

/// Maps `f` over `items` in parallel and reduces pairwise in a fixed order.
pub fn deterministic_map_sum<T, F>(items: &[T], f: F) -> Complex64
where
    T: Sync,
    F: Fn(&T) -> Complex64 + Sync,
{
    if items.len() <= CHUNK {
        let terms: Vec<Complex64> = items.iter().map(&f).collect();
        return pairwise_sum(&terms);
    }
    let partial: Vec<Complex64> = items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let terms: Vec<Complex64> = chunk.iter().map(&f).collect();
            pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&partial)
}

/// Neumaier's compensated running sum, for streams too long to buffer.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningSum {
    sum: Complex64,
    comp: Complex64,
}

fn two_sum(acc: f64, comp: &mut f64, x: f64) -> f64 {
    let t = acc + x;
    if acc.abs() >= x.abs() {
        *comp += (acc - t) + x;
    } else {
        *comp += (x - t) + acc;
    }
    t
}

impl RunningSum {
    pub fn add(&mut self, z: Complex64) {
        self.sum.re = two_sum(self.sum.re, &mut self.comp.re, z.re);
        self.sum.im = two_sum(self.sum.im, &mut self.comp.im, z.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}
