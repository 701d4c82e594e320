//! Monte Carlo over frozen batches of standard normal vectors.
//!
//! A [`GaussianBatch`] is drawn once and reused, so an estimator evaluated at
//! different parameters sees the same noise (common random numbers). Each
//! stored vector is used together with its negation (antithetic pairs).
//! Sampling and reduction are chunked with a fixed chunk size and per-chunk
//! streams, and chunk statistics are merged in a fixed pairwise order, which
//! makes every result independent of the thread count.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::stream_rng;

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Self { mean, stderr: 0.0 }
    }
}

/// Running mean and sum of squared deviations (Welford / Chan).
#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Stats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(self, other: Stats) -> Stats {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Stats {
            n,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.n as f64 * w,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn estimate(&self) -> Estimate {
        let stderr = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean: self.mean,
            stderr,
        }
    }
}

/// Deterministic pairwise reduction.
fn merge_tree(mut parts: Vec<Stats>) -> Stats {
    while parts.len() > 1 {
        parts = parts
            .chunks(2)
            .map(|c| if c.len() == 2 { c[0].merge(c[1]) } else { c[0] })
            .collect();
    }
    parts.pop().unwrap_or_default()
}

/// Merge a list of per-sample statistic vectors into estimates.
fn merge_multi<const K: usize>(parts: Vec<[Stats; K]>) -> [Estimate; K] {
    core::array::from_fn(|k| merge_tree(parts.iter().map(|p| p[k]).collect()).estimate())
}

const CHUNK_PAIRS: usize = 1024;

/// A frozen batch of `pairs` standard normal vectors of length `dim`.
#[derive(Debug, Clone)]
pub struct GaussianBatch {
    dim: usize,
    pairs: usize,
    seed: u64,
    data: Vec<f64>,
}

impl GaussianBatch {
    /// Draws `ceil(samples / 2)` vectors; each is evaluated with its negation,
    /// so `samples` function evaluations are made per estimate.
    pub fn new(dim: usize, samples: usize, seed: u64) -> Self {
        let pairs = samples.div_ceil(2).max(1);
        let fill = |c: usize, out: &mut [f64]| {
            let mut rng = stream_rng(seed, c as u64);
            for v in out.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
        };
        let mut data = vec![0.0; pairs * dim];
        #[cfg(feature = "std")]
        {
            use rayon::prelude::*;
            data.par_chunks_mut(CHUNK_PAIRS * dim)
                .enumerate()
                .for_each(|(c, out)| fill(c, out));
        }
        #[cfg(not(feature = "std"))]
        for (c, out) in data.chunks_mut(CHUNK_PAIRS * dim).enumerate() {
            fill(c, out);
        }
        Self {
            dim,
            pairs,
            seed,
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of function evaluations per estimate (twice the stored vectors).
    pub fn samples(&self) -> usize {
        2 * self.pairs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Estimates `E f(Z)`. The closure receives one vector and a scratch
    /// buffer of the same length.
    pub fn estimate<F>(&self, f: F) -> Estimate
    where
        F: Fn(&[f64], &mut [f64]) -> f64 + Sync,
    {
        let [e] = self.estimate_multi(|z, s| [f(z, s)]);
        e
    }

    /// Estimates `K` expectations from the same samples. Each antithetic pair
    /// contributes one averaged observation, so the standard errors account
    /// for the within-pair correlation.
    pub fn estimate_multi<const K: usize, F>(&self, f: F) -> [Estimate; K]
    where
        F: Fn(&[f64], &mut [f64]) -> [f64; K] + Sync,
    {
        let dim = self.dim;
        let run_chunk = |chunk: &[f64]| -> [Stats; K] {
            let mut stats = [Stats::default(); K];
            let mut neg = vec![0.0; dim];
            let mut scratch = vec![0.0; dim];
            for z in chunk.chunks_exact(dim.max(1)) {
                for (n, &v) in neg.iter_mut().zip(z) {
                    *n = -v;
                }
                let a = f(z, &mut scratch);
                let b = f(&neg, &mut scratch);
                for k in 0..K {
                    stats[k].push(0.5 * (a[k] + b[k]));
                }
            }
            stats
        };
        let width = CHUNK_PAIRS * dim.max(1);
        #[cfg(feature = "std")]
        let parts: Vec<[Stats; K]> = {
            use rayon::prelude::*;
            self.data.par_chunks(width).map(run_chunk).collect()
        };
        #[cfg(not(feature = "std"))]
        let parts: Vec<[Stats; K]> = self.data.chunks(width).map(run_chunk).collect();
        merge_multi(parts)
    }
}
