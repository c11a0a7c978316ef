//! Deterministic chunked Monte Carlo expectations.
//!
//! The draw budget is split into fixed-size chunks; chunk `c` samples from a
//! seed derived as `(master, MC_CHUNK, c)` and partial sums are combined in
//! chunk order. The result is therefore a pure function of `(seed, draws)`,
//! independent of how many Rayon workers execute the chunks.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::samples::Samples;
use crate::seed::{self, domain};

const CHUNK: usize = 16_384;

/// Sample-mean estimate of a matrix-valued expectation with entrywise
/// standard errors.
#[derive(Debug, Clone)]
pub struct McMatrix {
    pub mean: DMatrix<f64>,
    pub std_err: DMatrix<f64>,
    pub draws: usize,
}

/// `E[f(x)]` over draws from `sampler`, matrix-valued integrand.
///
/// `f` writes the per-observation value into its output argument so the hot
/// loop performs no allocation.
pub fn expect_matrix(
    sampler: &(dyn Fn(u64, usize) -> Samples + Sync),
    seed: u64,
    draws: usize,
    rows: usize,
    cols: usize,
    f: &(dyn Fn(&[f64], &mut DMatrix<f64>) + Sync),
) -> McMatrix {
    assert!(draws > 0);
    let n_chunks = draws.div_ceil(CHUNK);
    let partials: Vec<(DMatrix<f64>, DMatrix<f64>, usize)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK.min(draws - c * CHUNK);
            let s = sampler(seed::derive_seed(seed, domain::MC_CHUNK, c as u64), n);
            let mut sum = DMatrix::zeros(rows, cols);
            let mut sumsq = DMatrix::zeros(rows, cols);
            let mut tmp = DMatrix::zeros(rows, cols);
            for m in 0..s.count() {
                f(s.obs(m), &mut tmp);
                for (acc, (&v, accsq)) in sum.iter_mut().zip(tmp.iter().zip(sumsq.iter_mut())) {
                    *acc += v;
                    *accsq += v * v;
                }
            }
            (sum, sumsq, n)
        })
        .collect();

    let mut sum = DMatrix::zeros(rows, cols);
    let mut sumsq = DMatrix::zeros(rows, cols);
    for (s, sq, _) in &partials {
        sum += s;
        sumsq += sq;
    }
    let n = draws as f64;
    let mean = &sum / n;
    let var_of_mean = sumsq.zip_map(&mean, |sq, m| ((sq / n - m * m).max(0.0)) / n);
    McMatrix {
        mean,
        std_err: var_of_mean.map(f64::sqrt),
        draws,
    }
}

/// Scalar estimate with standard error.
#[derive(Debug, Clone, Copy)]
pub struct McScalar {
    pub mean: f64,
    pub std_err: f64,
    pub draws: usize,
}

pub fn expect_scalar(
    sampler: &(dyn Fn(u64, usize) -> Samples + Sync),
    seed: u64,
    draws: usize,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> McScalar {
    let m = expect_matrix(sampler, seed, draws, 1, 1, &|x, out| out[(0, 0)] = f(x));
    McScalar {
        mean: m.mean[(0, 0)],
        std_err: m.std_err[(0, 0)],
        draws,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normal_sampler(seed: u64, n: usize) -> Samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        Samples::from_vec(1, n, data)
    }

    #[test]
    fn second_moment_of_standard_normal() {
        let est = expect_scalar(&normal_sampler, 7, 200_000, &|x| x[0] * x[0]);
        assert!((est.mean - 1.0).abs() < 4.0 * est.std_err);
        assert!(est.std_err < 0.01);
    }

    #[test]
    fn result_does_not_depend_on_worker_count() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| expect_scalar(&normal_sampler, 11, 100_000, &|x| x[0].abs()))
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_err.to_bits(), b.std_err.to_bits());
    }
}
