//! Khintchine sampling: `X_i = Y·U_i` with `Y ~ χ₃` and independent
//! `U_i ~ Uniform[-1, 1]`, plus goodness-of-fit statistics.
//!
//! Every row draws from its own ChaCha20 stream selected by the row index,
//! so rows can be generated in any order (or in parallel) with identical
//! output.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::specfun;

/// Identifies the generator and variate transforms; recorded in every batch
/// and in CLI sample output.
pub const GENERATOR_ID: &str = "chacha20-rowstream/inverse-normal-acklam-halley/v1";

/// Asymptotic Kolmogorov–Smirnov critical coefficient at α = 0.01.
pub const KS_CRITICAL_COEFF_001: f64 = 1.63;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("{0}")]
    InvalidArgument(String),
    #[error("column is empty")]
    EmptyColumn,
    #[error("column contains non-finite values")]
    NonFinite,
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
fn uniform_open01<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn std_normal<R: RngCore>(rng: &mut R) -> f64 {
    specfun::std_normal_quantile(uniform_open01(rng))
}

/// One draw of `Y = ‖(Z₁, Z₂, Z₃)‖₂`, so `Y² ~ χ²₃`.
pub fn sample_chi3<R: RngCore>(rng: &mut R) -> f64 {
    let (z1, z2, z3) = (std_normal(rng), std_normal(rng), std_normal(rng));
    (z1 * z1 + z2 * z2 + z3 * z3).sqrt()
}

fn row_rng(seed: u64, row: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(row);
    rng
}

fn fill_row(seed: u64, row: u64, out: &mut [f64]) {
    let mut rng = row_rng(seed, row);
    let y = sample_chi3(&mut rng);
    for x in out.iter_mut() {
        *x = y * (2.0 * uniform_open01(&mut rng) - 1.0);
    }
}

/// The radius `Y` that generated row `row` of a batch with this seed.
pub fn row_radius(seed: u64, row: u64) -> f64 {
    sample_chi3(&mut row_rng(seed, row))
}

/// `n` draws from the `p`-dimensional density, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    data: Vec<f64>,
    n: usize,
    p: usize,
    seed: u64,
    generator_id: String,
}

impl SampleBatch {
    /// Wraps existing data (e.g. read back from a file).
    pub fn from_parts(
        data: Vec<f64>,
        n: usize,
        p: usize,
        seed: u64,
        generator_id: String,
    ) -> Result<Self, SampleError> {
        if p == 0 || n == 0 || data.len() != n * p {
            return Err(SampleError::InvalidArgument(format!(
                "data of length {} does not form {n} rows of {p} columns",
                data.len()
            )));
        }
        Ok(Self {
            data,
            n,
            p,
            seed,
            generator_id,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn generator_id(&self) -> &str {
        &self.generator_id
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        assert!(j < self.p, "column {j} out of range for p = {}", self.p);
        self.rows().map(|r| r[j]).collect()
    }
}

pub fn sample_joint(p: usize, n: usize, seed: u64) -> Result<SampleBatch, SampleError> {
    if p == 0 {
        return Err(SampleError::InvalidArgument("dimension p must be at least 1".into()));
    }
    if n == 0 {
        return Err(SampleError::InvalidArgument("sample size n must be at least 1".into()));
    }
    let mut data = vec![0.0; n * p];
    data.par_chunks_mut(p)
        .enumerate()
        .for_each(|(i, row)| fill_row(seed, i as u64, row));
    Ok(SampleBatch {
        data,
        n,
        p,
        seed,
        generator_id: GENERATOR_ID.to_string(),
    })
}

/// Fraction of rows with `‖x‖∞ <= a`.
pub fn empirical_maxnorm_cdf(batch: &SampleBatch, a: f64) -> f64 {
    let hits = batch
        .rows()
        .filter(|r| r.iter().fold(0.0_f64, |m, v| m.max(v.abs())) <= a)
        .count();
    hits as f64 / batch.n() as f64
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `column` and Φ.
pub fn ks_statistic(column: &[f64]) -> Result<f64, SampleError> {
    if column.is_empty() {
        return Err(SampleError::EmptyColumn);
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(SampleError::NonFinite);
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let cdf = specfun::std_normal_cdf(x);
        let above = (i + 1) as f64 / n - cdf;
        let below = cdf - i as f64 / n;
        d.max(above).max(below)
    }))
}

/// `1.63 / √n`
pub fn ks_critical_value_001(n: usize) -> f64 {
    KS_CRITICAL_COEFF_001 / (n as f64).sqrt()
}
