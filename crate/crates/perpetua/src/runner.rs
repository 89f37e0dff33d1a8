//! Deterministic parallel replication.
//!
//! Replication `r` of a given purpose draws from the ChaCha stream
//! `(purpose << 40) | r` of the master seed, so its random numbers do not
//! depend on the worker count or on scheduling. Results are collected in
//! replication order.

use perpetua_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::CliError;

/// Independent stream families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Simulation = 1,
    Reference = 2,
    Setup = 3,
}

/// Runs fail when more than this fraction of replications error.
pub const MAX_FAILURE_RATE: f64 = 1e-3;

pub fn stream_rng(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    assert!(index < 1 << 40, "replication index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 40) | index);
    rng
}

/// Run `f(r, rng)` for `r in 0..reps` on `workers` threads.
pub fn replicate<T, F>(workers: usize, seed: u64, purpose: Purpose, reps: usize, f: F) -> Result<Vec<Result<T, Error>>, CliError>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T, Error> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(seed, purpose, r as u64);
                f(r, &mut rng)
            })
            .collect()
    }))
}

/// Successful outcomes, in order, with the indices of the failures.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcomes<T> {
    pub values: Vec<(usize, T)>,
    pub failed: usize,
    pub total: usize,
}

/// Split results, failing when the error rate exceeds [`MAX_FAILURE_RATE`].
pub fn settle<T>(results: Vec<Result<T, Error>>) -> Result<Outcomes<T>, CliError> {
    let total = results.len();
    let mut values = Vec::with_capacity(total);
    let mut first = None;
    let mut failed = 0;
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(v) => values.push((r, v)),
            Err(e) => {
                failed += 1;
                first.get_or_insert(e);
            }
        }
    }
    if let Some(first) = first {
        if failed as f64 > MAX_FAILURE_RATE * total as f64 {
            return Err(CliError::TooManyFailures { failed, total, first });
        }
    }
    Ok(Outcomes { values, failed, total })
}

/// [`replicate`] followed by [`settle`].
pub fn replicate_settled<T, F>(workers: usize, seed: u64, purpose: Purpose, reps: usize, f: F) -> Result<Outcomes<T>, CliError>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T, Error> + Sync,
{
    settle(replicate(workers, seed, purpose, reps, f)?)
}
