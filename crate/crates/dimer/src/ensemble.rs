//! Parallel positive-P ensembles and the raw trajectory dump.
//!
//! Dump layout, all little-endian: the magic `PPD1`, then `n_traj: u64`,
//! `n_steps: u64`, `dt: f64`. Each trajectory follows as 16 columns of
//! `n_steps` `f64` values: real then imaginary part of each of the eight
//! variables in the order `a1 a1p a2 a2p b1 b1p b2 b2p`. Steps after a
//! divergence are NaN.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use dimer_core::model::ModelParams;
use dimer_core::positivep::{EnsembleStats, SdeConfig, SdeRunner, TrajectoryOutcome};
use rayon::prelude::*;

use crate::error::{CliError, Result};

pub const DUMP_MAGIC: &[u8; 4] = b"PPD1";
pub const THREADS_ENV: &str = "DIMER_THREADS";

/// A pool capped by `DIMER_THREADS` when it is set to a positive integer.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::config(THREADS_ENV, format!("`{v}` is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::config(THREADS_ENV, e.to_string()))
}

/// Runs the ensemble on `pool`. Results do not depend on the thread count.
pub fn run_ensemble(
    p: &ModelParams,
    cfg: &SdeConfig,
    pool: &rayon::ThreadPool,
    dump: Option<&Path>,
) -> Result<EnsembleStats> {
    let runner = SdeRunner::new(p, cfg)?;
    let outcomes = match dump {
        None => {
            pool.install(|| (0..cfg.n_traj).into_par_iter().map(|i| runner.run_trajectory(i, None)).collect::<Vec<_>>())
        }
        Some(path) => run_dumping(&runner, cfg, pool, path)?,
    };
    Ok(runner.reduce(outcomes)?)
}

fn run_dumping(
    runner: &SdeRunner,
    cfg: &SdeConfig,
    pool: &rayon::ThreadPool,
    path: &Path,
) -> Result<Vec<TrajectoryOutcome>> {
    let n_steps = cfg.total_steps() + 1;
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| CliError::io(path, e);
    w.write_all(DUMP_MAGIC).map_err(io)?;
    w.write_all(&(cfg.n_traj as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&(n_steps as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&cfg.dt.to_le_bytes()).map_err(io)?;

    let chunk = pool.current_num_threads().max(1);
    let mut outcomes = Vec::with_capacity(cfg.n_traj);
    for start in (0..cfg.n_traj).step_by(chunk) {
        let end = (start + chunk).min(cfg.n_traj);
        let batch: Vec<(TrajectoryOutcome, Vec<f64>)> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|i| {
                    let mut cols = vec![f64::NAN; 16 * n_steps];
                    let mut record = |step: usize, x: &[num_complex::Complex64; 8]| {
                        if step < n_steps {
                            for (v, z) in x.iter().enumerate() {
                                cols[2 * v * n_steps + step] = z.re;
                                cols[(2 * v + 1) * n_steps + step] = z.im;
                            }
                        }
                    };
                    let out = runner.run_trajectory(i, Some(&mut record));
                    (out, cols)
                })
                .collect()
        });
        for (out, cols) in batch {
            for v in &cols {
                w.write_all(&v.to_le_bytes()).map_err(io)?;
            }
            outcomes.push(out);
        }
    }
    w.flush().map_err(io)?;
    Ok(outcomes)
}
