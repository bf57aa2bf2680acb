use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use std::io::Write;

use crate::error::{Result, SgbmError};
use crate::grid::TimeGrid;
use crate::model::ForwardModel;

/// Simulated forward paths plus the Brownian increments that produced them.
///
/// Increments are the raw (pre-correlation) standard normal draws scaled by
/// `sqrt(delta_k)`; correlation is applied inside the model transition.
pub struct PathCloud {
    pub grid: TimeGrid,
    pub paths: usize,
    pub state_dim: usize,
    pub driver_dim: usize,
    pub seed: u64,
    states: Vec<f64>,
    increments: Vec<f64>,
}

impl PathCloud {
    /// State `X^m_{t_k}` as a `q`-slice.
    pub fn state(&self, m: usize, k: usize) -> &[f64] {
        let q = self.state_dim;
        let stride = (self.grid.steps() + 1) * q;
        &self.states[m * stride + k * q..m * stride + (k + 1) * q]
    }

    /// Increment `dW^m_k` as a `d`-slice.
    pub fn increment(&self, m: usize, k: usize) -> &[f64] {
        let d = self.driver_dim;
        let stride = self.grid.steps() * d;
        &self.increments[m * stride + k * d..m * stride + (k + 1) * d]
    }

    /// Debug dump: one row per (path, step) with state and increment columns.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        write!(out, "path,step")?;
        for i in 0..self.state_dim {
            write!(out, ",x{i}")?;
        }
        for r in 0..self.driver_dim {
            write!(out, ",dw{r}")?;
        }
        writeln!(out)?;
        for m in 0..self.paths {
            for k in 0..=self.grid.steps() {
                write!(out, "{m},{k}")?;
                for v in self.state(m, k) {
                    write!(out, ",{v}")?;
                }
                if k < self.grid.steps() {
                    for v in self.increment(m, k) {
                        write!(out, ",{v}")?;
                    }
                } else {
                    for _ in 0..self.driver_dim {
                        write!(out, ",")?;
                    }
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// Uniform draw in the open interval (0, 1) with 53 bits of precision.
fn uniform_open(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Simulate `m_paths` forward paths on `grid`, deterministic in `seed`.
///
/// Each path draws from its own counter-based stream keyed by (seed, path),
/// so the result is independent of any parallel execution order. Normals come
/// from the inverse CDF of uniform draws.
pub fn simulate_cloud(
    model: &ForwardModel,
    grid: &TimeGrid,
    x0: &[f64],
    m_paths: usize,
    seed: u64,
) -> Result<PathCloud> {
    if m_paths == 0 {
        return Err(SgbmError::Config("path count must be at least 1".into()));
    }
    if x0.len() != model.state_dim {
        return Err(SgbmError::DimensionMismatch {
            context: format!(
                "x0 has dimension {}, model expects {}",
                x0.len(),
                model.state_dim
            ),
        });
    }
    let n = grid.steps();
    let q = model.state_dim;
    let d = model.driver_dim;
    let mut states = vec![0.0; m_paths * (n + 1) * q];
    let mut increments = vec![0.0; m_paths * n * d];
    let normal = Normal::standard();

    let failure = states
        .par_chunks_mut((n + 1) * q)
        .zip(increments.par_chunks_mut(n * d))
        .enumerate()
        .map(|(m, (path_states, path_incs))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(m as u64);
            path_states[..q].copy_from_slice(x0);
            for k in 0..n {
                let sqrt_dt = grid.delta(k).sqrt();
                for r in 0..d {
                    path_incs[k * d + r] = normal.inverse_cdf(uniform_open(&mut rng)) * sqrt_dt;
                }
                let x = &path_states[k * q..(k + 1) * q];
                let next = model.step(grid.time(k), x, grid.delta(k), &path_incs[k * d..(k + 1) * d]);
                if next.iter().any(|v| !v.is_finite()) {
                    return Err(SgbmError::SimulationOverflow { path: m, step: k });
                }
                path_states[(k + 1) * q..(k + 2) * q].copy_from_slice(&next);
            }
            Ok(())
        })
        .find_any(|r| r.is_err());
    if let Some(err) = failure {
        err?;
    }

    Ok(PathCloud {
        grid: grid.clone(),
        paths: m_paths,
        state_dim: q,
        driver_dim: d,
        seed,
        states,
        increments,
    })
}
