use crate::error::{Result, SgbmError};

/// Time partition `0 = t_0 < t_1 < ... < t_N = T` with precomputed step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    deltas: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(SgbmError::Config(
                "time grid needs at least two points".into(),
            ));
        }
        if times[0] != 0.0 {
            return Err(SgbmError::Config("time grid must start at 0".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0] || !w[1].is_finite()) {
            return Err(SgbmError::Config(
                "time grid must be finite and strictly increasing".into(),
            ));
        }
        let deltas = times.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self { times, deltas })
    }

    /// Uniform grid with `n` steps of size `t / n`.
    pub fn uniform(t: f64, n: usize) -> Self {
        let times = (0..=n).map(|k| t * k as f64 / n as f64).collect();
        Self::new(times).expect("uniform grid is valid")
    }

    /// Number of steps `N` (one less than the number of grid points).
    pub fn steps(&self) -> usize {
        self.deltas.len()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn delta(&self, k: usize) -> f64 {
        self.deltas[k]
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Mesh ratio `R_pi = max_{k <= N-2} delta_k / delta_{k+1}`; 1 for a single-step grid.
    pub fn mesh_ratio(&self) -> f64 {
        self.deltas
            .windows(2)
            .map(|w| w[0] / w[1])
            .fold(1.0_f64, f64::max)
    }

    /// Largest step size `C_pi`.
    pub fn max_delta(&self) -> f64 {
        self.deltas.iter().cloned().fold(0.0, f64::max)
    }
}
