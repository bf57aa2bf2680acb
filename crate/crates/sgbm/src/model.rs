use nalgebra::DMatrix;

use crate::error::{Result, SgbmError};

/// Drift coefficient `mu(t, x)` returning a `q`-vector.
pub type DriftFn = Box<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
/// Diffusion coefficient `sigma(t, x)` returning a row-major `q x d` matrix.
pub type DiffusionFn = Box<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Returns the lower-triangular `L` with `L * L^T = rho` and positive diagonal.
/// Fails with the index of the first non-positive pivot.
pub fn cholesky(rho: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = rho.nrows();
    if rho.ncols() != n {
        return Err(SgbmError::DimensionMismatch {
            context: "cholesky input must be square".into(),
        });
    }
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = rho[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(SgbmError::NotPositiveDefinite { pivot: i });
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Parameters of a correlated geometric Brownian motion market.
#[derive(Debug, Clone)]
pub struct GbmParams {
    pub rates: Vec<f64>,
    pub vols: Vec<f64>,
    pub correlation: DMatrix<f64>,
    pub chol: DMatrix<f64>,
}

impl GbmParams {
    pub fn new(rates: Vec<f64>, vols: Vec<f64>, correlation: DMatrix<f64>) -> Result<Self> {
        let q = rates.len();
        if vols.len() != q || correlation.nrows() != q || correlation.ncols() != q {
            return Err(SgbmError::DimensionMismatch {
                context: "rates, vols and correlation dimensions disagree".into(),
            });
        }
        for i in 0..q {
            if (correlation[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(SgbmError::Config(
                    "correlation matrix must have unit diagonal".into(),
                ));
            }
            for j in 0..i {
                if (correlation[(i, j)] - correlation[(j, i)]).abs() > 1e-12 {
                    return Err(SgbmError::Config("correlation matrix must be symmetric".into()));
                }
            }
        }
        let chol = cholesky(&correlation)?;
        let recomposed = &chol * chol.transpose();
        for i in 0..q {
            for j in 0..q {
                if (recomposed[(i, j)] - correlation[(i, j)]).abs() > 1e-12 {
                    return Err(SgbmError::Config(
                        "Cholesky factor does not reproduce the correlation matrix".into(),
                    ));
                }
            }
        }
        Ok(Self {
            rates,
            vols,
            correlation,
            chol,
        })
    }

    /// Homogeneous market: all assets share one rate and volatility, constant
    /// off-diagonal correlation.
    pub fn homogeneous(q: usize, rate: f64, vol: f64, rho_offdiag: f64) -> Result<Self> {
        let correlation = DMatrix::from_fn(q, q, |i, j| if i == j { 1.0 } else { rho_offdiag });
        Self::new(vec![rate; q], vec![vol; q], correlation)
    }

    pub fn dim(&self) -> usize {
        self.rates.len()
    }
}

/// Transition rule for the forward process.
pub enum Dynamics {
    /// Generic Euler step `x + mu(t,x) dt + sigma(t,x) dW`.
    Euler {
        drift: DriftFn,
        diffusion: DiffusionFn,
    },
    /// Euler step on correlated GBM coefficients: `S_i (1 + mu_i dt + vol_i (L dW)_i)`.
    GbmEuler(GbmParams),
    /// Exact log-normal GBM transition.
    ExactGbm(GbmParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Euler,
    GbmEuler,
    ExactGbm,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Euler => "Euler",
            SchemeKind::GbmEuler => "GbmEuler",
            SchemeKind::ExactGbm => "ExactGbm",
        }
    }
}

/// Forward process `X` with its transition scheme.
pub struct ForwardModel {
    pub state_dim: usize,
    pub driver_dim: usize,
    pub dynamics: Dynamics,
}

impl ForwardModel {
    pub fn euler(state_dim: usize, driver_dim: usize, drift: DriftFn, diffusion: DiffusionFn) -> Self {
        Self {
            state_dim,
            driver_dim,
            dynamics: Dynamics::Euler { drift, diffusion },
        }
    }

    /// One-dimensional Brownian motion (`mu = 0`, `sigma = 1`), exact under Euler.
    pub fn brownian() -> Self {
        Self::euler(
            1,
            1,
            Box::new(|_, _| vec![0.0]),
            Box::new(|_, _| vec![1.0]),
        )
    }

    pub fn gbm_euler(params: GbmParams) -> Self {
        let q = params.dim();
        Self {
            state_dim: q,
            driver_dim: q,
            dynamics: Dynamics::GbmEuler(params),
        }
    }

    pub fn exact_gbm(params: GbmParams) -> Self {
        let q = params.dim();
        Self {
            state_dim: q,
            driver_dim: q,
            dynamics: Dynamics::ExactGbm(params),
        }
    }

    pub fn scheme_kind(&self) -> SchemeKind {
        match self.dynamics {
            Dynamics::Euler { .. } => SchemeKind::Euler,
            Dynamics::GbmEuler(_) => SchemeKind::GbmEuler,
            Dynamics::ExactGbm(_) => SchemeKind::ExactGbm,
        }
    }

    pub fn gbm_params(&self) -> Option<&GbmParams> {
        match &self.dynamics {
            Dynamics::Euler { .. } => None,
            Dynamics::GbmEuler(p) | Dynamics::ExactGbm(p) => Some(p),
        }
    }

    pub fn drift(&self, t: f64, x: &[f64]) -> Vec<f64> {
        match &self.dynamics {
            Dynamics::Euler { drift, .. } => drift(t, x),
            Dynamics::GbmEuler(p) | Dynamics::ExactGbm(p) => {
                x.iter().zip(&p.rates).map(|(xi, mu)| mu * xi).collect()
            }
        }
    }

    /// Diffusion matrix `sigma(t, x)` as a row-major `q x d` slice.
    pub fn diffusion(&self, t: f64, x: &[f64]) -> Vec<f64> {
        match &self.dynamics {
            Dynamics::Euler { diffusion, .. } => diffusion(t, x),
            Dynamics::GbmEuler(p) | Dynamics::ExactGbm(p) => {
                let q = p.dim();
                let mut out = vec![0.0; q * q];
                for i in 0..q {
                    for r in 0..=i {
                        out[i * q + r] = p.vols[i] * x[i] * p.chol[(i, r)];
                    }
                }
                out
            }
        }
    }

    /// One transition step given the raw (pre-correlation) Brownian increment `dw`.
    pub fn step(&self, t: f64, x: &[f64], delta: f64, dw: &[f64]) -> Vec<f64> {
        match &self.dynamics {
            Dynamics::Euler { drift, diffusion } => {
                let mu = drift(t, x);
                let sigma = diffusion(t, x);
                let d = self.driver_dim;
                (0..self.state_dim)
                    .map(|i| {
                        let noise: f64 =
                            (0..d).map(|r| sigma[i * d + r] * dw[r]).sum();
                        x[i] + mu[i] * delta + noise
                    })
                    .collect()
            }
            Dynamics::GbmEuler(p) => {
                let q = p.dim();
                (0..q)
                    .map(|i| {
                        let corr: f64 = (0..=i).map(|r| p.chol[(i, r)] * dw[r]).sum();
                        x[i] * (1.0 + p.rates[i] * delta + p.vols[i] * corr)
                    })
                    .collect()
            }
            Dynamics::ExactGbm(p) => {
                let q = p.dim();
                (0..q)
                    .map(|i| {
                        let corr: f64 = (0..=i).map(|r| p.chol[(i, r)] * dw[r]).sum();
                        let vol = p.vols[i];
                        x[i] * ((p.rates[i] - 0.5 * vol * vol) * delta + vol * corr).exp()
                    })
                    .collect()
            }
        }
    }
}

/// The 5-asset DAX correlation matrix used by the arithmetic-basket experiment.
pub fn dax_correlation() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        5,
        5,
        &[
            1.00, 0.79, 0.82, 0.91, 0.84, //
            0.79, 1.00, 0.73, 0.80, 0.76, //
            0.82, 0.73, 1.00, 0.77, 0.72, //
            0.91, 0.80, 0.77, 1.00, 0.90, //
            0.84, 0.76, 0.72, 0.90, 1.00,
        ],
    )
}

pub const DAX_VOLS: [f64; 5] = [0.518, 0.648, 0.623, 0.570, 0.530];
pub const DAX_WEIGHTS: [f64; 5] = [38.1, 6.5, 5.7, 27.0, 22.7];
