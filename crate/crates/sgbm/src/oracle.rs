//! Closed-form reference solutions used by tests and experiment error reporting.

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Result, SgbmError};
use crate::model::cholesky;

/// Exact solution of the sine benchmark: `(Y_t, Z_t) = (sin(x + t), cos(x + t))`.
pub fn example1_exact(t: f64, x: f64) -> (f64, f64) {
    ((x + t).sin(), (x + t).cos())
}

/// Black-Scholes European put with continuous dividend yield.
pub fn black_scholes_put(
    spot: f64,
    strike: f64,
    rate: f64,
    dividend: f64,
    vol: f64,
    maturity: f64,
) -> f64 {
    let df_r = (-rate * maturity).exp();
    let df_q = (-dividend * maturity).exp();
    if vol <= 0.0 || maturity <= 0.0 {
        // Deterministic forward: discounted intrinsic value.
        return df_r * (strike - spot * ((rate - dividend) * maturity).exp()).max(0.0);
    }
    let normal = Normal::standard();
    let sig_sqrt_t = vol * maturity.sqrt();
    let d1 = ((spot / strike).ln() + (rate - dividend + 0.5 * vol * vol) * maturity) / sig_sqrt_t;
    let d2 = d1 - sig_sqrt_t;
    strike * df_r * normal.cdf(-d2) - spot * df_q * normal.cdf(-d1)
}

/// Parameters of the geometric-basket European put reference price.
#[derive(Debug, Clone)]
pub struct GeometricBasketSpec {
    pub s0: Vec<f64>,
    pub strike: f64,
    pub rate: f64,
    pub vols: Vec<f64>,
    pub correlation: DMatrix<f64>,
    pub maturity: f64,
}

impl GeometricBasketSpec {
    /// The dimension-sweep benchmark: `S0 = 40`, `K = 40`, `r = 0.06`,
    /// `sigma = 0.2`, off-diagonal correlation `0.25`, `T = 1`.
    pub fn benchmark(q: usize) -> Self {
        Self {
            s0: vec![40.0; q],
            strike: 40.0,
            rate: 0.06,
            vols: vec![0.2; q],
            correlation: DMatrix::from_fn(q, q, |i, j| if i == j { 1.0 } else { 0.25 }),
            maturity: 1.0,
        }
    }
}

/// Price of a European put on the geometric mean of correlated GBM assets.
///
/// The geometric mean is itself log-normal: its variance rate is
/// `sig_hat^2 = (1/q^2) sum_ij vol_i vol_j rho_ij` and the drift shortfall
/// `delta = ((1/q) sum vol_i^2 - sig_hat^2) / 2` acts as a dividend yield in
/// the one-dimensional Black-Scholes put formula.
pub fn geometric_basket_put(spec: &GeometricBasketSpec) -> Result<f64> {
    let q = spec.s0.len();
    if spec.vols.len() != q || spec.correlation.nrows() != q || spec.correlation.ncols() != q {
        return Err(SgbmError::DimensionMismatch {
            context: "basket spec dimensions disagree".into(),
        });
    }
    if spec.s0.iter().any(|&s| s <= 0.0) || spec.strike <= 0.0 || spec.maturity <= 0.0 {
        return Err(SgbmError::Domain {
            context: "basket spec requires positive spot, strike and maturity".into(),
        });
    }
    cholesky(&spec.correlation)?;
    let g0 = (spec.s0.iter().map(|s| s.ln()).sum::<f64>() / q as f64).exp();
    let mut sig_hat_sq = 0.0;
    for i in 0..q {
        for j in 0..q {
            sig_hat_sq += spec.vols[i] * spec.vols[j] * spec.correlation[(i, j)];
        }
    }
    sig_hat_sq /= (q * q) as f64;
    let mean_vol_sq = spec.vols.iter().map(|v| v * v).sum::<f64>() / q as f64;
    let dividend = 0.5 * (mean_vol_sq - sig_hat_sq);
    Ok(black_scholes_put(
        g0,
        spec.strike,
        spec.rate,
        dividend,
        sig_hat_sq.sqrt(),
        spec.maturity,
    ))
}
