//! Regression bases and their closed-form one-step conditional expectations.
//!
//! Regress-later needs `E^x[p_l(X_{k+1})]` and `E^x[p_l(X_{k+1}) dW_r / dt]`
//! in closed form. Each basis family is paired with the transition scheme that
//! makes these expectations exact:
//! monomials with the generic Euler step (Gaussian one-step law),
//! weighted-sum powers with the GBM Euler step (the weighted sum is affine in
//! the increment, hence Gaussian), and geometric-mean powers with the exact
//! GBM step (the geometric mean stays log-normal).

use crate::error::{Result, SgbmError};
use crate::model::{Dynamics, ForwardModel};

#[derive(Debug, Clone, PartialEq)]
pub enum BasisSpec {
    /// `p_k(x) = x^(k-1)` on a scalar state.
    Monomials { count: usize },
    /// `p_k(x) = (sum_i w_i x_i)^(k-1)`.
    WeightedSumPowers { count: usize, weights: Vec<f64> },
    /// `p_k(x) = (prod_i x_i)^((k-1)/q)`, powers of the geometric mean.
    GeometricMeanPowers { count: usize, dim: usize },
}

impl BasisSpec {
    pub fn len(&self) -> usize {
        match self {
            BasisSpec::Monomials { count } => *count,
            BasisSpec::WeightedSumPowers { count, .. } => *count,
            BasisSpec::GeometricMeanPowers { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state_dim(&self) -> usize {
        match self {
            BasisSpec::Monomials { .. } => 1,
            BasisSpec::WeightedSumPowers { weights, .. } => weights.len(),
            BasisSpec::GeometricMeanPowers { dim, .. } => *dim,
        }
    }

    /// Evaluate `(p_1(x), ..., p_Q(x))`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.state_dim() {
            return Err(SgbmError::DimensionMismatch {
                context: format!(
                    "basis expects state dimension {}, got {}",
                    self.state_dim(),
                    x.len()
                ),
            });
        }
        let scalar = match self {
            BasisSpec::Monomials { .. } => x[0],
            BasisSpec::WeightedSumPowers { weights, .. } => {
                weights.iter().zip(x).map(|(w, xi)| w * xi).sum()
            }
            BasisSpec::GeometricMeanPowers { dim, .. } => {
                if x.iter().any(|&xi| xi <= 0.0) {
                    return Err(SgbmError::Domain {
                        context: "geometric-mean basis requires strictly positive states".into(),
                    });
                }
                (x.iter().map(|xi| xi.ln()).sum::<f64>() / *dim as f64).exp()
            }
        };
        Ok(powers(scalar, self.len()))
    }
}

fn powers(base: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut acc = 1.0;
    for _ in 0..count {
        out.push(acc);
        acc *= base;
    }
    out
}

/// One-step conditional expectations of the basis at a fixed state.
///
/// `e_p[l] = E^x[p_l(X_{k+1})]` and `e_pdw[r][l] = E^x[p_l(X_{k+1}) dW_r / dt]`.
#[derive(Debug, Clone)]
pub struct CondExpectation {
    pub e_p: Vec<f64>,
    pub e_pdw: Vec<Vec<f64>>,
}

/// Raw moments `E[G^n]` for `G ~ N(mean, var)`, `n = 0..=max_pow`.
///
/// Central moments follow the recurrence `c_n = (n-1) var c_{n-2}`; raw moments
/// come from the binomial expansion around the mean.
pub fn gaussian_raw_moments(mean: f64, var: f64, max_pow: usize) -> Vec<f64> {
    let mut central = vec![0.0; max_pow + 1];
    central[0] = 1.0;
    for n in 2..=max_pow {
        central[n] = (n - 1) as f64 * var * central[n - 2];
    }
    let mut raw = vec![0.0; max_pow + 1];
    for n in 0..=max_pow {
        let mut binom = 1.0;
        let mut sum = 0.0;
        for j in 0..=n {
            sum += binom * mean.powi((n - j) as i32) * central[j];
            binom *= (n - j) as f64 / (j + 1) as f64;
        }
        raw[n] = sum;
    }
    raw
}

/// Gaussian-power expectations shared by the monomial and weighted-sum bases.
///
/// The one-step value is `U = mean + psi . dW` with `dW ~ N(0, delta I)`, so
/// `E[U^a]` follows from the Gaussian moments and
/// `E[U^a dW_r / delta] = a E[U^(a-1)] psi_r` by the integration-by-parts
/// (gradient) identity.
fn gaussian_power_expectations(mean: f64, psi: &[f64], delta: f64, count: usize) -> CondExpectation {
    let var = psi.iter().map(|p| p * p).sum::<f64>() * delta;
    let moments = gaussian_raw_moments(mean, var, count.saturating_sub(1));
    let e_p = moments.clone();
    let e_pdw = psi
        .iter()
        .map(|&psi_r| {
            (0..count)
                .map(|a| {
                    if a == 0 {
                        0.0
                    } else {
                        a as f64 * moments[a - 1] * psi_r
                    }
                })
                .collect()
        })
        .collect();
    CondExpectation { e_p, e_pdw }
}

/// Closed-form conditional expectations for a supported (basis, scheme) pairing.
pub fn cond_expect(
    basis: &BasisSpec,
    model: &ForwardModel,
    t: f64,
    delta: f64,
    x: &[f64],
) -> Result<CondExpectation> {
    let unsupported = || SgbmError::UnsupportedPairing {
        basis: format!("{basis:?}"),
        scheme: model.scheme_kind().name().to_string(),
    };
    match (basis, &model.dynamics) {
        (BasisSpec::Monomials { count }, Dynamics::Euler { drift, diffusion }) => {
            if model.state_dim != 1 || model.driver_dim != 1 {
                return Err(unsupported());
            }
            let mu = drift(t, x)[0];
            let sigma = diffusion(t, x)[0];
            let mean = x[0] + mu * delta;
            Ok(gaussian_power_expectations(mean, &[sigma], delta, *count))
        }
        (BasisSpec::WeightedSumPowers { count, weights }, Dynamics::GbmEuler(p)) => {
            let q = p.dim();
            if weights.len() != q || x.len() != q {
                return Err(SgbmError::DimensionMismatch {
                    context: "weighted-sum basis dimension disagrees with model".into(),
                });
            }
            let mean: f64 = (0..q)
                .map(|i| weights[i] * x[i] * (1.0 + p.rates[i] * delta))
                .sum();
            let psi: Vec<f64> = (0..q)
                .map(|r| {
                    (r..q)
                        .map(|i| weights[i] * x[i] * p.vols[i] * p.chol[(i, r)])
                        .sum()
                })
                .collect();
            Ok(gaussian_power_expectations(mean, &psi, delta, *count))
        }
        (BasisSpec::GeometricMeanPowers { count, dim }, Dynamics::ExactGbm(p)) => {
            let q = p.dim();
            if *dim != q || x.len() != q {
                return Err(SgbmError::DimensionMismatch {
                    context: "geometric-mean basis dimension disagrees with model".into(),
                });
            }
            if x.iter().any(|&xi| xi <= 0.0) {
                return Err(SgbmError::Domain {
                    context: "geometric-mean basis requires strictly positive states".into(),
                });
            }
            // G' = G exp(c + theta . dW): log-normal in the raw increments.
            let g = (x.iter().map(|xi| xi.ln()).sum::<f64>() / q as f64).exp();
            let c: f64 = (0..q)
                .map(|i| (p.rates[i] - 0.5 * p.vols[i] * p.vols[i]) * delta)
                .sum::<f64>()
                / q as f64;
            let theta: Vec<f64> = (0..q)
                .map(|r| (r..q).map(|i| p.vols[i] * p.chol[(i, r)]).sum::<f64>() / q as f64)
                .collect();
            let theta_sq: f64 = theta.iter().map(|t| t * t).sum();
            let e_p: Vec<f64> = (0..*count)
                .map(|a| {
                    let a = a as f64;
                    g.powf(a) * (a * c + 0.5 * a * a * theta_sq * delta).exp()
                })
                .collect();
            let e_pdw = theta
                .iter()
                .map(|&theta_r| {
                    (0..*count)
                        .map(|a| e_p[a] * a as f64 * theta_r)
                        .collect()
                })
                .collect();
            Ok(CondExpectation { e_p, e_pdw })
        }
        _ => Err(unsupported()),
    }
}
