use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SgbmError};

/// Relative rank cutoff for the minimal-norm least-squares solve.
const RANK_TOLERANCE: f64 = 1e-12;

/// Result of one bundle-local least-squares fit.
#[derive(Debug, Clone)]
pub struct RegressionOutput {
    pub coefficients: DVector<f64>,
    /// Euclidean norm of the coefficient vector, compared against the guard `L`.
    pub norm: f64,
    /// Smallest over largest singular value of the design matrix.
    pub singular_ratio: f64,
}

/// Minimal-Euclidean-norm least-squares fit of `targets` on the rows of `design`.
///
/// Rank-deficient designs degrade to the minimal-norm minimizer instead of
/// failing; the coefficient-norm guard governs acceptance downstream.
/// `path_ids` labels the rows for error reporting.
pub fn regress_bundle(
    design: &DMatrix<f64>,
    targets: &DVector<f64>,
    path_ids: &[usize],
) -> Result<RegressionOutput> {
    debug_assert_eq!(design.nrows(), targets.len());
    for (row, &id) in path_ids.iter().enumerate() {
        if !targets[row].is_finite() || design.row(row).iter().any(|v| !v.is_finite()) {
            return Err(SgbmError::NonFiniteData { path: id });
        }
    }
    let svd = design.clone().svd(true, true);
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let s_min = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let eps = if s_max > 0.0 { s_max * RANK_TOLERANCE } else { f64::MIN_POSITIVE };
    let coefficients = svd
        .solve(targets, eps)
        .map_err(|e| SgbmError::Config(format!("least-squares solve failed: {e}")))?;
    let norm = coefficients.norm();
    Ok(RegressionOutput {
        coefficients,
        norm,
        singular_ratio: if s_max > 0.0 { s_min / s_max } else { 0.0 },
    })
}

/// True iff every coefficient-vector norm is within the bound `L`.
///
/// `L = +inf` disables the guard entirely.
pub fn check_acceptance<I: IntoIterator<Item = f64>>(norms: I, l: f64) -> bool {
    norms.into_iter().all(|n| n <= l)
}
