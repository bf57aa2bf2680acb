//! Backward recursion: terminal assignment, per-step bundling, bundle-wise
//! regressions and analytic-expectation reconstruction of the (Y, Z) cloud.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::{cond_expect, BasisSpec};
use crate::bundling::{make_bundles, SortKey};
use crate::cloud::{simulate_cloud, PathCloud};
use crate::error::{Result, SgbmError};
use crate::grid::TimeGrid;
use crate::model::ForwardModel;
use crate::regression::{check_acceptance, regress_bundle};

pub type DriverFn = Box<dyn Fn(f64, &[f64], f64, &[f64]) -> f64 + Send + Sync>;
pub type TerminalFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type TerminalGradFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A decoupled forward-backward problem: forward dynamics plus driver and
/// terminal condition of the backward pair.
pub struct BsdeProblem {
    pub model: ForwardModel,
    pub grid: TimeGrid,
    pub x0: Vec<f64>,
    /// Driver `f(t, x, y, z)`.
    pub driver: DriverFn,
    /// Terminal condition `Phi(x)`.
    pub terminal: TerminalFn,
    /// Terminal gradient, consumed by the `Z` assignment at `t_N`.
    pub terminal_gradient: TerminalGradFn,
    /// Declared Lipschitz constant of the driver; documentation only.
    pub lipschitz_constant: f64,
}

/// Theta-scheme and regression configuration for one solve.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub theta1: f64,
    pub theta2: f64,
    /// Picard iterations `I`; used when `theta1 > 0`.
    pub picard_iterations: usize,
    pub bundles: usize,
    /// Coefficient-norm guard `L`; `+inf` disables rejection.
    pub coeff_bound: f64,
    pub basis: BasisSpec,
    pub sort_key: SortKey,
    /// Run the beta regressions even when `theta2 = 1` (their coefficient is
    /// zero then); exists to test the skip equivalence.
    pub force_beta: bool,
}

impl SchemeConfig {
    pub fn explicit(bundles: usize, coeff_bound: f64, basis: BasisSpec, sort_key: SortKey) -> Self {
        Self {
            theta1: 0.0,
            theta2: 1.0,
            picard_iterations: 1,
            bundles,
            coeff_bound,
            basis,
            sort_key,
            force_beta: false,
        }
    }

    pub fn crank_nicolson(
        bundles: usize,
        coeff_bound: f64,
        picard_iterations: usize,
        basis: BasisSpec,
        sort_key: SortKey,
    ) -> Self {
        Self {
            theta1: 0.5,
            theta2: 0.5,
            picard_iterations,
            bundles,
            coeff_bound,
            basis,
            sort_key,
            force_beta: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta1) {
            return Err(SgbmError::Config("theta1 must be in [0, 1]".into()));
        }
        if !(self.theta2 > 0.0 && self.theta2 <= 1.0) {
            return Err(SgbmError::Config("theta2 must be in (0, 1]".into()));
        }
        if self.theta1 > 0.0 && self.picard_iterations == 0 {
            return Err(SgbmError::Config(
                "picard_iterations must be >= 1 when theta1 > 0".into(),
            ));
        }
        if self.bundles == 0 {
            return Err(SgbmError::Config("bundle count must be >= 1".into()));
        }
        if self.coeff_bound <= 0.0 || self.coeff_bound.is_nan() {
            return Err(SgbmError::Config("coefficient bound L must be positive".into()));
        }
        if self.basis.is_empty() {
            return Err(SgbmError::Config("basis must have at least one element".into()));
        }
        Ok(())
    }

    fn needs_beta(&self) -> bool {
        self.theta2 < 1.0 || self.force_beta
    }
}

/// Coefficients of one bundle at one time step.
#[derive(Debug, Clone)]
pub struct BundleCoefficients {
    pub alpha: DVector<f64>,
    /// One vector per Brownian dimension; empty when the beta regressions are skipped.
    pub beta: Vec<DVector<f64>>,
    pub gamma: DVector<f64>,
    pub norms: Vec<f64>,
    pub singular_ratio: f64,
}

/// All bundle regressions of one backward step plus the step acceptance flag.
#[derive(Debug, Clone)]
pub struct StepRegression {
    pub bundles: Vec<BundleCoefficients>,
    pub accepted: bool,
}

impl StepRegression {
    pub fn max_norm(&self) -> f64 {
        self.bundles
            .iter()
            .flat_map(|b| b.norms.iter().cloned())
            .fold(0.0, f64::max)
    }
}

/// Per-step diagnostics retained in the solver result.
#[derive(Debug, Clone)]
pub struct StepDiagnostics {
    pub step: usize,
    pub bundle_count: usize,
    pub max_coeff_norm: f64,
    pub min_singular_ratio: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub y0: f64,
    pub z0: Vec<f64>,
    /// False when any step's coefficient norm exceeded the guard; the values
    /// are still reported and the run counts as rejected in statistics.
    pub accepted: bool,
    pub diagnostics: Vec<StepDiagnostics>,
}

/// Terminal assignment `Y_N = Phi(X_N)`, `Z_N = grad Phi(X_N) sigma(t_N, X_N)`.
pub fn terminal_values(problem: &BsdeProblem, cloud: &PathCloud) -> (Vec<f64>, Vec<f64>) {
    let n = cloud.grid.steps();
    let t_n = cloud.grid.time(n);
    let d = cloud.driver_dim;
    let q = cloud.state_dim;
    let mut y = vec![0.0; cloud.paths];
    let mut z = vec![0.0; cloud.paths * d];
    y.par_iter_mut()
        .zip(z.par_chunks_mut(d))
        .enumerate()
        .for_each(|(m, (ym, zm))| {
            let x = cloud.state(m, n);
            *ym = (problem.terminal)(x);
            let grad = (problem.terminal_gradient)(x);
            let sigma = problem.model.diffusion(t_n, x);
            for r in 0..d {
                zm[r] = (0..q).map(|i| grad[i] * sigma[i * d + r]).sum();
            }
        });
    (y, z)
}

/// One backward step from `t_{k+1}` to `t_k`.
///
/// Bundles paths on their states at `t_k`, regresses the step-(k+1) values of
/// `Y`, `Z` and the driver within each bundle, then reconstructs per-path
/// `(Y_k, Z_k)` from the closed-form basis expectations with a Picard loop
/// when the scheme is implicit in `Y`.
pub fn backward_step(
    k: usize,
    y_next: &[f64],
    z_next: &[f64],
    cloud: &PathCloud,
    config: &SchemeConfig,
    problem: &BsdeProblem,
) -> Result<(Vec<f64>, Vec<f64>, StepRegression)> {
    let m_paths = cloud.paths;
    let d = cloud.driver_dim;
    let delta = cloud.grid.delta(k);
    let t_k = cloud.grid.time(k);
    let t_next = cloud.grid.time(k + 1);
    let q_basis = config.basis.len();
    let theta1 = config.theta1;
    let theta2 = config.theta2;

    // Driver values at the later time, evaluated on the stored per-path cloud.
    let f_next: Vec<f64> = (0..m_paths)
        .into_par_iter()
        .map(|m| {
            (problem.driver)(
                t_next,
                cloud.state(m, k + 1),
                y_next[m],
                &z_next[m * d..(m + 1) * d],
            )
        })
        .collect();

    // All paths share x0 at the first step, so any sort is degenerate there;
    // a single bundle keeps the reported (y0, z0) unique.
    let b_eff = if k == 0 { 1 } else { config.bundles.min(m_paths) };
    let assignment = make_bundles(
        (0..m_paths).map(|m| cloud.state(m, k)),
        &config.sort_key,
        b_eff,
    )?;

    let bundles: Vec<BundleCoefficients> = assignment
        .iter()
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, members)| -> Result<BundleCoefficients> {
            let rows = members.len();
            let mut design = DMatrix::zeros(rows, q_basis);
            for (row, &m) in members.iter().enumerate() {
                let values = config.basis.eval(cloud.state(m, k + 1))?;
                for (col, v) in values.into_iter().enumerate() {
                    design[(row, col)] = v;
                }
            }
            let wrap = |e: SgbmError| match e {
                SgbmError::NonFiniteData { path } => SgbmError::StepFailure {
                    step: k,
                    bundle: b,
                    path,
                },
                other => other,
            };
            let gather = |f: &dyn Fn(usize) -> f64| {
                DVector::from_iterator(rows, members.iter().map(|&m| f(m)))
            };

            let alpha = regress_bundle(&design, &gather(&|m| y_next[m]), members).map_err(wrap)?;
            let gamma = regress_bundle(&design, &gather(&|m| f_next[m]), members).map_err(wrap)?;
            let mut norms = vec![alpha.norm, gamma.norm];
            let mut singular_ratio = alpha.singular_ratio;
            let mut beta = Vec::new();
            if config.needs_beta() {
                for r in 0..d {
                    let fit = regress_bundle(&design, &gather(&|m| z_next[m * d + r]), members)
                        .map_err(wrap)?;
                    norms.push(fit.norm);
                    beta.push(fit.coefficients);
                }
            }
            singular_ratio = singular_ratio.min(gamma.singular_ratio);
            Ok(BundleCoefficients {
                alpha: alpha.coefficients,
                beta,
                gamma: gamma.coefficients,
                norms,
                singular_ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let accepted = check_acceptance(
        bundles.iter().flat_map(|b| b.norms.iter().cloned()),
        config.coeff_bound,
    );

    let membership = assignment.membership(m_paths);
    let mut y_new = vec![0.0; m_paths];
    let mut z_new = vec![0.0; m_paths * d];
    let failure = y_new
        .par_iter_mut()
        .zip(z_new.par_chunks_mut(d))
        .enumerate()
        .map(|(m, (ym, zm))| -> Result<()> {
            let coeffs = &bundles[membership[m]];
            let x = cloud.state(m, k);
            let ce = cond_expect(&config.basis, &problem.model, t_k, delta, x)?;
            let dot = |v: &[f64], c: &DVector<f64>| -> f64 {
                v.iter().zip(c.iter()).map(|(a, b)| a * b).sum()
            };

            // z_r = theta2^-1 E[p dW_r/dt] (alpha + (1-theta2) dt gamma)
            //       - theta2^-1 (1-theta2) E[p] beta_r
            for r in 0..d {
                let mut acc = 0.0;
                for l in 0..q_basis {
                    acc += ce.e_pdw[r][l]
                        * (coeffs.alpha[l] + (1.0 - theta2) * delta * coeffs.gamma[l]);
                }
                let mut zr = acc / theta2;
                if !coeffs.beta.is_empty() {
                    zr -= (1.0 - theta2) / theta2 * dot(&ce.e_p, &coeffs.beta[r]);
                }
                zm[r] = zr;
            }

            // h = E[p] (alpha + dt (1-theta1) gamma); Picard resolves the
            // implicit dependence of y on itself when theta1 > 0.
            let mut h = 0.0;
            for l in 0..q_basis {
                h += ce.e_p[l] * (coeffs.alpha[l] + delta * (1.0 - theta1) * coeffs.gamma[l]);
            }
            let y = if theta1 == 0.0 {
                h
            } else {
                let mut y = dot(&ce.e_p, &coeffs.alpha);
                for _ in 0..config.picard_iterations {
                    y = delta * theta1 * (problem.driver)(t_k, x, y, zm) + h;
                }
                y
            };

            if !y.is_finite() || zm.iter().any(|v| !v.is_finite()) {
                return Err(SgbmError::StepFailure {
                    step: k,
                    bundle: membership[m],
                    path: m,
                });
            }
            *ym = y;
            Ok(())
        })
        .find_any(|r| r.is_err());
    if let Some(err) = failure {
        err?;
    }

    Ok((y_new, z_new, StepRegression { bundles, accepted }))
}

/// Full SGBM solve: simulate the cloud once, recurse backward, read `(y0, z0)`
/// at the initial state.
pub fn solve(
    problem: &BsdeProblem,
    config: &SchemeConfig,
    m_paths: usize,
    seed: u64,
) -> Result<SolverResult> {
    config.validate()?;
    if problem.x0.len() != problem.model.state_dim {
        return Err(SgbmError::DimensionMismatch {
            context: "x0 dimension disagrees with model".into(),
        });
    }
    let cloud = simulate_cloud(&problem.model, &problem.grid, &problem.x0, m_paths, seed)?;
    solve_on_cloud(problem, config, &cloud)
}

/// Backward pass over an existing cloud; exposed for tests that reuse paths.
pub fn solve_on_cloud(
    problem: &BsdeProblem,
    config: &SchemeConfig,
    cloud: &PathCloud,
) -> Result<SolverResult> {
    config.validate()?;
    let n = cloud.grid.steps();
    let d = cloud.driver_dim;
    let (mut y, mut z) = terminal_values(problem, cloud);
    let mut accepted = true;
    let mut diagnostics = Vec::with_capacity(n);
    for k in (0..n).rev() {
        let (y_new, z_new, regression) = backward_step(k, &y, &z, cloud, config, problem)?;
        accepted &= regression.accepted;
        diagnostics.push(StepDiagnostics {
            step: k,
            bundle_count: regression.bundles.len(),
            max_coeff_norm: regression.max_norm(),
            min_singular_ratio: regression
                .bundles
                .iter()
                .map(|b| b.singular_ratio)
                .fold(f64::INFINITY, f64::min),
            accepted: regression.accepted,
        });
        y = y_new;
        z = z_new;
    }
    diagnostics.reverse();
    Ok(SolverResult {
        y0: y[0],
        z0: z[..d].to_vec(),
        accepted,
        diagnostics,
    })
}
