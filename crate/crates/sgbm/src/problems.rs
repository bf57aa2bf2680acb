//! Canned problem definitions for the benchmark experiments.

use crate::basis::BasisSpec;
use crate::bundling::SortKey;
use crate::error::Result;
use crate::grid::TimeGrid;
use crate::model::{dax_correlation, ForwardModel, GbmParams, DAX_VOLS, DAX_WEIGHTS};
use crate::solver::BsdeProblem;

/// One-dimensional sine benchmark with exact solution
/// `(Y_t, Z_t) = (sin(X_t + t), cos(X_t + t))` and `(Y_0, Z_0) = (0, 1)`.
pub fn example1(grid: TimeGrid) -> BsdeProblem {
    let horizon = grid.horizon();
    BsdeProblem {
        model: ForwardModel::brownian(),
        grid,
        x0: vec![0.0],
        driver: Box::new(|t, x, y, z| {
            let s = (t + x[0]).sin();
            let c = (t + x[0]).cos();
            y * z[0] - z[0] + 2.5 * y - s * c - 2.0 * s
        }),
        terminal: Box::new(move |x| (x[0] + horizon).sin()),
        terminal_gradient: Box::new(move |x| vec![(x[0] + horizon).cos()]),
        // The driver is only locally Lipschitz through the y*z product; the
        // declared constant is documentation, not enforced.
        lipschitz_constant: 10.0,
    }
}

pub fn example1_basis() -> BasisSpec {
    BasisSpec::Monomials { count: 3 }
}

pub fn example1_sort_key() -> SortKey {
    SortKey::Component(0)
}

/// 5-asset weighted arithmetic basket put on the DAX proxy market.
///
/// Risk-neutral drift (`mu_i = r`), so the pricing driver is `-r y`. Asset
/// transitions use the GBM Euler step so that the weighted-sum regression
/// basis has closed-form Gaussian one-step expectations.
pub const ARITHMETIC_RATE: f64 = 0.05;
/// Reference basket put price from the source benchmark.
pub const ARITHMETIC_REFERENCE_PRICE: f64 = 0.175866;

pub fn arithmetic_basket(grid: TimeGrid) -> Result<BsdeProblem> {
    let params = GbmParams::new(vec![ARITHMETIC_RATE; 5], DAX_VOLS.to_vec(), dax_correlation())?;
    Ok(BsdeProblem {
        model: ForwardModel::gbm_euler(params),
        grid,
        x0: vec![0.01; 5],
        driver: Box::new(|_, _, y, _| -ARITHMETIC_RATE * y),
        terminal: Box::new(|s| {
            let basket: f64 = DAX_WEIGHTS.iter().zip(s).map(|(w, si)| w * si).sum();
            (1.0 - basket).max(0.0)
        }),
        terminal_gradient: Box::new(|s| {
            let basket: f64 = DAX_WEIGHTS.iter().zip(s).map(|(w, si)| w * si).sum();
            if basket < 1.0 {
                DAX_WEIGHTS.iter().map(|w| -w).collect()
            } else {
                vec![0.0; 5]
            }
        }),
        lipschitz_constant: ARITHMETIC_RATE,
    })
}

pub fn arithmetic_basket_basis(count: usize) -> BasisSpec {
    BasisSpec::WeightedSumPowers {
        count,
        weights: DAX_WEIGHTS.to_vec(),
    }
}

pub fn arithmetic_basket_sort_key() -> SortKey {
    SortKey::WeightedSum(DAX_WEIGHTS.to_vec())
}

/// `q`-asset geometric basket put under exact log-normal dynamics.
pub const GEOMETRIC_RATE: f64 = 0.06;
pub const GEOMETRIC_VOL: f64 = 0.2;
pub const GEOMETRIC_RHO: f64 = 0.25;
pub const GEOMETRIC_STRIKE: f64 = 40.0;

pub fn geometric_basket(grid: TimeGrid, q: usize) -> Result<BsdeProblem> {
    let params = GbmParams::homogeneous(q, GEOMETRIC_RATE, GEOMETRIC_VOL, GEOMETRIC_RHO)?;
    Ok(BsdeProblem {
        model: ForwardModel::exact_gbm(params),
        grid,
        x0: vec![40.0; q],
        driver: Box::new(|_, _, y, _| -GEOMETRIC_RATE * y),
        terminal: Box::new(move |s| {
            let g = (s.iter().map(|si| si.ln()).sum::<f64>() / q as f64).exp();
            (GEOMETRIC_STRIKE - g).max(0.0)
        }),
        terminal_gradient: Box::new(move |s| {
            let g = (s.iter().map(|si| si.ln()).sum::<f64>() / q as f64).exp();
            if g < GEOMETRIC_STRIKE {
                s.iter().map(|si| -g / (q as f64 * si)).collect()
            } else {
                vec![0.0; q]
            }
        }),
        lipschitz_constant: GEOMETRIC_RATE,
    })
}

pub fn geometric_basket_basis(count: usize, q: usize) -> BasisSpec {
    BasisSpec::GeometricMeanPowers { count, dim: q }
}

pub fn geometric_basket_sort_key() -> SortKey {
    SortKey::GeometricMean
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_driver_solves_the_exact_solution() {
        // With Y = sin(t+x), Z = cos(t+x), the backward drift -f must equal
        // the Ito drift of sin(t+x): cos(t+x) - sin(t+x)/2.
        let problem = example1(TimeGrid::uniform(1.0, 4));
        for (t, x) in [(0.0_f64, 0.0_f64), (0.3, -0.7), (0.9, 1.4)] {
            let y = (t + x).sin();
            let z = (t + x).cos();
            let f = (problem.driver)(t, &[x], y, &[z]);
            let ito_drift = (t + x).cos() - 0.5 * (t + x).sin();
            assert!((-f - ito_drift).abs() < 1e-12, "driver mismatch at ({t},{x})");
        }
    }

    #[test]
    fn example1_terminal_z_is_cosine() {
        let problem = example1(TimeGrid::uniform(1.0, 4));
        let grad = (problem.terminal_gradient)(&[0.4]);
        assert!((grad[0] - (1.4f64).cos()).abs() < 1e-15);
    }

    #[test]
    fn basket_payoff_vanishes_out_of_the_money() {
        let problem = arithmetic_basket(TimeGrid::uniform(1.0, 10)).unwrap();
        let deep = vec![0.02; 5]; // basket value 2 > 1
        assert_eq!((problem.terminal)(&deep), 0.0);
        assert_eq!((problem.terminal_gradient)(&deep), vec![0.0; 5]);
        let itm = vec![0.005; 5];
        assert!((problem.terminal)(&itm) > 0.0);
        assert_eq!((problem.terminal_gradient)(&itm)[0], -38.1);
    }

    #[test]
    fn geometric_payoff_gradient_matches_finite_differences() {
        let problem = geometric_basket(TimeGrid::uniform(1.0, 4), 3).unwrap();
        let s = vec![30.0, 35.0, 32.0];
        let grad = (problem.terminal_gradient)(&s);
        for i in 0..3 {
            let mut up = s.clone();
            let mut dn = s.clone();
            up[i] += 1e-6;
            dn[i] -= 1e-6;
            let fd = ((problem.terminal)(&up) - (problem.terminal)(&dn)) / 2e-6;
            assert!((grad[i] - fd).abs() < 1e-6);
        }
    }
}
