//! Predefined benchmark cases, the repeated-run protocol and its statistics.

use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Result, SgbmError};
use crate::grid::TimeGrid;
use crate::oracle::{example1_exact, geometric_basket_put, GeometricBasketSpec};
use crate::problems;
use crate::solver::{solve, BsdeProblem, SchemeConfig};

/// Benchmark case identifiers.
///
/// `1a..1c` run the sine benchmark with the explicit scheme and `1d..1f` with
/// Crank-Nicolson, each sweeping the coefficient bound over {100, 10000, inf}.
/// `2.1a/2.1b` price the arithmetic basket, `2.2a/2.2b` the geometric basket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CaseId {
    C1a,
    C1b,
    C1c,
    C1d,
    C1e,
    C1f,
    C21a,
    C21b,
    C22a,
    C22b,
}

pub const ALL_CASES: [CaseId; 10] = [
    CaseId::C1a,
    CaseId::C1b,
    CaseId::C1c,
    CaseId::C1d,
    CaseId::C1e,
    CaseId::C1f,
    CaseId::C21a,
    CaseId::C21b,
    CaseId::C22a,
    CaseId::C22b,
];

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseId::C1a => "1a",
            CaseId::C1b => "1b",
            CaseId::C1c => "1c",
            CaseId::C1d => "1d",
            CaseId::C1e => "1e",
            CaseId::C1f => "1f",
            CaseId::C21a => "2.1a",
            CaseId::C21b => "2.1b",
            CaseId::C22a => "2.2a",
            CaseId::C22b => "2.2b",
        };
        f.write_str(s)
    }
}

impl FromStr for CaseId {
    type Err = SgbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1a" => Ok(CaseId::C1a),
            "1b" => Ok(CaseId::C1b),
            "1c" => Ok(CaseId::C1c),
            "1d" => Ok(CaseId::C1d),
            "1e" => Ok(CaseId::C1e),
            "1f" => Ok(CaseId::C1f),
            "2.1a" => Ok(CaseId::C21a),
            "2.1b" => Ok(CaseId::C21b),
            "2.2a" => Ok(CaseId::C22a),
            "2.2b" => Ok(CaseId::C22b),
        _ => Err(SgbmError::Config(format!(
                "unknown case id '{s}'; run `list-cases` for the catalog"
            ))),
        }
    }
}

/// Resolved parameters of one (case, J) cell.
#[derive(Debug, Clone)]
pub struct CaseParams {
    pub case: CaseId,
    pub j: u32,
    pub paths: usize,
    pub steps: usize,
    pub bundles: usize,
    pub coeff_bound: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub picard: usize,
    pub basis_len: usize,
    /// Asset count for the geometric basket; 0 otherwise.
    pub assets: usize,
}

/// Tabulated `J` range for a case.
pub fn j_range(case: CaseId) -> std::ops::RangeInclusive<u32> {
    match case {
        CaseId::C1a | CaseId::C1b | CaseId::C1c | CaseId::C1d | CaseId::C1e | CaseId::C1f => 2..=8,
        CaseId::C21a | CaseId::C21b => 0..=2,
        CaseId::C22a | CaseId::C22b => 1..=15,
    }
}

/// Parameter rule mapping `J` to `(M, N, B, L, ...)` for a case.
pub fn case_params(case: CaseId, j: u32) -> Result<CaseParams> {
    if !j_range(case).contains(&j) {
        return Err(SgbmError::Config(format!(
            "J = {j} outside the tabulated range {:?} for case {case}",
            j_range(case)
        )));
    }
    let params = match case {
        CaseId::C1a | CaseId::C1b | CaseId::C1c | CaseId::C1d | CaseId::C1e | CaseId::C1f => {
            let crank = matches!(case, CaseId::C1d | CaseId::C1e | CaseId::C1f);
            let coeff_bound = match case {
                CaseId::C1a | CaseId::C1d => 100.0,
                CaseId::C1b | CaseId::C1e => 10_000.0,
                _ => f64::INFINITY,
            };
            CaseParams {
                case,
                j,
                paths: 1usize << (2 * j),
                steps: 1usize << j,
                bundles: 1usize << j,
                coeff_bound,
                theta1: if crank { 0.5 } else { 0.0 },
                theta2: if crank { 0.5 } else { 1.0 },
                picard: if crank { 4 } else { 1 },
                basis_len: 3,
                assets: 0,
            }
        }
        CaseId::C21a | CaseId::C21b => {
            let crank = case == CaseId::C21a;
            CaseParams {
                case,
                j,
                paths: 1usize << 12,
                steps: 10,
                bundles: 1usize << (2 * j),
                coeff_bound: f64::INFINITY,
                theta1: if crank { 0.5 } else { 0.0 },
                theta2: if crank { 0.5 } else { 1.0 },
                picard: if crank { 4 } else { 1 },
                basis_len: if crank { 3 } else { 2 },
                assets: 0,
            }
        }
        CaseId::C22a | CaseId::C22b => {
            let crank = case == CaseId::C22b;
            CaseParams {
                case,
                j,
                paths: 1usize << 12,
                steps: 20,
                bundles: 16,
                coeff_bound: f64::INFINITY,
                theta1: if crank { 0.5 } else { 0.0 },
                theta2: if crank { 0.5 } else { 1.0 },
                picard: if crank { 4 } else { 1 },
                basis_len: 3,
                assets: j as usize,
            }
        }
    };
    Ok(params)
}

/// Build the problem and scheme configuration for a cell.
pub fn build_cell(params: &CaseParams) -> Result<(BsdeProblem, SchemeConfig)> {
    let (problem, basis, sort_key) = match params.case {
        CaseId::C1a | CaseId::C1b | CaseId::C1c | CaseId::C1d | CaseId::C1e | CaseId::C1f => (
            problems::example1(TimeGrid::uniform(1.0, params.steps)),
            problems::example1_basis(),
            problems::example1_sort_key(),
        ),
        CaseId::C21a | CaseId::C21b => (
            problems::arithmetic_basket(TimeGrid::uniform(1.0, params.steps))?,
            problems::arithmetic_basket_basis(params.basis_len),
            problems::arithmetic_basket_sort_key(),
        ),
        CaseId::C22a | CaseId::C22b => (
            problems::geometric_basket(TimeGrid::uniform(1.0, params.steps), params.assets)?,
            problems::geometric_basket_basis(params.basis_len, params.assets),
            problems::geometric_basket_sort_key(),
        ),
    };
    let config = SchemeConfig {
        theta1: params.theta1,
        theta2: params.theta2,
        picard_iterations: params.picard,
        bundles: params.bundles,
        coeff_bound: params.coeff_bound,
        basis,
        sort_key,
        force_beta: false,
    };
    Ok((problem, config))
}

/// Reference `(y0, z0)` for a case; `z0` only where an exact `Z` is known.
pub fn reference_values(case: CaseId, j: u32) -> Result<(f64, Option<f64>)> {
    match case {
        CaseId::C1a | CaseId::C1b | CaseId::C1c | CaseId::C1d | CaseId::C1e | CaseId::C1f => {
            let (y, z) = example1_exact(0.0, 0.0);
            Ok((y, Some(z)))
        }
        CaseId::C21a | CaseId::C21b => Ok((problems::ARITHMETIC_REFERENCE_PRICE, None)),
        CaseId::C22a | CaseId::C22b => {
            let price = geometric_basket_put(&GeometricBasketSpec::benchmark(j as usize))?;
            Ok((price, None))
        }
    }
}

/// Outcome of one solver run within a cell.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub seed: u64,
    /// `None` when the run aborted with a numerical failure.
    pub y0: Option<f64>,
    pub z0: Option<Vec<f64>>,
    /// Guard acceptance; numerically failed runs are unaccepted.
    pub accepted: bool,
    pub abs_error: Option<f64>,
}

/// Aggregated statistics of the repeated-run protocol for one cell.
#[derive(Debug, Clone)]
pub struct RunStatistics {
    pub params: CaseParams,
    pub reference_y0: f64,
    pub runs: usize,
    pub successes: usize,
    /// `|mean(y0 over successful runs) - reference|`, the benchmark-table statistic.
    pub mean_abs_error_y0: Option<f64>,
    /// `|mean(z0) - reference Z0|` where an exact `Z` is known.
    pub mean_abs_error_z0: Option<f64>,
    /// Mean per-run absolute error over successful runs.
    pub total_variation_per_successful_run: Option<f64>,
    pub records: Vec<RunRecord>,
    pub wall_ms: u128,
}

/// Run one (case, J) cell `runs` times with seeds `base_seed..base_seed+runs`.
pub fn run_case(case: CaseId, j: u32, runs: usize, base_seed: u64) -> Result<RunStatistics> {
    let params = case_params(case, j)?;
    let (reference_y0, reference_z0) = reference_values(case, j)?;
    let start = Instant::now();
    let (problem, config) = build_cell(&params)?;

    let records: Vec<RunRecord> = (0..runs as u64)
        .into_par_iter()
        .map(|offset| {
            let seed = base_seed + offset;
            match solve(&problem, &config, params.paths, seed) {
                Ok(result) => RunRecord {
                    seed,
                    abs_error: Some((result.y0 - reference_y0).abs()),
                    y0: Some(result.y0),
                    z0: Some(result.z0),
                    accepted: result.accepted,
                },
                Err(_) => RunRecord {
                    seed,
                    y0: None,
                    z0: None,
                    accepted: false,
                    abs_error: None,
                },
            }
        })
        .collect();

    let successes: Vec<&RunRecord> = records.iter().filter(|r| r.accepted).collect();
    let n_ok = successes.len();
    let (mean_abs_error_y0, mean_abs_error_z0, total_variation) = if n_ok == 0 {
        (None, None, None)
    } else {
        let mean_y0 = successes.iter().map(|r| r.y0.unwrap()).sum::<f64>() / n_ok as f64;
        let tv = successes.iter().map(|r| r.abs_error.unwrap()).sum::<f64>() / n_ok as f64;
        let z_err = reference_z0.map(|z_ref| {
            let mean_z0 = successes
                .iter()
                .map(|r| r.z0.as_ref().unwrap()[0])
                .sum::<f64>()
                / n_ok as f64;
            (mean_z0 - z_ref).abs()
        });
        (Some((mean_y0 - reference_y0).abs()), z_err, Some(tv))
    };

    Ok(RunStatistics {
        params,
        reference_y0,
        runs,
        successes: n_ok,
        mean_abs_error_y0,
        mean_abs_error_z0,
        total_variation_per_successful_run: total_variation,
        records,
        wall_ms: start.elapsed().as_millis(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_rules_match_the_tables() {
        for case in [CaseId::C1a, CaseId::C1b, CaseId::C1c, CaseId::C1d, CaseId::C1e, CaseId::C1f] {
            for j in 2..=8u32 {
                let p = case_params(case, j).unwrap();
                assert_eq!(p.paths, 1 << (2 * j));
                assert_eq!(p.steps, 1 << j);
                assert_eq!(p.bundles, 1 << j);
                assert_eq!(p.basis_len, 3);
            }
        }
        assert_eq!(case_params(CaseId::C1a, 2).unwrap().coeff_bound, 100.0);
        assert_eq!(case_params(CaseId::C1b, 2).unwrap().coeff_bound, 10_000.0);
        assert_eq!(case_params(CaseId::C1c, 2).unwrap().coeff_bound, f64::INFINITY);
        assert_eq!(case_params(CaseId::C1d, 2).unwrap().coeff_bound, 100.0);
        assert_eq!(case_params(CaseId::C1d, 2).unwrap().theta1, 0.5);
        assert_eq!(case_params(CaseId::C1d, 2).unwrap().picard, 4);

        for j in 0..=2u32 {
            for case in [CaseId::C21a, CaseId::C21b] {
                let p = case_params(case, j).unwrap();
                assert_eq!(p.paths, 4096);
                assert_eq!(p.steps, 10);
                assert_eq!(p.bundles, 1 << (2 * j));
                assert_eq!(p.coeff_bound, f64::INFINITY);
            }
        }
        assert_eq!(case_params(CaseId::C21a, 1).unwrap().basis_len, 3);
        assert_eq!(case_params(CaseId::C21b, 1).unwrap().basis_len, 2);

        for j in 1..=15u32 {
            for case in [CaseId::C22a, CaseId::C22b] {
                let p = case_params(case, j).unwrap();
                assert_eq!(p.paths, 4096);
                assert_eq!(p.steps, 20);
                assert_eq!(p.bundles, 16);
                assert_eq!(p.assets, j as usize);
            }
        }
        assert_eq!(case_params(CaseId::C22a, 1).unwrap().theta1, 0.0);
        assert_eq!(case_params(CaseId::C22b, 1).unwrap().theta1, 0.5);
    }

    #[test]
    fn out_of_range_j_is_rejected() {
        assert!(case_params(CaseId::C1a, 1).is_err());
        assert!(case_params(CaseId::C21a, 3).is_err());
        assert!(case_params(CaseId::C22a, 0).is_err());
    }

    #[test]
    fn case_ids_round_trip() {
        for case in ALL_CASES {
            assert_eq!(case.to_string().parse::<CaseId>().unwrap(), case);
        }
        assert!("9z".parse::<CaseId>().is_err());
    }

    #[test]
    fn zero_runs_give_empty_statistics() {
        let stats = run_case(CaseId::C1a, 2, 0, 1).unwrap();
        assert_eq!(stats.runs, 0);
        assert_eq!(stats.successes, 0);
        assert!(stats.mean_abs_error_y0.is_none());
        assert!(stats.records.is_empty());
    }

    #[test]
    fn statistics_are_consistent_with_records() {
        let stats = run_case(CaseId::C1a, 3, 4, 10).unwrap();
        let ok: Vec<_> = stats.records.iter().filter(|r| r.accepted).collect();
        assert_eq!(stats.successes, ok.len());
        if !ok.is_empty() {
            let tv = ok.iter().map(|r| r.abs_error.unwrap()).sum::<f64>() / ok.len() as f64;
            assert!((tv - stats.total_variation_per_successful_run.unwrap()).abs() < 1e-15);
            let mean = ok.iter().map(|r| r.y0.unwrap()).sum::<f64>() / ok.len() as f64;
            assert!(
                ((mean - stats.reference_y0).abs() - stats.mean_abs_error_y0.unwrap()).abs()
                    < 1e-15
            );
        }
    }
}
