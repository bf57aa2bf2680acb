//! Statistical and structural invariants of the forward simulation, the basis
//! expectations, the bundled regression and the backward recursion.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

use sgbm::bundling::make_bundles;
use sgbm::solver::BsdeProblem;
use sgbm::{
    cond_expect, regress_bundle, simulate_cloud, solve, BasisSpec, ForwardModel, GbmParams,
    SchemeConfig, SortKey, TimeGrid,
};

// ---------------------------------------------------------------------------
// Forward simulation

#[test]
fn exact_gbm_log_moments_match_theory() {
    // ln S_{i,T} ~ N(ln S_{i,0} + (mu - sigma^2/2) T, sigma^2 T); check both
    // moments within four standard errors at 10^5 paths.
    let (rate, vol, t) = (0.06, 0.2, 1.0);
    let params = GbmParams::homogeneous(2, rate, vol, 0.25).unwrap();
    let model = ForwardModel::exact_gbm(params);
    let grid = TimeGrid::uniform(t, 5);
    let m = 100_000usize;
    let cloud = simulate_cloud(&model, &grid, &[40.0, 40.0], m, 42).unwrap();

    for i in 0..2 {
        let logs: Vec<f64> = (0..m).map(|p| cloud.state(p, 5)[i].ln()).collect();
        let mean = logs.iter().sum::<f64>() / m as f64;
        let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (m - 1) as f64;

        let mean_theory = 40.0f64.ln() + (rate - 0.5 * vol * vol) * t;
        let var_theory = vol * vol * t;
        let se_mean = (var_theory / m as f64).sqrt();
        let se_var = var_theory * (2.0 / (m as f64 - 1.0)).sqrt();
        assert!(
            (mean - mean_theory).abs() <= 4.0 * se_mean,
            "asset {i}: log-mean {mean} vs {mean_theory} (se {se_mean})"
        );
        assert!(
            (var - var_theory).abs() <= 4.0 * se_var,
            "asset {i}: log-variance {var} vs {var_theory} (se {se_var})"
        );
    }
}

#[test]
fn correlated_increments_recover_the_correlation_matrix() {
    // The cloud stores raw increments; the model correlates them through the
    // Cholesky factor. The empirical correlation of (L dW)_i and (L dW)_j over
    // all paths and steps must land within 0.01 of rho_ij.
    let rho = 0.25;
    let params = GbmParams::homogeneous(3, 0.06, 0.2, rho).unwrap();
    let chol = params.chol.clone();
    let model = ForwardModel::exact_gbm(params);
    let grid = TimeGrid::uniform(1.0, 5);
    let m = 20_000usize;
    let cloud = simulate_cloud(&model, &grid, &[40.0; 3], m, 7).unwrap();

    let samples = m * 5;
    let mut corr_inc = vec![vec![0.0f64; samples]; 3];
    let mut idx = 0;
    for p in 0..m {
        for k in 0..5 {
            let dw = cloud.increment(p, k);
            for (i, col) in corr_inc.iter_mut().enumerate() {
                col[idx] = (0..=i).map(|r| chol[(i, r)] * dw[r]).sum();
            }
            idx += 1;
        }
    }
    for i in 0..3 {
        for j in 0..i {
            let n = samples as f64;
            let mi = corr_inc[i].iter().sum::<f64>() / n;
            let mj = corr_inc[j].iter().sum::<f64>() / n;
            let mut cov = 0.0;
            let mut vi = 0.0;
            let mut vj = 0.0;
            for s in 0..samples {
                let a = corr_inc[i][s] - mi;
                let b = corr_inc[j][s] - mj;
                cov += a * b;
                vi += a * a;
                vj += b * b;
            }
            let corr = cov / (vi.sqrt() * vj.sqrt());
            assert!(
                (corr - rho).abs() <= 0.01,
                "pair ({i},{j}): empirical correlation {corr}"
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Basis expectations

/// Gauss-Hermite nodes and weights for integrals against N(0, 1), computed by
/// the Golub-Welsch eigendecomposition of the Jacobi matrix.
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::zeros(n, n);
    for k in 1..n {
        // Physicists' recurrence off-diagonal sqrt(k/2), rescaled below.
        let off = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = off;
        jacobi[(k, k - 1)] = off;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            // Probabilists' scaling: node sqrt(2) x, weight v_0^2.
            let node = eig.eigenvalues[k] * std::f64::consts::SQRT_2;
            let weight = eig.eigenvectors[(0, k)].powi(2);
            (node, weight)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

#[test]
fn tower_property_over_split_steps() {
    // For state-independent Euler coefficients, the one-shot expectation over
    // delta_a + delta_b must equal the nested two-step expectation, here
    // evaluated on a Gauss-Hermite grid over the intermediate state.
    let (mu, sigma) = (0.3, 0.7);
    let model = ForwardModel::euler(
        1,
        1,
        Box::new(move |_, _| vec![mu]),
        Box::new(move |_, _| vec![sigma]),
    );
    let basis = BasisSpec::Monomials { count: 3 };
    let (nodes, weights) = gauss_hermite(40);

    for x in [-1.2, 0.0, 0.8] {
        for (delta_a, delta_b) in [(0.1, 0.1), (0.05, 0.2), (0.3, 0.01)] {
            let direct = cond_expect(&basis, &model, 0.0, delta_a + delta_b, &[x]).unwrap();
            let mut nested = [0.0; 3];
            for (&node, &weight) in nodes.iter().zip(&weights) {
                let x_mid = x + mu * delta_a + sigma * delta_a.sqrt() * node;
                let inner = cond_expect(&basis, &model, delta_a, delta_b, &[x_mid]).unwrap();
                for l in 0..3 {
                    nested[l] += weight * inner.e_p[l];
                }
            }
            for l in 0..3 {
                let rel = (nested[l] - direct.e_p[l]).abs() / (1.0 + direct.e_p[l].abs());
                assert!(
                    rel <= 1e-8,
                    "x={x}, split ({delta_a},{delta_b}), l={l}: relative gap {rel}"
                );
            }
        }
    }
}

#[test]
fn degree_closure_up_to_fourth_power() {
    // Under Brownian motion the expectation of a degree-n monomial is a
    // degree-n polynomial in x with known coefficients:
    //   E[(x+w)^2] = x^2 + d, E[(x+w)^3] = x^3 + 3dx,
    //   E[(x+w)^4] = x^4 + 6dx^2 + 3d^2.
    // Checking at more points than the degree pins the full coefficient set.
    let model = ForwardModel::brownian();
    let basis = BasisSpec::Monomials { count: 5 };
    for delta in [0.05, 0.25, 1.0] {
        for x in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0] {
            let ce = cond_expect(&basis, &model, 0.0, delta, &[x]).unwrap();
            let expect = [
                1.0,
                x,
                x * x + delta,
                x.powi(3) + 3.0 * delta * x,
                x.powi(4) + 6.0 * delta * x * x + 3.0 * delta * delta,
            ];
            for (l, want) in expect.iter().enumerate() {
                assert!(
                    (ce.e_p[l] - want).abs() <= 1e-10 * (1.0 + want.abs()),
                    "delta={delta}, x={x}, l={l}: {} vs {want}",
                    ce.e_p[l]
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Bundled regression

#[test]
fn regression_is_permutation_invariant() {
    // Distinct sort keys; permuting path order must leave each bundle's
    // member set and fitted coefficients unchanged.
    let m = 24usize;
    let keys: Vec<f64> = (0..m).map(|i| ((i * 7 + 3) % m) as f64 * 0.37 - 2.0).collect();
    let targets: Vec<f64> = keys.iter().map(|k| 1.5 - 0.8 * k + 0.3 * k * k * k).collect();
    let basis = BasisSpec::Monomials { count: 3 };

    let fit = |order: &[usize]| -> Vec<(Vec<f64>, DVector<f64>)> {
        let states: Vec<[f64; 1]> = order.iter().map(|&i| [keys[i]]).collect();
        let assignment =
            make_bundles(states.iter().map(|s| &s[..]), &SortKey::Component(0), 4).unwrap();
        assignment
            .iter()
            .map(|members| {
                let design = DMatrix::from_fn(members.len(), 3, |row, col| {
                    basis.eval(&states[members[row]]).unwrap()[col]
                });
                let t = DVector::from_iterator(
                    members.len(),
                    members.iter().map(|&row| targets[order[row]]),
                );
                let mut ids: Vec<f64> = members.iter().map(|&row| keys[order[row]]).collect();
                ids.sort_by(f64::total_cmp);
                (ids, regress_bundle(&design, &t, members).unwrap().coefficients)
            })
            .collect()
    };

    let identity: Vec<usize> = (0..m).collect();
    let mut shuffled = identity.clone();
    shuffled.reverse();
    shuffled.swap(2, 17);
    shuffled.swap(5, 11);

    for ((keys_a, coef_a), (keys_b, coef_b)) in fit(&identity).iter().zip(fit(&shuffled).iter()) {
        assert_eq!(keys_a, keys_b, "bundle contents changed under permutation");
        for l in 0..3 {
            assert!(
                (coef_a[l] - coef_b[l]).abs() <= 1e-12 * (1.0 + coef_a[l].abs()),
                "coefficient {l} changed under permutation"
            );
        }
    }
}

proptest! {
    #[test]
    fn bundles_partition_paths_with_monotone_keys(
        keys in prop::collection::vec(-1e6f64..1e6, 1..200),
        b in 1usize..32,
    ) {
        let m = keys.len();
        let b = b.min(m);
        let states: Vec<[f64; 1]> = keys.iter().map(|&k| [k]).collect();
        let assignment =
            make_bundles(states.iter().map(|s| &s[..]), &SortKey::Component(0), b).unwrap();

        // Exact partition into b groups whose sizes differ by at most one.
        let mut seen = vec![false; m];
        prop_assert_eq!(assignment.bundle_count(), b);
        let mut sizes = Vec::new();
        for members in assignment.iter() {
            sizes.push(members.len());
            for &p in members {
                prop_assert!(!seen[p], "path {} assigned twice", p);
                seen[p] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
        let (min, max) = (
            *sizes.iter().min().unwrap(),
            *sizes.iter().max().unwrap(),
        );
        prop_assert!(max - min <= 1, "sizes {:?} not near-equal", sizes);

        // The bundle index is non-decreasing along the sort key.
        let mut previous_max = f64::NEG_INFINITY;
        for members in assignment.iter() {
            let lo = members.iter().map(|&p| keys[p]).fold(f64::INFINITY, f64::min);
            let hi = members.iter().map(|&p| keys[p]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo >= previous_max);
            previous_max = hi;
        }
    }

    #[test]
    fn least_squares_satisfies_the_normal_equations(
        rows in 1usize..20,
        cols in 1usize..5,
        entries in prop::collection::vec(-10.0f64..10.0, 100),
        targets in prop::collection::vec(-10.0f64..10.0, 20),
    ) {
        let design = DMatrix::from_fn(rows, cols, |i, j| entries[i * cols + j]);
        let t = DVector::from_iterator(rows, targets[..rows].iter().cloned());
        let ids: Vec<usize> = (0..rows).collect();
        let out = regress_bundle(&design, &t, &ids).unwrap();

        let gram = design.transpose() * &design;
        let rhs = design.transpose() * &t;
        let residual = (&gram * &out.coefficients - &rhs).norm();
        prop_assert!(
            residual <= 1e-10 * (1.0 + rhs.norm()),
            "normal-equation residual {} too large", residual
        );
    }
}

// ---------------------------------------------------------------------------
// Backward recursion

#[test]
fn linear_driver_matches_deterministic_recursion() {
    // f = -r y with an in-span terminal and a single bundle: every regression
    // recovers exact polynomial coefficients, so the solver must match a
    // deterministic recursion on those coefficients with no Monte Carlo error.
    let r = 0.04;
    let n = 8usize;
    let x0 = 0.6;
    let grid = TimeGrid::uniform(1.0, n);
    let problem = BsdeProblem {
        model: ForwardModel::brownian(),
        grid: grid.clone(),
        x0: vec![x0],
        driver: Box::new(move |_, _, y, _| -r * y),
        terminal: Box::new(|x| x[0] * x[0]),
        terminal_gradient: Box::new(|x| vec![2.0 * x[0]]),
        lipschitz_constant: r,
    };
    let config = SchemeConfig::explicit(
        1,
        f64::INFINITY,
        BasisSpec::Monomials { count: 3 },
        SortKey::Component(0),
    );
    let result = solve(&problem, &config, 256, 19).unwrap();

    // Coefficient recursion: (c0, c1, c2) -> (1 - r d) (c0 + d c2, c1, c2).
    let mut c = [0.0, 0.0, 1.0];
    for k in (0..n).rev() {
        let d = grid.delta(k);
        c = [(1.0 - r * d) * (c[0] + d * c[2]), (1.0 - r * d) * c[1], (1.0 - r * d) * c[2]];
    }
    let oracle = c[0] + c[1] * x0 + c[2] * x0 * x0;
    assert!(
        (result.y0 - oracle).abs() <= 1e-8,
        "solver {} vs recursion oracle {oracle}",
        result.y0
    );
}
