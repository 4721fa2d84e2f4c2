use platoon_dp::dp::{bellman_backup, solve_bvi, solve_ra, BviOptions, PolicyStructure, StateGrid};
use platoon_dp::{poisson, ArrivalModel, CostParams};
use proptest::prelude::*;

fn models() -> Vec<ArrivalModel> {
    ["exponential:0.01", "exponential:0.02", "exponential:0.05", "discrete:15:0.4,8:0.6", "constant:10"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

#[test]
fn ra_matches_poisson_on_the_fine_grid() {
    let p = CostParams::nominal();
    let k = p.constants().unwrap();
    let grid = StateGrid::standard();
    let ra = solve_ra(grid, &ArrivalModel::exponential(0.02).unwrap(), &p, &k).unwrap();
    let exact = poisson::solve(0.02, &p, &k, None, &Default::default()).unwrap();
    assert!((ra.policy.theta - exact.theta).abs() <= 2.0 * grid.step, "{:?} vs {exact:?}", ra.policy);
    assert!((ra.policy.c - exact.c).abs() <= 2.0 * grid.step, "{:?} vs {exact:?}", ra.policy);
}

#[test]
fn ra_and_bvi_agree_for_constant_headways() {
    let p = CostParams::nominal();
    let k = p.constants().unwrap();
    let grid = StateGrid::standard();
    let m = ArrivalModel::constant(10.0).unwrap();
    let ra = solve_ra(grid, &m, &p, &k).unwrap();
    let bvi = solve_bvi(grid, &m, &p, &k, &BviOptions::default()).unwrap();
    assert!((ra.policy.theta - bvi.policy.theta).abs() <= grid.step);
    assert!((ra.policy.c - bvi.policy.c).abs() <= grid.step);
}

#[test]
fn converged_bvi_is_a_threshold_policy() {
    let p = CostParams::nominal();
    let k = p.constants().unwrap();
    let grid = StateGrid::reduced();
    for m in models() {
        let sol = solve_bvi(grid, &m, &p, &k, &BviOptions::default()).unwrap();
        let shape = PolicyStructure::analyze(&grid, &sol.decisions);
        assert!(shape.is_threshold(&sol.decisions), "{m}: {shape:?}");
        // merging is always right below the myopic optimum
        for (i, d) in sol.decisions.iter().enumerate() {
            if grid.node(i) < k.c_n {
                assert!(d.merged, "{m}: node {}", grid.node(i));
            }
        }
    }
}

#[test]
fn bellman_residual_after_convergence() {
    let p = CostParams::nominal();
    let k = p.constants().unwrap();
    let grid = StateGrid::reduced();
    let opts = BviOptions::default();
    let m = ArrivalModel::discrete(vec![(15.0, 0.4), (8.0, 0.6)]).unwrap();
    let sol = solve_bvi(grid, &m, &p, &k, &opts).unwrap();
    for i in 0..=grid.floor_index(k.theta_n) {
        let d = bellman_backup(&sol.value_function, grid.node(i), &m, &p).unwrap();
        assert!((d.value - sol.value_function.values[i]).abs() <= opts.epsilon);
    }
}

#[test]
fn bvi_rejects_grid_missing_theta_n() {
    let p = CostParams::nominal();
    let k = p.constants().unwrap();
    let grid = StateGrid::new(-50.0, 20.0, 1.0).unwrap();
    assert!(solve_bvi(grid, &ArrivalModel::constant(10.0).unwrap(), &p, &k, &BviOptions::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bvi_thresholds_stay_inside_the_bounds(h in 3.0f64..80.0) {
        let p = CostParams::nominal();
        let k = p.constants().unwrap();
        let grid = StateGrid::reduced();
        let sol = solve_bvi(grid, &ArrivalModel::constant(h).unwrap(), &p, &k, &BviOptions::default()).unwrap();
        prop_assert!(sol.policy.theta >= k.c_n - grid.step && sol.policy.theta <= k.theta_n + grid.step);
        prop_assert!(sol.policy.c >= k.theta_n_prime - grid.step && sol.policy.c <= k.c_n + grid.step);
    }

    #[test]
    fn value_function_plateau_and_peak(lambda in 0.005f64..0.2) {
        let p = CostParams::nominal();
        let k = p.constants().unwrap();
        let grid = StateGrid::reduced();
        let eps = BviOptions::default().epsilon;
        let sol = solve_bvi(grid, &ArrivalModel::exponential(lambda).unwrap(), &p, &k, &BviOptions::default()).unwrap();
        let vf = &sol.value_function;
        for (i, v) in vf.values.iter().enumerate() {
            if grid.node(i) > sol.policy.theta {
                prop_assert!((v - sol.z).abs() <= 2.0 * eps);
            }
        }
        prop_assert!((vf.max() - (sol.z + k.g0)).abs() <= 5.0 * eps);
    }
}
