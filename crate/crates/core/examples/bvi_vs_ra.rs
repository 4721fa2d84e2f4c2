//! Value iteration and recursive approximation on the same grid, timed, with
//! the Poisson answer as reference.
//!
//! ```bash
//! cargo run --release --example bvi_vs_ra
//! ```

use std::time::Instant;

use platoon_dp::dp::{solve_bvi, solve_ra, BviOptions, StateGrid};
use platoon_dp::{poisson, ArrivalModel, CostParams};

fn main() -> platoon_dp::Result<()> {
    let p = CostParams::nominal();
    let k = p.constants()?;
    let grid = StateGrid::standard();
    let model = ArrivalModel::exponential(0.02)?;

    let t = Instant::now();
    let bvi = solve_bvi(grid, &model, &p, &k, &BviOptions::default())?;
    let t_bvi = t.elapsed();
    let t = Instant::now();
    let ra = solve_ra(grid, &model, &p, &k)?;
    let t_ra = t.elapsed();
    let t = Instant::now();
    let exact = poisson::solve(0.02, &p, &k, None, &Default::default())?;
    let t_poisson = t.elapsed();

    println!("grid [{}, {}] step {}", grid.m, grid.n, grid.step);
    println!("bvi      theta {:7.3}  c {:8.3}  ({} sweeps, {:?})", bvi.policy.theta, bvi.policy.c, bvi.iterations, t_bvi);
    println!("ra       theta {:7.3}  c {:8.3}  ({} candidates, {:?})", ra.policy.theta, ra.policy.c, ra.candidates, t_ra);
    println!("poisson  theta {:7.3}  c {:8.3}  ({:?})", exact.theta, exact.c, t_poisson);
    Ok(())
}
