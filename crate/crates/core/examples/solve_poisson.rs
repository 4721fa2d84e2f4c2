//! Threshold policy for Poisson arrivals across a range of rates, plus a
//! look at the closed-form value function.
//!
//! ```bash
//! cargo run --example solve_poisson
//! ```

use platoon_dp::poisson::{self, PoissonOptions};
use platoon_dp::CostParams;

fn main() -> platoon_dp::Result<()> {
    let p = CostParams::nominal();
    let k = p.constants()?;
    let opts = PoissonOptions::default();

    println!("lambda(1/s)  theta(s)      c(s)        Z   iters");
    let mut warm = None;
    for lambda in [0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2] {
        let sol = poisson::solve(lambda, &p, &k, warm, &opts)?;
        warm = Some((sol.theta, sol.c));
        println!("{lambda:10.3} {:9.3} {:9.3} {:8.3} {:7}", sol.theta, sol.c, sol.z, sol.iterations);
    }

    let sol = poisson::solve(0.02, &p, &k, None, &opts)?;
    println!("\nV(s) at lambda = 0.02 (peak Z + G(0) = {:.4} at s = c)", sol.z + k.g0);
    for s in [-80.0, -60.0, sol.c, -20.0, 0.0, 10.0, sol.theta, 60.0] {
        println!("  V({s:7.2}) = {:.4}", poisson::closed_form_value(s, &sol, &p, &k)?);
    }
    Ok(())
}
