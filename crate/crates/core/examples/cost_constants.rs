//! Reward model at the nominal parameters.
//!
//! ```bash
//! cargo run --example cost_constants
//! ```

use platoon_dp::CostParams;

fn main() -> platoon_dp::Result<()> {
    let p = CostParams::nominal();
    let k = p.constants()?;
    println!("t0          = {:8.3} s", k.t0);
    println!("c_n         = {:8.3} s", k.c_n);
    println!("theta_n     = {:8.3} s", k.theta_n);
    println!("theta_n'    = {:8.3} s", k.theta_n_prime);
    println!("G(0)        = {:8.4}", k.g0);

    println!("\n    s      G(s)     H(s)");
    for s in [-40.0, -10.0, k.c_n, 0.0, 10.0, 20.0, k.theta_n, 40.0] {
        println!("{s:7.2} {:9.4} {:8.4}", p.reward_merge(s)?, p.reward_cruise(s)?);
    }
    Ok(())
}
