//! The greedy policy of a converged value function switches once from merge
//! to a constant cruise action, whatever the headway distribution.
//!
//! ```bash
//! cargo run --release --example threshold_structure
//! ```

use platoon_dp::dp::{solve_bvi, BviOptions, PolicyStructure, StateGrid};
use platoon_dp::{ArrivalModel, CostParams};

fn main() -> platoon_dp::Result<()> {
    let p = CostParams::nominal();
    let k = p.constants()?;
    let grid = StateGrid::reduced();
    for text in ["exponential:0.01", "exponential:0.05", "discrete:15:0.4,8:0.6", "constant:10"] {
        let model: ArrivalModel = text.parse()?;
        let sol = solve_bvi(grid, &model, &p, &k, &BviOptions::default())?;
        let shape = PolicyStructure::analyze(&grid, &sol.decisions);
        let cruise: Vec<f64> = shape.cruise_actions.iter().map(|&i| grid.node(i)).collect();
        println!(
            "{text:24} theta {:6.1}  c {:6.1}  switches {}  cruise actions {cruise:?}",
            sol.policy.theta, sol.policy.c, shape.switches
        );
    }
    Ok(())
}
