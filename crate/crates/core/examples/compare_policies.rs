//! Baseline, calibrated Policy A and the real-time strategy at a few flow
//! levels, pooled over seeds.
//!
//! ```bash
//! cargo run --release --example compare_policies
//! ```

use platoon_dp::sim::{compare, Experiment, FlowSchedule, PolicyKind};
use platoon_dp::CostParams;

fn main() -> platoon_dp::Result<()> {
    let p = CostParams::nominal();
    let base = FlowSchedule::table1(1.0)?;
    let exp = Experiment {
        seeds: (1..=3).collect(),
        ..Experiment::default()
    };
    let kinds = [PolicyKind::Baseline, PolicyKind::PolicyA, PolicyKind::Rts];
    let rows = compare(&base, &[0.01, 0.02, 0.04], &kinds, &p, &exp)?;
    println!("{:10} {:>9} {:>9} {:>9} {:>9}", "policy", "flow", "AC", "fuel_L", "time_s");
    for r in rows {
        println!("{:10} {:9.1} {:9.4} {:9.3} {:9.1}", r.policy, r.avg_flow_vph, r.ac, r.avg_fuel_l, r.avg_time_s);
    }
    Ok(())
}
