//! How the average cost responds to the discount factor and to the length
//! of the cruising zone.
//!
//! ```bash
//! cargo run --release --example sensitivity
//! ```

use platoon_dp::sim::{sweep, Experiment, FlowSchedule, PolicyKind, SweepParam};
use platoon_dp::CostParams;

fn main() -> platoon_dp::Result<()> {
    let p = CostParams::nominal();
    let raw = FlowSchedule::table1(1.0)?;
    let schedule = raw.with_scale(raw.scale_for_mean_flow(45.0))?;
    let exp = Experiment {
        seeds: (1..=5).collect(),
        ..Experiment::default()
    };

    for r in sweep(&schedule, SweepParam::Gamma, &[0.5, 0.6, 0.7, 0.8, 0.9], PolicyKind::Rts, &p, &exp)? {
        println!("gamma {:.1}  AC {:.4}", r.value, r.ac);
    }
    let p6 = SweepParam::Gamma.apply(&p, 0.6)?;
    for r in sweep(&schedule, SweepParam::D2, &[20.0, 30.0, 40.0, 50.0, 60.0, 70.0], PolicyKind::Rts, &p6, &exp)? {
        println!("d2 {:3} km  AC per km {:.5}", r.value, r.ac_per_km);
    }
    Ok(())
}
