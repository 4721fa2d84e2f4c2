//! Simulating from a user-supplied hourly flow file.
//!
//! ```bash
//! cargo run --example custom_schedule -- flows.csv
//! ```
//!
//! Without an argument a flat 120 veh/h profile is written to a temporary
//! file first.

use std::path::PathBuf;

use platoon_dp::sim::{simulate, FlowSchedule, PolicySpec, SimOptions};
use platoon_dp::{CostParams, ThresholdPolicy};

fn main() -> platoon_dp::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let p = std::env::temp_dir().join("platoon_flat_flows.csv");
            let mut text = String::from("hour,flow1_vph,flow2_vph\n");
            for h in 0..24 {
                text += &format!("{h},80,40\n");
            }
            std::fs::write(&p, text)?;
            p
        }
    };
    let schedule = FlowSchedule::from_csv_path(&path, 1.0)?;
    let p = CostParams::nominal();
    let k = p.constants()?;
    let fixed = PolicySpec::PolicyB {
        policy: ThresholdPolicy { theta: 22.0, c: -36.0 },
    };
    for spec in [PolicySpec::Baseline, fixed] {
        let r = simulate(&schedule, &spec, &p, &k, 1, 6.0 * 3600.0, &SimOptions::default())?;
        println!("{:40} n {:5}  AC {:.4}", r.policy, r.n, r.ac.unwrap_or(f64::NAN));
    }
    Ok(())
}
