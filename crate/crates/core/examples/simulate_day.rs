//! One day at the interchange under the real-time strategy, with the
//! per-vehicle log written to CSV.
//!
//! ```bash
//! cargo run --release --example simulate_day -- vehicles.csv
//! ```

use platoon_dp::sim::{simulate, FlowSchedule, PolicySpec, RtsConfig, SimOptions, DAY};
use platoon_dp::CostParams;

fn main() -> platoon_dp::Result<()> {
    let p = CostParams::nominal();
    let k = p.constants()?;
    let raw = FlowSchedule::table1(1.0)?;
    let schedule = raw.with_scale(raw.scale_for_mean_flow(173.0))?;

    let res = simulate(&schedule, &PolicySpec::Rts(RtsConfig::default()), &p, &k, 7, DAY, &SimOptions::default())?;
    println!("{} vehicles, {} merged, {} re-solves", res.n, res.merged, res.poisson_solves);
    println!("AC {:.4}  fuel/veh {:.3} L  time/veh {:.1} s", res.ac.unwrap_or(f64::NAN), res.avg_fuel_l.unwrap_or(f64::NAN), res.avg_time_s.unwrap_or(f64::NAN));
    println!("platoon sizes (size: vehicles): {:?}", res.platoon_histogram);

    if let Some(path) = std::env::args().nth(1) {
        res.write_vehicles_csv(std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
