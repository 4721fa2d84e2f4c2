//! Tracking a changing arrival rate with the discounted headway estimator.
//!
//! ```bash
//! cargo run --example rate_estimator
//! ```

use platoon_dp::rng::seeded;
use platoon_dp::{ArrivalModel, RateEstimator};

fn main() -> platoon_dp::Result<()> {
    let mut est = RateEstimator::new(0.9, 50)?;
    let mut rng = seeded(42);
    let phases = [(0.02, 200), (0.08, 200), (0.01, 200)];
    for (rate, count) in phases {
        let model = ArrivalModel::exponential(rate)?;
        for i in 1..=count {
            est.observe(model.sample(&mut rng));
            if i % 50 == 0 {
                println!("true {rate:.3}  after {i:3} arrivals  estimate {:.4}", est.estimate()?);
            }
        }
    }
    Ok(())
}
