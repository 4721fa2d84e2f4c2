//! Optimal coordination of vehicle platooning at a highway junction.
//!
//! Vehicles reach a detector a distance `d1` upstream of a junction according
//! to a renewal process. Each one either speeds up (or slows down) to join the
//! platoon ahead at the junction, saving fuel over the downstream cruising
//! zone, or cruises with a fixed time reduction. The optimal stationary policy
//! is a threshold rule on the predicted headway `s`: merge when `s <= theta`,
//! otherwise cruise with reduction `c`.
//!
//! - [`cost`]: the one-step reward model and its derived constants.
//! - [`arrivals`]: inter-arrival models and the discounted rate estimator.
//! - [`dp`]: bounded value iteration and recursive approximation for general
//!   renewal arrivals.
//! - [`poisson`]: the integral-equation characterization for Poisson arrivals.
//! - [`sim`]: a junction simulator comparing coordination policies.
//! - [`cli`]: the `platoon` command-line front end.

pub mod arrivals;
pub mod cli;
pub mod cost;
pub mod dp;
pub mod error;
pub mod poisson;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod sim;

pub use arrivals::{ArrivalModel, RateEstimator};
pub use cost::{CostConstants, CostParams, ParamsConfig};
pub use dp::{StateGrid, ThresholdPolicy, ValueFunction};
pub use error::{Error, Result};
pub use poisson::PoissonSolution;
