//! Bounded value iteration.
//!
//! Synchronous sweeps of the Bellman operator over nodes `s <= theta_n`;
//! nodes above `theta_n` are held at the value of the last updated node,
//! since the optimal value function is flat beyond any admissible threshold.

use serde::{Deserialize, Serialize};

use super::{
    extract_threshold, ActionTable, Decision, Quadrature, StateGrid, ThresholdPolicy,
    ValueFunction,
};
use crate::arrivals::ArrivalModel;
use crate::cost::{CostConstants, CostParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BviOptions {
    /// Stop once the largest per-node change of a sweep drops below this.
    pub epsilon: f64,
    pub max_sweeps: usize,
}

impl Default for BviOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.002,
            max_sweeps: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BviSolution {
    pub value_function: ValueFunction,
    pub policy: ThresholdPolicy,
    /// Plateau value `Z`.
    pub z: f64,
    pub iterations: usize,
    /// Greedy decision at every node of the converged value function.
    pub decisions: Vec<Decision>,
}

pub fn solve_bvi(
    grid: StateGrid,
    model: &ArrivalModel,
    params: &CostParams,
    consts: &CostConstants,
    opts: &BviOptions,
) -> Result<BviSolution> {
    grid.check_brackets(consts)?;
    if !(opts.epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be > 0, got {}", opts.epsilon),
        });
    }
    let quad = Quadrature::new(grid, model);
    let bound = grid.floor_index(consts.theta_n);
    let mut values = vec![0.0; grid.len()];
    let mut next = values.clone();
    let mut iterations = 0;
    let mut delta = f64::INFINITY;

    while delta >= opts.epsilon {
        if iterations >= opts.max_sweeps {
            return Err(Error::NotConverged {
                solver: "bounded value iteration",
                iterations,
                last_delta: delta,
            });
        }
        iterations += 1;
        let table = ActionTable::build(&quad, &values, bound, params);
        for (i, slot) in next.iter_mut().enumerate().take(bound + 1) {
            *slot = table.decide(&grid, i).value;
        }
        let held = next[bound];
        next[bound + 1..].fill(held);
        delta = values
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut values, &mut next);
    }

    let table = ActionTable::build(&quad, &values, bound, params);
    let decisions: Vec<Decision> = (0..grid.len()).map(|i| table.decide(&grid, i)).collect();
    let policy = extract_threshold(&grid, &decisions)?;
    let z = values[grid.len() - 1];
    Ok(BviSolution {
        value_function: ValueFunction { grid, values },
        policy,
        z,
        iterations,
        decisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::PolicyStructure;

    #[test]
    fn myopic_limit() {
        let mut p = CostParams::nominal();
        p.gamma = 1e-6;
        let k = p.constants().unwrap();
        let grid = StateGrid::reduced();
        let sol = solve_bvi(grid, &ArrivalModel::exponential(0.02).unwrap(), &p, &k, &BviOptions::default()).unwrap();
        assert!((sol.policy.theta - k.theta_n).abs() <= grid.step);
        assert!((sol.policy.c - k.c_n).abs() <= grid.step);
    }

    #[test]
    fn constant_headway_is_threshold_structured() {
        let p = CostParams::nominal();
        let k = p.constants().unwrap();
        let grid = StateGrid::reduced();
        let sol = solve_bvi(grid, &ArrivalModel::constant(10.0).unwrap(), &p, &k, &BviOptions::default()).unwrap();
        let shape = PolicyStructure::analyze(&grid, &sol.decisions);
        assert!(shape.is_threshold(&sol.decisions), "{shape:?}");
    }

    #[test]
    fn sweep_cap_is_enforced() {
        let p = CostParams::nominal();
        let k = p.constants().unwrap();
        let opts = BviOptions {
            epsilon: 1e-12,
            max_sweeps: 3,
        };
        let err = solve_bvi(StateGrid::reduced(), &ArrivalModel::constant(10.0).unwrap(), &p, &k, &opts).unwrap_err();
        assert!(matches!(err, Error::NotConverged { iterations: 3, .. }));
    }

    #[test]
    fn bad_grid_rejected() {
        let p = CostParams::nominal();
        let k = p.constants().unwrap();
        let grid = StateGrid::new(0.0, 100.0, 1.0).unwrap();
        assert!(solve_bvi(grid, &ArrivalModel::constant(10.0).unwrap(), &p, &k, &BviOptions::default()).is_err());
    }
}
