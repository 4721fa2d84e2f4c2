//! Discretized value functions and the general-arrival solvers.
//!
//! States live on a uniform grid `[m, n]`. Values beyond `n` are taken equal
//! to `V(n)`; between nodes they are linearly interpolated.

mod bvi;
mod quadrature;
mod ra;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::arrivals::ArrivalModel;
use crate::cost::{CostConstants, CostParams, SINGULARITY_GUARD};
use crate::error::{Error, Result};

pub use bvi::{solve_bvi, BviOptions, BviSolution};
pub use quadrature::Quadrature;
pub use ra::{solve_ra, RaSolution};

const NODE_TOLERANCE: f64 = 1e-9;

/// Uniform state grid `m, m + step, ..., n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateGrid {
    pub m: f64,
    pub n: f64,
    pub step: f64,
}

impl StateGrid {
    pub fn new(m: f64, n: f64, step: f64) -> Result<Self> {
        if !(m.is_finite() && n.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid("bounds and step must be finite".into()));
        }
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step must be > 0, got {step}")));
        }
        if m >= n {
            return Err(Error::InvalidGrid(format!("need m < n, got [{m}, {n}]")));
        }
        let cells = (n - m) / step;
        if (cells - cells.round()).abs() > NODE_TOLERANCE * cells.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "(n - m) / step = {cells} is not an integer"
            )));
        }
        Ok(Self { m, n, step })
    }

    /// `[-100, 400]` with step 0.25 s.
    pub fn standard() -> Self {
        Self {
            m: -100.0,
            n: 400.0,
            step: 0.25,
        }
    }

    /// `[-50, 150]` with step 1 s; small enough for quick cross-checks.
    pub fn reduced() -> Self {
        Self {
            m: -50.0,
            n: 150.0,
            step: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        ((self.n - self.m) / self.step).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        self.m + i as f64 * self.step
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.node(i))
    }

    /// Index of the node equal to `s`, if any.
    pub fn index_of(&self, s: f64) -> Option<usize> {
        let x = (s - self.m) / self.step;
        let r = x.round();
        if (x - r).abs() <= NODE_TOLERANCE && r >= 0.0 && (r as usize) < self.len() {
            Some(r as usize)
        } else {
            None
        }
    }

    /// Largest node index with `node(i) <= s`, clamped to the grid.
    pub fn floor_index(&self, s: f64) -> usize {
        let x = (s - self.m) / self.step + NODE_TOLERANCE;
        if x <= 0.0 {
            0
        } else {
            (x.floor() as usize).min(self.len() - 1)
        }
    }

    /// Number of nodes strictly below `s`.
    pub fn count_below(&self, s: f64) -> usize {
        let x = (s - self.m) / self.step - NODE_TOLERANCE;
        if x <= 0.0 {
            0
        } else {
            (x.ceil() as usize).min(self.len())
        }
    }

    /// The grid must bracket `c_n` and `theta_n`.
    pub fn check_brackets(&self, consts: &CostConstants) -> Result<()> {
        if !(self.m < consts.c_n && consts.c_n < consts.theta_n && consts.theta_n < self.n) {
            return Err(Error::InvalidGrid(format!(
                "grid [{}, {}] must satisfy m < c_n ({:.4}) < theta_n ({:.4}) < n",
                self.m, self.n, consts.c_n, consts.theta_n
            )));
        }
        Ok(())
    }
}

/// Value estimate, one entry per grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    pub grid: StateGrid,
    pub values: Vec<f64>,
}

impl ValueFunction {
    pub fn constant(grid: StateGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: StateGrid, f: F) -> Self {
        Self {
            grid,
            values: grid.nodes().map(f).collect(),
        }
    }

    /// Linear interpolation between nodes; constant extension outside `[m, n]`.
    pub fn value_at(&self, s: f64) -> f64 {
        interpolate(&self.grid, &self.values, s)
    }

    /// First index attaining the maximum.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.values[self.argmax()]
    }

    /// `E[V(a + X)]` for the inter-arrival distribution of `model`
    /// (undiscounted). `a` must lie in `[m, n]`.
    pub fn expected_value(&self, a: f64, model: &ArrivalModel) -> Result<f64> {
        Quadrature::new(self.grid, model).expected_value(&self.values, a)
    }
}

pub(crate) fn interpolate(grid: &StateGrid, values: &[f64], s: f64) -> f64 {
    let last = values.len() - 1;
    if s >= grid.n {
        return values[last];
    }
    if s <= grid.m {
        return values[0];
    }
    let x = (s - grid.m) / grid.step;
    let i = (x.floor() as usize).min(last);
    let frac = x - i as f64;
    if i == last || frac <= 0.0 {
        values[i]
    } else {
        values[i] + frac * (values[i + 1] - values[i])
    }
}

/// Merge when `s <= theta`, otherwise cruise with reduction `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub theta: f64,
    pub c: f64,
}

impl ThresholdPolicy {
    /// Returns `(time reduction, merged)`.
    pub fn action(&self, s: f64) -> (f64, bool) {
        if s <= self.theta {
            (s, true)
        } else {
            (self.c, false)
        }
    }
}

/// Outcome of a one-node Bellman maximization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub value: f64,
    pub action: f64,
    pub merged: bool,
}

/// Action values for every node of a grid given a value estimate.
///
/// Merge at node `i` is available while `s_i < t0`; non-merge actions are
/// the grid nodes strictly below `min(s_i, t0 - step)`.
pub(crate) struct ActionTable {
    merge: Vec<f64>,
    // running best cruise value over actions 0..j, and its first argmax
    prefix_best: Vec<(f64, usize)>,
    action_cap: usize,
}

impl ActionTable {
    pub(crate) fn build(
        quad: &Quadrature,
        values: &[f64],
        plateau_from: usize,
        params: &CostParams,
    ) -> Self {
        let grid = quad.grid();
        let len = grid.len();
        let t0 = params.t0();
        let gamma = params.gamma;
        let g0 = params.platoon_bonus();
        let action_cap = grid.count_below(t0 - grid.step);
        let mut merge = vec![f64::NEG_INFINITY; len];
        let mut prefix_best = Vec::with_capacity(action_cap + 1);
        prefix_best.push((f64::NEG_INFINITY, usize::MAX));
        for (i, slot) in merge.iter_mut().enumerate() {
            let s = grid.node(i);
            let mergeable = s <= t0 - SINGULARITY_GUARD;
            if !mergeable && i >= action_cap {
                break;
            }
            let cont = gamma * quad.node_expectation(values, i, plateau_from);
            let g = params.merge_reward_raw(s);
            if mergeable {
                *slot = g + cont;
            }
            if i < action_cap {
                let cruise = g - g0 + cont;
                let prev = prefix_best[i];
                prefix_best.push(if cruise > prev.0 { (cruise, i) } else { prev });
            }
        }
        Self {
            merge,
            prefix_best,
            action_cap,
        }
    }

    pub(crate) fn decide(&self, grid: &StateGrid, i: usize) -> Decision {
        let (cruise_val, cruise_idx) = self.prefix_best[i.min(self.action_cap)];
        let merge_val = self.merge[i];
        if merge_val >= cruise_val && merge_val > f64::NEG_INFINITY {
            Decision {
                value: merge_val,
                action: grid.node(i),
                merged: true,
            }
        } else {
            Decision {
                value: cruise_val,
                action: if cruise_idx == usize::MAX {
                    f64::NAN
                } else {
                    grid.node(cruise_idx)
                },
                merged: false,
            }
        }
    }
}

/// One-node Bellman maximization of `R(s, a) + gamma E[V(a + X)]` at grid
/// node `s`. Ties between merging and cruising resolve to merging.
pub fn bellman_backup(
    vf: &ValueFunction,
    s: f64,
    model: &ArrivalModel,
    params: &CostParams,
) -> Result<Decision> {
    let i = vf
        .grid
        .index_of(s)
        .ok_or_else(|| Error::InvalidGrid(format!("state {s} is not a grid node")))?;
    let quad = Quadrature::new(vf.grid, model);
    let table = ActionTable::build(&quad, &vf.values, vf.grid.len() - 1, params);
    Ok(table.decide(&vf.grid, i))
}

/// Greedy decisions at every node.
pub fn greedy_decisions(
    vf: &ValueFunction,
    model: &ArrivalModel,
    params: &CostParams,
) -> Vec<Decision> {
    let quad = Quadrature::new(vf.grid, model);
    let table = ActionTable::build(&quad, &vf.values, vf.grid.len() - 1, params);
    (0..vf.grid.len()).map(|i| table.decide(&vf.grid, i)).collect()
}

/// Shape of a greedy policy over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyStructure {
    /// Number of adjacent node pairs whose merge flags differ.
    pub switches: usize,
    /// Largest node whose greedy action is merge.
    pub last_merge: Option<f64>,
    /// Distinct non-merge actions (as grid indices).
    pub cruise_actions: BTreeSet<usize>,
}

impl PolicyStructure {
    pub fn analyze(grid: &StateGrid, decisions: &[Decision]) -> Self {
        let switches = decisions
            .windows(2)
            .filter(|w| w[0].merged != w[1].merged)
            .count();
        let last_merge = decisions
            .iter()
            .enumerate()
            .rev()
            .find(|(_, d)| d.merged)
            .map(|(i, _)| grid.node(i));
        let cruise_actions = decisions
            .iter()
            .filter(|d| !d.merged)
            .filter_map(|d| grid.index_of(d.action))
            .collect();
        Self {
            switches,
            last_merge,
            cruise_actions,
        }
    }

    /// Merge up to a single node, then one constant cruise action.
    pub fn is_threshold(&self, decisions: &[Decision]) -> bool {
        self.switches == 1
            && decisions.first().is_some_and(|d| d.merged)
            && self.cruise_actions.len() == 1
    }
}

/// Reads `(theta, c)` off greedy decisions: `theta` is the last merging node
/// and `c` the cruise action right above it.
pub fn extract_threshold(grid: &StateGrid, decisions: &[Decision]) -> Result<ThresholdPolicy> {
    let last = decisions
        .iter()
        .rposition(|d| d.merged)
        .ok_or_else(|| Error::InvalidGrid("greedy policy never merges".into()))?;
    let cruise = decisions
        .get(last + 1)
        .ok_or_else(|| Error::InvalidGrid("greedy policy never cruises".into()))?;
    Ok(ThresholdPolicy {
        theta: grid.node(last),
        c: cruise.action,
    })
}
