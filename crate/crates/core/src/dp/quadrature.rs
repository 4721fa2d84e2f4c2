//! `E[V(a + X)]` on a uniform grid.
//!
//! For exponential headways the density is integrated exactly against the
//! piecewise-linear interpolant of `V` (product trapezoid), so a constant `V`
//! is reproduced to rounding. Past the last node the remaining mass
//! `P(X > n - a)` multiplies `V(n)`. Point-mass models reduce to weighted
//! sums of interpolated values.

use super::{interpolate, StateGrid};
use crate::arrivals::ArrivalModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Kernel {
    Exponential {
        lambda: f64,
        /// Weight of offset `k` when the offset is interior to the range.
        interior: Vec<f64>,
        /// Weight of offset `k` when it closes the range.
        closing: Vec<f64>,
        /// `P(X > k * step)`.
        tail: Vec<f64>,
    },
    Atoms(Vec<(f64, f64)>),
}

#[derive(Debug, Clone)]
pub struct Quadrature {
    grid: StateGrid,
    kernel: Kernel,
}

/// Exact cell weights for density `lambda e^{-lambda x}` on `[0, w]` against
/// the hat functions of the two cell endpoints.
fn cell_weights(lambda: f64, w: f64) -> (f64, f64) {
    let p = -(-lambda * w).exp_m1();
    let q = p / lambda - w * (-lambda * w).exp();
    (p - q / w, q / w)
}

impl Quadrature {
    pub fn new(grid: StateGrid, model: &ArrivalModel) -> Self {
        let kernel = match model {
            ArrivalModel::Exponential { lambda } => {
                let len = grid.len();
                let (left, right) = cell_weights(*lambda, grid.step);
                let r = (-lambda * grid.step).exp();
                let mut interior = Vec::with_capacity(len);
                let mut closing = Vec::with_capacity(len);
                let mut tail = Vec::with_capacity(len);
                let mut rk = 1.0; // r^k
                for k in 0..len {
                    let prev = if k == 0 { 0.0 } else { rk / r };
                    interior.push(rk * left + prev * right);
                    closing.push(prev * right);
                    tail.push(rk);
                    rk *= r;
                }
                Kernel::Exponential {
                    lambda: *lambda,
                    interior,
                    closing,
                    tail,
                }
            }
            ArrivalModel::Discrete { atoms } => Kernel::Atoms(atoms.clone()),
            ArrivalModel::Constant { headway } => Kernel::Atoms(vec![(*headway, 1.0)]),
        };
        Self { grid, kernel }
    }

    pub fn grid(&self) -> &StateGrid {
        &self.grid
    }

    /// Expectation at node `i`, given that `values[j]` equals
    /// `values[plateau_from]` for every `j >= plateau_from` (and beyond `n`).
    pub fn node_expectation(&self, values: &[f64], i: usize, plateau_from: usize) -> f64 {
        let plateau = values[plateau_from];
        match &self.kernel {
            Kernel::Exponential {
                interior,
                closing,
                tail,
                ..
            } => {
                if i >= plateau_from {
                    return plateau;
                }
                let span = plateau_from - i;
                let body: f64 = interior[..span]
                    .iter()
                    .zip(&values[i..plateau_from])
                    .map(|(w, v)| w * v)
                    .sum();
                body + (closing[span] + tail[span]) * plateau
            }
            Kernel::Atoms(atoms) => {
                let s = self.grid.node(i);
                atoms
                    .iter()
                    .map(|&(h, p)| p * interpolate(&self.grid, values, s + h))
                    .sum()
            }
        }
    }

    /// Expectation at an arbitrary `a` in `[m, n]`.
    pub fn expected_value(&self, values: &[f64], a: f64) -> Result<f64> {
        let grid = &self.grid;
        if !(a >= grid.m - 1e-9 && a <= grid.n + 1e-9) {
            return Err(Error::InvalidGrid(format!(
                "expectation point {a} outside [{}, {}]",
                grid.m, grid.n
            )));
        }
        if let Some(i) = grid.index_of(a) {
            return Ok(self.node_expectation(values, i, values.len() - 1));
        }
        match &self.kernel {
            Kernel::Atoms(atoms) => {
                Ok(atoms
                    .iter()
                    .map(|&(h, p)| p * interpolate(grid, values, a + h))
                    .sum())
            }
            Kernel::Exponential { lambda, .. } => {
                // Cells from a to the next node, node to node, up to n.
                let lambda = *lambda;
                let reach = grid.n - a;
                let first = grid.floor_index(a) + 1;
                let mut breaks = vec![0.0];
                for j in first..grid.len() {
                    breaks.push(grid.node(j) - a);
                }
                let mut total = 0.0;
                let mut v_left = interpolate(grid, values, a);
                for w in breaks.windows(2) {
                    let (x0, x1) = (w[0], w[1]);
                    let v_right = interpolate(grid, values, a + x1);
                    let (wl, wr) = cell_weights(lambda, x1 - x0);
                    let decay = (-lambda * x0).exp();
                    total += decay * (wl * v_left + wr * v_right);
                    v_left = v_right;
                }
                total += (-lambda * reach).exp() * values[values.len() - 1];
                Ok(total)
            }
        }
    }
}
