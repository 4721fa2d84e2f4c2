//! Poisson arrivals: the threshold pair as the root of two integral equations.
//!
//! With `f(x) = lambda e^{-lambda x}` the value function below the threshold
//! satisfies the linear ODE
//!
//! ```text
//! V'(s) = G'(s) - lambda G(s) + lambda (1 - gamma) V(s)
//! ```
//!
//! with `V(c) = Z + G(0)`, `V(theta) = Z`, `V'(c) = 0` and
//! `Z = G(theta) / (1 - gamma)`. Eliminating `Z` leaves two equations in
//! `(theta, c)`, solved here by damped Newton.

use serde::{Deserialize, Serialize};

use crate::cost::{CostConstants, CostParams, SINGULARITY_GUARD};
use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

/// Iterates may not wander below `theta_n' - LOWER_MARGIN`.
const LOWER_MARGIN: f64 = 50.0;
const MAX_HALVINGS: usize = 30;
const BOUND_SLACK: f64 = 1e-6;
const FULL_ACCURACY: f64 = 1e-12;
/// Far from the root the integral is only needed to a fraction of the
/// current residual (inexact Newton).
const INEXACT_FRACTION: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonSolution {
    pub theta: f64,
    pub c: f64,
    pub z: f64,
    pub lambda: f64,
    /// `|(r1, r2)| / max(1, |Z|)` at the returned point.
    pub residual_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PoissonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

/// The pair of equations for a fixed model, with derivatives.
struct System<'a> {
    p: &'a CostParams,
    lambda: f64,
    k: f64,
    g0: f64,
}

struct Eval {
    r: [f64; 2],
    jac: [[f64; 2]; 2],
    z: f64,
}

impl<'a> System<'a> {
    fn new(p: &'a CostParams, lambda: f64) -> Self {
        Self {
            p,
            lambda,
            k: lambda * (1.0 - p.gamma),
            g0: p.platoon_bonus(),
        }
    }

    fn z(&self, theta: f64) -> f64 {
        self.p.merge_reward_raw(theta) / (1.0 - self.p.gamma)
    }

    /// `G'(t) - lambda G(t)`.
    fn source(&self, t: f64) -> f64 {
        self.p.merge_reward_derivative_raw(t) - self.lambda * self.p.merge_reward_raw(t)
    }

    /// `int_c^s e^{k (s - t)} (G'(t) - lambda G(t)) dt`.
    fn propagated(&self, c: f64, s: f64, z: f64) -> f64 {
        let tol = 1e-12 * (1.0 + z.abs());
        adaptive_simpson(|t| (self.k * (s - t)).exp() * self.source(t), c, s, tol)
    }

    /// Closed-form `V(s)` for `s <= theta` given `(c, Z)`.
    fn value(&self, s: f64, c: f64, z: f64) -> f64 {
        self.propagated(c, s, z) + (z + self.g0) * (self.k * (s - c)).exp()
    }

    /// `int_c^s e^{k (c - t)} (G'(t) - lambda G(t)) dt`, the same integral
    /// discounted back to `c`; stays bounded when `k (s - c)` is large.
    fn discounted(&self, c: f64, s: f64, tol: f64) -> f64 {
        adaptive_simpson(|t| (self.k * (c - t)).exp() * self.source(t), c, s, tol)
    }

    /// The boundary equation at `theta` is carried in units discounted back
    /// to `c`, i.e. multiplied by `e^{-k (theta - c)}`; the roots are the same
    /// but no large terms cancel.
    fn residuals(&self, theta: f64, c: f64) -> ([f64; 2], f64, f64) {
        self.residuals_to(theta, c, 0.0)
    }

    /// Residuals with the quadrature tolerance relaxed to `loose * (1 + |Z|)`
    /// when that exceeds the default `1e-12 * (1 + |Z|)`.
    fn residuals_to(&self, theta: f64, c: f64, loose: f64) -> ([f64; 2], f64, f64) {
        let z = self.z(theta);
        let tol = loose.max(FULL_ACCURACY) * (1.0 + z.abs());
        let integral = self.discounted(c, theta, tol);
        let decay = (-self.k * (theta - c)).exp();
        let r1 = z * decay - integral - (z + self.g0);
        let r2 = self.source(c) + self.k * (z + self.g0);
        ([r1, r2], z, integral)
    }

    fn eval(&self, theta: f64, c: f64, loose: f64) -> Eval {
        let (r, z, integral) = self.residuals_to(theta, c, loose);
        let dz = self.p.merge_reward_derivative_raw(theta) / (1.0 - self.p.gamma);
        let decay = (-self.k * (theta - c)).exp();
        let d1_dtheta = (dz - self.k * z - self.source(theta)) * decay - dz;
        let d1_dc = self.k * z * decay + self.source(c) - self.k * integral;
        let d2_dtheta = self.k * dz;
        let d2_dc = self.p.merge_reward_second_derivative_raw(c)
            - self.lambda * self.p.merge_reward_derivative_raw(c);
        Eval {
            r,
            jac: [[d1_dtheta, d1_dc], [d2_dtheta, d2_dc]],
            z,
        }
    }
}

fn scaled_norm(r: &[f64; 2], z: f64) -> f64 {
    r[0].hypot(r[1]) / z.abs().max(1.0)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("arrival rate must be > 0, got {lambda}"),
        });
    }
    Ok(())
}

type Step = (f64, f64, Eval, f64);

/// Damped Newton step from `(theta, c)`; `None` if no halving decreases the
/// residual norm.
fn newton_step(
    sys: &System,
    eval: &Eval,
    norm: f64,
    theta: f64,
    c: f64,
    loose: f64,
    admissible: &dyn Fn(f64, f64) -> bool,
) -> Result<Option<Step>> {
    let [[a, b], [cc, d]] = eval.jac;
    let det = a * d - b * cc;
    if !(det.is_finite() && det != 0.0) {
        return Err(Error::Diverged {
            theta,
            c,
            reason: "singular jacobian".into(),
        });
    }
    let step_theta = -(d * eval.r[0] - b * eval.r[1]) / det;
    let step_c = -(-cc * eval.r[0] + a * eval.r[1]) / det;
    let mut scale = 1.0;
    for _ in 0..=MAX_HALVINGS {
        let (t_new, c_new) = (theta + scale * step_theta, c + scale * step_c);
        if admissible(t_new, c_new) {
            let trial = sys.eval(t_new, c_new, loose);
            let n_new = scaled_norm(&trial.r, trial.z);
            if n_new < norm {
                return Ok(Some((t_new, c_new, trial, n_new)));
            }
        }
        scale *= 0.5;
    }
    Ok(None)
}

/// Residuals `(r1, r2)` of the two equations at `(theta, c)`. The first is
/// scaled by `e^{-lambda (1 - gamma) (theta - c)}`.
pub fn residuals(
    theta: f64,
    c: f64,
    lambda: f64,
    params: &CostParams,
    consts: &CostConstants,
) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    if theta > consts.t0 - SINGULARITY_GUARD || c > consts.t0 - SINGULARITY_GUARD {
        return Err(Error::Domain {
            s: theta.max(c),
            t0: consts.t0,
        });
    }
    let (r, _, _) = System::new(params, lambda).residuals(theta, c);
    Ok((r[0], r[1]))
}

/// Solves for `(theta, c)` from `init`, or from just inside the analytic
/// bounds when `init` is `None`.
pub fn solve(
    lambda: f64,
    params: &CostParams,
    consts: &CostConstants,
    init: Option<(f64, f64)>,
    opts: &PoissonOptions,
) -> Result<PoissonSolution> {
    check_lambda(lambda)?;
    let sys = System::new(params, lambda);
    let (mut theta, mut c) = init.unwrap_or((consts.theta_n - 0.1, consts.c_n - 0.1));
    let upper = consts.t0 - SINGULARITY_GUARD;
    let lower = consts.theta_n_prime - LOWER_MARGIN;
    let admissible = |theta: f64, c: f64| c < theta && theta < upper && c > lower;
    if !admissible(theta, c) {
        return Err(Error::Diverged {
            theta,
            c,
            reason: "initial point outside the admissible region".into(),
        });
    }

    let mut loose = INEXACT_FRACTION;
    let mut eval = sys.eval(theta, c, loose);
    let mut norm = scaled_norm(&eval.r, eval.z);
    let mut iterations = 0;
    loop {
        if norm <= opts.tolerance {
            if loose <= FULL_ACCURACY {
                break;
            }
            // confirm at full accuracy before stopping
            loose = 0.0;
            eval = sys.eval(theta, c, loose);
            norm = scaled_norm(&eval.r, eval.z);
            continue;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NotConverged {
                solver: "poisson newton",
                iterations,
                last_delta: norm,
            });
        }
        iterations += 1;
        loose = (INEXACT_FRACTION * norm).min(loose);
        let (t_new, c_new, trial, n_new) = loop {
            match newton_step(&sys, &eval, norm, theta, c, loose, &admissible)? {
                Some(found) => break found,
                // quadrature noise may hide a small decrease: tighten and retry
                None if loose > FULL_ACCURACY => {
                    loose = (loose * 1e-3).max(FULL_ACCURACY);
                    eval = sys.eval(theta, c, loose);
                    norm = scaled_norm(&eval.r, eval.z);
                }
                None => {
                    return Err(Error::Diverged {
                        theta,
                        c,
                        reason: format!("no descent after {MAX_HALVINGS} step halvings (residual {norm:e})"),
                    })
                }
            }
        };
        theta = t_new;
        c = c_new;
        eval = trial;
        norm = n_new;
    }

    let slack = BOUND_SLACK * (1.0 + consts.theta_n.abs());
    if theta > consts.theta_n + slack || theta < consts.c_n - slack || c > consts.c_n + slack || c < consts.theta_n_prime - slack {
        return Err(Error::Diverged {
            theta,
            c,
            reason: format!(
                "root outside the bounds theta in [{}, {}], c in [{}, {}]",
                consts.c_n, consts.theta_n, consts.theta_n_prime, consts.c_n
            ),
        });
    }
    Ok(PoissonSolution {
        theta,
        c,
        z: eval.z,
        lambda,
        residual_norm: norm,
        iterations,
    })
}

/// Value function implied by a solution: the ODE solution below the
/// threshold and the plateau `Z` above it.
pub fn closed_form_value(s: f64, sol: &PoissonSolution, params: &CostParams, consts: &CostConstants) -> Result<f64> {
    if s > consts.t0 - SINGULARITY_GUARD {
        return Err(Error::Domain { s, t0: consts.t0 });
    }
    if s > sol.theta {
        return Ok(sol.z);
    }
    Ok(System::new(params, sol.lambda).value(s, sol.c, sol.z))
}
