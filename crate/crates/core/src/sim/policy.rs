use serde::{Deserialize, Serialize};

use crate::arrivals::RateEstimator;
use crate::cost::{CostConstants, CostParams};
use crate::dp::ThresholdPolicy;
use crate::error::{Error, Result};
use crate::poisson::{self, PoissonOptions, PoissonSolution};

/// Coordination rule applied at the detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    /// Keep nominal speed; followers arriving within the safety reaction
    /// time of the vehicle ahead form a platoon anyway.
    Baseline,
    /// Accelerate to merge whenever the raw inter-arrival time is below `tau`.
    PolicyA { tau: f64 },
    /// Fixed threshold pair.
    PolicyB { policy: ThresholdPolicy },
    /// Threshold pair re-solved for every vehicle from the estimated rate.
    Rts(RtsConfig),
}

impl PolicySpec {
    pub fn id(&self) -> String {
        match self {
            PolicySpec::Baseline => "baseline".into(),
            PolicySpec::PolicyA { tau } => format!("policy-a(tau={tau})"),
            PolicySpec::PolicyB { policy } => format!("policy-b(theta={},c={})", policy.theta, policy.c),
            PolicySpec::Rts(cfg) => format!("rts(beta={},window={})", cfg.beta, cfg.window),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PolicySpec::PolicyA { tau } if !(*tau >= 0.0) => Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("must be >= 0, got {tau}"),
            }),
            PolicySpec::Rts(cfg) => RateEstimator::new(cfg.beta, cfg.window).map(|_| ()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtsConfig {
    pub beta: f64,
    pub window: usize,
    /// Re-solve only when the relative change of the estimate exceeds this.
    /// `None` re-solves at every arrival.
    pub resolve_threshold: Option<f64>,
}

impl Default for RtsConfig {
    fn default() -> Self {
        Self {
            beta: 0.9,
            window: 50,
            resolve_threshold: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Merging followers reach the junction this long after the vehicle ahead.
    pub t_safety: f64,
    /// Speed cap, m/s.
    pub v_max: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            t_safety: 2.3,
            v_max: 40.0,
        }
    }
}

/// What the controller tells a vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    /// Applied time reduction, including any safety buffer.
    pub u: f64,
    pub merged: bool,
    /// Threshold pair in force, for threshold policies.
    pub threshold: Option<ThresholdPolicy>,
    /// Rate estimate, for the real-time strategy.
    pub rate: Option<f64>,
}

impl Command {
    fn cruise(u: f64) -> Self {
        Self {
            u,
            merged: false,
            threshold: None,
            rate: None,
        }
    }
}

/// Stateful policy: owns the estimator and the warm-start state.
#[derive(Debug, Clone)]
pub struct Controller {
    spec: PolicySpec,
    params: CostParams,
    consts: CostConstants,
    opts: SimOptions,
    estimator: Option<RateEstimator>,
    last: Option<PoissonSolution>,
    solver: PoissonOptions,
    solves: usize,
}

impl Controller {
    pub fn new(spec: PolicySpec, params: CostParams, consts: CostConstants, opts: SimOptions) -> Result<Self> {
        spec.validate()?;
        let estimator = match &spec {
            PolicySpec::Rts(cfg) => Some(RateEstimator::new(cfg.beta, cfg.window)?),
            _ => None,
        };
        Ok(Self {
            spec,
            params,
            consts,
            opts,
            estimator,
            last: None,
            solver: PoissonOptions::default(),
            solves: 0,
        })
    }

    /// Number of Poisson re-solves performed so far.
    pub fn solves(&self) -> usize {
        self.solves
    }

    fn speed_ok(&self, u: f64) -> bool {
        u < self.consts.t0 && self.params.zone_speed(u) <= self.opts.v_max
    }

    fn threshold_command(&self, s: f64, policy: ThresholdPolicy) -> Command {
        let mut cmd = if s <= policy.theta {
            let u = s - self.opts.t_safety;
            if self.speed_ok(u) {
                Command {
                    u,
                    merged: true,
                    threshold: None,
                    rate: None,
                }
            } else {
                Command::cruise(policy.c)
            }
        } else {
            Command::cruise(policy.c)
        };
        cmd.threshold = Some(policy);
        cmd
    }

    fn resolve(&mut self, rate: f64) -> Result<PoissonSolution> {
        let threshold = match &self.spec {
            PolicySpec::Rts(cfg) => cfg.resolve_threshold,
            _ => None,
        };
        if let (Some(tol), Some(last)) = (threshold, self.last) {
            if ((rate - last.lambda) / last.lambda).abs() <= tol {
                return Ok(last);
            }
        }
        let warm = self.last.map(|s| (s.theta, s.c));
        let sol = match poisson::solve(rate, &self.params, &self.consts, warm, &self.solver) {
            Ok(sol) => sol,
            Err(_) if warm.is_some() => poisson::solve(rate, &self.params, &self.consts, None, &self.solver)?,
            Err(e) => return Err(e),
        };
        self.solves += 1;
        self.last = Some(sol);
        Ok(sol)
    }

    /// Decides for a vehicle with predicted headway `s` whose gap to the
    /// previous detector passage is `gap` (`None` for the first vehicle,
    /// which has nobody to join and keeps nominal speed).
    pub fn decide(&mut self, s: f64, gap: Option<f64>) -> Result<Command> {
        let Some(gap) = gap else {
            return Ok(Command::cruise(0.0));
        };
        let t_safety = self.opts.t_safety;
        match self.spec.clone() {
            PolicySpec::Baseline => Ok(Command {
                u: 0.0,
                merged: (0.0..=t_safety).contains(&s),
                threshold: None,
                rate: None,
            }),
            PolicySpec::PolicyA { tau } => {
                if gap < tau && s >= 0.0 {
                    let u = (s - t_safety).max(0.0);
                    if self.speed_ok(u) {
                        return Ok(Command {
                            u,
                            merged: true,
                            threshold: None,
                            rate: None,
                        });
                    }
                }
                Ok(Command {
                    u: 0.0,
                    merged: (0.0..=t_safety).contains(&s),
                    threshold: None,
                    rate: None,
                })
            }
            PolicySpec::PolicyB { policy } => Ok(self.threshold_command(s, policy)),
            PolicySpec::Rts(_) => {
                let est = self.estimator.as_mut().expect("rts controller has an estimator");
                est.observe(gap);
                let rate = est.estimate()?;
                let sol = self.resolve(rate)?;
                let mut cmd = self.threshold_command(s, ThresholdPolicy { theta: sol.theta, c: sol.c });
                cmd.rate = Some(rate);
                Ok(cmd)
            }
        }
    }
}
