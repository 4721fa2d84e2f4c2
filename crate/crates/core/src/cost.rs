//! Single-vehicle reward model.
//!
//! A vehicle entering the coordinating zone with predicted headway `s` either
//! merges (time reduction `a = s`) and collects the merge reward `G(s)`, or
//! cruises with some reduction `a < s` and collects `H(a) = G(a) - G(0)`.
//! `G(0)` is the monetary value of the platoon fuel saving downstream.
//!
//! All internal quantities are SI-derived: seconds, meters, m/s, liters and
//! currency. [`ParamsConfig`] handles the conversion from the customary units
//! (currency/hour, L/100km, km).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::bisect;

/// Evaluations must stay at least this far below `t0`.
pub const SINGULARITY_GUARD: f64 = 1e-9;

const BRACKET_OFFSET: f64 = 1e-6;
const ROOT_TOLERANCE: f64 = 1e-9;

/// Physical and economic constants, in SI-derived units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Value of time, currency per second.
    pub w1: f64,
    /// Fuel price, currency per liter.
    pub w2: f64,
    /// Fuel-vs-speed coefficient, L s^2 / m^3.
    pub alpha: f64,
    /// Fraction of cruising fuel saved by a platoon follower.
    pub eta: f64,
    /// Fuel consumption, liters per meter.
    pub phi: f64,
    /// Nominal cruise speed, m/s.
    pub v: f64,
    /// Coordinating-zone length, m.
    pub d1: f64,
    /// Cruising-zone length, m.
    pub d2: f64,
    /// Discount factor.
    pub gamma: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self::nominal()
    }
}

impl CostParams {
    /// Nominal case-study values (I-210 / 134 interchange).
    pub fn nominal() -> Self {
        ParamsConfig::default().into_params_unchecked()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("w1", self.w1),
            ("w2", self.w2),
            ("alpha", self.alpha),
            ("eta", self.eta),
            ("phi", self.phi),
            ("v", self.v),
            ("d1", self.d1),
            ("d2", self.d2),
            ("gamma", self.gamma),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        if self.gamma >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("must lie in (0, 1), got {}", self.gamma),
            });
        }
        if self.eta >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: format!("must lie in (0, 1), got {}", self.eta),
            });
        }
        Ok(())
    }

    /// Nominal traversal time of the coordinating zone.
    pub fn t0(&self) -> f64 {
        self.d1 / self.v
    }

    /// `G(0) = w2 * eta * phi * d2`, the value of merging.
    pub fn platoon_bonus(&self) -> f64 {
        self.w2 * self.eta * self.phi * self.d2
    }

    /// Spatial-average coordinating-zone speed for time reduction `u`.
    pub fn zone_speed(&self, u: f64) -> f64 {
        self.d1 / (self.t0() - u)
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        let t0 = self.t0();
        if s.is_nan() || s > t0 - SINGULARITY_GUARD {
            Err(Error::Domain { s, t0 })
        } else {
            Ok(())
        }
    }

    /// `G(s)` without the domain guard. Callers must ensure `s < t0`.
    pub(crate) fn merge_reward_raw(&self, s: f64) -> f64 {
        let speed = self.zone_speed(s);
        self.w1 * s
            + self.w2
                * (self.alpha * self.d1 * self.v * self.v - self.alpha * self.d1 * speed * speed
                    + self.eta * self.phi * self.d2)
    }

    pub(crate) fn merge_reward_derivative_raw(&self, s: f64) -> f64 {
        let speed = self.zone_speed(s);
        self.w1 - 2.0 * self.w2 * self.alpha * speed * speed * speed
    }

    pub(crate) fn merge_reward_second_derivative_raw(&self, s: f64) -> f64 {
        let speed = self.zone_speed(s);
        -6.0 * self.w2 * self.alpha * speed.powi(4) / self.d1
    }

    /// `G(s)`: reward for merging with the platoon ahead at predicted headway `s`.
    pub fn reward_merge(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(self.merge_reward_raw(s))
    }

    /// `H(a) = G(a) - G(0)`: reward for cruising with time reduction `a`.
    pub fn reward_cruise(&self, a: f64) -> Result<f64> {
        self.check_domain(a)?;
        Ok(self.merge_reward_raw(a) - self.platoon_bonus())
    }

    /// `G'(s)`.
    pub fn reward_merge_derivative(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(self.merge_reward_derivative_raw(s))
    }

    /// One-step reward `R(s, a)`.
    ///
    /// `a == s` is the merge action and is only available while `s < t0`;
    /// otherwise `a` must be strictly below `s` (and below `t0`).
    pub fn reward(&self, s: f64, a: f64) -> Result<f64> {
        let t0 = self.t0();
        if s < t0 {
            if a > s {
                return Err(Error::InvalidParameter {
                    name: "a",
                    reason: format!("time reduction {a} exceeds predicted headway {s}"),
                });
            }
            if a == s {
                return self.reward_merge(s);
            }
        }
        self.reward_cruise(a)
    }

    /// Derived constants `t0`, `c_n`, `G(0)`, `theta_n`, `theta_n'`.
    pub fn constants(&self) -> Result<CostConstants> {
        self.validate()?;
        let t0 = self.t0();
        let c_n = self.d1 * (1.0 / self.v - (2.0 * self.w2 * self.alpha / self.w1).cbrt());
        let g0 = self.platoon_bonus();
        let level = self.merge_reward_raw(c_n) - g0;
        let f = |t: f64| self.merge_reward_raw(t) - level;

        let theta_n = bisect(
            f,
            c_n + BRACKET_OFFSET,
            t0 - BRACKET_OFFSET,
            ROOT_TOLERANCE,
        )
        .ok_or_else(|| Error::Bracketing(format!("theta_n in ({c_n}, {t0})")))?;

        let mut width = 1.0;
        let mut lo = c_n - width;
        while f(lo) > 0.0 {
            width *= 2.0;
            lo = c_n - width;
            if width > 1e9 {
                return Err(Error::Bracketing(format!("theta_n' below {c_n}")));
            }
        }
        let theta_n_prime = bisect(f, lo, c_n - BRACKET_OFFSET, ROOT_TOLERANCE)
            .ok_or_else(|| Error::Bracketing(format!("theta_n' in ({lo}, {c_n})")))?;

        Ok(CostConstants {
            t0,
            c_n,
            g0,
            theta_n,
            theta_n_prime,
        })
    }
}

/// Constants derived from [`CostParams`] that bound the optimal policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConstants {
    /// Nominal traversal time `d1 / v`.
    pub t0: f64,
    /// Maximizer of `G`; the myopic cruise reduction. Usually negative.
    pub c_n: f64,
    /// `G(0)`.
    pub g0: f64,
    /// Root of `G(t) = G(c_n) - G(0)` above `c_n`: upper bound on the threshold.
    pub theta_n: f64,
    /// Root of the same equation below `c_n`: lower bound on the cruise action.
    pub theta_n_prime: f64,
}

/// Flat JSON parameter object in customary units. Missing keys take the
/// nominal case-study values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamsConfig {
    pub w1_per_hour: f64,
    pub w2_per_liter: f64,
    pub alpha: f64,
    pub eta: f64,
    pub phi_l_per_100km: f64,
    pub v_mps: f64,
    pub d1_km: f64,
    pub d2_km: f64,
    pub gamma: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            w1_per_hour: 25.8,
            w2_per_liter: 0.868,
            alpha: 3.51e-7,
            eta: 0.1,
            phi_l_per_100km: 32.2,
            v_mps: 23.0,
            d1_km: 1.0,
            d2_km: 30.0,
            gamma: 0.9,
        }
    }
}

impl ParamsConfig {
    fn into_params_unchecked(self) -> CostParams {
        CostParams {
            w1: self.w1_per_hour / 3600.0,
            w2: self.w2_per_liter,
            alpha: self.alpha,
            eta: self.eta,
            phi: self.phi_l_per_100km / 1e5,
            v: self.v_mps,
            d1: self.d1_km * 1000.0,
            d2: self.d2_km * 1000.0,
            gamma: self.gamma,
        }
    }

    pub fn into_params(self) -> Result<CostParams> {
        let p = self.into_params_unchecked();
        p.validate()?;
        Ok(p)
    }

    pub fn from_json(text: &str) -> Result<CostParams> {
        let cfg: ParamsConfig = serde_json::from_str(text)?;
        cfg.into_params()
    }
}
