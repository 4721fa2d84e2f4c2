//! Renewal inter-arrival models and the discounted arrival-rate estimator.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when matching a point-mass headway and when checking
/// that discrete probabilities sum to one.
const ATOM_TOLERANCE: f64 = 1e-12;

/// I.i.d. inter-arrival time distribution.
///
/// Discrete and constant headways are point masses; every integral against
/// the density becomes a weighted sum for them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", try_from = "ModelRepr")]
pub enum ArrivalModel {
    Exponential { lambda: f64 },
    Discrete { atoms: Vec<(f64, f64)> },
    Constant { headway: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ModelRepr {
    Exponential { lambda: f64 },
    Discrete { atoms: Vec<(f64, f64)> },
    Constant { headway: f64 },
}

impl TryFrom<ModelRepr> for ArrivalModel {
    type Error = Error;

    fn try_from(repr: ModelRepr) -> Result<Self> {
        let model = match repr {
            ModelRepr::Exponential { lambda } => ArrivalModel::Exponential { lambda },
            ModelRepr::Discrete { atoms } => ArrivalModel::Discrete { atoms },
            ModelRepr::Constant { headway } => ArrivalModel::Constant { headway },
        };
        model.validate()?;
        Ok(model)
    }
}

impl ArrivalModel {
    pub fn exponential(lambda: f64) -> Result<Self> {
        let m = ArrivalModel::Exponential { lambda };
        m.validate()?;
        Ok(m)
    }

    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let m = ArrivalModel::Discrete { atoms };
        m.validate()?;
        Ok(m)
    }

    pub fn constant(headway: f64) -> Result<Self> {
        let m = ArrivalModel::Constant { headway };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArrivalModel(msg));
        match self {
            ArrivalModel::Exponential { lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return bad(format!("exponential rate must be > 0, got {lambda}"));
                }
            }
            ArrivalModel::Discrete { atoms } => {
                if atoms.is_empty() {
                    return bad("discrete model needs at least one atom".into());
                }
                for &(h, p) in atoms {
                    if !(h.is_finite() && h > 0.0) {
                        return bad(format!("headway must be > 0, got {h}"));
                    }
                    if !(p.is_finite() && p > 0.0) {
                        return bad(format!("probability must be > 0, got {p}"));
                    }
                }
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                if (total - 1.0).abs() > ATOM_TOLERANCE {
                    return bad(format!("probabilities sum to {total}, not 1"));
                }
            }
            ArrivalModel::Constant { headway } => {
                if !(headway.is_finite() && *headway > 0.0) {
                    return bad(format!("headway must be > 0, got {headway}"));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Density for the exponential model; point mass for the others.
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            ArrivalModel::Exponential { lambda } => lambda * (-lambda * x).exp(),
            ArrivalModel::Discrete { atoms } => atoms
                .iter()
                .filter(|(h, _)| (h - x).abs() <= ATOM_TOLERANCE * h.max(1.0))
                .map(|a| a.1)
                .sum(),
            ArrivalModel::Constant { headway } => {
                if (headway - x).abs() <= ATOM_TOLERANCE * headway.max(1.0) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `P(X > x)`.
    pub fn tail_mass(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match self {
            ArrivalModel::Exponential { lambda } => (-lambda * x).exp(),
            ArrivalModel::Discrete { atoms } => {
                atoms.iter().filter(|(h, _)| *h > x).map(|a| a.1).sum()
            }
            ArrivalModel::Constant { headway } => {
                if *headway > x {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ArrivalModel::Exponential { lambda } => 1.0 / lambda,
            ArrivalModel::Discrete { atoms } => atoms.iter().map(|(h, p)| h * p).sum(),
            ArrivalModel::Constant { headway } => *headway,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ArrivalModel::Exponential { lambda } => Exp::new(*lambda)
                .expect("validated rate")
                .sample(rng),
            ArrivalModel::Discrete { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(h, p) in atoms {
                    acc += p;
                    if u < acc {
                        return h;
                    }
                }
                atoms[atoms.len() - 1].0
            }
            ArrivalModel::Constant { headway } => *headway,
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, ArrivalModel::Exponential { .. })
    }

    /// Short label used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            ArrivalModel::Exponential { .. } => "exponential",
            ArrivalModel::Discrete { .. } => "discrete",
            ArrivalModel::Constant { .. } => "constant",
        }
    }
}

impl fmt::Display for ArrivalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArrivalModel::Exponential { lambda } => write!(f, "exponential:{lambda}"),
            ArrivalModel::Discrete { atoms } => {
                write!(f, "discrete:")?;
                for (i, (h, p)) in atoms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{h}:{p}")?;
                }
                Ok(())
            }
            ArrivalModel::Constant { headway } => write!(f, "constant:{headway}"),
        }
    }
}

/// Parses the command-line shorthand `exponential:0.02`,
/// `discrete:15:0.4,8:0.6` or `constant:10`. A leading `{` is parsed as JSON.
impl FromStr for ArrivalModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return ArrivalModel::from_json(s);
        }
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArrivalModel(format!("expected `kind:args`, got `{s}`")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArrivalModel(format!("bad number `{t}`: {e}")))
        };
        match kind.trim().to_ascii_lowercase().as_str() {
            "exponential" | "exp" | "poisson" => ArrivalModel::exponential(num(rest)?),
            "constant" | "const" => ArrivalModel::constant(num(rest)?),
            "discrete" => {
                let atoms = rest
                    .trim_matches('"')
                    .split(',')
                    .map(|pair| {
                        let (h, p) = pair.split_once(':').ok_or_else(|| {
                            Error::InvalidArrivalModel(format!("expected `headway:prob`, got `{pair}`"))
                        })?;
                        Ok((num(h)?, num(p)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                ArrivalModel::discrete(atoms)
            }
            other => Err(Error::InvalidArrivalModel(format!("unknown model `{other}`"))),
        }
    }
}

/// Arrival-rate estimate from the last `window` headways, discounted by
/// `beta` per step back:
///
/// `rate = 1 / ((1 - beta) * sum_m beta^m X_{k-m})`.
///
/// With fewer than `window` observations the sum runs over what is available.
#[derive(Debug, Clone)]
pub struct RateEstimator {
    beta: f64,
    window: usize,
    // most recent first
    headways: VecDeque<f64>,
}

impl RateEstimator {
    pub fn new(beta: f64, window: usize) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("must lie in (0, 1), got {beta}"),
            });
        }
        if window == 0 {
            return Err(Error::InvalidParameter {
                name: "window",
                reason: "must be >= 1".into(),
            });
        }
        Ok(Self {
            beta,
            window,
            headways: VecDeque::with_capacity(window),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.headways.len()
    }

    pub fn is_empty(&self) -> bool {
        self.headways.is_empty()
    }

    pub fn observe(&mut self, headway: f64) {
        if self.headways.len() == self.window {
            self.headways.pop_back();
        }
        self.headways.push_front(headway);
    }

    pub fn estimate(&self) -> Result<f64> {
        if self.headways.is_empty() {
            return Err(Error::EmptyEstimator);
        }
        let mut weight = 1.0;
        let mut sum = 0.0;
        for &x in &self.headways {
            sum += weight * x;
            weight *= self.beta;
        }
        Ok(1.0 / ((1.0 - self.beta) * sum))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn paper_discrete() -> ArrivalModel {
        ArrivalModel::discrete(vec![(15.0, 0.4), (8.0, 0.6)]).unwrap()
    }

    #[test]
    fn densities() {
        let e = ArrivalModel::exponential(0.02).unwrap();
        assert_eq!(e.density(0.0), 0.02);
        assert_eq!(ArrivalModel::constant(10.0).unwrap().density(10.0), 1.0);
        assert_eq!(ArrivalModel::constant(10.0).unwrap().density(9.0), 0.0);
        assert_eq!(paper_discrete().density(8.0), 0.6);
        assert_eq!(paper_discrete().density(15.0), 0.4);
        assert_eq!(paper_discrete().density(10.0), 0.0);
    }

    #[test]
    fn tails() {
        let e = ArrivalModel::exponential(0.02).unwrap();
        assert_eq!(e.tail_mass(0.0), 1.0);
        assert!((e.tail_mass(37.0) - (-0.74f64).exp()).abs() < 1e-15);
        assert_eq!(ArrivalModel::constant(10.0).unwrap().tail_mass(20.0), 0.0);
        assert_eq!(ArrivalModel::constant(10.0).unwrap().tail_mass(5.0), 1.0);
        assert!((paper_discrete().tail_mass(10.0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(ArrivalModel::exponential(0.0).is_err());
        assert!(ArrivalModel::constant(-1.0).is_err());
        assert!(ArrivalModel::discrete(vec![(1.0, 0.5), (2.0, 0.4)]).is_err());
        assert!(ArrivalModel::discrete(vec![(0.0, 1.0)]).is_err());
        assert!(ArrivalModel::discrete(vec![]).is_err());
    }

    #[test]
    fn json_forms() {
        let e = ArrivalModel::from_json(r#"{"type":"exponential","lambda":0.02}"#).unwrap();
        assert_eq!(e, ArrivalModel::Exponential { lambda: 0.02 });
        let d = ArrivalModel::from_json(r#"{"type":"discrete","atoms":[[15.0,0.4],[8.0,0.6]]}"#).unwrap();
        assert_eq!(d, paper_discrete());
        let c = ArrivalModel::from_json(r#"{"type":"constant","headway":10.0}"#).unwrap();
        assert_eq!(c, ArrivalModel::Constant { headway: 10.0 });
        assert!(ArrivalModel::from_json(r#"{"type":"exponential","lambda":-1}"#).is_err());
        assert_eq!(serde_json::to_string(&d).unwrap(), r#"{"type":"discrete","atoms":[[15.0,0.4],[8.0,0.6]]}"#);
    }

    #[test]
    fn shorthand() {
        assert_eq!("exponential:0.02".parse::<ArrivalModel>().unwrap(), ArrivalModel::Exponential { lambda: 0.02 });
        assert_eq!("discrete:15:0.4,8:0.6".parse::<ArrivalModel>().unwrap(), paper_discrete());
        assert_eq!("discrete:\"15:0.4,8:0.6\"".parse::<ArrivalModel>().unwrap(), paper_discrete());
        assert_eq!("constant:10".parse::<ArrivalModel>().unwrap(), ArrivalModel::Constant { headway: 10.0 });
        assert!("weibull:2".parse::<ArrivalModel>().is_err());
        let d = paper_discrete();
        assert_eq!(d.to_string().parse::<ArrivalModel>().unwrap(), d);
    }

    #[test]
    fn exponential_density_normalized() {
        // Trapezoid oracle on a fine mesh plus the closed-form tail.
        let e = ArrivalModel::exponential(0.05).unwrap();
        for t in [1.0, 10.0, 60.0, 200.0] {
            let n = 200_000;
            let h = t / n as f64;
            let mut s = 0.5 * (e.density(0.0) + e.density(t));
            for i in 1..n {
                s += e.density(i as f64 * h);
            }
            let total = s * h + e.tail_mass(t);
            assert!((total - 1.0).abs() < 1e-9, "T={t}: {total}");
        }
    }

    #[test]
    fn sampling_moments() {
        let mut rng = seeded(11);
        assert_eq!(ArrivalModel::constant(10.0).unwrap().sample(&mut rng), 10.0);

        let e = ArrivalModel::exponential(0.02).unwrap();
        let n = 1_000_000;
        let mean = (0..n).map(|_| e.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 50.0).abs() < 0.5, "mean {mean}");

        let d = paper_discrete();
        let hits = (0..n).filter(|_| d.sample(&mut rng) == 15.0).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.4).abs() < 0.005, "freq {freq}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let e = ArrivalModel::exponential(0.1).unwrap();
        let a: Vec<f64> = {
            let mut r = seeded(3);
            (0..10).map(|_| e.sample(&mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = seeded(3);
            (0..10).map(|_| e.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn estimator_closed_forms() {
        let mut est = RateEstimator::new(0.9, 50).unwrap();
        assert!(matches!(est.estimate(), Err(Error::EmptyEstimator)));
        est.observe(10.0);
        assert!((est.estimate().unwrap() - 1.0).abs() < 1e-12);

        let mut est = RateEstimator::new(0.9, 50).unwrap();
        for _ in 0..50 {
            est.observe(50.0);
        }
        let expected = 1.0 / (50.0 * (1.0 - 0.9f64.powi(50)));
        assert!((est.estimate().unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.020_103_7).abs() < 1e-7);
    }

    #[test]
    fn estimator_rejects_bad_config() {
        assert!(RateEstimator::new(1.0, 5).is_err());
        assert!(RateEstimator::new(0.5, 0).is_err());
    }

    proptest! {
        #[test]
        fn estimator_ignores_old_headways(
            window in 1usize..20,
            recent in proptest::collection::vec(0.1f64..100.0, 20),
            old in proptest::collection::vec(0.1f64..100.0, 0..10),
        ) {
            let mut a = RateEstimator::new(0.8, window).unwrap();
            let mut b = RateEstimator::new(0.8, window).unwrap();
            for &x in &old {
                a.observe(x);
            }
            for &x in &recent {
                a.observe(x);
                b.observe(x);
            }
            prop_assert_eq!(a.estimate().unwrap(), b.estimate().unwrap());
            prop_assert!(a.estimate().unwrap() > 0.0);
        }
    }
}
