use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TABLE1_CSV: &str = include_str!("../../data/table1.csv");
const HOUR: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub hour: u32,
    pub flow1_vph: f64,
    pub flow2_vph: f64,
}

/// Hourly flows on the two merging branches and the share of that traffic
/// taking part in coordination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSchedule {
    pub rows: Vec<FlowRow>,
    pub scale: f64,
}

impl FlowSchedule {
    /// Bundled 24-hour flows of the I-210 / 134 interchange.
    pub fn table1(scale: f64) -> Result<Self> {
        Self::from_csv_reader(TABLE1_CSV.as_bytes(), scale)
    }

    /// Same total flow in every hour.
    pub fn uniform(vph: f64, scale: f64) -> Result<Self> {
        let rows = (0..24)
            .map(|hour| FlowRow {
                hour,
                flow1_vph: vph,
                flow2_vph: 0.0,
            })
            .collect();
        let s = Self { rows, scale };
        s.validate()?;
        Ok(s)
    }

    pub fn from_csv_path(path: &Path, scale: f64) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?, scale)
    }

    /// Reads `hour,flow1_vph,flow2_vph` with exactly 24 data rows.
    pub fn from_csv_reader<R: Read>(reader: R, scale: f64) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["hour", "flow1_vph", "flow2_vph"];
        if headers.iter().map(str::trim).ne(expected) {
            return Err(Error::Schedule(format!(
                "expected header `hour,flow1_vph,flow2_vph`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let rows = rdr
            .deserialize::<FlowRow>()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let s = Self { rows, scale };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() != 24 {
            return Err(Error::Schedule(format!("expected 24 rows, got {}", self.rows.len())));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.hour as usize != i {
                return Err(Error::Schedule(format!("row {i} has hour {}", row.hour)));
            }
            if !(row.flow1_vph >= 0.0 && row.flow2_vph >= 0.0) {
                return Err(Error::Schedule(format!("negative flow in hour {i}")));
            }
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::Schedule(format!("scale must lie in (0, 1], got {}", self.scale)));
        }
        Ok(())
    }

    /// Mean unscaled flow over the day.
    pub fn mean_raw_flow_vph(&self) -> f64 {
        self.rows.iter().map(|r| r.flow1_vph + r.flow2_vph).sum::<f64>() / self.rows.len() as f64
    }

    /// Mean coordinable flow over the day.
    pub fn mean_flow_vph(&self) -> f64 {
        self.scale * self.mean_raw_flow_vph()
    }

    /// Scale for which the mean coordinable flow equals `vph`.
    pub fn scale_for_mean_flow(&self, vph: f64) -> f64 {
        vph / self.mean_raw_flow_vph()
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        let s = Self {
            rows: self.rows.clone(),
            scale,
        };
        s.validate()?;
        Ok(s)
    }

    /// Coordinable arrival rate during `hour`, veh/s.
    pub fn rate(&self, hour: usize) -> f64 {
        let r = &self.rows[hour % self.rows.len()];
        self.scale * (r.flow1_vph + r.flow2_vph) / HOUR
    }
}

/// A detector passage: arrival time and gap to the previous vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time: f64,
    pub gap: Option<f64>,
}

/// Merged Poisson stream of both branches, piecewise-constant rate per hour.
/// The schedule repeats daily when `duration` exceeds 24 h.
pub fn generate_arrivals<R: Rng + ?Sized>(schedule: &FlowSchedule, rng: &mut R, duration: f64) -> Vec<Arrival> {
    let mut out: Vec<Arrival> = Vec::new();
    let mut hour = 0usize;
    while hour as f64 * HOUR < duration {
        let start = hour as f64 * HOUR;
        let end = (start + HOUR).min(duration);
        let rate = schedule.rate(hour);
        if rate > 0.0 {
            // memoryless: restarting the clock at the boundary is exact
            let exp = Exp::new(rate).expect("positive rate");
            let mut t = start;
            loop {
                t += exp.sample(rng);
                if t >= end {
                    break;
                }
                let gap = out.last().map(|a| t - a.time);
                out.push(Arrival { time: t, gap });
            }
        }
        hour += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn bundled_table_loads() {
        let s = FlowSchedule::table1(1.0).unwrap();
        assert_eq!(s.rows.len(), 24);
        assert_eq!(s.rows[8].flow2_vph, 5740.0);
        assert!((s.mean_raw_flow_vph() - 103_825.0 / 24.0).abs() < 1e-9);
        let scale = s.scale_for_mean_flow(173.0);
        assert!((s.with_scale(scale).unwrap().mean_flow_vph() - 173.0).abs() < 1e-9);
    }

    #[test]
    fn schedule_validation() {
        assert!(FlowSchedule::table1(0.0).is_err());
        assert!(FlowSchedule::table1(1.5).is_err());
        let short = "hour,flow1_vph,flow2_vph\n0,1,2\n";
        assert!(FlowSchedule::from_csv_reader(short.as_bytes(), 1.0).is_err());
        let bad_header = TABLE1_CSV.replacen("flow1_vph", "f1", 1);
        assert!(FlowSchedule::from_csv_reader(bad_header.as_bytes(), 1.0).is_err());
        let negative = TABLE1_CSV.replacen("0,254,665", "0,-254,665", 1);
        assert!(FlowSchedule::from_csv_reader(negative.as_bytes(), 1.0).is_err());
    }

    #[test]
    fn poisson_gap_mean() {
        let s = FlowSchedule::uniform(360.0, 1.0).unwrap();
        let mut rng = seeded(5);
        let mut gaps = Vec::new();
        while gaps.len() < 100_000 {
            let arr = generate_arrivals(&s, &mut rng, 24.0 * HOUR);
            gaps.extend(arr.iter().filter_map(|a| a.gap));
        }
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        assert!((mean - 10.0).abs() < 0.2, "mean gap {mean}");
    }

    #[test]
    fn zero_flow_hours_are_empty() {
        let mut s = FlowSchedule::uniform(360.0, 1.0).unwrap();
        s.rows[3].flow1_vph = 0.0;
        let arr = generate_arrivals(&s, &mut seeded(9), 24.0 * HOUR);
        assert!(arr.iter().all(|a| !(3.0 * HOUR..4.0 * HOUR).contains(&a.time)));
        assert!(arr.iter().any(|a| (4.0 * HOUR..5.0 * HOUR).contains(&a.time)));
    }

    #[test]
    fn rate_switches_on_the_hour() {
        let mut s = FlowSchedule::uniform(0.0, 1.0).unwrap();
        s.rows[1].flow1_vph = 3600.0;
        let arr = generate_arrivals(&s, &mut seeded(1), 3.0 * HOUR);
        assert!(!arr.is_empty());
        assert!(arr.iter().all(|a| a.time >= HOUR && a.time < 2.0 * HOUR));
        assert!(arr.len() > 3000 && arr.len() < 4200);
        assert!(arr[0].gap.is_none());
        for w in arr.windows(2) {
            assert!((w[1].gap.unwrap() - (w[1].time - w[0].time)).abs() < 1e-12);
        }
    }

    #[test]
    fn duration_truncates() {
        let s = FlowSchedule::uniform(3600.0, 1.0).unwrap();
        let arr = generate_arrivals(&s, &mut seeded(2), 100.0);
        assert!(arr.iter().all(|a| a.time < 100.0));
        assert!(generate_arrivals(&s, &mut seeded(2), 0.0).is_empty());
    }
}
