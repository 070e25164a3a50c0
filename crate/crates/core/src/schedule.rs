use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tree sizes at which snapshots are taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Schedule {
    /// `n0, n0·ratio, n0·ratio², …` (rounded) below the target, then the target itself.
    Geometric { n0: u64, ratio: f64 },
    /// Exactly these sizes.
    Explicit { points: Vec<u64> },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Geometric { n0: 128, ratio: 2.0 }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            Schedule::Geometric { n0, ratio } => {
                if *n0 < 2 {
                    return Err(Error::invalid(format!("schedule n0 must be >= 2, got {n0}")));
                }
                if ratio.is_nan() || *ratio <= 1.0 || !ratio.is_finite() {
                    return Err(Error::invalid(format!("schedule ratio must be > 1, got {ratio}")));
                }
            }
            Schedule::Explicit { points } => {
                if points.is_empty() {
                    return Err(Error::invalid("explicit schedule is empty"));
                }
                if let Some(p) = points.iter().find(|&&p| p < 2) {
                    return Err(Error::invalid(format!("schedule point {p} is below 2")));
                }
            }
        }
        Ok(())
    }

    /// Strictly increasing snapshot sizes for a run to `n_target`.
    pub fn points(&self, n_target: u64) -> Result<Vec<u64>> {
        self.validate()?;
        let mut out = Vec::new();
        match self {
            Schedule::Geometric { n0, ratio } => {
                let mut i = 0i32;
                loop {
                    let p = (*n0 as f64 * ratio.powi(i)).round() as u64;
                    if p >= n_target {
                        break;
                    }
                    if out.last() != Some(&p) {
                        out.push(p);
                    }
                    i += 1;
                }
                out.push(n_target);
            }
            Schedule::Explicit { points } => {
                if let Some(p) = points.iter().find(|&&p| p > n_target) {
                    return Err(Error::invalid(format!(
                        "schedule point {p} exceeds the target size {n_target}"
                    )));
                }
                out = points.clone();
                out.sort_unstable();
                out.dedup();
            }
        }
        Ok(out)
    }

    /// Parses `geometric:<n0>:<ratio>` or a comma-separated list of sizes.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("cannot parse schedule `{s}`"));
        let schedule = if let Some(rest) = s.strip_prefix("geometric") {
            let mut parts = rest.split(':').filter(|p| !p.is_empty());
            let n0 = parts.next().map_or(Ok(128), |p| p.parse()).map_err(|_| bad())?;
            let ratio = parts.next().map_or(Ok(2.0), |p| p.parse()).map_err(|_| bad())?;
            if parts.next().is_some() {
                return Err(bad());
            }
            Schedule::Geometric { n0, ratio }
        } else {
            let points = s
                .split(',')
                .map(|p| p.trim().parse::<u64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad())?;
            Schedule::Explicit { points }
        };
        schedule.validate()?;
        Ok(schedule)
    }
}
