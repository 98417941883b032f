//! Parameter sweeps over one or more axes.
//!
//! Every run in a sweep is seeded with the base configuration's master seed,
//! so all runs share record and subset draws (common random numbers). A
//! run's result depends only on its own axis values, never on where those
//! values sit in the list.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{AttackKind, AttackSpec};
use crate::consensus::ConsensusRule;
use crate::engine::{run_simulation, RunSummary};
use crate::error::{PoqError, Result};
use crate::model::{LogRetention, NetworkProfile, ScoreRecord, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    MaliciousRatio,
    SampleSizeK,
    Defense,
    AttackKind,
}

impl SweepAxis {
    /// Short identifier, also used as the CSV column header.
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::MaliciousRatio => "rho",
            SweepAxis::SampleSizeK => "K",
            SweepAxis::Defense => "defense",
            SweepAxis::AttackKind => "attack",
        }
    }

    pub fn parse_value(self, raw: &str) -> Result<AxisValue> {
        let raw = raw.trim();
        let bad = |what: &str| PoqError::config(format!("invalid {what} value `{raw}`"));
        Ok(match self {
            SweepAxis::MaliciousRatio => {
                let rho: f64 = raw.parse().map_err(|_| bad("rho"))?;
                if !(0.0..=1.0).contains(&rho) {
                    return Err(bad("rho"));
                }
                AxisValue::Rho(rho)
            }
            SweepAxis::SampleSizeK => {
                let k: usize = raw.parse().map_err(|_| bad("K"))?;
                if k == 0 {
                    return Err(bad("K"));
                }
                AxisValue::K(k)
            }
            SweepAxis::Defense => AxisValue::Defense(raw.parse()?),
            SweepAxis::AttackKind => {
                if raw == "none" {
                    AxisValue::Attack(None)
                } else {
                    AxisValue::Attack(Some(raw.parse()?))
                }
            }
        })
    }

    pub fn parse_values(self, list: &str) -> Result<Vec<AxisValue>> {
        list.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| self.parse_value(s))
            .collect()
    }
}

impl FromStr for SweepAxis {
    type Err = PoqError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho" | "malicious_ratio" => Ok(SweepAxis::MaliciousRatio),
            "k" | "K" | "sample_size" => Ok(SweepAxis::SampleSizeK),
            "defense" | "rule" => Ok(SweepAxis::Defense),
            "attack" => Ok(SweepAxis::AttackKind),
            _ => Err(PoqError::config(format!(
                "unknown sweep axis `{s}` (expected rho, k, defense or attack)"
            ))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisValue {
    Rho(f64),
    K(usize),
    Defense(ConsensusRule),
    Attack(Option<AttackKind>),
}

impl AxisValue {
    pub fn axis(&self) -> SweepAxis {
        match self {
            AxisValue::Rho(_) => SweepAxis::MaliciousRatio,
            AxisValue::K(_) => SweepAxis::SampleSizeK,
            AxisValue::Defense(_) => SweepAxis::Defense,
            AxisValue::Attack(_) => SweepAxis::AttackKind,
        }
    }
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Rho(rho) => write!(f, "{rho}"),
            AxisValue::K(k) => write!(f, "{k}"),
            AxisValue::Defense(rule) => write!(f, "{rule}"),
            AxisValue::Attack(Some(kind)) => write!(f, "{kind}"),
            AxisValue::Attack(None) => f.write_str("none"),
        }
    }
}

/// One cell of a sweep grid: the axis values that produced it and its summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub assignment: Vec<AxisValue>,
    pub summary: RunSummary,
}

impl GridRun {
    pub fn value(&self, axis: SweepAxis) -> Option<AxisValue> {
        self.assignment.iter().copied().find(|v| v.axis() == axis)
    }
}

/// Builds the configuration for one grid cell.
///
/// Attack kinds are applied before malicious ratios so that `rho` always
/// lands on the attack chosen for the same cell.
pub fn apply_assignment(base: &SimConfig, assignment: &[AxisValue]) -> Result<SimConfig> {
    let mut config = base.clone();
    for value in assignment {
        if let AxisValue::Attack(kind) = value {
            config.attack = kind.map(|kind| match base.attack {
                Some(existing) => AttackSpec { kind, ..existing },
                None => AttackSpec::new(kind, 0.0),
            });
        }
    }
    for value in assignment {
        match *value {
            AxisValue::Rho(rho) => match config.attack.as_mut() {
                Some(attack) => attack.rho = rho,
                None if rho == 0.0 => {}
                None => {
                    return Err(PoqError::config(format!(
                        "rho={rho} needs an attack kind (set one in the base config or sweep the attack axis)"
                    )))
                }
            },
            AxisValue::K(k) => config.sample_size = k,
            AxisValue::Defense(rule) => config.consensus_rule = rule,
            AxisValue::Attack(_) => {}
        }
    }
    Ok(config)
}

fn cartesian(axes: &[(SweepAxis, Vec<AxisValue>)]) -> Vec<Vec<AxisValue>> {
    axes.iter().fold(vec![Vec::new()], |acc, (_, values)| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push(*v);
                    next
                })
            })
            .collect()
    })
}

/// Runs every cell of the Cartesian product of `axes`, outermost axis first.
///
/// All cell configurations are built and validated before any run starts.
/// Runs execute in parallel; the output order is the grid order.
pub fn run_grid(
    records: &[ScoreRecord],
    profile: &NetworkProfile,
    base: &SimConfig,
    axes: &[(SweepAxis, Vec<AxisValue>)],
) -> Result<Vec<GridRun>> {
    for (i, (axis, values)) in axes.iter().enumerate() {
        if axes[..i].iter().any(|(seen, _)| seen == axis) {
            return Err(PoqError::config(format!("axis {axis} appears twice")));
        }
        if let Some(stray) = values.iter().find(|v| v.axis() != *axis) {
            return Err(PoqError::config(format!(
                "value `{stray}` does not belong to axis {axis}"
            )));
        }
    }
    if axes.iter().any(|(_, values)| values.is_empty()) {
        return Ok(Vec::new());
    }

    let cells = cartesian(axes);
    let configs = cells
        .iter()
        .map(|assignment| {
            let mut config = apply_assignment(base, assignment)?;
            config.log_retention = LogRetention::SummaryOnly;
            config.validate_for(records, profile)?;
            Ok(config)
        })
        .collect::<Result<Vec<_>>>()?;

    let summaries = configs
        .par_iter()
        .map(|config| run_simulation(records, profile, config).map(|run| run.summary))
        .collect::<Result<Vec<_>>>()?;

    Ok(cells
        .into_iter()
        .zip(summaries)
        .map(|(assignment, summary)| GridRun {
            assignment,
            summary,
        })
        .collect())
}

/// Single-axis sweep: one independent run per value.
pub fn run_sweep(
    records: &[ScoreRecord],
    profile: &NetworkProfile,
    base: &SimConfig,
    axis: SweepAxis,
    values: &[AxisValue],
) -> Result<Vec<RunSummary>> {
    Ok(
        run_grid(records, profile, base, &[(axis, values.to_vec())])?
            .into_iter()
            .map(|run| run.summary)
            .collect(),
    )
}
