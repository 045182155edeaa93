//! Scalar fairness scores over per-group expected decision-subject utilities.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::Justifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    /// True when score `a` is at least as good as `b`.
    #[inline]
    pub fn no_worse(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Minimize => a <= b,
            Direction::Maximize => a >= b,
        }
    }

    /// True when score `a` is strictly better than `b`.
    #[inline]
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Minimize => a < b,
            Direction::Maximize => a > b,
        }
    }

    /// Maps a score so that smaller is always better.
    #[inline]
    pub fn as_cost(self, fs: f64) -> f64 {
        match self {
            Direction::Minimize => fs,
            Direction::Maximize => -fs,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Minimize => "minimize",
            Direction::Maximize => "maximize",
        })
    }
}

/// Principle of distributive justice behind the score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Principle {
    /// Largest gap between any two groups.
    EgalitarianAbsDiff,
    /// Utility of the worst-off group.
    RawlsMaximin,
    /// Weighted mean with user-chosen positive weights (normalized to sum 1).
    Prioritarian(BTreeMap<String, f64>),
    /// Share-weighted shortfall below the level `tau`.
    Sufficientarian { tau: f64 },
}

impl Principle {
    pub fn direction(&self) -> Direction {
        match self {
            Principle::EgalitarianAbsDiff | Principle::Sufficientarian { .. } => Direction::Minimize,
            Principle::RawlsMaximin | Principle::Prioritarian(_) => Direction::Maximize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct FairnessSpec {
    pub justifier: Justifier,
    pub principle: Principle,
    pub direction: Direction,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default = "unconditional")]
    justifier: Justifier,
    principle: Principle,
    direction: Option<Direction>,
}

fn unconditional() -> Justifier {
    Justifier::Unconditional
}

impl TryFrom<RawSpec> for FairnessSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        match raw.direction {
            Some(d) => FairnessSpec::with_direction(raw.justifier, raw.principle, d),
            None => FairnessSpec::new(raw.justifier, raw.principle),
        }
    }
}

impl FairnessSpec {
    /// Spec with the direction implied by the principle.
    pub fn new(justifier: Justifier, principle: Principle) -> Result<Self> {
        let direction = principle.direction();
        Self::with_direction(justifier, principle, direction)
    }

    pub fn with_direction(justifier: Justifier, principle: Principle, direction: Direction) -> Result<Self> {
        if direction != principle.direction() {
            return Err(Error::InvalidSpec(format!(
                "{principle:?} must be {}d, not {direction}d",
                principle.direction()
            )));
        }
        match &principle {
            Principle::Prioritarian(w) => {
                if let Some((g, v)) = w.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::InvalidSpec(format!(
                        "prioritarian weight for `{g}` is {v}; weights must be positive"
                    )));
                }
            }
            Principle::Sufficientarian { tau } if !tau.is_finite() => {
                return Err(Error::InvalidSpec(format!("sufficiency level {tau} is not finite")));
            }
            _ => {}
        }
        Ok(Self {
            justifier,
            principle,
            direction,
        })
    }

    /// Prepares a scorer for a fixed group order.
    pub fn scorer(&self, labels: &[&str]) -> Result<Scorer> {
        if labels.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "a fairness score needs at least two groups, got {}",
                labels.len()
            )));
        }
        let rule = match &self.principle {
            Principle::EgalitarianAbsDiff => ScoreRule::MaxGap,
            Principle::RawlsMaximin => ScoreRule::Min,
            Principle::Prioritarian(w) => {
                let raw = labels
                    .iter()
                    .map(|l| {
                        w.get(*l)
                            .copied()
                            .ok_or_else(|| Error::InvalidSpec(format!("no prioritarian weight for group `{l}`")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let total: f64 = raw.iter().sum();
                ScoreRule::Weighted(raw.into_iter().map(|x| x / total).collect())
            }
            Principle::Sufficientarian { tau } => ScoreRule::Shortfall(*tau),
        };
        Ok(Scorer { rule })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ScoreRule {
    MaxGap,
    Min,
    Weighted(Vec<f64>),
    Shortfall(f64),
}

/// A fairness spec bound to a group order.
#[derive(Debug, Clone, PartialEq)]
pub struct Scorer {
    rule: ScoreRule,
}

impl Scorer {
    /// Scores per-group values; `shares` is only read by the sufficientarian rule.
    pub fn score(&self, values: &[f64], shares: &[f64]) -> f64 {
        match &self.rule {
            ScoreRule::MaxGap => {
                let (lo, hi) = values
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                hi - lo
            }
            ScoreRule::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            ScoreRule::Weighted(w) => w.iter().zip(values).map(|(w, v)| w * v).sum(),
            ScoreRule::Shortfall(tau) => shares
                .iter()
                .zip(values)
                .map(|(s, v)| s * (tau - v).max(0.0))
                .sum(),
        }
    }
}

/// Fairness score of per-group values `E[V|J=j,a]`.
pub fn fairness_score(
    values: &BTreeMap<String, f64>,
    shares: &BTreeMap<String, f64>,
    spec: &FairnessSpec,
) -> Result<f64> {
    let labels: Vec<&str> = values.keys().map(String::as_str).collect();
    let scorer = spec.scorer(&labels)?;
    let vals: Vec<f64> = values.values().copied().collect();
    let sh = labels
        .iter()
        .map(|l| {
            shares
                .get(*l)
                .copied()
                .ok_or_else(|| Error::GroupMismatch(format!("no share for group `{l}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(scorer.score(&vals, &sh))
}
