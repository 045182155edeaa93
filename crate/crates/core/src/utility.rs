//! Decision-maker and decision-subject utility matrices.
//!
//! A matrix `(u00, u01; u10, u11)` holds the payoff of decision `D=i` when the
//! outcome is `Y=j` in entry `u_ij`. Expected utilities are linear in the
//! decision probability `d` and the success probability `p`:
//! `E[U | p] = d (alpha p + beta) + gamma p + u00`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::Justifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// Decision maker; must reward correct decisions.
    DecisionMaker,
    /// Decision subject; arbitrary payoffs.
    #[default]
    DecisionSubject,
}

/// 2x2 payoff table indexed by decision (row) and outcome (column).
///
/// The JSON form is the bare fragment `{"u00":0,"u01":0,"u10":-0.5,"u11":1}`;
/// the kind is assigned by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityMatrix {
    pub u00: f64,
    pub u01: f64,
    pub u10: f64,
    pub u11: f64,
    #[serde(skip)]
    pub kind: MatrixKind,
}

impl UtilityMatrix {
    /// Decision-subject matrix; no constraints apply.
    pub const fn ds(u00: f64, u01: f64, u10: f64, u11: f64) -> Self {
        Self {
            u00,
            u01,
            u10,
            u11,
            kind: MatrixKind::DecisionSubject,
        }
    }

    /// Decision-maker matrix, checked for `u11 > u01` and `u00 > u10`.
    pub fn dm(u00: f64, u01: f64, u10: f64, u11: f64) -> Result<Self> {
        Self::ds(u00, u01, u10, u11).into_dm()
    }

    /// Reinterprets the entries as a decision-maker matrix.
    pub fn into_dm(self) -> Result<Self> {
        let m = Self {
            kind: MatrixKind::DecisionMaker,
            ..self
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let entries = [self.u00, self.u01, self.u10, self.u11];
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "utility matrix has non-finite entries {entries:?}"
            )));
        }
        if self.kind == MatrixKind::DecisionMaker {
            if self.u11 <= self.u01 {
                return Err(Error::ConstraintViolation("u11 > u01"));
            }
            if self.u00 <= self.u10 {
                return Err(Error::ConstraintViolation("u00 > u10"));
            }
        }
        Ok(())
    }

    /// Entry for decision `d` and outcome `y`.
    pub fn payoff(&self, d: u8, y: u8) -> f64 {
        match (d, y) {
            (0, 0) => self.u00,
            (0, _) => self.u01,
            (_, 0) => self.u10,
            _ => self.u11,
        }
    }

    /// `1 - v` entrywise; conditional expectations of it are `1 - E[V|...]`.
    pub fn complement(&self) -> Self {
        Self {
            u00: 1.0 - self.u00,
            u01: 1.0 - self.u01,
            u10: 1.0 - self.u10,
            u11: 1.0 - self.u11,
            kind: self.kind,
        }
    }
}

/// Linear coefficients of the expected utility in `d` and `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub offset: f64,
    /// `-beta/alpha`, where the gain from deciding `D=1` changes sign.
    pub crossing: Option<f64>,
}

impl Coefficients {
    /// Gain per unit of `d` at success probability `p`.
    #[inline]
    pub fn slope(&self, p: f64) -> f64 {
        self.alpha * p + self.beta
    }

    /// Expected utility at `p` when deciding `D=1` with probability `d`.
    #[inline]
    pub fn expected(&self, d: f64, p: f64) -> f64 {
        d * (self.alpha * p + self.beta) + self.gamma * p + self.offset
    }

    /// Rebuilds the matrix the coefficients were derived from.
    pub fn to_matrix(&self, kind: MatrixKind) -> UtilityMatrix {
        let u00 = self.offset;
        let u01 = self.gamma + u00;
        let u10 = self.beta + u00;
        let u11 = self.alpha - u00 + u01 + u10;
        UtilityMatrix {
            u00,
            u01,
            u10,
            u11,
            kind,
        }
    }
}

pub fn derive_coefficients(m: &UtilityMatrix) -> Result<Coefficients> {
    m.validate()?;
    let alpha = m.u11 - m.u10 + m.u00 - m.u01;
    let beta = m.u10 - m.u00;
    let gamma = m.u01 - m.u00;
    let crossing = (alpha != 0.0).then(|| -beta / alpha);
    if m.kind == MatrixKind::DecisionMaker {
        // Implied by the two entry inequalities, but rounding can break them.
        if alpha <= 0.0 {
            return Err(Error::ConstraintViolation("alpha > 0"));
        }
        if beta >= 0.0 {
            return Err(Error::ConstraintViolation("beta < 0"));
        }
        if alpha + beta <= 0.0 {
            return Err(Error::ConstraintViolation("alpha + beta > 0"));
        }
    }
    Ok(Coefficients {
        alpha,
        beta,
        gamma,
        offset: m.u00,
        crossing,
    })
}

/// Decision-subject matrices: one shared by every group, or one per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DsMatrices {
    Shared(UtilityMatrix),
    PerGroup(BTreeMap<String, UtilityMatrix>),
}

impl DsMatrices {
    pub fn for_group(&self, label: &str) -> Result<UtilityMatrix> {
        match self {
            DsMatrices::Shared(m) => Ok(*m),
            DsMatrices::PerGroup(map) => map
                .get(label)
                .copied()
                .ok_or_else(|| Error::GroupMismatch(format!("no DS matrix for group `{label}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DsMatrices::Shared(m) => m.validate(),
            DsMatrices::PerGroup(map) => map.values().try_for_each(UtilityMatrix::validate),
        }
    }
}

impl From<UtilityMatrix> for DsMatrices {
    fn from(m: UtilityMatrix) -> Self {
        DsMatrices::Shared(m)
    }
}

/// Confusion-matrix metrics expressible as a (conditional) expected
/// decision-subject utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SelectionRate,
    Tpr,
    Fpr,
    Tnr,
    Fnr,
    Ppv,
    ForRate,
    Npv,
    Fdr,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::SelectionRate,
        Metric::Tpr,
        Metric::Fpr,
        Metric::Tnr,
        Metric::Fnr,
        Metric::Ppv,
        Metric::ForRate,
        Metric::Npv,
        Metric::Fdr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::SelectionRate => "selection_rate",
            Metric::Tpr => "tpr",
            Metric::Fpr => "fpr",
            Metric::Tnr => "tnr",
            Metric::Fnr => "fnr",
            Metric::Ppv => "ppv",
            Metric::ForRate => "for_rate",
            Metric::Npv => "npv",
            Metric::Fdr => "fdr",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// A named metric as a (matrix, justifier) pair.
///
/// `tnr` and `fnr` reuse the selection-rate matrix with the complement flag
/// set: their value is `1 - E[V|Y=j]`, which [`MetricPreset::evaluation_matrix`]
/// folds into the matrix `1 - v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPreset {
    pub name: Metric,
    pub matrix: UtilityMatrix,
    pub justifier: Justifier,
    pub complement: bool,
}

impl MetricPreset {
    /// Matrix whose conditional expectation equals the metric.
    pub fn evaluation_matrix(&self) -> UtilityMatrix {
        if self.complement {
            self.matrix.complement()
        } else {
            self.matrix
        }
    }
}

pub const SELECTION: UtilityMatrix = UtilityMatrix::ds(0.0, 0.0, 1.0, 1.0);
pub const POSITIVE_OUTCOME: UtilityMatrix = UtilityMatrix::ds(0.0, 1.0, 0.0, 1.0);
pub const NEGATIVE_OUTCOME: UtilityMatrix = UtilityMatrix::ds(1.0, 0.0, 1.0, 0.0);

pub fn preset(name: Metric) -> MetricPreset {
    let (matrix, justifier, complement) = match name {
        Metric::SelectionRate => (SELECTION, Justifier::Unconditional, false),
        Metric::Tpr => (SELECTION, Justifier::OnOutcome(1), false),
        Metric::Fpr => (SELECTION, Justifier::OnOutcome(0), false),
        Metric::Tnr => (SELECTION, Justifier::OnOutcome(0), true),
        Metric::Fnr => (SELECTION, Justifier::OnOutcome(1), true),
        Metric::Ppv => (POSITIVE_OUTCOME, Justifier::OnDecision(1), false),
        Metric::ForRate => (POSITIVE_OUTCOME, Justifier::OnDecision(0), false),
        Metric::Npv => (NEGATIVE_OUTCOME, Justifier::OnDecision(0), false),
        Metric::Fdr => (NEGATIVE_OUTCOME, Justifier::OnDecision(1), false),
    };
    MetricPreset {
        name,
        matrix,
        justifier,
        complement,
    }
}

/// Lookup by lowercase name.
pub fn preset_by_name(name: &str) -> Result<MetricPreset> {
    name.parse().map(preset)
}
