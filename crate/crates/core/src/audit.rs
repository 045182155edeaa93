//! Comparing an existing decision system against a computed frontier.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{Direction, FairnessSpec};
use crate::frontier::{FrontierPoint, FrontierSet};
use crate::policy::{
    group_index, record_outcomes, DecisionVector, GroupOutcome, Moments, PolicyOutcome,
};
use crate::population::{self, bin_index, Sample};
use crate::utility::{derive_coefficients, DsMatrices, UtilityMatrix};

/// Default bin count for decision-profile reconstruction.
pub const DEFAULT_PROFILE_BINS: usize = 25;

/// An achieved `(E[U], FS)` pair of some decision system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedPoint {
    pub e_u: f64,
    pub fs: f64,
    #[serde(default)]
    pub label: String,
}

impl ObservedPoint {
    pub fn new(e_u: f64, fs: f64, label: impl Into<String>) -> Result<Self> {
        let p = Self {
            e_u,
            fs,
            label: label.into(),
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !self.e_u.is_finite() || !self.fs.is_finite() {
            return Err(Error::InvalidValue(format!(
                "observed point `{}` has non-finite coordinates ({}, {})",
                self.label, self.e_u, self.fs
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditDiagnostics {
    pub frontier_points: usize,
    /// Infeasible policies skipped while building the frontier.
    pub frontier_skipped: u64,
    /// Per group, profile bins without records (decision-log audits only).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub absent_bins: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub observed: ObservedPoint,
    pub direction: Direction,
    pub dominated: bool,
    /// Frontier points that dominate the observed point, best score first.
    pub dominating_points: Vec<FrontierPoint>,
    /// Best frontier `e_u` at a score no worse than observed, minus the observed `e_u`.
    pub utility_gap: f64,
    /// Score improvement available at no loss of `e_u`.
    pub fairness_gap: f64,
    pub diagnostics: AuditDiagnostics,
}

fn dominates(direction: Direction, q: &FrontierPoint, o: &ObservedPoint) -> bool {
    q.e_u >= o.e_u && direction.no_worse(q.fs, o.fs) && (q.e_u > o.e_u || direction.better(q.fs, o.fs))
}

/// Tests the observed point against the sampled frontier points. Gaps are
/// measured to the frontier points themselves, never to interpolations.
pub fn audit_point(fr: &FrontierSet, obs: &ObservedPoint) -> Result<AuditReport> {
    obs.validate()?;
    if fr.is_empty() {
        return Err(Error::InvalidInput("frontier has no points".into()));
    }
    let dir = fr.meta.direction;
    let dominating_points: Vec<FrontierPoint> =
        fr.points.iter().filter(|q| dominates(dir, q, obs)).cloned().collect();

    let utility_gap = fr
        .points
        .iter()
        .filter(|q| dir.no_worse(q.fs, obs.fs))
        .map(|q| q.e_u - obs.e_u)
        .fold(0.0, f64::max);
    let fairness_gap = fr
        .points
        .iter()
        .filter(|q| q.e_u >= obs.e_u)
        .map(|q| dir.as_cost(obs.fs) - dir.as_cost(q.fs))
        .fold(0.0, f64::max);

    Ok(AuditReport {
        observed: obs.clone(),
        direction: dir,
        dominated: !dominating_points.is_empty(),
        dominating_points,
        utility_gap,
        fairness_gap,
        diagnostics: AuditDiagnostics {
            frontier_points: fr.len(),
            frontier_skipped: fr.meta.skipped,
            absent_bins: BTreeMap::new(),
        },
    })
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.observed;
        let name = if o.label.is_empty() { "observed" } else { &o.label };
        writeln!(f, "{name}: e_u = {:.6}, fs = {:.6} ({})", o.e_u, o.fs, self.direction)?;
        writeln!(
            f,
            "dominated: {}  utility gap: {:.6}  fairness gap: {:.6}",
            if self.dominated { "yes" } else { "no" },
            self.utility_gap,
            self.fairness_gap
        )?;
        if !self.dominating_points.is_empty() {
            writeln!(f, "{:>12} {:>12}  policy", "e_u", "fs")?;
            for p in &self.dominating_points {
                let rules: Vec<String> = p.rules.iter().map(|(g, r)| format!("{g}: {r}")).collect();
                writeln!(f, "{:>12.6} {:>12.6}  {}", p.e_u, p.fs, rules.join(", "))?;
            }
        }
        Ok(())
    }
}

/// Observed selection fraction per score bin of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionProfile {
    /// Fraction selected in each bin; `None` where the bin holds no records.
    pub d: Vec<Option<f64>>,
    pub counts: Vec<u64>,
}

impl DecisionProfile {
    pub fn absent_bins(&self) -> usize {
        self.d.iter().filter(|x| x.is_none()).count()
    }

    /// Full decision vector with absent bins set to `fill`.
    pub fn to_vector(&self, fill: f64) -> Result<DecisionVector> {
        DecisionVector::new(self.d.iter().map(|x| x.unwrap_or(fill)).collect())
    }
}

fn decision(row: usize, s: &Sample) -> Result<u8> {
    match s.d {
        Some(d @ (0 | 1)) => Ok(d),
        Some(d) => Err(Error::InvalidSample {
            row,
            reason: format!("d = {d}, expected 0 or 1"),
        }),
        None => Err(Error::Schema(format!("row {row} has no decision column `d`"))),
    }
}

/// Per-group fraction of records with `d = 1` in each of `n_bins` score bins.
pub fn reconstruct_decision_profile(log: &[Sample], n_bins: usize) -> Result<BTreeMap<String, DecisionProfile>> {
    reconstruct_with_groups(log, &group_index(log), n_bins)
}

/// Like [`reconstruct_decision_profile`], but every group in `groups` needs
/// at least one record and records from other groups are rejected.
pub fn reconstruct_with_groups(
    log: &[Sample],
    groups: &[String],
    n_bins: usize,
) -> Result<BTreeMap<String, DecisionProfile>> {
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be at least 1".into()));
    }
    let mut tallies: BTreeMap<&str, (Vec<u64>, Vec<u64>)> = groups
        .iter()
        .map(|g| (g.as_str(), (vec![0; n_bins], vec![0; n_bins])))
        .collect();
    for (row, s) in log.iter().enumerate() {
        population::check_score(row, s.p_hat)?;
        let d = decision(row, s)?;
        let (counts, selected) = tallies.get_mut(s.group.as_str()).ok_or_else(|| Error::InvalidSample {
            row,
            reason: format!("undeclared group `{}`", s.group),
        })?;
        let i = bin_index(s.p_hat, n_bins);
        counts[i] += 1;
        selected[i] += u64::from(d);
    }
    tallies
        .into_iter()
        .map(|(label, (counts, selected))| {
            if counts.iter().all(|&c| c == 0) {
                return Err(Error::Estimation {
                    group: label.to_string(),
                    reason: "no records in the decision log".into(),
                });
            }
            let d = counts
                .iter()
                .zip(&selected)
                .map(|(&c, &s)| (c > 0).then(|| s as f64 / c as f64))
                .collect();
            Ok((label.to_string(), DecisionProfile { d, counts }))
        })
        .collect()
}

/// Outcome of the decisions recorded in a log. Expectations are record
/// means; records without an outcome `y` contribute their score `p_hat`
/// in its place. Group shares are record proportions.
pub fn evaluate_decision_log(
    log: &[Sample],
    dm: &UtilityMatrix,
    ds: &DsMatrices,
    spec: &FairnessSpec,
) -> Result<PolicyOutcome> {
    let labels_owned = group_index(log);
    let labels: Vec<&str> = labels_owned.iter().map(String::as_str).collect();
    if log.is_empty() {
        return Err(Error::InvalidInput("decision log is empty".into()));
    }
    let scorer = spec.scorer(&labels)?;
    let dm = derive_coefficients(&dm.into_dm()?)?;
    let mut moments = vec![Moments::default(); labels.len()];
    for (row, s) in log.iter().enumerate() {
        population::check_score(row, s.p_hat)?;
        let d = decision(row, s)?;
        let q = match s.y {
            Some(y @ (0 | 1)) => y as f64,
            Some(y) => {
                return Err(Error::InvalidSample {
                    row,
                    reason: format!("y = {y}, expected 0 or 1"),
                })
            }
            None => s.p_hat,
        };
        let k = labels.binary_search(&s.group.as_str()).expect("label index");
        moments[k].add(d as f64, q);
    }
    let outcomes: Vec<GroupOutcome> = record_outcomes(&moments, &labels, &dm, ds, spec.justifier)?;
    let n = log.len() as f64;
    let shares: Vec<f64> = moments.iter().map(|m| m.count / n).collect();
    let values: Vec<f64> = outcomes.iter().map(|o| o.e_v).collect();
    let per = |f: fn(&GroupOutcome) -> f64| {
        labels
            .iter()
            .zip(&outcomes)
            .map(|(l, o)| (l.to_string(), f(o)))
            .collect::<BTreeMap<_, _>>()
    };
    Ok(PolicyOutcome {
        e_u: shares.iter().zip(&outcomes).map(|(s, o)| s * o.e_u).sum(),
        e_u_by_group: per(|o| o.e_u),
        e_v_by_group: per(|o| o.e_v),
        fs: scorer.score(&values, &shares),
        selection_rate_by_group: per(|o| o.selection_rate),
    })
}

/// Evaluates a decision log and audits the resulting point. The profile
/// reconstruction over `n_bins` bins is reported in the diagnostics.
pub fn audit_decision_log(
    fr: &FrontierSet,
    log: &[Sample],
    dm: &UtilityMatrix,
    ds: &DsMatrices,
    spec: &FairnessSpec,
    n_bins: usize,
    label: &str,
) -> Result<AuditReport> {
    let outcome = evaluate_decision_log(log, dm, ds, spec)?;
    let profile = reconstruct_decision_profile(log, n_bins)?;
    let mut report = audit_point(fr, &ObservedPoint::new(outcome.e_u, outcome.fs, label)?)?;
    report.diagnostics.absent_bins = profile.iter().map(|(g, p)| (g.clone(), p.absent_bins())).collect();
    Ok(report)
}

/// Group-blind logistic profile `d(p) = 1 / (1 + exp(-(p - center) / width))`
/// evaluated at the bin centers: a smoothed stand-in for a threshold rule.
pub fn smoothed_threshold(center: f64, width: f64, n_bins: usize) -> Result<DecisionVector> {
    if !(width > 0.0 && width.is_finite() && center.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "smoothed threshold needs finite center and positive width, got ({center}, {width})"
        )));
    }
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be at least 1".into()));
    }
    DecisionVector::new(
        (0..n_bins)
            .map(|i| 1.0 / (1.0 + (-(population::bin_center(i, n_bins) - center) / width).exp()))
            .collect(),
    )
}
