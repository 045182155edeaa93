//! Decision rules and their expected utilities.
//!
//! Rules act on the success probability only. A rule is either a threshold
//! rule per group or an explicit per-bin decision vector `d_i = P[D=1 | bin i]`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::FairnessSpec;
use crate::population::{self, bin_center, bin_index, BinnedDensity, PopulationModel, Sample};
use crate::utility::{derive_coefficients, Coefficients, DsMatrices, UtilityMatrix};

/// Conditioning mass below which a conditional expectation is undefined.
pub const MIN_CONDITIONING_MASS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// `d(p) = 1` iff `p >= t`.
    Lower,
    /// `d(p) = 1` iff `p < t`.
    Upper,
}

impl Bound {
    pub fn short(self) -> &'static str {
        match self {
            Bound::Lower => "lb",
            Bound::Upper => "ub",
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bound::Lower => "lower",
            Bound::Upper => "upper",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRule")]
pub struct ThresholdRule {
    pub bound: Bound,
    pub t: f64,
}

#[derive(Deserialize)]
struct RawRule {
    bound: Bound,
    t: f64,
}

impl TryFrom<RawRule> for ThresholdRule {
    type Error = Error;
    fn try_from(raw: RawRule) -> Result<Self> {
        ThresholdRule::new(raw.bound, raw.t)
    }
}

impl ThresholdRule {
    pub fn new(bound: Bound, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("threshold {t} outside [0, 1]")));
        }
        Ok(Self { bound, t })
    }

    pub fn lower(t: f64) -> Result<Self> {
        Self::new(Bound::Lower, t)
    }

    pub fn upper(t: f64) -> Result<Self> {
        Self::new(Bound::Upper, t)
    }

    #[inline]
    pub fn decide(&self, p: f64) -> bool {
        match self.bound {
            Bound::Lower => p >= self.t,
            Bound::Upper => p < self.t,
        }
    }
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.bound.short(), self.t)
    }
}

/// Per-bin probabilities of deciding `D=1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionVector {
    d: Vec<f64>,
}

impl DecisionVector {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = d.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "decision entry {} is {v}, expected a value in [0, 1]",
                i + 1
            )));
        }
        Ok(Self { d })
    }

    pub fn constant(value: f64, n_bins: usize) -> Result<Self> {
        Self::new(vec![value; n_bins])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn is_deterministic(&self) -> bool {
        self.d.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

impl<'de> Deserialize<'de> for DecisionVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            d: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        DecisionVector::new(raw.d).map_err(serde::de::Error::custom)
    }
}

pub fn rule_to_vector(rule: &ThresholdRule, n_bins: usize) -> DecisionVector {
    let d = (0..n_bins)
        .map(|i| if rule.decide(bin_center(i, n_bins)) { 1.0 } else { 0.0 })
        .collect();
    DecisionVector { d }
}

/// One decision rule per group, either all threshold rules or all vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum GroupPolicy {
    Thresholds(BTreeMap<String, ThresholdRule>),
    Vectors(BTreeMap<String, DecisionVector>),
}

impl<'de> Deserialize<'de> for GroupPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Entry {
            Rule(ThresholdRule),
            Vector(DecisionVector),
        }
        let entries = BTreeMap::<String, Entry>::deserialize(deserializer)?;
        let rules: Option<BTreeMap<_, _>> = entries
            .iter()
            .map(|(k, e)| match e {
                Entry::Rule(r) => Some((k.clone(), *r)),
                Entry::Vector(_) => None,
            })
            .collect();
        if let Some(rules) = rules {
            return Ok(GroupPolicy::Thresholds(rules));
        }
        let vectors: Option<BTreeMap<_, _>> = entries
            .into_iter()
            .map(|(k, e)| match e {
                Entry::Vector(v) => Some((k, v)),
                Entry::Rule(_) => None,
            })
            .collect();
        vectors
            .map(GroupPolicy::Vectors)
            .ok_or_else(|| serde::de::Error::custom("policy mixes threshold rules and decision vectors"))
    }
}

impl GroupPolicy {
    pub fn thresholds<S: Into<String>>(rules: impl IntoIterator<Item = (S, ThresholdRule)>) -> Self {
        GroupPolicy::Thresholds(rules.into_iter().map(|(k, r)| (k.into(), r)).collect())
    }

    pub fn vectors<S: Into<String>>(vectors: impl IntoIterator<Item = (S, DecisionVector)>) -> Self {
        GroupPolicy::Vectors(vectors.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn labels(&self) -> Vec<&str> {
        match self {
            GroupPolicy::Thresholds(m) => m.keys().map(String::as_str).collect(),
            GroupPolicy::Vectors(m) => m.keys().map(String::as_str).collect(),
        }
    }

    /// Decision vector for `label` on an `n_bins` grid.
    pub fn vector_for(&self, label: &str, n_bins: usize) -> Result<DecisionVector> {
        let missing = || Error::GroupMismatch(format!("policy has no rule for group `{label}`"));
        match self {
            GroupPolicy::Thresholds(m) => m.get(label).map(|r| rule_to_vector(r, n_bins)).ok_or_else(missing),
            GroupPolicy::Vectors(m) => {
                let v = m.get(label).ok_or_else(missing)?;
                if v.len() != n_bins {
                    return Err(Error::Dimension {
                        expected: n_bins,
                        actual: v.len(),
                    });
                }
                Ok(v.clone())
            }
        }
    }

    /// Probability of `D=1` for a raw score. Vectors are looked up by bin.
    pub fn decision_probability(&self, label: &str, p: f64) -> Result<f64> {
        let missing = || Error::GroupMismatch(format!("policy has no rule for group `{label}`"));
        match self {
            GroupPolicy::Thresholds(m) => {
                let r = m.get(label).ok_or_else(missing)?;
                Ok(if r.decide(p) { 1.0 } else { 0.0 })
            }
            GroupPolicy::Vectors(m) => {
                let v = m.get(label).ok_or_else(missing)?;
                Ok(v.as_slice()[bin_index(p, v.len())])
            }
        }
    }

    fn check_groups<'a>(&self, expected: impl Iterator<Item = &'a str>) -> Result<()> {
        let expected: Vec<&str> = expected.collect();
        let have = self.labels();
        if have != expected {
            return Err(Error::GroupMismatch(format!(
                "policy covers groups {have:?}, population has {expected:?}"
            )));
        }
        Ok(())
    }
}

/// Conditioning variable of the expected decision-subject utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawJustifier", into = "RawJustifier")]
pub enum Justifier {
    Unconditional,
    /// Condition on the outcome `Y = j`.
    OnOutcome(u8),
    /// Condition on the decision `D = j`.
    OnDecision(u8),
}

#[derive(Serialize, Deserialize)]
struct RawJustifier {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    j: Option<u8>,
}

impl TryFrom<RawJustifier> for Justifier {
    type Error = Error;
    fn try_from(raw: RawJustifier) -> Result<Self> {
        let need_j = |j: Option<u8>| match j {
            Some(v @ (0 | 1)) => Ok(v),
            Some(v) => Err(Error::InvalidSpec(format!("justifier value j = {v}, expected 0 or 1"))),
            None => Err(Error::InvalidSpec(format!("justifier `{}` needs j", raw.kind))),
        };
        match raw.kind.as_str() {
            "none" | "unconditional" | "empty" => match raw.j {
                None => Ok(Justifier::Unconditional),
                Some(_) => Err(Error::InvalidSpec("unconditional justifier takes no j".into())),
            },
            "Y" | "y" | "outcome" => Ok(Justifier::OnOutcome(need_j(raw.j)?)),
            "D" | "d" | "decision" => Ok(Justifier::OnDecision(need_j(raw.j)?)),
            other => Err(Error::InvalidSpec(format!("unknown justifier kind `{other}`"))),
        }
    }
}

impl From<Justifier> for RawJustifier {
    fn from(j: Justifier) -> Self {
        match j {
            Justifier::Unconditional => RawJustifier {
                kind: "none".into(),
                j: None,
            },
            Justifier::OnOutcome(v) => RawJustifier {
                kind: "Y".into(),
                j: Some(v),
            },
            Justifier::OnDecision(v) => RawJustifier {
                kind: "D".into(),
                j: Some(v),
            },
        }
    }
}

fn check_len(d: &DecisionVector, g: &BinnedDensity) -> Result<()> {
    if d.len() != g.n_bins() {
        return Err(Error::Dimension {
            expected: g.n_bins(),
            actual: d.len(),
        });
    }
    Ok(())
}

/// `E[U] = sum_i (d_i (alpha p_i + beta) + gamma p_i + u00) w_i`.
pub fn expected_dm_utility(d: &DecisionVector, g: &BinnedDensity, c: &Coefficients) -> Result<f64> {
    check_len(d, g)?;
    Ok(d.as_slice()
        .iter()
        .zip(g.bins())
        .map(|(&di, (p, w))| c.expected(di, p) * w)
        .sum())
}

fn conditioning(mass: f64, condition: &'static str) -> Result<f64> {
    if mass < MIN_CONDITIONING_MASS {
        return Err(Error::UndefinedConditional { condition, group: None });
    }
    Ok(mass)
}

/// Expected decision-subject utility `E[V | J=j]` under density `g`.
pub fn expected_ds_utility(
    d: &DecisionVector,
    g: &BinnedDensity,
    v: &UtilityMatrix,
    justifier: Justifier,
) -> Result<f64> {
    check_len(d, g)?;
    let bins = || d.as_slice().iter().zip(g.bins());
    match justifier {
        Justifier::Unconditional => {
            let c = derive_coefficients(v)?;
            Ok(bins().map(|(&di, (p, w))| c.expected(di, p) * w).sum())
        }
        Justifier::OnOutcome(1) => {
            let br = conditioning(population::base_rate(g), "Y=1")?;
            let num: f64 = bins()
                .map(|(&di, (p, w))| (di * (v.u11 - v.u01) + v.u01) * p * w)
                .sum();
            Ok(num / br)
        }
        Justifier::OnOutcome(_) => {
            let mass = conditioning(1.0 - population::base_rate(g), "Y=0")?;
            let num: f64 = bins()
                .map(|(&di, (p, w))| (di * (v.u10 - v.u00) + v.u00) * (1.0 - p) * w)
                .sum();
            Ok(num / mass)
        }
        Justifier::OnDecision(1) => {
            let sel = conditioning(bins().map(|(&di, (_, w))| di * w).sum(), "D=1")?;
            let pos: f64 = bins().map(|(&di, (p, w))| p * di * w).sum();
            Ok((v.u11 - v.u10) * (pos / sel) + v.u10)
        }
        Justifier::OnDecision(_) => {
            let rej = conditioning(bins().map(|(&di, (_, w))| (1.0 - di) * w).sum(), "D=0")?;
            let pos: f64 = bins().map(|(&di, (p, w))| p * (1.0 - di) * w).sum();
            Ok((v.u01 - v.u00) * (pos / rej) + v.u00)
        }
    }
}

/// `P[D=1]` under density `g`.
pub fn selection_rate(d: &DecisionVector, g: &BinnedDensity) -> Result<f64> {
    check_len(d, g)?;
    Ok(d.as_slice().iter().zip(g.weights()).map(|(di, w)| di * w).sum())
}

/// Per-group results of applying one rule to one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupOutcome {
    pub e_u: f64,
    pub e_v: f64,
    pub selection_rate: f64,
}

pub fn evaluate_group(
    d: &DecisionVector,
    g: &BinnedDensity,
    dm: &Coefficients,
    ds: &UtilityMatrix,
    justifier: Justifier,
) -> Result<GroupOutcome> {
    Ok(GroupOutcome {
        e_u: expected_dm_utility(d, g, dm)?,
        e_v: expected_ds_utility(d, g, ds, justifier)?,
        selection_rate: selection_rate(d, g)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    pub e_u: f64,
    pub e_u_by_group: BTreeMap<String, f64>,
    pub e_v_by_group: BTreeMap<String, f64>,
    pub fs: f64,
    pub selection_rate_by_group: BTreeMap<String, f64>,
}

impl PolicyOutcome {
    fn assemble(
        labels: &[&str],
        shares: &[f64],
        outcomes: &[GroupOutcome],
        spec: &FairnessSpec,
    ) -> Result<Self> {
        let e_u = mixture(shares, outcomes.iter().map(|o| o.e_u));
        let values: Vec<f64> = outcomes.iter().map(|o| o.e_v).collect();
        let fs = spec.scorer(labels)?.score(&values, shares);
        let collect = |f: fn(&GroupOutcome) -> f64| {
            labels
                .iter()
                .zip(outcomes)
                .map(|(l, o)| (l.to_string(), f(o)))
                .collect::<BTreeMap<_, _>>()
        };
        Ok(PolicyOutcome {
            e_u,
            e_u_by_group: collect(|o| o.e_u),
            e_v_by_group: collect(|o| o.e_v),
            fs,
            selection_rate_by_group: collect(|o| o.selection_rate),
        })
    }
}

/// `sum_a P[a] x_a`, accumulated in group order.
#[inline]
pub(crate) fn mixture(shares: &[f64], values: impl Iterator<Item = f64>) -> f64 {
    shares.iter().zip(values).map(|(s, x)| s * x).sum()
}

/// Evaluates a group policy on a binned population.
pub fn evaluate_policy(
    policy: &GroupPolicy,
    pop: &PopulationModel,
    dm: &UtilityMatrix,
    ds: &DsMatrices,
    spec: &FairnessSpec,
) -> Result<PolicyOutcome> {
    policy.check_groups(pop.labels())?;
    let dm = derive_coefficients(&dm.into_dm()?)?;
    let n = pop.n_bins();
    let mut outcomes = Vec::with_capacity(pop.groups().len());
    for g in pop.groups() {
        let d = policy.vector_for(&g.label, n)?;
        let v = ds.for_group(&g.label)?;
        let o = evaluate_group(&d, &g.weights, &dm, &v, spec.justifier).map_err(|e| e.in_group(&g.label))?;
        outcomes.push(o);
    }
    let labels: Vec<&str> = pop.labels().collect();
    let shares: Vec<f64> = pop.groups().iter().map(|g| g.share).collect();
    PolicyOutcome::assemble(&labels, &shares, &outcomes, spec)
}

/// Sufficient statistics of a set of records for every expectation in the
/// crate, normalized by the record count: `sel = mean(d)`, `pos = mean(q)`,
/// `sel_pos = mean(d q)`, where `q` is the outcome (or its probability).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Moments {
    pub count: f64,
    pub sel: f64,
    pub pos: f64,
    pub sel_pos: f64,
}

impl Moments {
    pub fn add(&mut self, d: f64, q: f64) {
        self.count += 1.0;
        self.sel += d;
        self.pos += q;
        self.sel_pos += d * q;
    }

    pub fn normalized(self) -> Self {
        let n = self.count;
        Moments {
            count: n,
            sel: self.sel / n,
            pos: self.pos / n,
            sel_pos: self.sel_pos / n,
        }
    }

    /// Mean of `d (alpha q + beta) + gamma q + offset`; expects normalized moments.
    pub fn dm_value(&self, c: &Coefficients) -> f64 {
        c.alpha * self.sel_pos + c.beta * self.sel + c.gamma * self.pos + c.offset
    }

    /// Conditional mean of `V`; expects normalized moments.
    pub fn ds_value(&self, v: &UtilityMatrix, justifier: Justifier) -> Result<f64> {
        match justifier {
            Justifier::Unconditional => Ok(self.dm_value(&derive_coefficients(v)?)),
            Justifier::OnOutcome(1) => {
                let mass = conditioning(self.pos, "Y=1")?;
                Ok(((v.u11 - v.u01) * self.sel_pos + v.u01 * self.pos) / mass)
            }
            Justifier::OnOutcome(_) => {
                let mass = conditioning(1.0 - self.pos, "Y=0")?;
                Ok(((v.u10 - v.u00) * (self.sel - self.sel_pos) + v.u00 * (1.0 - self.pos)) / mass)
            }
            Justifier::OnDecision(1) => {
                let mass = conditioning(self.sel, "D=1")?;
                Ok((v.u11 - v.u10) * (self.sel_pos / mass) + v.u10)
            }
            Justifier::OnDecision(_) => {
                let mass = conditioning(1.0 - self.sel, "D=0")?;
                Ok((v.u01 - v.u00) * ((self.pos - self.sel_pos) / mass) + v.u00)
            }
        }
    }
}

/// Per-group record statistics, in the order of `labels`.
pub(crate) fn record_outcomes(
    moments: &[Moments],
    labels: &[&str],
    dm: &Coefficients,
    ds: &DsMatrices,
    justifier: Justifier,
) -> Result<Vec<GroupOutcome>> {
    labels
        .iter()
        .zip(moments)
        .map(|(label, m)| {
            let m = m.normalized();
            let v = ds.for_group(label)?;
            Ok(GroupOutcome {
                e_u: m.dm_value(dm),
                e_v: m.ds_value(&v, justifier).map_err(|e| e.in_group(label))?,
                selection_rate: m.sel,
            })
        })
        .collect()
}

pub(crate) fn group_index(samples: &[Sample]) -> Vec<String> {
    let mut labels: Vec<String> = samples.iter().map(|s| s.group.clone()).collect();
    labels.sort();
    labels.dedup();
    labels
}

/// Evaluates a policy directly on labeled samples; rules see the raw scores.
/// Group shares are the sample proportions.
pub fn empirical_evaluate(
    samples: &[Sample],
    policy: &GroupPolicy,
    dm: &UtilityMatrix,
    ds: &DsMatrices,
    spec: &FairnessSpec,
) -> Result<PolicyOutcome> {
    let labels_owned = group_index(samples);
    let labels: Vec<&str> = labels_owned.iter().map(String::as_str).collect();
    policy.check_groups(labels.iter().copied())?;
    let dm = derive_coefficients(&dm.into_dm()?)?;
    let mut moments = vec![Moments::default(); labels.len()];
    for (row, s) in samples.iter().enumerate() {
        population::check_score(row, s.p_hat)?;
        let y = match s.y {
            Some(y @ (0 | 1)) => y,
            Some(y) => {
                return Err(Error::InvalidSample {
                    row,
                    reason: format!("y = {y}, expected 0 or 1"),
                })
            }
            None => return Err(Error::Schema(format!("row {row} has no outcome column `y`"))),
        };
        let k = labels.binary_search(&s.group.as_str()).expect("label index");
        let d = policy.decision_probability(&s.group, s.p_hat)?;
        moments[k].add(d, y as f64);
    }
    let outcomes = record_outcomes(&moments, &labels, &dm, ds, spec.justifier)?;
    let n = samples.len() as f64;
    let shares: Vec<f64> = moments.iter().map(|m| m.count / n).collect();
    PolicyOutcome::assemble(&labels, &shares, &outcomes, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::Principle;
    use crate::utility::{preset, Metric, SELECTION};
    use approx::assert_abs_diff_eq;

    fn synthetic_dm() -> UtilityMatrix {
        UtilityMatrix::dm(0.0, 0.0, -0.5, 1.0).unwrap()
    }

    #[test]
    fn rule_vectors() {
        let v = rule_to_vector(&ThresholdRule::lower(0.0).unwrap(), 5);
        assert_eq!(v.as_slice(), [1.0; 5]);
        let v = rule_to_vector(&ThresholdRule::upper(1.0).unwrap(), 5);
        assert_eq!(v.as_slice(), [1.0; 5]);
        let v = rule_to_vector(&ThresholdRule::lower(0.5).unwrap(), 4);
        assert_eq!(v.as_slice(), [0.0, 0.0, 1.0, 1.0]);
        assert!(ThresholdRule::lower(1.01).is_err());
    }

    #[test]
    fn dm_utility_by_hand() {
        let c = derive_coefficients(&synthetic_dm()).unwrap();
        let g = BinnedDensity::uniform(2).unwrap();
        let zero = DecisionVector::constant(0.0, 2).unwrap();
        assert_eq!(expected_dm_utility(&zero, &g, &c).unwrap(), 0.0);
        let all = DecisionVector::constant(1.0, 2).unwrap();
        assert_abs_diff_eq!(expected_dm_utility(&all, &g, &c).unwrap(), 0.25, epsilon = 1e-15);
        let short = DecisionVector::constant(1.0, 3).unwrap();
        assert_eq!(
            expected_dm_utility(&short, &g, &c).unwrap_err(),
            Error::Dimension { expected: 2, actual: 3 }
        );
    }

    #[test]
    fn ds_utility_by_hand() {
        let g = BinnedDensity::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let d = rule_to_vector(&ThresholdRule::lower(0.5).unwrap(), 4);
        let sr = expected_ds_utility(&d, &g, &SELECTION, Justifier::Unconditional).unwrap();
        assert_abs_diff_eq!(sr, 0.7, epsilon = 1e-15);

        let all = DecisionVector::constant(1.0, 4).unwrap();
        let ppv = preset(Metric::Ppv);
        let v = expected_ds_utility(&all, &g, &ppv.matrix, ppv.justifier).unwrap();
        assert_abs_diff_eq!(v, population::base_rate(&g), epsilon = 1e-15);

        let u = BinnedDensity::uniform(2).unwrap();
        let all2 = DecisionVector::constant(1.0, 2).unwrap();
        let v = expected_ds_utility(&all2, &u, &UtilityMatrix::ds(0.0, 0.0, -1.0, 1.0), Justifier::Unconditional)
            .unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_conditions_are_errors() {
        let g = BinnedDensity::uniform(4).unwrap();
        let none = DecisionVector::constant(0.0, 4).unwrap();
        let err = expected_ds_utility(&none, &g, &SELECTION, Justifier::OnDecision(1)).unwrap_err();
        assert_eq!(err, Error::UndefinedConditional { condition: "D=1", group: None });
        let all = DecisionVector::constant(1.0, 4).unwrap();
        assert!(expected_ds_utility(&all, &g, &SELECTION, Justifier::OnDecision(0)).is_err());
        let mut w = vec![0.0; 4];
        w[0] = 1.0;
        let low = BinnedDensity::new(w).unwrap();
        assert!(expected_ds_utility(&all, &low, &SELECTION, Justifier::OnOutcome(1)).is_ok());
    }

    #[test]
    fn policy_json_forms() {
        let p: GroupPolicy =
            serde_json::from_str(r#"{"A":{"bound":"lower","t":0.42},"B":{"bound":"upper","t":1.0}}"#).unwrap();
        assert_eq!(
            p,
            GroupPolicy::thresholds([
                ("A", ThresholdRule::lower(0.42).unwrap()),
                ("B", ThresholdRule::upper(1.0).unwrap())
            ])
        );
        let p: GroupPolicy = serde_json::from_str(r#"{"A":{"d":[0,0.5,1]}}"#).unwrap();
        assert!(matches!(p, GroupPolicy::Vectors(_)));
        assert!(serde_json::from_str::<GroupPolicy>(r#"{"A":{"d":[0,1]},"B":{"bound":"lower","t":0}}"#).is_err());
        assert!(serde_json::from_str::<GroupPolicy>(r#"{"A":{"bound":"lower","t":2}}"#).is_err());
        assert!(serde_json::from_str::<GroupPolicy>(r#"{"A":{"d":[1.5]}}"#).is_err());
        let text = serde_json::to_string(&GroupPolicy::thresholds([("A", ThresholdRule::upper(0.25).unwrap())])).unwrap();
        assert_eq!(text, r#"{"A":{"bound":"upper","t":0.25}}"#);
    }

    #[test]
    fn justifier_json() {
        let j: Justifier = serde_json::from_str(r#"{"kind":"D","j":1}"#).unwrap();
        assert_eq!(j, Justifier::OnDecision(1));
        let j: Justifier = serde_json::from_str(r#"{"kind":"none"}"#).unwrap();
        assert_eq!(j, Justifier::Unconditional);
        assert!(serde_json::from_str::<Justifier>(r#"{"kind":"Y"}"#).is_err());
        assert!(serde_json::from_str::<Justifier>(r#"{"kind":"Y","j":2}"#).is_err());
    }

    #[test]
    fn empirical_small_cases() {
        let samples = vec![Sample::new(0.9, "A").with_outcome(1), Sample::new(0.1, "A").with_outcome(0)];
        let dm = UtilityMatrix::dm(1.0, 0.0, 0.0, 1.0).unwrap();
        let spec = FairnessSpec::new(Justifier::Unconditional, Principle::RawlsMaximin).unwrap();
        let pol = GroupPolicy::thresholds([("A", ThresholdRule::lower(0.5).unwrap())]);
        // a single group has no fairness score, so evaluate the group statistics directly
        let labels = ["A"];
        let mut m = Moments::default();
        for s in &samples {
            m.add(pol.decision_probability("A", s.p_hat).unwrap(), s.y.unwrap() as f64);
        }
        let out = record_outcomes(
            &[m],
            &labels,
            &derive_coefficients(&dm).unwrap(),
            &DsMatrices::Shared(SELECTION),
            spec.justifier,
        )
        .unwrap();
        assert_eq!(out[0].e_u, 1.0);

        let mut two = samples.clone();
        two.push(Sample::new(0.3, "B").with_outcome(1));
        let pol = GroupPolicy::thresholds([
            ("A", ThresholdRule::lower(0.0).unwrap()),
            ("B", ThresholdRule::lower(0.0).unwrap()),
        ]);
        let out = empirical_evaluate(&two, &pol, &dm, &DsMatrices::Shared(SELECTION), &spec).unwrap();
        assert_eq!(out.e_v_by_group["A"], 1.0);
        assert_eq!(out.e_v_by_group["B"], 1.0);

        let mut missing = two.clone();
        missing[0].y = None;
        assert!(matches!(
            empirical_evaluate(&missing, &pol, &dm, &DsMatrices::Shared(SELECTION), &spec),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn evaluate_policy_group_errors() {
        let u = BinnedDensity::uniform(4).unwrap();
        let pop = PopulationModel::from_parts([("A", 0.5, u.clone()), ("B", 0.5, u)]).unwrap();
        let spec = FairnessSpec::new(Justifier::OnDecision(1), Principle::EgalitarianAbsDiff).unwrap();
        let pol = GroupPolicy::thresholds([
            ("A", ThresholdRule::lower(0.0).unwrap()),
            ("B", ThresholdRule::lower(1.0).unwrap()),
        ]);
        let err = evaluate_policy(&pol, &pop, &synthetic_dm(), &DsMatrices::Shared(SELECTION), &spec).unwrap_err();
        assert_eq!(
            err,
            Error::UndefinedConditional {
                condition: "D=1",
                group: Some("B".into())
            }
        );
        let partial = GroupPolicy::thresholds([("A", ThresholdRule::lower(0.0).unwrap())]);
        assert!(matches!(
            evaluate_policy(&partial, &pop, &synthetic_dm(), &DsMatrices::Shared(SELECTION), &spec),
            Err(Error::GroupMismatch(_))
        ));
    }
}
