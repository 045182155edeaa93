//! Discretized per-group distributions of the success probability `p = P[Y=1|x]`.
//!
//! The unit interval is split into `N` equal bins; bin `i` (0-based) covers
//! `[i/N, (i+1)/N)` (the last bin is closed) and is represented by its
//! center `(i + 0.5)/N`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Bin count used when none is given.
pub const DEFAULT_BINS: usize = 1000;

const MASS_TOLERANCE: f64 = 1e-9;

/// Center of the 0-based bin `index` out of `n_bins`.
#[inline]
pub fn bin_center(index: usize, n_bins: usize) -> f64 {
    (index as f64 + 0.5) / n_bins as f64
}

/// Left edge `k/n` of bin `k`, computed the same way thresholds are.
#[inline]
pub(crate) fn bin_edge(k: usize, n_bins: usize) -> f64 {
    k as f64 / n_bins as f64
}

/// 0-based bin holding `p`. A value on an interior edge `k/N` goes to the bin
/// on its right; `p = 1` goes to the last bin.
pub fn bin_index(p: f64, n_bins: usize) -> usize {
    debug_assert!(n_bins >= 1);
    let last = n_bins - 1;
    let mut k = ((p * n_bins as f64).floor().max(0.0) as usize).min(last);
    while k < last && bin_edge(k + 1, n_bins) <= p {
        k += 1;
    }
    while k > 0 && bin_edge(k, n_bins) > p {
        k -= 1;
    }
    k
}

/// Probability mass per bin for one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BinnedDensity {
    weights: Vec<f64>,
}

impl BinnedDensity {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("density needs at least one bin".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "bin {} has weight {w}; weights must be finite and non-negative",
                i + 1
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Uniform density over `n_bins` bins.
    pub fn uniform(n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::InvalidParameter("n_bins must be at least 1".into()));
        }
        Self::new(vec![1.0 / n_bins as f64; n_bins])
    }

    /// All mass in the 0-based bin `index`.
    pub fn point_mass(index: usize, n_bins: usize) -> Result<Self> {
        if index >= n_bins {
            return Err(Error::InvalidParameter(format!(
                "bin {index} out of range for {n_bins} bins"
            )));
        }
        let mut weights = vec![0.0; n_bins];
        weights[index] = 1.0;
        Self::new(weights)
    }

    pub fn n_bins(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Iterator over `(bin center, weight)`.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.n_bins();
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (bin_center(i, n), w))
    }
}

impl<'de> Deserialize<'de> for BinnedDensity {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let weights = Vec::<f64>::deserialize(deserializer)?;
        BinnedDensity::new(weights).map_err(serde::de::Error::custom)
    }
}

/// Bin masses of a Beta(`alpha`, `beta`) distribution: `w_i = I(i/N) - I((i-1)/N)`
/// with `I` the regularized incomplete beta function.
pub fn discretize_beta(alpha: f64, beta: f64, n_bins: usize) -> Result<BinnedDensity> {
    if !(alpha.is_finite() && alpha > 0.0) || !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Beta shape parameters must be positive, got ({alpha}, {beta})"
        )));
    }
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be at least 1".into()));
    }
    let cdf: Vec<f64> = (0..=n_bins)
        .map(|k| match k {
            0 => 0.0,
            k if k == n_bins => 1.0,
            k => beta_reg(alpha, beta, bin_edge(k, n_bins)),
        })
        .collect();
    let weights = cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    BinnedDensity::new(weights)
}

/// `P[Y=1]` under the density: `sum_i p_i w_i`.
pub fn base_rate(density: &BinnedDensity) -> f64 {
    density.bins().map(|(p, w)| p * w).sum()
}

/// One group of a [`PopulationModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDensity {
    pub label: String,
    pub share: f64,
    pub weights: BinnedDensity,
}

/// Per-group binned densities plus group shares `P[a]`.
///
/// Groups are kept sorted by label so every per-group iteration in the crate
/// follows the same order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PopulationFile", into = "PopulationFile")]
pub struct PopulationModel {
    groups: Vec<GroupDensity>,
}

#[derive(Serialize, Deserialize)]
struct PopulationFile {
    n_bins: usize,
    groups: Vec<GroupDensity>,
}

impl TryFrom<PopulationFile> for PopulationModel {
    type Error = Error;

    fn try_from(file: PopulationFile) -> Result<Self> {
        let model = PopulationModel::new(file.groups)?;
        if model.n_bins() != file.n_bins {
            return Err(Error::InvalidParameter(format!(
                "n_bins is {} but densities have {} bins",
                file.n_bins,
                model.n_bins()
            )));
        }
        Ok(model)
    }
}

impl From<PopulationModel> for PopulationFile {
    fn from(model: PopulationModel) -> Self {
        PopulationFile {
            n_bins: model.n_bins(),
            groups: model.groups,
        }
    }
}

impl PopulationModel {
    pub fn new(mut groups: Vec<GroupDensity>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidParameter("population needs at least one group".into()));
        }
        groups.sort_by(|a, b| a.label.cmp(&b.label));
        if let Some(pair) = groups.windows(2).find(|w| w[0].label == w[1].label) {
            return Err(Error::InvalidParameter(format!(
                "group `{}` declared twice",
                pair[0].label
            )));
        }
        let n_bins = groups[0].weights.n_bins();
        for g in &groups {
            if g.weights.n_bins() != n_bins {
                return Err(Error::InvalidParameter(format!(
                    "group `{}` has {} bins, expected {n_bins}",
                    g.label,
                    g.weights.n_bins()
                )));
            }
            if !(g.share.is_finite() && g.share > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "group `{}` has share {}; shares must be positive",
                    g.label, g.share
                )));
            }
        }
        let total: f64 = groups.iter().map(|g| g.share).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "group shares sum to {total}, expected 1"
            )));
        }
        Ok(Self { groups })
    }

    /// Convenience constructor from `(label, share, density)` triples.
    pub fn from_parts<S: Into<String>>(
        parts: impl IntoIterator<Item = (S, f64, BinnedDensity)>,
    ) -> Result<Self> {
        Self::new(
            parts
                .into_iter()
                .map(|(label, share, weights)| GroupDensity {
                    label: label.into(),
                    share,
                    weights,
                })
                .collect(),
        )
    }

    pub fn groups(&self) -> &[GroupDensity] {
        &self.groups
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().map(|g| g.label.as_str())
    }

    pub fn group(&self, label: &str) -> Option<&GroupDensity> {
        self.groups
            .binary_search_by(|g| g.label.as_str().cmp(label))
            .ok()
            .map(|i| &self.groups[i])
    }

    pub fn n_bins(&self) -> usize {
        self.groups[0].weights.n_bins()
    }

    pub fn shares(&self) -> BTreeMap<String, f64> {
        self.groups.iter().map(|g| (g.label.clone(), g.share)).collect()
    }
}

/// One scored individual: model score `p_hat`, group label, and optionally
/// the realized outcome `y` and the decision `d` taken by some system.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub p_hat: f64,
    pub group: String,
    pub y: Option<u8>,
    pub d: Option<u8>,
}

impl Sample {
    pub fn new(p_hat: f64, group: impl Into<String>) -> Self {
        Self {
            p_hat,
            group: group.into(),
            y: None,
            d: None,
        }
    }

    pub fn with_outcome(mut self, y: u8) -> Self {
        self.y = Some(y);
        self
    }

    pub fn with_decision(mut self, d: u8) -> Self {
        self.d = Some(d);
        self
    }
}

pub(crate) fn check_score(row: usize, p_hat: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::InvalidSample {
            row,
            reason: format!("p_hat = {p_hat} outside [0, 1]"),
        });
    }
    Ok(())
}

/// Histogram estimate of `g(p|a)` and `P[a]` from scored samples.
/// The groups are the distinct labels present in `samples`.
pub fn estimate_from_samples(samples: &[Sample], n_bins: usize) -> Result<PopulationModel> {
    let mut labels: Vec<String> = samples.iter().map(|s| s.group.clone()).collect();
    labels.sort();
    labels.dedup();
    estimate_with_groups(samples, &labels, n_bins)
}

/// Like [`estimate_from_samples`], but every group in `groups` must occur and
/// samples from other groups are rejected.
pub fn estimate_with_groups(
    samples: &[Sample],
    groups: &[String],
    n_bins: usize,
) -> Result<PopulationModel> {
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be at least 1".into()));
    }
    if groups.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    let mut counts: BTreeMap<&str, Vec<u64>> =
        groups.iter().map(|g| (g.as_str(), vec![0; n_bins])).collect();
    for (row, s) in samples.iter().enumerate() {
        check_score(row, s.p_hat)?;
        let hist = counts.get_mut(s.group.as_str()).ok_or_else(|| Error::InvalidSample {
            row,
            reason: format!("undeclared group `{}`", s.group),
        })?;
        hist[bin_index(s.p_hat, n_bins)] += 1;
    }
    let total = samples.len() as f64;
    let mut parts = Vec::with_capacity(counts.len());
    for (label, hist) in counts {
        let n: u64 = hist.iter().sum();
        if n == 0 {
            return Err(Error::Estimation {
                group: label.to_string(),
                reason: "no samples".into(),
            });
        }
        let weights = hist.iter().map(|&c| c as f64 / n as f64).collect();
        parts.push((label.to_string(), n as f64 / total, BinnedDensity::new(weights)?));
    }
    PopulationModel::from_parts(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_beta_is_flat() {
        let d = discretize_beta(1.0, 1.0, 10).unwrap();
        for &w in d.weights() {
            assert_abs_diff_eq!(w, 0.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn beta_rejects_bad_shapes() {
        assert!(matches!(discretize_beta(0.0, 1.0, 10), Err(Error::InvalidParameter(_))));
        assert!(matches!(discretize_beta(1.0, -2.0, 10), Err(Error::InvalidParameter(_))));
        assert!(matches!(discretize_beta(f64::NAN, 1.0, 10), Err(Error::InvalidParameter(_))));
        assert!(discretize_beta(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn beta_mirror_symmetry() {
        let a = discretize_beta(5.0, 3.0, 1000).unwrap();
        let b = discretize_beta(3.0, 5.0, 1000).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights().iter().rev()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn base_rates() {
        assert_abs_diff_eq!(base_rate(&BinnedDensity::uniform(7).unwrap()), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(base_rate(&BinnedDensity::point_mass(0, 10).unwrap()), 0.05, epsilon = 1e-15);
        let d = discretize_beta(5.0, 3.0, 1000).unwrap();
        assert_abs_diff_eq!(base_rate(&d), 0.625, epsilon = 1e-3);
        let d = discretize_beta(4.5, 5.5, 1000).unwrap();
        assert_abs_diff_eq!(base_rate(&d), 0.45, epsilon = 1e-3);
    }

    #[test]
    fn edge_rule() {
        assert_eq!(bin_index(0.5, 10), 5);
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.57, 100), 57);
        assert_eq!(bin_index(0.3, 10), 3);
        assert_eq!(bin_index(0.29999, 10), 2);
        for k in 0..1000 {
            assert_eq!(bin_index(bin_edge(k, 1000), 1000), k);
        }
    }

    #[test]
    fn density_validation() {
        assert!(BinnedDensity::new(vec![]).is_err());
        assert!(BinnedDensity::new(vec![0.5, 0.4]).is_err());
        assert!(BinnedDensity::new(vec![1.5, -0.5]).is_err());
        assert!(BinnedDensity::new(vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn histogram_counts() {
        let samples = vec![
            Sample::new(0.05, "A"),
            Sample::new(0.05, "A"),
            Sample::new(0.95, "A"),
        ];
        let pop = estimate_from_samples(&samples, 10).unwrap();
        let a = pop.group("A").unwrap();
        assert_eq!(a.share, 1.0);
        assert_abs_diff_eq!(a.weights.weights()[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.weights.weights()[9], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(a.weights.weights()[1..9].iter().sum::<f64>(), 0.0);

        let pop = estimate_from_samples(&[Sample::new(0.5, "A")], 10).unwrap();
        assert_eq!(pop.group("A").unwrap().weights.weights()[5], 1.0);
    }

    #[test]
    fn histogram_errors() {
        let err = estimate_with_groups(&[Sample::new(0.2, "A")], &["A".into(), "B".into()], 10)
            .unwrap_err();
        assert_eq!(
            err,
            Error::Estimation {
                group: "B".into(),
                reason: "no samples".into()
            }
        );
        let err = estimate_from_samples(&[Sample::new(0.2, "A"), Sample::new(1.2, "A")], 10)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidSample { row: 1, .. }));
    }

    #[test]
    fn population_validation() {
        let u = BinnedDensity::uniform(4).unwrap();
        assert!(PopulationModel::from_parts([("A", 0.5, u.clone()), ("B", 0.4, u.clone())]).is_err());
        assert!(PopulationModel::from_parts([("A", 0.5, u.clone()), ("A", 0.5, u.clone())]).is_err());
        let v = BinnedDensity::uniform(5).unwrap();
        assert!(PopulationModel::from_parts([("A", 0.5, u.clone()), ("B", 0.5, v)]).is_err());
        let pop = PopulationModel::from_parts([("B", 0.25, u.clone()), ("A", 0.75, u)]).unwrap();
        assert_eq!(pop.labels().collect::<Vec<_>>(), ["A", "B"]);
    }

    #[test]
    fn population_json_round_trip() {
        let pop = PopulationModel::from_parts([
            ("A", 0.5, discretize_beta(4.5, 5.5, 50).unwrap()),
            ("B", 0.5, discretize_beta(5.0, 3.0, 50).unwrap()),
        ])
        .unwrap();
        let text = serde_json::to_string(&pop).unwrap();
        let back: PopulationModel = serde_json::from_str(&text).unwrap();
        assert_eq!(pop, back);
        let bad = text.replace("\"n_bins\":50", "\"n_bins\":49");
        assert!(serde_json::from_str::<PopulationModel>(&bad).is_err());
    }
}
