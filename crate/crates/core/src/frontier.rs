//! Pareto frontier of (expected DM utility, fairness score) over the grid of
//! group-specific lower/upper-bound threshold rules.
//!
//! Every group gets `2 (M + 1)` candidate rules (both bounds, thresholds
//! `k/M`). Each rule is evaluated once per group; a policy's outcome is then
//! assembled from the per-group tables, which keeps the full grid of
//! `(2 (M + 1))^|A|` policies cheap to sweep.

use std::collections::BTreeMap;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fairness::{Direction, FairnessSpec, Scorer};
use crate::policy::{
    self, evaluate_group, group_index, mixture, rule_to_vector, Bound, DecisionVector, GroupOutcome,
    GroupPolicy, Moments, ThresholdRule,
};
use crate::population::{self, PopulationModel, Sample};
use crate::utility::{derive_coefficients, DsMatrices, UtilityMatrix};

/// Upper limit on the number of grid policies a single build may sweep.
pub const MAX_GRID_POLICIES: u64 = 1 << 36;

const CHUNK: u64 = 1 << 16;

/// A non-dominated policy and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub e_u: f64,
    pub fs: f64,
    #[serde(rename = "policy")]
    pub rules: BTreeMap<String, ThresholdRule>,
}

impl FrontierPoint {
    pub fn policy(&self) -> GroupPolicy {
        GroupPolicy::Thresholds(self.rules.clone())
    }

    /// Per-group `(label, rule)` pairs in group order.
    pub fn rule_signature(&self) -> Vec<(&str, ThresholdRule)> {
        self.rules.iter().map(|(k, r)| (k.as_str(), *r)).collect()
    }

    /// Bound types joined in group order, e.g. `lb-ub`.
    pub fn rule_type(&self) -> String {
        self.rules
            .values()
            .map(|r| r.bound.short())
            .collect::<Vec<_>>()
            .join("-")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierMeta {
    pub grid_m: usize,
    pub n_bins: usize,
    pub direction: Direction,
    pub spec_hash: String,
    pub groups: Vec<String>,
    /// Policies in the grid.
    pub evaluated: u64,
    /// Policies whose conditional expectations were undefined.
    pub skipped: u64,
}

/// Non-dominated points sorted from best to worst fairness score; along that
/// order the expected utility strictly increases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierSet {
    pub points: Vec<FrontierPoint>,
    pub meta: FrontierMeta,
    /// Frontier restricted to one rule type per key (e.g. `lb-ub`).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sub_frontiers: BTreeMap<String, Vec<FrontierPoint>>,
}

impl FrontierSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Point of maximal expected utility.
    pub fn best_utility(&self) -> Option<&FrontierPoint> {
        self.points.last()
    }

    /// Highest expected utility among points whose score is no worse than `fs`.
    pub fn best_utility_at(&self, fs: f64) -> Option<&FrontierPoint> {
        self.points
            .iter()
            .rev()
            .find(|p| self.meta.direction.no_worse(p.fs, fs))
    }

    pub fn sub_frontier(&self, rule_type: &str) -> Option<&[FrontierPoint]> {
        self.sub_frontiers.get(rule_type).map(Vec::as_slice)
    }
}

/// The DM-optimal rule without fairness constraints: `p >= -beta/alpha`,
/// the same for every group.
pub fn unconstrained_optimum(dm: &UtilityMatrix) -> Result<ThresholdRule> {
    let c = derive_coefficients(&dm.into_dm()?)?;
    ThresholdRule::lower(-c.beta / c.alpha)
}

/// Candidate rule `r` of the `2 (M + 1)` per-group rules: lower bounds
/// first, then upper bounds, thresholds ascending.
pub fn grid_rule(r: usize, grid_m: usize) -> ThresholdRule {
    let (bound, k) = if r <= grid_m {
        (Bound::Lower, r)
    } else {
        (Bound::Upper, r - grid_m - 1)
    };
    ThresholdRule {
        bound,
        t: k as f64 / grid_m as f64,
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    e_u: f64,
    fs: f64,
    index: u64,
}

fn check_finite(points: &[(f64, f64)]) -> Result<()> {
    if let Some(i) = points.iter().position(|(u, f)| !u.is_finite() || !f.is_finite()) {
        return Err(Error::InvalidValue(format!(
            "point {i} is {:?}; values must be finite",
            points[i]
        )));
    }
    Ok(())
}

/// Indices of the points no other point weakly dominates with at least one
/// strict inequality. Exact duplicates of a non-dominated point are all kept.
/// The result follows the frontier from best to worst score.
pub fn pareto_filter(points: &[(f64, f64)], direction: Direction) -> Result<Vec<usize>> {
    check_finite(points)?;
    let mut cands: Vec<Candidate> = points
        .iter()
        .enumerate()
        .map(|(i, &(e_u, fs))| Candidate {
            e_u,
            fs,
            index: i as u64,
        })
        .collect();
    let kept = sweep(&mut cands, direction);
    Ok(kept.into_iter().map(|c| c.index as usize).collect())
}

/// Sort by score (best first), then utility (highest first), then index,
/// and keep every point that raises the running utility maximum.
fn sweep(cands: &mut [Candidate], direction: Direction) -> Vec<Candidate> {
    cands.sort_unstable_by(|a, b| {
        direction
            .as_cost(a.fs)
            .total_cmp(&direction.as_cost(b.fs))
            .then(b.e_u.total_cmp(&a.e_u))
            .then(a.index.cmp(&b.index))
    });
    let mut kept: Vec<Candidate> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for c in cands.iter() {
        if c.e_u > best {
            best = c.e_u;
            kept.push(*c);
        } else if let Some(last) = kept.last() {
            if c.e_u == last.e_u && c.fs == last.fs {
                kept.push(*c);
            }
        }
    }
    kept
}

/// Drops exact repeats, keeping the smallest index (the lexicographically
/// smallest rule signature). Input must come from [`sweep`].
fn collapse(kept: Vec<Candidate>) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::with_capacity(kept.len());
    for c in kept {
        match out.last_mut() {
            Some(last) if last.e_u == c.e_u && last.fs == c.fs => {
                if c.index < last.index {
                    *last = c;
                }
            }
            _ => out.push(c),
        }
    }
    out
}

/// Per-group outcome of every grid rule; `None` marks an undefined conditional.
struct RuleTable {
    outcomes: Vec<Option<GroupOutcome>>,
}

fn table_entry(result: Result<GroupOutcome>) -> Result<Option<GroupOutcome>> {
    match result {
        Ok(o) => Ok(Some(o)),
        Err(Error::UndefinedConditional { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

struct Grid<'a> {
    labels: Vec<String>,
    shares: Vec<f64>,
    tables: Vec<RuleTable>,
    scorer: Scorer,
    direction: Direction,
    grid_m: usize,
    n_bins: usize,
    spec_hash: String,
    _spec: &'a FairnessSpec,
}

impl Grid<'_> {
    fn rules_per_group(&self) -> usize {
        2 * (self.grid_m + 1)
    }

    fn digits(&self, mut index: u64) -> Vec<usize> {
        let r = self.rules_per_group() as u64;
        let mut digits = vec![0; self.tables.len()];
        for slot in digits.iter_mut().rev() {
            *slot = (index % r) as usize;
            index /= r;
        }
        digits
    }

    fn point(&self, c: &Candidate) -> FrontierPoint {
        let rules = self
            .labels
            .iter()
            .zip(self.digits(c.index))
            .map(|(l, r)| (l.clone(), grid_rule(r, self.grid_m)))
            .collect();
        FrontierPoint {
            e_u: c.e_u,
            fs: c.fs,
            rules,
        }
    }

    fn rule_type_label(&self, type_bits: usize) -> String {
        let g = self.tables.len();
        (0..g)
            .map(|i| if type_bits >> (g - 1 - i) & 1 == 1 { "ub" } else { "lb" })
            .collect::<Vec<_>>()
            .join("-")
    }

    fn build(self) -> Result<FrontierSet> {
        let groups = self.tables.len();
        let r = self.rules_per_group() as u64;
        let total = r
            .checked_pow(groups as u32)
            .filter(|t| *t <= MAX_GRID_POLICIES)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "grid of {r}^{groups} policies exceeds the limit of {MAX_GRID_POLICIES}"
                ))
            })?;
        let n_types = 1usize << groups;
        let n_chunks = total.div_ceil(CHUNK);

        let chunk_results: Vec<(Vec<Vec<Candidate>>, u64)> = (0..n_chunks)
            .into_par_iter()
            .map(|chunk| self.sweep_chunk(chunk * CHUNK, ((chunk + 1) * CHUNK).min(total), n_types))
            .collect();

        let skipped: u64 = chunk_results.iter().map(|(_, s)| s).sum();
        if skipped == total {
            return Err(Error::AllInfeasible { skipped });
        }
        let mut per_type: Vec<Vec<Candidate>> = vec![Vec::new(); n_types];
        for (fronts, _) in chunk_results {
            for (t, f) in fronts.into_iter().enumerate() {
                per_type[t].extend(f);
            }
        }
        let per_type: Vec<Vec<Candidate>> = per_type
            .into_par_iter()
            .map(|mut c| sweep(&mut c, self.direction))
            .collect();
        let mut all: Vec<Candidate> = per_type.iter().flatten().copied().collect();
        let full = collapse(sweep(&mut all, self.direction));

        let sub_frontiers = per_type
            .into_iter()
            .enumerate()
            .filter(|(_, f)| !f.is_empty())
            .map(|(t, f)| {
                let pts = collapse(f).iter().map(|c| self.point(c)).collect();
                (self.rule_type_label(t), pts)
            })
            .collect();

        Ok(FrontierSet {
            points: full.iter().map(|c| self.point(c)).collect(),
            meta: FrontierMeta {
                grid_m: self.grid_m,
                n_bins: self.n_bins,
                direction: self.direction,
                spec_hash: self.spec_hash.clone(),
                groups: self.labels.clone(),
                evaluated: total,
                skipped,
            },
            sub_frontiers,
        })
    }

    /// Evaluates grid indices `start..end` and keeps each rule type's local front.
    fn sweep_chunk(&self, start: u64, end: u64, n_types: usize) -> (Vec<Vec<Candidate>>, u64) {
        let groups = self.tables.len();
        let r = self.rules_per_group();
        let upper_from = self.grid_m + 1;
        let mut digits = self.digits(start);
        let mut values = vec![0.0; groups];
        let mut buckets: Vec<Vec<Candidate>> = vec![Vec::new(); n_types];
        let mut skipped = 0u64;
        for index in start..end {
            let mut e_u = 0.0;
            let mut feasible = true;
            let mut type_bits = 0usize;
            for (g, &d) in digits.iter().enumerate() {
                match &self.tables[g].outcomes[d] {
                    Some(o) => {
                        e_u += self.shares[g] * o.e_u;
                        values[g] = o.e_v;
                    }
                    None => {
                        feasible = false;
                        break;
                    }
                }
                type_bits = (type_bits << 1) | usize::from(d >= upper_from);
            }
            if feasible {
                let fs = self.scorer.score(&values, &self.shares);
                buckets[type_bits].push(Candidate { e_u, fs, index });
            } else {
                skipped += 1;
            }
            // odometer increment, last group fastest
            for slot in digits.iter_mut().rev() {
                *slot += 1;
                if *slot < r {
                    break;
                }
                *slot = 0;
            }
        }
        let fronts = buckets
            .into_iter()
            .map(|mut b| sweep(&mut b, self.direction))
            .collect();
        (fronts, skipped)
    }
}

fn spec_hash<T: Serialize>(parts: &T) -> String {
    let bytes = serde_json::to_vec(parts).expect("serializable spec");
    Sha256::digest(&bytes)
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Evaluates every combination of per-group lower/upper threshold rules on
/// the grid `{0, 1/M, ..., 1}` and returns the non-dominated set.
///
/// Policies whose conditional expectations are undefined (for example an
/// empty selection under a decision-conditioned metric) are skipped and
/// counted in `meta.skipped`.
pub fn build_frontier(
    pop: &PopulationModel,
    dm: &UtilityMatrix,
    ds: &DsMatrices,
    spec: &FairnessSpec,
    grid_m: usize,
) -> Result<FrontierSet> {
    if grid_m == 0 {
        return Err(Error::InvalidParameter("grid_m must be at least 1".into()));
    }
    let dm_matrix = dm.into_dm()?;
    let dm_coef = derive_coefficients(&dm_matrix)?;
    ds.validate()?;
    let labels: Vec<String> = pop.labels().map(str::to_string).collect();
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let scorer = spec.scorer(&label_refs)?;
    let n = pop.n_bins();
    let n_rules = 2 * (grid_m + 1);
    let vectors: Vec<DecisionVector> = (0..n_rules)
        .into_par_iter()
        .map(|r| rule_to_vector(&grid_rule(r, grid_m), n))
        .collect();

    let mut tables = Vec::with_capacity(labels.len());
    for g in pop.groups() {
        let v = ds.for_group(&g.label)?;
        let outcomes = vectors
            .par_iter()
            .map(|d| table_entry(evaluate_group(d, &g.weights, &dm_coef, &v, spec.justifier)))
            .collect::<Result<Vec<_>>>()?;
        tables.push(RuleTable { outcomes });
    }

    let hash = spec_hash(&(n, grid_m, &dm_matrix, ds, spec, pop));
    Grid {
        labels,
        shares: pop.groups().iter().map(|g| g.share).collect(),
        tables,
        scorer,
        direction: spec.direction,
        grid_m,
        n_bins: n,
        spec_hash: hash,
        _spec: spec,
    }
    .build()
}

/// Frontier estimated from labeled samples: rules are applied to the raw
/// scores, expectations are sample means, and group shares are sample
/// proportions. `meta.n_bins` is 0.
pub fn build_empirical_frontier(
    samples: &[Sample],
    dm: &UtilityMatrix,
    ds: &DsMatrices,
    spec: &FairnessSpec,
    grid_m: usize,
) -> Result<FrontierSet> {
    if grid_m == 0 {
        return Err(Error::InvalidParameter("grid_m must be at least 1".into()));
    }
    let dm_matrix = dm.into_dm()?;
    let dm_coef = derive_coefficients(&dm_matrix)?;
    ds.validate()?;
    let labels = group_index(samples);
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let scorer = spec.scorer(&label_refs)?;

    let mut per_group: Vec<Vec<(f64, f64)>> = vec![Vec::new(); labels.len()];
    for (row, s) in samples.iter().enumerate() {
        population::check_score(row, s.p_hat)?;
        let y = match s.y {
            Some(y @ (0 | 1)) => y as f64,
            _ => return Err(Error::Schema(format!("row {row} needs an outcome y in {{0, 1}}"))),
        };
        let k = labels.binary_search(&s.group).expect("label index");
        per_group[k].push((s.p_hat, y));
    }

    let n_rules = 2 * (grid_m + 1);
    let mut tables = Vec::with_capacity(labels.len());
    for (label, records) in labels.iter().zip(&per_group) {
        let v = ds.for_group(label)?;
        let outcomes = (0..n_rules)
            .into_par_iter()
            .map(|r| {
                let rule = grid_rule(r, grid_m);
                let mut m = Moments::default();
                for &(p, y) in records {
                    m.add(if rule.decide(p) { 1.0 } else { 0.0 }, y);
                }
                let m = m.normalized();
                table_entry(m.ds_value(&v, spec.justifier).map(|e_v| GroupOutcome {
                    e_u: m.dm_value(&dm_coef),
                    e_v,
                    selection_rate: m.sel,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        tables.push(RuleTable { outcomes });
    }

    let total = samples.len() as f64;
    let shares = per_group.iter().map(|r| r.len() as f64 / total).collect();
    let hash = spec_hash(&(samples.len(), grid_m, &dm_matrix, ds, spec));
    Grid {
        labels,
        shares,
        tables,
        scorer,
        direction: spec.direction,
        grid_m,
        n_bins: 0,
        spec_hash: hash,
        _spec: spec,
    }
    .build()
}

/// Settings for [`random_policy_oracle`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub n_policies: usize,
    pub seed: u64,
    /// Fraction of per-group vectors drawn as deterministic 0/1 vectors
    /// (each entry 1 with a per-vector probability drawn uniformly); the rest
    /// are coordinate-wise uniform on `[0, 1]`.
    pub deterministic_share: f64,
    /// When set, every entry of every vector takes this value.
    pub fixed_selection: Option<f64>,
}

impl OracleConfig {
    pub fn new(n_policies: usize, seed: u64) -> Self {
        Self {
            n_policies,
            seed,
            deterministic_share: 0.25,
            fixed_selection: None,
        }
    }
}

/// Outcomes of randomly drawn policies.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSample {
    /// `(e_u, fs)` per feasible policy, in draw order.
    pub points: Vec<(f64, f64)>,
    pub skipped: usize,
}

fn draw_vector(rng: &mut ChaCha8Rng, n: usize, cfg: &OracleConfig) -> DecisionVector {
    let d = match cfg.fixed_selection {
        Some(x) => vec![x; n],
        None if rng.random::<f64>() < cfg.deterministic_share => {
            let q: f64 = rng.random();
            (0..n).map(|_| if rng.random::<f64>() < q { 1.0 } else { 0.0 }).collect()
        }
        None => (0..n).map(|_| rng.random::<f64>()).collect(),
    };
    DecisionVector::new(d).expect("entries in [0, 1]")
}

/// Draws `n_policies` policies with arbitrary per-group decision vectors and
/// evaluates them. Policy `i` uses its own ChaCha stream of `seed`, so the
/// output depends only on the configuration.
pub fn random_policy_oracle(
    pop: &PopulationModel,
    dm: &UtilityMatrix,
    ds: &DsMatrices,
    spec: &FairnessSpec,
    cfg: &OracleConfig,
) -> Result<OracleSample> {
    if cfg.n_policies == 0 {
        return Err(Error::InvalidParameter("n_policies must be at least 1".into()));
    }
    if let Some(x) = cfg.fixed_selection {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidParameter(format!("fixed selection {x} outside [0, 1]")));
        }
    }
    let dm_coef = derive_coefficients(&dm.into_dm()?)?;
    let labels: Vec<&str> = pop.labels().collect();
    let scorer = spec.scorer(&labels)?;
    let shares: Vec<f64> = pop.groups().iter().map(|g| g.share).collect();
    let ds_per_group = labels
        .iter()
        .map(|l| ds.for_group(l))
        .collect::<Result<Vec<_>>>()?;
    let n = pop.n_bins();

    let results = (0..cfg.n_policies)
        .into_par_iter()
        .map(|i| -> Result<Option<(f64, f64)>> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let mut outcomes = Vec::with_capacity(labels.len());
            for (g, v) in pop.groups().iter().zip(&ds_per_group) {
                let d = draw_vector(&mut rng, n, cfg);
                match table_entry(evaluate_group(&d, &g.weights, &dm_coef, v, spec.justifier))? {
                    Some(o) => outcomes.push(o),
                    None => return Ok(None),
                }
            }
            let e_u = mixture(&shares, outcomes.iter().map(|o| o.e_u));
            let values: Vec<f64> = outcomes.iter().map(|o| o.e_v).collect();
            Ok(Some((e_u, scorer.score(&values, &shares))))
        })
        .collect::<Result<Vec<_>>>()?;

    let skipped = results.iter().filter(|r| r.is_none()).count();
    Ok(OracleSample {
        points: results.into_iter().flatten().collect(),
        skipped,
    })
}

/// Re-evaluates a frontier point's policy on the population.
pub fn reevaluate(
    point: &FrontierPoint,
    pop: &PopulationModel,
    dm: &UtilityMatrix,
    ds: &DsMatrices,
    spec: &FairnessSpec,
) -> Result<policy::PolicyOutcome> {
    policy::evaluate_policy(&point.policy(), pop, dm, ds, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::Principle;
    use crate::policy::Justifier;
    use crate::population::BinnedDensity;
    use rand::Rng;
    use crate::utility::SELECTION;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn optimum_rules() {
        let r = unconstrained_optimum(&UtilityMatrix::ds(0.0, 0.0, -0.5, 1.0)).unwrap();
        assert_eq!(r.bound, Bound::Lower);
        assert_abs_diff_eq!(r.t, 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(unconstrained_optimum(&UtilityMatrix::ds(1.0, 0.0, 0.0, 1.0)).unwrap().t, 0.5);
        assert_eq!(unconstrained_optimum(&UtilityMatrix::ds(0.0, 0.0, -1.0, 1.0)).unwrap().t, 0.5);
        assert!(unconstrained_optimum(&UtilityMatrix::ds(0.0, 1.0, 0.0, 0.5)).is_err());
    }

    #[test]
    fn filter_examples() {
        assert_eq!(pareto_filter(&[(1.0, 0.0)], Direction::Minimize).unwrap(), [0]);
        let pts = [(1.0, 0.2), (0.9, 0.1), (1.0, 0.1)];
        assert_eq!(pareto_filter(&pts, Direction::Minimize).unwrap(), [2]);
        // maximizing the score flips which side wins
        let pts = [(1.0, 0.2), (0.9, 0.1), (1.0, 0.1)];
        assert_eq!(pareto_filter(&pts, Direction::Maximize).unwrap(), [0]);
        let dup = [(0.5, 0.1), (0.5, 0.1), (0.4, 0.2)];
        let mut kept = pareto_filter(&dup, Direction::Minimize).unwrap();
        kept.sort();
        assert_eq!(kept, [0, 1]);
        assert!(matches!(
            pareto_filter(&[(f64::NAN, 0.0)], Direction::Minimize),
            Err(Error::InvalidValue(_))
        ));
    }

    fn brute_force(points: &[(f64, f64)], direction: Direction) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| {
                !points.iter().any(|q| {
                    let p = points[i];
                    q.0 >= p.0
                        && direction.no_worse(q.1, p.1)
                        && (q.0 > p.0 || direction.better(q.1, p.1))
                })
            })
            .collect()
    }

    #[test]
    fn filter_matches_quadratic_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<(f64, f64)> = (0..10_000)
            .map(|_| {
                // coarse values so ties and duplicates occur
                let u = (rng.random::<f64>() * 200.0).round() / 200.0;
                let f = (rng.random::<f64>() * 200.0).round() / 200.0;
                (u, f)
            })
            .collect();
        for dir in [Direction::Minimize, Direction::Maximize] {
            let mut fast = pareto_filter(&pts, dir).unwrap();
            fast.sort();
            assert_eq!(fast, brute_force(&pts, dir));
        }
    }

    proptest! {
        #[test]
        fn filter_permutation_invariant(
            pts in prop::collection::vec((0u8..20, 0u8..20), 1..60),
            seed in any::<u64>(),
        ) {
            let pts: Vec<(f64, f64)> = pts.into_iter().map(|(a, b)| (a as f64, b as f64)).collect();
            let mut order: Vec<usize> = (0..pts.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..order.len()).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            let shuffled: Vec<(f64, f64)> = order.iter().map(|&i| pts[i]).collect();
            let mut a: Vec<(u64, u64)> = pareto_filter(&pts, Direction::Minimize).unwrap()
                .into_iter().map(|i| (pts[i].0.to_bits(), pts[i].1.to_bits())).collect();
            let mut b: Vec<(u64, u64)> = pareto_filter(&shuffled, Direction::Minimize).unwrap()
                .into_iter().map(|i| (shuffled[i].0.to_bits(), shuffled[i].1.to_bits())).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }

    fn toy_population() -> PopulationModel {
        PopulationModel::from_parts([
            ("A", 0.4, BinnedDensity::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap()),
            ("B", 0.6, BinnedDensity::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap()),
        ])
        .unwrap()
    }

    #[test]
    fn coarse_grid_keeps_select_all() {
        let pop = toy_population();
        let dm = UtilityMatrix::dm(0.0, 0.0, -0.5, 1.0).unwrap();
        let spec = FairnessSpec::new(Justifier::Unconditional, Principle::EgalitarianAbsDiff).unwrap();
        let fr = build_frontier(&pop, &dm, &SELECTION.into(), &spec, 1).unwrap();
        assert_eq!(fr.meta.evaluated, 16);
        // equal selection rates up to rounding of the bin weights
        let zero = fr.best_utility_at(1e-12).unwrap();
        let all = GroupPolicy::thresholds([
            ("A", ThresholdRule::lower(0.0).unwrap()),
            ("B", ThresholdRule::lower(0.0).unwrap()),
        ]);
        let expected = policy::evaluate_policy(&all, &pop, &dm, &SELECTION.into(), &spec).unwrap();
        assert_eq!(zero.e_u, expected.e_u);
        assert_eq!(zero.rules, match all { GroupPolicy::Thresholds(r) => r, _ => unreachable!() });
    }

    #[test]
    fn frontier_points_reevaluate_exactly() {
        let pop = toy_population();
        let dm = UtilityMatrix::dm(0.0, 0.0, -0.5, 1.0).unwrap();
        let ds: DsMatrices = UtilityMatrix::ds(0.0, 0.0, -1.0, 1.0).into();
        let spec = FairnessSpec::new(Justifier::OnDecision(1), Principle::EgalitarianAbsDiff).unwrap();
        let fr = build_frontier(&pop, &dm, &ds, &spec, 8).unwrap();
        assert!(fr.meta.skipped > 0);
        for p in &fr.points {
            let o = reevaluate(p, &pop, &dm, &ds, &spec).unwrap();
            assert!((o.e_u - p.e_u).abs() <= 1e-12);
            assert!((o.fs - p.fs).abs() <= 1e-12);
        }
        for w in fr.points.windows(2) {
            assert!(w[0].fs <= w[1].fs && w[0].e_u < w[1].e_u);
        }
    }

    #[test]
    fn maximize_direction_orders_descending() {
        let pop = toy_population();
        let dm = UtilityMatrix::dm(0.0, 0.0, -0.5, 1.0).unwrap();
        let spec = FairnessSpec::new(Justifier::OnOutcome(1), Principle::RawlsMaximin).unwrap();
        let fr = build_frontier(&pop, &dm, &SELECTION.into(), &spec, 4).unwrap();
        for w in fr.points.windows(2) {
            assert!(w[0].fs > w[1].fs && w[0].e_u < w[1].e_u);
        }
    }

    #[test]
    fn all_infeasible_is_reported() {
        let pop = toy_population();
        let dm = UtilityMatrix::dm(0.0, 0.0, -0.5, 1.0).unwrap();
        let spec = FairnessSpec::new(Justifier::OnDecision(1), Principle::EgalitarianAbsDiff).unwrap();
        // a single bin at p = 0.5 exists for grid M = 1 only as select-all or select-none
        let one = PopulationModel::from_parts([
            ("A", 0.5, BinnedDensity::uniform(1).unwrap()),
            ("B", 0.5, BinnedDensity::uniform(1).unwrap()),
        ])
        .unwrap();
        let fr = build_frontier(&one, &dm, &SELECTION.into(), &spec, 1).unwrap();
        assert_eq!(fr.meta.skipped, 16 - 4);
        assert!(build_frontier(&pop, &dm, &SELECTION.into(), &spec, 0).is_err());
    }

    #[test]
    fn oracle_is_deterministic() {
        let pop = toy_population();
        let dm = UtilityMatrix::dm(0.0, 0.0, -0.5, 1.0).unwrap();
        let spec = FairnessSpec::new(Justifier::Unconditional, Principle::EgalitarianAbsDiff).unwrap();
        let cfg = OracleConfig::new(200, 5);
        let a = random_policy_oracle(&pop, &dm, &SELECTION.into(), &spec, &cfg).unwrap();
        let b = random_policy_oracle(&pop, &dm, &SELECTION.into(), &spec, &cfg).unwrap();
        let bits = |s: &OracleSample| s.points.iter().map(|(u, f)| (u.to_bits(), f.to_bits())).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = random_policy_oracle(&pop, &dm, &SELECTION.into(), &spec, &OracleConfig::new(200, 6)).unwrap();
        assert_ne!(bits(&a), bits(&c));

        let forced = OracleConfig {
            fixed_selection: Some(1.0),
            ..OracleConfig::new(1, 5)
        };
        let s = random_policy_oracle(&pop, &dm, &SELECTION.into(), &spec, &forced).unwrap();
        let all = GroupPolicy::thresholds([
            ("A", ThresholdRule::lower(0.0).unwrap()),
            ("B", ThresholdRule::lower(0.0).unwrap()),
        ]);
        let o = policy::evaluate_policy(&all, &pop, &dm, &SELECTION.into(), &spec).unwrap();
        assert_eq!(s.points, [(o.e_u, o.fs)]);
    }

    #[test]
    fn grid_rule_order() {
        assert_eq!(grid_rule(0, 4), ThresholdRule { bound: Bound::Lower, t: 0.0 });
        assert_eq!(grid_rule(4, 4), ThresholdRule { bound: Bound::Lower, t: 1.0 });
        assert_eq!(grid_rule(5, 4), ThresholdRule { bound: Bound::Upper, t: 0.0 });
        assert_eq!(grid_rule(9, 4), ThresholdRule { bound: Bound::Upper, t: 1.0 });
    }
}
