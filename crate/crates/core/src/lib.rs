//! Pareto frontiers of decision-maker utility against fairness scores for
//! group-specific threshold rules on binary decisions.
//!
//! A [`PopulationModel`] holds per-group densities of a calibrated score
//! `p = P[Y = 1 | features]` on `N` equal-width bins. Decision rules are
//! lower (`p >= t`) or upper (`p < t`) bound thresholds per group. The
//! decision maker's utility matrix fixes the objective; the decision
//! subjects' utility matrix, a justifier and a distributive principle fix the
//! fairness score.

pub mod audit;
pub mod error;
pub mod fairness;
pub mod frontier;
pub mod io;
pub mod policy;
pub mod population;
pub mod utility;

pub use audit::{
    audit_decision_log, audit_point, evaluate_decision_log, reconstruct_decision_profile, AuditReport,
    DecisionProfile, ObservedPoint,
};
pub use error::{Error, Result};
pub use fairness::{fairness_score, Direction, FairnessSpec, Principle};
pub use frontier::{
    build_empirical_frontier, build_frontier, pareto_filter, random_policy_oracle, unconstrained_optimum,
    FrontierMeta, FrontierPoint, FrontierSet, OracleConfig, OracleSample,
};
pub use policy::{
    empirical_evaluate, evaluate_policy, rule_to_vector, Bound, DecisionVector, GroupPolicy, Justifier,
    PolicyOutcome, ThresholdRule,
};
pub use population::{
    discretize_beta, estimate_from_samples, BinnedDensity, GroupDensity, PopulationModel, Sample,
    DEFAULT_BINS,
};
pub use utility::{derive_coefficients, preset, preset_by_name, Coefficients, DsMatrices, Metric, MetricPreset, UtilityMatrix};
