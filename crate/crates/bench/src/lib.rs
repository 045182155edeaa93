//! Shared fixtures for the benchmarks.

use fairfront_core::{
    discretize_beta, DsMatrices, FairnessSpec, Justifier, PopulationModel, Principle, UtilityMatrix,
};

/// Two groups, Beta(4.5, 5.5) and Beta(5, 3), equal shares.
pub fn two_group_population(n_bins: usize) -> PopulationModel {
    PopulationModel::from_parts([
        ("A", 0.5, discretize_beta(4.5, 5.5, n_bins).expect("valid shape")),
        ("B", 0.5, discretize_beta(5.0, 3.0, n_bins).expect("valid shape")),
    ])
    .expect("valid population")
}

pub fn dm() -> UtilityMatrix {
    UtilityMatrix::dm(0.0, 0.0, -0.5, 1.0).expect("valid matrix")
}

pub fn selection_rate() -> (DsMatrices, FairnessSpec) {
    let spec = FairnessSpec::new(Justifier::Unconditional, Principle::EgalitarianAbsDiff).expect("valid spec");
    (UtilityMatrix::ds(0.0, 0.0, 1.0, 1.0).into(), spec)
}
