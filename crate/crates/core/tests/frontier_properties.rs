use fairfront_core::frontier::grid_rule;
use fairfront_core::policy::{expected_dm_utility, expected_ds_utility};
use fairfront_core::utility::SELECTION;
use fairfront_core::*;
use proptest::prelude::*;

fn density(raw: &[f64]) -> BinnedDensity {
    let s: f64 = raw.iter().sum();
    BinnedDensity::new(raw.iter().map(|x| x / s).collect()).unwrap()
}

fn two_groups(a: &[f64], b: &[f64], share: f64) -> PopulationModel {
    PopulationModel::from_parts([("A", share, density(a)), ("B", 1.0 - share, density(b))]).unwrap()
}

fn dm() -> UtilityMatrix {
    UtilityMatrix::dm(0.0, 0.0, -0.5, 1.0).unwrap()
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n)
}

/// Both sets contain a point within `tol` of every point of the other.
fn same_points(a: &[FrontierPoint], b: &[FrontierPoint], tol: f64) -> bool {
    let covered = |x: &[FrontierPoint], y: &[FrontierPoint]| {
        x.iter().all(|p| y.iter().any(|q| (p.e_u - q.e_u).abs() <= tol && (p.fs - q.fs).abs() <= tol))
    };
    covered(a, b) && covered(b, a)
}

#[test]
fn grid_frontier_matches_brute_force() {
    let pop = two_groups(&[0.1, 0.05, 0.3, 0.2, 0.05, 0.1, 0.15, 0.05], &[0.3, 0.2, 0.1, 0.1, 0.1, 0.05, 0.05, 0.1], 0.3);
    let ds: DsMatrices = UtilityMatrix::ds(0.0, 0.0, -1.0, 1.0).into();
    for spec in [
        FairnessSpec::new(Justifier::Unconditional, Principle::EgalitarianAbsDiff).unwrap(),
        FairnessSpec::new(Justifier::OnDecision(1), Principle::EgalitarianAbsDiff).unwrap(),
        FairnessSpec::new(Justifier::OnOutcome(1), Principle::RawlsMaximin).unwrap(),
        FairnessSpec::new(Justifier::OnOutcome(0), Principle::Sufficientarian { tau: 0.2 }).unwrap(),
    ] {
        let m = 8;
        let fr = frontier::build_frontier(&pop, &dm(), &ds, &spec, m).unwrap();
        // every policy through the public evaluator, then a quadratic dominance check
        let mut outcomes = Vec::new();
        let mut skipped = 0;
        for ra in 0..2 * (m + 1) {
            for rb in 0..2 * (m + 1) {
                let p = GroupPolicy::thresholds([("A", grid_rule(ra, m)), ("B", grid_rule(rb, m))]);
                match evaluate_policy(&p, &pop, &dm(), &ds, &spec) {
                    Ok(o) => outcomes.push((o.e_u, o.fs)),
                    Err(Error::UndefinedConditional { .. }) => skipped += 1,
                    Err(e) => panic!("{e}"),
                }
            }
        }
        let dir = spec.direction;
        let mut expected: Vec<(f64, f64)> = outcomes
            .iter()
            .filter(|p| {
                !outcomes.iter().any(|q| {
                    q.0 >= p.0 && dir.no_worse(q.1, p.1) && (q.0 > p.0 || dir.better(q.1, p.1))
                })
            })
            .copied()
            .collect();
        expected.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        expected.dedup();
        let mut got: Vec<(f64, f64)> = fr.points.iter().map(|p| (p.e_u, p.fs)).collect();
        got.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        assert_eq!(got, expected, "{spec:?}");
        assert_eq!(fr.meta.skipped, skipped);
    }
}

#[test]
fn duplicate_outcomes_keep_smallest_signature() {
    // B has all mass in the top bin, so many B rules coincide
    let pop = PopulationModel::from_parts([
        ("A", 0.5, density(&[0.2, 0.3, 0.5, 0.0])),
        ("B", 0.5, BinnedDensity::point_mass(3, 4).unwrap()),
    ])
    .unwrap();
    let spec = FairnessSpec::new(Justifier::Unconditional, Principle::EgalitarianAbsDiff).unwrap();
    let fr = frontier::build_frontier(&pop, &dm(), &SELECTION.into(), &spec, 4).unwrap();
    for p in &fr.points {
        let b = p.rules["B"];
        // lower 0 through lower 0.75 select the same B bin; lower 0 wins
        if b.bound == Bound::Lower && b.t < 1.0 {
            assert_eq!(b.t, 0.0, "{p:?}");
        }
    }
    let mut keys: Vec<(u64, u64)> = fr.points.iter().map(|p| (p.e_u.to_bits(), p.fs.to_bits())).collect();
    keys.dedup();
    assert_eq!(keys.len(), fr.points.len());
}

#[test]
fn maximal_point_is_unconstrained_optimum() {
    let pop = PopulationModel::from_parts([
        ("A", 0.5, discretize_beta(4.5, 5.5, 200).unwrap()),
        ("B", 0.5, discretize_beta(5.0, 3.0, 200).unwrap()),
    ])
    .unwrap();
    let spec = FairnessSpec::new(Justifier::Unconditional, Principle::EgalitarianAbsDiff).unwrap();
    for (m, dm) in [
        (200, UtilityMatrix::dm(0.0, 0.0, -0.5, 1.0).unwrap()),
        (100, UtilityMatrix::dm(1.0, 0.0, 0.0, 1.0).unwrap()),
        (50, UtilityMatrix::dm(0.0, -0.2, -0.3, 1.0).unwrap()),
    ] {
        let opt = frontier::unconstrained_optimum(&dm).unwrap();
        let fr = frontier::build_frontier(&pop, &dm, &SELECTION.into(), &spec, m).unwrap();
        for r in fr.best_utility().unwrap().rules.values() {
            assert_eq!(r.bound, Bound::Lower);
            assert!((r.t - opt.t).abs() <= 1.0 / m as f64 + 1e-12, "{r} vs {opt}");
        }
    }
}

#[test]
fn output_independent_of_thread_count() {
    let pop = two_groups(&[0.1, 0.2, 0.3, 0.4, 0.5], &[0.5, 0.4, 0.3, 0.2, 0.1], 0.4);
    let spec = FairnessSpec::new(Justifier::OnDecision(1), Principle::EgalitarianAbsDiff).unwrap();
    let ds: DsMatrices = UtilityMatrix::ds(0.0, 0.0, -1.0, 1.0).into();
    let build = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| frontier::build_frontier(&pop, &dm(), &ds, &spec, 100).unwrap())
    };
    let one = build(1);
    assert_eq!(one, build(4));
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&build(3)).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // A single group's best decision vector is a threshold rule: lower bound
    // for the DM, and lower or upper for any DS matrix.
    #[test]
    fn threshold_rules_are_optimal_per_group(
        raw in weights(12),
        d in prop::collection::vec(0.0f64..=1.0, 12),
        v in prop::array::uniform4(-2.0f64..2.0),
    ) {
        let g = density(&raw);
        let n = 12;
        let d = DecisionVector::new(d).unwrap();
        let coef = derive_coefficients(&dm()).unwrap();
        let rules: Vec<DecisionVector> = (0..2 * (n + 1)).map(|r| rule_to_vector(&grid_rule(r, n), n)).collect();

        let best_dm = rules.iter().map(|r| expected_dm_utility(r, &g, &coef).unwrap()).fold(f64::MIN, f64::max);
        let opt = rule_to_vector(&frontier::unconstrained_optimum(&dm()).unwrap(), n);
        prop_assert!(expected_dm_utility(&d, &g, &coef).unwrap() <= best_dm + 1e-12);
        prop_assert!((expected_dm_utility(&opt, &g, &coef).unwrap() - best_dm).abs() <= 1e-12);

        let m = UtilityMatrix::ds(v[0], v[1], v[2], v[3]);
        let ev = |x: &DecisionVector| expected_ds_utility(x, &g, &m, Justifier::Unconditional).unwrap();
        let best_ds = rules.iter().map(ev).fold(f64::MIN, f64::max);
        prop_assert!(ev(&d) <= best_ds + 1e-12);
    }

    // The frontier at grid 2M weakly dominates the one at grid M.
    #[test]
    fn refinement_is_monotone(a in weights(16), b in weights(16), share in 0.1f64..0.9, treat in any::<bool>()) {
        let pop = two_groups(&a, &b, share);
        let ds: DsMatrices = if treat { UtilityMatrix::ds(0.0, 0.0, -1.0, 1.0) } else { SELECTION }.into();
        let spec = FairnessSpec::new(Justifier::Unconditional, Principle::EgalitarianAbsDiff).unwrap();
        let coarse = frontier::build_frontier(&pop, &dm(), &ds, &spec, 4).unwrap();
        let fine = frontier::build_frontier(&pop, &dm(), &ds, &spec, 8).unwrap();
        for p in &coarse.points {
            prop_assert!(
                fine.points.iter().any(|q| q.e_u >= p.e_u - 1e-12 && q.fs <= p.fs + 1e-12),
                "{:?} not covered", p
            );
        }
    }

    // A DS matrix whose crossing lies outside [0, 1] leaves only lower-bound
    // rules: within a group, every upper-bound rule is weakly dominated by a
    // lower-bound rule with one fractionally selected bin reaching the same
    // group value. (On a finite grid the frontier itself may still pick up
    // upper-bound points where the lower-bound values are too sparse.)
    #[test]
    fn no_crossing_means_lower_bounds_only(
        raw in weights(10),
        slope in -3.0f64..3.0,
        offset in 0.05f64..2.0,
        negative in any::<bool>(),
        base in -1.0f64..1.0,
    ) {
        // f(p) = slope p + beta keeps one sign on [0, 1]
        let beta = if slope >= 0.0 { offset } else { offset - slope };
        let (alpha, beta) = if negative { (-slope, -beta) } else { (slope, beta) };
        let v = UtilityMatrix::ds(base, base, base + beta, base + alpha + beta);
        let c = derive_coefficients(&v).unwrap();
        prop_assert!(c.crossing.is_none_or(|x| !(0.0..=1.0).contains(&x)));

        let n = 10;
        let g = density(&raw);
        let coef = derive_coefficients(&dm()).unwrap();
        let point = |d: &DecisionVector| {
            (
                expected_ds_utility(d, &g, &v, Justifier::Unconditional).unwrap(),
                expected_dm_utility(d, &g, &coef).unwrap(),
            )
        };
        // lower rule k selects bins k..n
        let lower: Vec<(f64, f64)> = (0..=n).map(|k| point(&rule_to_vector(&grid_rule(k, n), n))).collect();
        for k in 0..=n {
            let (e_v, e_u) = point(&rule_to_vector(&grid_rule(n + 1 + k, n), n));
            let covered = lower.windows(2).any(|w| {
                let ((v0, u0), (v1, u1)) = (w[0], w[1]);
                let (lo, hi) = (v0.min(v1), v0.max(v1));
                if e_v < lo - 1e-12 || e_v > hi + 1e-12 {
                    return false;
                }
                let theta = if (v0 - v1).abs() < 1e-15 { 0.0 } else { (e_v - v1) / (v0 - v1) };
                u1 + theta.clamp(0.0, 1.0) * (u0 - u1) >= e_u - 1e-12
            });
            prop_assert!(covered, "upper rule {} beats every lower mix", k);
        }
    }

    // Relabeling the groups relabels the frontier and nothing else.
    #[test]
    fn relabeling_preserves_outcomes(a in weights(10), b in weights(10), share in 0.1f64..0.9) {
        let spec = FairnessSpec::new(Justifier::OnOutcome(1), Principle::EgalitarianAbsDiff).unwrap();
        let ds: DsMatrices = SELECTION.into();
        let x = frontier::build_frontier(&two_groups(&a, &b, share), &dm(), &ds, &spec, 10).unwrap();
        let swapped = PopulationModel::from_parts([("A", 1.0 - share, density(&b)), ("B", share, density(&a))]).unwrap();
        let y = frontier::build_frontier(&swapped, &dm(), &ds, &spec, 10).unwrap();
        prop_assert!(same_points(&x.points, &y.points, 1e-12));
    }
}
