mod common;

use proptest::prelude::*;
use rand::Rng;
use shadowvqs::analysis::{
    haar_random_state, haar_variance_quadruple, variance_fixed_plan, variance_shadow, variance_shadow_pairwise,
};
use shadowvqs::estimator::{estimate_nu, estimate_nu_naive};
use shadowvqs::measure::{build_classical_shadow, build_derandomized, build_naive_budget, LdfGrouping};
use shadowvqs::{DerandomizationParams, Error, ObservableSum, Pauli, PauliString, RandomSource};

fn observable(n: usize, k: usize, rng: &mut RandomSource) -> ObservableSum {
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let terms: Vec<(f64, PauliString)> = (0..k)
        .map(|_| {
            let mut p = PauliString::new((0..n).map(|_| letters[rng.random_range(0..4)]).collect()).unwrap();
            if p.is_identity() {
                p = PauliString::new(vec![Pauli::Z; n]).unwrap();
            }
            (rng.random_range(-1.0..1.0), p)
        })
        .collect();
    ObservableSum::new(terms).unwrap()
}

fn z_score(xs: &[f64], truth: f64) -> f64 {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean - truth).abs() / (var / m).sqrt().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn every_strategy_is_unbiased(seed in any::<u64>(), k in 1usize..=6) {
        let n = 3;
        let mut rng = RandomSource::new(seed);
        let obs = observable(n, k, &mut rng);
        let state = haar_random_state(n, &mut rng).unwrap();
        let truth = state.expectation(&obs).unwrap();
        let shots = 400;
        let reps = 120;
        let derand = build_derandomized(&obs, shots, DerandomizationParams::default()).unwrap();
        let naive = build_naive_budget(&obs, shots).unwrap();
        let grouping = LdfGrouping::new(&obs).unwrap();
        let mut cs = Vec::new();
        let mut de = Vec::new();
        let mut na = Vec::new();
        let mut ld = Vec::new();
        for _ in 0..reps {
            let plan = build_classical_shadow(n, shots, &mut rng).unwrap();
            cs.push(estimate_nu(&state, &obs, &plan, &mut rng, false).unwrap().value);
            de.push(estimate_nu(&state, &obs, &derand, &mut rng, false).unwrap().value);
            na.push(estimate_nu_naive(&state, &obs, &naive, &mut rng).unwrap().value);
            let plan = grouping.sample_plan(&obs, shots, &mut rng).unwrap();
            ld.push(estimate_nu(&state, &obs, &plan, &mut rng, false).unwrap().value);
        }
        // 4σ keeps the false-alarm rate negligible across generated cases
        for xs in [&cs, &de, &na, &ld] {
            prop_assert!(z_score(xs, truth) < 4.0);
        }
    }

    #[test]
    fn per_basis_and_pairwise_variances_agree(seed in any::<u64>(), k in 1usize..=6) {
        let mut rng = RandomSource::new(seed);
        let obs = observable(3, k, &mut rng);
        let state = haar_random_state(3, &mut rng).unwrap();
        let derand = build_derandomized(&obs, 30, DerandomizationParams::default()).unwrap();
        let cs = build_classical_shadow(3, 30, &mut rng).unwrap();
        for plan in [&derand, &cs] {
            let a = variance_shadow(&state, &obs, plan).unwrap();
            let b = variance_shadow_pairwise(&state, &obs, plan).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }
        prop_assert!(variance_fixed_plan(&state, &obs, &derand).unwrap() <= variance_shadow(&state, &obs, &derand).unwrap() + 1e-12);
    }
}

#[test]
fn per_shot_values_average_to_estimate() {
    let mut rng = RandomSource::new(3);
    let obs = observable(3, 4, &mut rng);
    let state = haar_random_state(3, &mut rng).unwrap();
    let plan = build_derandomized(&obs, 50, DerandomizationParams::default()).unwrap();
    let est = estimate_nu(&state, &obs, &plan, &mut rng, true).unwrap();
    let per_shot = est.per_shot.unwrap();
    assert_eq!(per_shot.len(), 50);
    assert!((per_shot.iter().sum::<f64>() / 50.0 - est.value).abs() < 1e-12);
}

#[test]
fn uncovered_term_is_rejected() {
    let obs = ObservableSum::new([(1.0, PauliString::parse("XX").unwrap()), (0.5, PauliString::parse("ZZ").unwrap())])
        .unwrap();
    let plan = shadowvqs::MeasurementPlan::deterministic(vec![PauliString::parse("XX").unwrap()], &obs.paulis()).unwrap();
    assert!(matches!(plan.ensure_covers(&obs.paulis()), Err(Error::PlanRejected(_))));
    let state = shadowvqs::StateVector::zero(2).unwrap();
    assert!(estimate_nu(&state, &obs, &plan, &mut RandomSource::new(0), false).is_err());
}

#[test]
fn haar_closed_forms_agree() {
    let obs = ObservableSum::new([
        (0.5, PauliString::parse("ZZ").unwrap()),
        (0.3, PauliString::parse("XI").unwrap()),
        (0.4, PauliString::parse("XX").unwrap()),
    ])
    .unwrap()
    .extend_with_x(1.0)
    .unwrap();
    let plan = build_derandomized(&obs, 12, DerandomizationParams::default()).unwrap();
    let report = shadowvqs::analysis::haar_check(&obs, &plan, 4000, 9).unwrap();
    let quad = haar_variance_quadruple(&obs, &plan).unwrap();
    assert!((report.closed_variance - quad).abs() < 1e-12 * quad.max(1.0));
    assert!(report.mean_within(3.0), "{report:?}");
    assert!(matches!(shadowvqs::analysis::haar_check(&obs, &plan, 0, 0), Err(Error::EmptySample)));
}
