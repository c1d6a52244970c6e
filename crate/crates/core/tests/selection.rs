use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rlfdc::coverage::ScopePolicy;
use rlfdc::datagen::{generate_benchmark, SyntheticSpec};
use rlfdc::fixtures;
use rlfdc::harness::evaluate::{evaluate, metric_traces};
use rlfdc::harness::select;
use rlfdc::metrics::{make_scorer, ScorerKind, ScorerSpec, DEFAULT_ALPHA};
use rlfdc::sbfl;

const POLICY: ScopePolicy = ScopePolicy::FailingCovered;

#[test]
fn tfd_picks_t11_then_t12() {
    let full = fixtures::six_method_example();
    let keep: Vec<usize> = std::iter::once(0).chain(11..=20).collect();
    let d = full.restrict_tests(&keep).unwrap();
    let mut scorer = make_scorer(&ScorerSpec::new(ScorerKind::Tfd)).unwrap();
    let trace = select(&d, 0, scorer.as_mut(), 2, POLICY).unwrap();
    let names: Vec<&str> = trace
        .selected()
        .iter()
        .map(|&t| d.tests()[t].name.as_str())
        .collect();
    assert_eq!(names, ["t11", "t12"]);
}

#[test]
fn first_four_passing_tests_rank_m4_first() {
    let d = fixtures::six_method_example();
    let scope = POLICY.scope(&d, 0);
    let ranking = sbfl::localize(&d, &[0, 1, 2, 3, 4], &scope).unwrap();
    assert_eq!(
        sbfl::best_buggy_rank(&ranking, &d.buggy_methods()).unwrap(),
        1
    );
}

fn specs() -> Vec<ScorerSpec> {
    vec![
        ScorerSpec::new(ScorerKind::Tfd),
        ScorerSpec::new(ScorerKind::Ddu),
        ScorerSpec::new(ScorerKind::Entbug),
        ScorerSpec::new(ScorerKind::Fdg).with_alpha(DEFAULT_ALPHA),
        ScorerSpec::new(ScorerKind::Cover),
        ScorerSpec::new(ScorerKind::Split),
        ScorerSpec::new(ScorerKind::Weighted).with_alpha(0.3),
        ScorerSpec::random(5),
    ]
}

#[test]
fn traces_have_no_duplicates_and_are_order_free() {
    let data = generate_benchmark(
        &SyntheticSpec {
            seed: 13,
            ..Default::default()
        },
        4,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for spec in specs() {
        for (d, trace) in data
            .iter()
            .zip(metric_traces(&data, &spec, 10, POLICY).unwrap())
        {
            let trace = trace.unwrap();
            assert_eq!(trace.steps.len(), 11);
            let mut picked = trace.selected();
            let mut sorted = picked.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 10, "{}", spec.kind);
            assert!(!picked.contains(&trace.failing_test));

            picked.shuffle(&mut rng);
            let mut suite = vec![trace.failing_test];
            suite.extend(picked);
            let scope = POLICY.scope(d, trace.failing_test);
            let ranking = sbfl::localize(d, &suite, &scope).unwrap();
            assert_eq!(ranking.scores(), trace.steps[10].method_scores.as_slice());
        }
    }
}

#[test]
fn report_rows_are_consistent() {
    let data = generate_benchmark(
        &SyntheticSpec {
            seed: 17,
            ..Default::default()
        },
        6,
    )
    .unwrap();
    let specs = specs();
    let report = evaluate(&data, &specs, 10, POLICY).unwrap();
    assert_eq!(report.rows.len(), specs.len() * 11);
    let base = report.row("tfd", 0).unwrap();
    for spec in &specs {
        let zero = report.row(spec.kind.as_str(), 0).unwrap();
        assert_eq!((zero.acc, zero.map), (base.acc, base.map));
    }
    for row in &report.rows {
        assert!(row.acc.windows(2).all(|w| w[0] <= w[1]), "{row:?}");
        assert!(row.acc[3] <= data.len());
    }
    let again = evaluate(&data, &specs, 10, POLICY).unwrap();
    assert_eq!(report.to_csv(), again.to_csv());
}

#[test]
fn too_few_candidates_is_an_error() {
    let d = fixtures::six_method_example();
    let mut scorer = make_scorer(&ScorerSpec::new(ScorerKind::Cover)).unwrap();
    assert!(select(&d, 0, scorer.as_mut(), 21, POLICY).is_err());
}

