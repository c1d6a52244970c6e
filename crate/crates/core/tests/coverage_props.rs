use proptest::prelude::*;

use rlfdc::coverage::{cover_of, split_of, AmbiguityPartition, ScopePolicy, SuiteContext};
use rlfdc::dataset::{Coverage, Dataset, Outcome};
use rlfdc::metrics;
use rlfdc::sbfl;

/// Up to 8 tests by 12 elements. Test 0 fails and covers at least one element.
fn matrix() -> impl Strategy<Value = Dataset> {
    (2usize..=8, 1usize..=12).prop_flat_map(|(m, n)| {
        (
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), n), m),
            proptest::collection::vec(0usize..3, n),
            proptest::collection::vec(any::<bool>(), m),
        )
            .prop_map(move |(mut rows, methods, fails)| {
                if !rows[0].iter().any(|&b| b) {
                    rows[0][0] = true;
                }
                let elements = (0..n)
                    .map(|e| (format!("m{}", methods[e]), format!("s{e}")))
                    .collect();
                let tests = rows
                    .into_iter()
                    .enumerate()
                    .map(|(t, r)| {
                        let o = if t == 0 || fails[t] {
                            Outcome::Fail
                        } else {
                            Outcome::Pass
                        };
                        (format!("t{t}"), Coverage::new(r), o)
                    })
                    .collect();
                Dataset::new(elements, tests, vec![0], vec![0]).unwrap()
            })
    })
}

fn brute_groups(d: &Dataset, tests: &[usize], scope: &[usize]) -> Vec<Vec<usize>> {
    let col = |e: usize| {
        tests
            .iter()
            .map(|&t| d.coverage(t).get(e))
            .collect::<Vec<_>>()
    };
    let mut out: Vec<Vec<usize>> = Vec::new();
    for &e in scope {
        match out.iter_mut().find(|g| col(g[0]) == col(e)) {
            Some(g) => g.push(e),
            None => out.push(vec![e]),
        }
    }
    out
}

proptest! {
    #[test]
    fn partition_matches_pairwise_equality(d in matrix(), mask in any::<u8>()) {
        let tests: Vec<usize> = (0..d.num_tests()).filter(|t| mask >> t & 1 == 1).collect();
        let scope: Vec<usize> = (0..d.num_elements()).collect();
        let p = AmbiguityPartition::compute(&d, &tests, &scope);
        prop_assert_eq!(p.groups().to_vec(), brute_groups(&d, &tests, &scope));
        let mut union: Vec<usize> = p.groups().concat();
        union.sort_unstable();
        prop_assert_eq!(union, scope);
    }

    #[test]
    fn adding_a_test_never_merges_groups(d in matrix(), mask in any::<u8>(), extra in 0usize..8) {
        let tests: Vec<usize> = (0..d.num_tests()).filter(|t| mask >> t & 1 == 1).collect();
        let extra = extra % d.num_tests();
        let scope: Vec<usize> = (0..d.num_elements()).collect();
        let before = AmbiguityPartition::compute(&d, &tests, &scope).len();
        let mut more = tests.clone();
        more.push(extra);
        prop_assert!(AmbiguityPartition::compute(&d, &more, &scope).len() >= before);
        prop_assert!(metrics::tfd(&d, &more, &scope) >= metrics::tfd(&d, &tests, &scope));
    }

    #[test]
    fn split_is_zero_exactly_when_constant_on_groups(d in matrix(), bits in proptest::collection::vec(any::<bool>(), 12), all in any::<bool>()) {
        let policy = if all { ScopePolicy::AllElements } else { ScopePolicy::FailingCovered };
        let ctx = SuiteContext::with_selected(&d, 0, policy, &[]).unwrap();
        let c = Coverage::new(bits[..d.num_elements()].to_vec());
        let (raw, norm) = split_of(&ctx, &c);
        let constant = ctx.partition().groups().iter().all(|g| g.iter().all(|&e| c.get(e) == c.get(g[0])));
        prop_assert_eq!(raw == 0.0, constant);
        prop_assert!((0.0..=1.0).contains(&norm));
        let cover = cover_of(&ctx, &c);
        prop_assert!((0.0..=1.0).contains(&cover));
    }

    #[test]
    fn cover_survives_element_reordering(d in matrix(), seed in any::<u64>()) {
        let n = d.num_elements();
        let mut perm: Vec<usize> = (0..n).collect();
        // a seeded rotation plus reversal is enough to move every element
        perm.rotate_left((seed as usize) % n);
        if seed % 2 == 0 {
            perm.reverse();
        }
        let elements = perm.iter().map(|&e| (d.method_names()[d.method_of(e)].clone(), format!("s{e}"))).collect();
        let tests = d.tests().iter().map(|t| {
            (t.name.clone(), Coverage::new(perm.iter().map(|&e| t.coverage.get(e)).collect()), t.outcome)
        }).collect();
        let q = Dataset::new(elements, tests, vec![0], vec![0]).unwrap();
        let a = SuiteContext::new(&d, 0, ScopePolicy::FailingCovered).unwrap();
        let b = SuiteContext::new(&q, 0, ScopePolicy::FailingCovered).unwrap();
        for t in 1..d.num_tests() {
            prop_assert_eq!(cover_of(&a, d.coverage(t)), cover_of(&b, q.coverage(t)));
        }
    }

    #[test]
    fn entbug_is_symmetric_in_density(d in matrix()) {
        let tests: Vec<usize> = (0..d.num_tests()).collect();
        let scope: Vec<usize> = (0..d.num_elements()).collect();
        let flipped = Dataset::new(
            (0..d.num_elements()).map(|e| ("m".to_string(), format!("s{e}"))).collect(),
            d.tests().iter().map(|t| {
                (t.name.clone(), Coverage::new(t.coverage.bits().iter().map(|b| !b).collect()), t.outcome)
            }).collect(),
            vec![0],
            vec![],
        ).unwrap();
        let a = metrics::entbug(&d, &tests, &scope).unwrap();
        let b = metrics::entbug(&flipped, &tests, &scope).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let ddu = metrics::ddu(&d, &tests, &scope).unwrap();
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&ddu));
    }

    #[test]
    fn uncovering_passing_test_keeps_ochiai(d in matrix(), e in 0usize..12) {
        let e = e % d.num_elements();
        let base = vec![0];
        let before = sbfl::ochiai_statement_scores(&d, &base).unwrap()[e];
        for t in 1..d.num_tests() {
            if d.outcome(t) == Outcome::Pass && !d.coverage(t).get(e) {
                let after = sbfl::ochiai_statement_scores(&d, &[0, t]).unwrap()[e];
                prop_assert_eq!(before, after);
            }
        }
    }
}
