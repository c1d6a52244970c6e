//! Ambiguity groups and the state/action features of a growing test suite.
//!
//! An ambiguity group is a maximal set of elements whose execution vectors
//! (columns of the coverage matrix restricted to the suite) are identical.
//! Groups are always ordered by their smallest element id.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Coverage, Dataset, Outcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopePolicy {
    /// Only the elements covered by the initial failing test.
    #[default]
    FailingCovered,
    AllElements,
}

impl ScopePolicy {
    pub fn scope(self, dataset: &Dataset, failing_test: usize) -> Vec<usize> {
        match self {
            ScopePolicy::FailingCovered => dataset.coverage(failing_test).ones().collect(),
            ScopePolicy::AllElements => (0..dataset.num_elements()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmbiguityPartition {
    groups: Vec<Vec<usize>>,
    scope: Vec<usize>,
    defining_tests: Vec<usize>,
}

impl AmbiguityPartition {
    /// Groups `scope` (ascending element ids) by execution vector over `tests`.
    pub fn compute(dataset: &Dataset, tests: &[usize], scope: &[usize]) -> Self {
        let mut p = AmbiguityPartition {
            groups: if scope.is_empty() {
                Vec::new()
            } else {
                vec![scope.to_vec()]
            },
            scope: scope.to_vec(),
            defining_tests: Vec::new(),
        };
        for &t in tests {
            p.refine(dataset.coverage(t));
            p.defining_tests.push(t);
        }
        p
    }

    /// Splits every group by one more coverage vector. Sub-groups keep element
    /// order, and group order stays keyed on the smallest member.
    fn refine(&mut self, cov: &Coverage) {
        let mut next = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let (inside, outside): (Vec<usize>, Vec<usize>) = g.iter().partition(|&&e| cov.get(e));
            match (inside.is_empty(), outside.is_empty()) {
                (false, false) => {
                    next.push(inside);
                    next.push(outside);
                }
                (false, true) => next.push(inside),
                _ => next.push(outside),
            }
        }
        next.sort_unstable_by_key(|g| g[0]);
        self.groups = next;
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn defining_tests(&self) -> &[usize] {
        &self.defining_tests
    }

    /// Number of groups after additionally splitting by `cov`.
    pub fn count_refined(&self, cov: &Coverage) -> usize {
        self.groups
            .iter()
            .map(|g| {
                let c = g.iter().filter(|&&e| cov.get(e)).count();
                if c > 0 && c < g.len() {
                    2
                } else {
                    1
                }
            })
            .sum()
    }

    /// Group sizes after additionally splitting by `cov`.
    pub fn refined_sizes(&self, cov: &Coverage) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.groups.len() * 2);
        for g in &self.groups {
            let c = g.iter().filter(|&&e| cov.get(e)).count();
            if c > 0 {
                sizes.push(c);
            }
            if c < g.len() {
                sizes.push(g.len() - c);
            }
        }
        sizes
    }

    /// Largest attainable raw split value: sum of |ag| * floor(|ag| / 2).
    pub fn max_split(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| (g.len() * (g.len() / 2)) as f64)
            .sum()
    }
}

/// The suite under construction: one failing test plus the tests selected so
/// far. Clone to branch.
#[derive(Debug, Clone)]
pub struct SuiteContext<'a> {
    dataset: &'a Dataset,
    failing_test: usize,
    selected: Vec<usize>,
    policy: ScopePolicy,
    partition: AmbiguityPartition,
}

impl<'a> SuiteContext<'a> {
    pub fn new(dataset: &'a Dataset, failing_test: usize, policy: ScopePolicy) -> Result<Self> {
        let t = dataset.test(failing_test)?;
        if t.outcome != Outcome::Fail {
            return Err(Error::InvalidDataset(format!(
                "suite root {failing_test} is not a failing test"
            )));
        }
        let scope = policy.scope(dataset, failing_test);
        let partition = AmbiguityPartition::compute(dataset, &[failing_test], &scope);
        Ok(SuiteContext {
            dataset,
            failing_test,
            selected: Vec::new(),
            policy,
            partition,
        })
    }

    pub fn with_selected(
        dataset: &'a Dataset,
        failing_test: usize,
        policy: ScopePolicy,
        selected: &[usize],
    ) -> Result<Self> {
        let mut ctx = SuiteContext::new(dataset, failing_test, policy)?;
        for &t in selected {
            ctx.add(t)?;
        }
        Ok(ctx)
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn failing_test(&self) -> usize {
        self.failing_test
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn policy(&self) -> ScopePolicy {
        self.policy
    }

    pub fn scope(&self) -> &[usize] {
        self.partition.scope()
    }

    /// `{failing_test} ∪ selected`, failing test first.
    pub fn suite(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.selected.len() + 1);
        s.push(self.failing_test);
        s.extend_from_slice(&self.selected);
        s
    }

    pub fn len(&self) -> usize {
        self.selected.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, test: usize) -> bool {
        test == self.failing_test || self.selected.contains(&test)
    }

    pub fn check_candidate(&self, test: usize) -> Result<()> {
        self.dataset.test(test)?;
        if self.contains(test) {
            return Err(Error::AlreadyInSuite(test));
        }
        Ok(())
    }

    pub fn add(&mut self, test: usize) -> Result<()> {
        self.check_candidate(test)?;
        self.partition.refine(self.dataset.coverage(test));
        self.partition.defining_tests.push(test);
        self.selected.push(test);
        Ok(())
    }

    /// Tests not yet in the suite, ascending.
    pub fn candidates(&self) -> Vec<usize> {
        (0..self.dataset.num_tests())
            .filter(|&t| !self.contains(t))
            .collect()
    }

    pub fn partition(&self) -> &AmbiguityPartition {
        &self.partition
    }
}

pub fn ambiguity_partition(ctx: &SuiteContext<'_>) -> AmbiguityPartition {
    ctx.partition().clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateVector {
    pub num_tests: usize,
    pub num_ag: usize,
}

pub fn state_features(ctx: &SuiteContext<'_>) -> StateVector {
    StateVector {
        num_tests: ctx.len(),
        num_ag: ctx.partition().len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionVector {
    pub cover: f64,
    pub split: f64,
    pub split_norm: f64,
}

/// `|a ∩ b| / |a ∪ b|`, with two empty supports scoring 0.
pub fn jaccard_similarity(a: &Coverage, b: &Coverage) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(jaccard_unchecked(a, b))
}

fn jaccard_unchecked(a: &Coverage, b: &Coverage) -> f64 {
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.bits().iter().zip(b.bits()) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn cover_of(ctx: &SuiteContext<'_>, coverage: &Coverage) -> f64 {
    jaccard_unchecked(coverage, ctx.dataset().coverage(ctx.failing_test()))
}

pub fn cover_feature(ctx: &SuiteContext<'_>, candidate: usize) -> Result<f64> {
    ctx.check_candidate(candidate)?;
    Ok(cover_of(ctx, ctx.dataset().coverage(candidate)))
}

/// Raw and normalized split of the current ambiguity groups by `coverage`.
pub fn split_of(ctx: &SuiteContext<'_>, coverage: &Coverage) -> (f64, f64) {
    let p = ctx.partition();
    let raw: f64 = p
        .groups()
        .iter()
        .map(|g| {
            let inside = g.iter().filter(|&&e| coverage.get(e)).count();
            let div = inside.min(g.len() - inside);
            (g.len() * div) as f64
        })
        .sum();
    let max = p.max_split();
    let norm = if max > 0.0 { raw / max } else { 0.0 };
    (raw, norm)
}

pub fn split_feature(ctx: &SuiteContext<'_>, candidate: usize) -> Result<(f64, f64)> {
    ctx.check_candidate(candidate)?;
    Ok(split_of(ctx, ctx.dataset().coverage(candidate)))
}

pub fn action_of(ctx: &SuiteContext<'_>, coverage: &Coverage) -> ActionVector {
    let (split, split_norm) = split_of(ctx, coverage);
    ActionVector {
        cover: cover_of(ctx, coverage),
        split,
        split_norm,
    }
}

pub fn action_features(ctx: &SuiteContext<'_>, candidate: usize) -> Result<ActionVector> {
    ctx.check_candidate(candidate)?;
    Ok(action_of(ctx, ctx.dataset().coverage(candidate)))
}

/// Groups `scope` by whole execution vector, the slow way. Used to cross-check
/// incremental refinement.
pub fn partition_by_vectors(
    dataset: &Dataset,
    tests: &[usize],
    scope: &[usize],
) -> Vec<Vec<usize>> {
    let mut order: Vec<Vec<bool>> = Vec::new();
    let mut groups: HashMap<Vec<bool>, Vec<usize>> = HashMap::new();
    for &e in scope {
        let key: Vec<bool> = tests.iter().map(|&t| dataset.coverage(t).get(e)).collect();
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(e);
    }
    order
        .into_iter()
        .map(|k| groups.remove(&k).unwrap())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn names(d: &Dataset, g: &[usize]) -> Vec<String> {
        g.iter().map(|&e| d.elements()[e].name.clone()).collect()
    }

    fn s(range: impl IntoIterator<Item = usize>) -> Vec<String> {
        range.into_iter().map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn example_single_failing_test_is_one_group() {
        let d = fixtures::six_method_example();
        let ctx = SuiteContext::new(&d, 0, ScopePolicy::FailingCovered).unwrap();
        let p = ambiguity_partition(&ctx);
        assert_eq!(p.len(), 1);
        assert_eq!(p.groups()[0].len(), 28);
        assert_eq!(
            state_features(&ctx),
            StateVector {
                num_tests: 1,
                num_ag: 1
            }
        );
    }

    #[test]
    fn example_t4_splits_off_s1_to_s8() {
        let d = fixtures::six_method_example();
        let ctx = SuiteContext::with_selected(&d, 0, ScopePolicy::FailingCovered, &[4]).unwrap();
        let p = ambiguity_partition(&ctx);
        assert_eq!(p.len(), 2);
        assert_eq!(names(&d, &p.groups()[0]), s(1..=8));
        assert_eq!(names(&d, &p.groups()[1]), s(9..=28));
    }

    #[test]
    fn example_t1_t2_groups() {
        let d = fixtures::six_method_example();
        let ctx = SuiteContext::with_selected(&d, 0, ScopePolicy::FailingCovered, &[1, 2]).unwrap();
        let p = ambiguity_partition(&ctx);
        assert_eq!(p.len(), 2);
        let mut all_ones = s([1, 10, 11, 12, 13, 15, 17]);
        all_ones.extend(s(18..=28));
        assert_eq!(names(&d, &p.groups()[0]), all_ones);
        let mut rest = s(2..=9);
        rest.extend(s([14, 16]));
        assert_eq!(names(&d, &p.groups()[1]), rest);
        assert_eq!(state_features(&ctx).num_tests, 3);
        assert_eq!(state_features(&ctx).num_ag, 2);
    }

    #[test]
    fn empty_scope_gives_no_groups() {
        let d = Dataset::new(
            vec![("m".into(), "e0".into())],
            vec![
                ("f".into(), Coverage::parse("0").unwrap(), Outcome::Fail),
                ("p".into(), Coverage::parse("1").unwrap(), Outcome::Pass),
            ],
            vec![],
            vec![0],
        )
        .unwrap();
        let ctx = SuiteContext::new(&d, 0, ScopePolicy::FailingCovered).unwrap();
        assert!(ambiguity_partition(&ctx).is_empty());
        assert_eq!(
            state_features(&ctx),
            StateVector {
                num_tests: 1,
                num_ag: 0
            }
        );
    }

    #[test]
    fn jaccard_cases() {
        let a = Coverage::from_indices(6, &[1, 2, 3, 4]);
        let b = Coverage::from_indices(6, &[3, 4, 5]);
        assert!((jaccard_similarity(&a, &b).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(jaccard_similarity(&a, &a).unwrap(), 1.0);
        let c = Coverage::from_indices(6, &[0, 5]);
        assert_eq!(jaccard_similarity(&a, &c).unwrap(), 0.0);
        assert_eq!(
            jaccard_similarity(&Coverage::zeros(3), &Coverage::zeros(3)).unwrap(),
            0.0
        );
        assert!(matches!(
            jaccard_similarity(&Coverage::zeros(3), &Coverage::zeros(4)),
            Err(Error::LengthMismatch(3, 4))
        ));
    }

    #[test]
    fn cover_on_example() {
        let d = fixtures::six_method_example();
        let ctx = SuiteContext::new(&d, 0, ScopePolicy::FailingCovered).unwrap();
        assert!((cover_feature(&ctx, 4).unwrap() - 8.0 / 28.0).abs() < 1e-15);
        assert_eq!(cover_feature(&ctx, 1).unwrap(), 1.0);
        assert_eq!(cover_feature(&ctx, 10).unwrap(), 0.0);
        assert!(matches!(
            cover_feature(&ctx, 0),
            Err(Error::AlreadyInSuite(0))
        ));
    }

    fn split_dataset(groups: &[usize], candidate: &[usize]) -> Dataset {
        // one failing test covering everything, then one passing test per
        // group boundary so that `groups` are exactly the ambiguity groups
        let n: usize = groups.iter().sum();
        let mut tests = vec![(
            "f".to_string(),
            Coverage::from_indices(n, &(0..n).collect::<Vec<_>>()),
            Outcome::Fail,
        )];
        let mut start = 0;
        for &g in groups {
            let idx: Vec<usize> = (start..start + g).collect();
            tests.push((
                format!("g{start}"),
                Coverage::from_indices(n, &idx),
                Outcome::Pass,
            ));
            start += g;
        }
        tests.push((
            "cand".into(),
            Coverage::from_indices(n, candidate),
            Outcome::Pass,
        ));
        Dataset::new(
            (0..n).map(|i| ("m".to_string(), format!("e{i}"))).collect(),
            tests,
            vec![],
            vec![0],
        )
        .unwrap()
    }

    #[test]
    fn split_single_group_even() {
        let d = split_dataset(&[4], &[0, 1]);
        let ctx = SuiteContext::new(&d, 0, ScopePolicy::FailingCovered).unwrap();
        let cand = d.num_tests() - 1;
        assert_eq!(split_feature(&ctx, cand).unwrap(), (8.0, 1.0));
    }

    #[test]
    fn split_two_groups() {
        let d = split_dataset(&[3, 2], &[0, 3, 4]);
        let ctx = SuiteContext::with_selected(&d, 0, ScopePolicy::FailingCovered, &[1]).unwrap();
        assert_eq!(ctx.partition().len(), 2);
        let cand = d.num_tests() - 1;
        let (raw, norm) = split_feature(&ctx, cand).unwrap();
        assert_eq!(raw, 3.0);
        assert!((norm - 0.6).abs() < 1e-15);
    }

    #[test]
    fn split_zero_when_covering_everything() {
        let d = split_dataset(&[3, 2], &[0, 1, 2, 3, 4]);
        let ctx = SuiteContext::with_selected(&d, 0, ScopePolicy::FailingCovered, &[1]).unwrap();
        assert_eq!(split_feature(&ctx, d.num_tests() - 1).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn context_rejects_duplicates_and_passing_roots() {
        let d = fixtures::six_method_example();
        let mut ctx = SuiteContext::new(&d, 0, ScopePolicy::FailingCovered).unwrap();
        ctx.add(3).unwrap();
        assert!(matches!(ctx.add(3), Err(Error::AlreadyInSuite(3))));
        assert!(matches!(ctx.add(0), Err(Error::AlreadyInSuite(0))));
        assert!(matches!(ctx.add(99), Err(Error::UnknownTest(99))));
        assert!(SuiteContext::new(&d, 1, ScopePolicy::FailingCovered).is_err());
        assert_eq!(ctx.suite(), vec![0, 3]);
    }
}
