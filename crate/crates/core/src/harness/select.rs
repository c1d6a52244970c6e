use std::fmt::Write as _;

use crate::coverage::{ScopePolicy, SuiteContext};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::Scorer;
use crate::rl::trainer::episode_setup;
use crate::sbfl::{best_buggy_rank, buggy_ranks, localize, reward};

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionStep {
    pub k: usize,
    /// `None` at step 0, where the suite is only the failing test.
    pub selected: Option<usize>,
    pub method_scores: Vec<f64>,
    pub best_rank: usize,
    /// Ranks of every buggy method, in buggy-method order.
    pub buggy_ranks: Vec<usize>,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    pub failing_test: usize,
    pub steps: Vec<SelectionStep>,
}

impl SelectionTrace {
    pub fn selected(&self) -> Vec<usize> {
        self.steps.iter().filter_map(|s| s.selected).collect()
    }

    /// `k,selected,best_rank,reward,method_scores` with `;`-joined scores.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,selected,best_rank,reward,method_scores\n");
        for s in &self.steps {
            let selected = s.selected.map(|t| t.to_string()).unwrap_or_default();
            let scores: Vec<String> = s.method_scores.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(
                out,
                "{},{},{},{:.6},{}",
                s.k,
                selected,
                s.best_rank,
                s.reward,
                scores.join(";")
            )
            .expect("string write");
        }
        out
    }
}

fn record(
    dataset: &Dataset,
    ctx: &SuiteContext<'_>,
    buggy: &[usize],
    k: usize,
    selected: Option<usize>,
    init_rank: Option<usize>,
) -> Result<SelectionStep> {
    let ranking = localize(dataset, &ctx.suite(), ctx.scope())?;
    let best_rank = best_buggy_rank(&ranking, buggy)?;
    Ok(SelectionStep {
        k,
        selected,
        method_scores: ranking.scores().to_vec(),
        best_rank,
        buggy_ranks: buggy_ranks(&ranking, buggy),
        reward: reward(init_rank.unwrap_or(best_rank), best_rank),
    })
}

/// Greedy selection of `k` tests from the pool of non-failing tests. Each
/// step scores every remaining candidate against the current suite and adds
/// the best one; ties go to the lowest test id.
///
/// The suite's outcomes are only consulted by the localizer and by
/// result-aware scorers; a test's outcome enters the suite when it is picked.
pub fn select(
    dataset: &Dataset,
    failing_test: usize,
    scorer: &mut dyn Scorer,
    k: usize,
    policy: ScopePolicy,
) -> Result<SelectionTrace> {
    let mut ctx = SuiteContext::new(dataset, failing_test, policy)?;
    let (_, all) = episode_setup(dataset)?;
    let mut pool: Vec<usize> = all.into_iter().filter(|&t| t != failing_test).collect();
    if pool.len() < k {
        return Err(Error::InsufficientCandidates {
            needed: k,
            available: pool.len(),
        });
    }
    let buggy = dataset.buggy_methods();
    let first = record(dataset, &ctx, &buggy, 0, None, None)?;
    let init_rank = first.best_rank;
    let mut steps = vec![first];
    for step in 1..=k {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, &t) in pool.iter().enumerate() {
            let s = scorer.score(&ctx, dataset.coverage(t));
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        let test = pool.remove(best);
        ctx.add(test)?;
        steps.push(record(
            dataset,
            &ctx,
            &buggy,
            step,
            Some(test),
            Some(init_rank),
        )?);
    }
    Ok(SelectionTrace {
        failing_test,
        steps,
    })
}
