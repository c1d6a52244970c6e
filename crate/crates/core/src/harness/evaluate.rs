use std::fmt::Write as _;

use rayon::prelude::*;

use super::select::{select, SelectionTrace};
use crate::coverage::ScopePolicy;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{make_scorer, ScorerKind, ScorerSpec};
use crate::rl::trainer::episode_setup;
use crate::sbfl::{acc_at_n, mean_average_precision};

pub const ACC_LEVELS: [usize; 4] = [1, 3, 5, 10];

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub metric: String,
    pub k: usize,
    /// Number of faults whose best buggy method ranks within 1, 3, 5, 10.
    pub acc: [usize; 4],
    pub map: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedFault {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub skipped: Vec<SkippedFault>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,k,acc1,acc3,acc5,acc10,map\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{:.6}",
                r.metric, r.k, r.acc[0], r.acc[1], r.acc[2], r.acc[3], r.map
            )
            .expect("string write");
        }
        out
    }

    pub fn row(&self, metric: &str, k: usize) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.metric == metric && r.k == k)
    }
}

/// Per-fault copy of `spec`: random scorers get a distinct seed per fault so
/// faults do not share one random sequence.
pub fn spec_for_fault(spec: &ScorerSpec, index: usize) -> ScorerSpec {
    let mut s = spec.clone();
    if spec.kind == ScorerKind::Random {
        let base = spec.seed.unwrap_or(0);
        s.seed = Some(base.wrapping_mul(1_000_003).wrapping_add(index as u64));
    }
    s
}

/// Why a fault cannot be evaluated at all, if it cannot.
fn precondition(dataset: &Dataset, k: usize) -> Option<String> {
    let (root, pool) = match episode_setup(dataset) {
        Ok(x) => x,
        Err(e) => return Some(e.to_string()),
    };
    if dataset.faults().is_empty() {
        return Some("no fault labels".into());
    }
    if dataset.coverage(root).count_ones() == 0 {
        return Some(format!("failing test {root} covers no element"));
    }
    if pool.len() < k {
        return Some(format!("{} candidates, need {k}", pool.len()));
    }
    None
}

/// Greedy selection traces of one metric over every fault, in fault order.
/// Faults failing a precondition yield `None`.
pub fn metric_traces(
    datasets: &[Dataset],
    spec: &ScorerSpec,
    k: usize,
    policy: ScopePolicy,
) -> Result<Vec<Option<SelectionTrace>>> {
    spec.validate()?;
    datasets
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            if precondition(d, k).is_some() {
                return Ok(None);
            }
            let wrap = |e| Error::Fault {
                index: i,
                source: Box::new(e),
            };
            let (root, _) = episode_setup(d).map_err(wrap)?;
            let mut scorer = make_scorer(&spec_for_fault(spec, i)).map_err(wrap)?;
            select(d, root, scorer.as_mut(), k, policy)
                .map(Some)
                .map_err(wrap)
        })
        .collect()
}

/// acc@{1,3,5,10} and mAP for every metric at every k in `0..=k`.
pub fn evaluate(
    datasets: &[Dataset],
    specs: &[ScorerSpec],
    k: usize,
    policy: ScopePolicy,
) -> Result<EvalReport> {
    let mut report = EvalReport::default();
    for (i, d) in datasets.iter().enumerate() {
        if let Some(reason) = precondition(d, k) {
            report.skipped.push(SkippedFault { index: i, reason });
        }
    }
    for spec in specs {
        let traces: Vec<SelectionTrace> = metric_traces(datasets, spec, k, policy)?
            .into_iter()
            .flatten()
            .collect();
        for step in 0..=k {
            let best: Vec<usize> = traces.iter().map(|t| t.steps[step].best_rank).collect();
            let per_fault: Vec<Vec<usize>> = traces
                .iter()
                .map(|t| t.steps[step].buggy_ranks.clone())
                .collect();
            report.rows.push(EvalRow {
                metric: spec.kind.as_str().to_string(),
                k: step,
                acc: ACC_LEVELS.map(|n| acc_at_n(&best, n)),
                map: mean_average_precision(&per_fault)?,
            });
        }
    }
    Ok(report)
}

/// Mean reward at each step over the given traces.
pub fn mean_rewards(traces: &[SelectionTrace]) -> Vec<f64> {
    let Some(first) = traces.first() else {
        return vec![];
    };
    (0..first.steps.len())
        .map(|k| traces.iter().map(|t| t.steps[k].reward).sum::<f64>() / traces.len() as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn step_zero_rows_agree_across_metrics() {
        let d = fixtures::six_method_example();
        let specs = [
            ScorerSpec::new(ScorerKind::Tfd),
            ScorerSpec::new(ScorerKind::Split),
            ScorerSpec::random(3),
        ];
        let r = evaluate(&[d], &specs, 4, ScopePolicy::AllElements).unwrap();
        assert_eq!(r.rows.len(), 15);
        let zero: Vec<_> = r.rows.iter().filter(|r| r.k == 0).collect();
        assert!(zero
            .iter()
            .all(|z| z.acc == zero[0].acc && z.map == zero[0].map));
        for row in &r.rows {
            assert!(row.acc.windows(2).all(|w| w[0] <= w[1]));
        }
        assert_eq!(r.to_csv().lines().count(), 16);
    }

    #[test]
    fn skipped_faults_are_reported() {
        let d = fixtures::six_method_example();
        let small = d.restrict_tests(&[0, 1, 2]).unwrap();
        let r = evaluate(
            &[d, small],
            &[ScorerSpec::new(ScorerKind::Cover)],
            3,
            ScopePolicy::FailingCovered,
        )
        .unwrap();
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.skipped[0].index, 1);
        assert_eq!(r.rows.len(), 4);
    }

    #[test]
    fn random_seed_differs_per_fault() {
        let s = ScorerSpec::random(7);
        assert_ne!(spec_for_fault(&s, 0).seed, spec_for_fault(&s, 1).seed);
        let t = ScorerSpec::new(ScorerKind::Tfd);
        assert_eq!(spec_for_fault(&t, 5).seed, None);
    }
}
