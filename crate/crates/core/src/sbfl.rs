//! Spectrum-based fault localization with Ochiai, method-level max
//! aggregation and max-tie-break ranking, plus the measures built on it.

use crate::dataset::{Dataset, Outcome};
use crate::error::{Error, Result};

/// Scores closer than this are treated as tied when ranking.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpectrumCounts {
    pub ef: usize,
    pub ep: usize,
    pub nf: usize,
    pub np: usize,
}

impl SpectrumCounts {
    /// `ef / sqrt((ef + nf) * (ef + ep))`, zero when `ef = 0` or the
    /// denominator vanishes.
    pub fn ochiai(&self) -> f64 {
        if self.ef == 0 {
            return 0.0;
        }
        let denom = ((self.ef + self.nf) as f64 * (self.ef + self.ep) as f64).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            self.ef as f64 / denom
        }
    }
}

/// Per-element counts over `tests`. Tests with unknown outcome are skipped.
pub fn spectrum_counts(dataset: &Dataset, tests: &[usize]) -> Vec<SpectrumCounts> {
    let mut counts = vec![SpectrumCounts::default(); dataset.num_elements()];
    for &t in tests {
        let outcome = dataset.outcome(t);
        if outcome == Outcome::Unknown {
            continue;
        }
        let cov = dataset.coverage(t);
        for (e, c) in counts.iter_mut().enumerate() {
            match (outcome == Outcome::Fail, cov.get(e)) {
                (true, true) => c.ef += 1,
                (true, false) => c.nf += 1,
                (false, true) => c.ep += 1,
                (false, false) => c.np += 1,
            }
        }
    }
    counts
}

pub fn ochiai_statement_scores(dataset: &Dataset, tests: &[usize]) -> Result<Vec<f64>> {
    if !tests.iter().any(|&t| dataset.outcome(t) == Outcome::Fail) {
        return Err(Error::NoFailingTest);
    }
    Ok(spectrum_counts(dataset, tests)
        .iter()
        .map(SpectrumCounts::ochiai)
        .collect())
}

/// Method score = max over its elements' scores.
pub fn aggregate_to_methods(statement_scores: &[f64], dataset: &Dataset) -> Vec<f64> {
    (0..dataset.num_methods())
        .map(|m| {
            dataset
                .method_elements(m)
                .iter()
                .map(|&e| statement_scores[e])
                .fold(0.0, f64::max)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub method: usize,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    entries: Vec<RankEntry>,
    by_method: Vec<usize>,
    scores: Vec<f64>,
}

impl Ranking {
    /// Entries ordered by `(rank, method)`.
    pub fn entries(&self) -> &[RankEntry] {
        &self.entries
    }

    pub fn rank_of(&self, method: usize) -> usize {
        self.by_method[method]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.by_method
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// `rank(m) = |{m' : score(m') >= score(m)}|`.
pub fn rank_max_tiebreak(method_scores: &[f64]) -> Ranking {
    let mut sorted = method_scores.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let by_method: Vec<usize> = method_scores
        .iter()
        .map(|&s| sorted.partition_point(|&v| v >= s - TIE_TOLERANCE))
        .collect();
    let mut entries: Vec<RankEntry> = method_scores
        .iter()
        .enumerate()
        .map(|(method, &score)| RankEntry {
            method,
            score,
            rank: by_method[method],
        })
        .collect();
    entries.sort_by_key(|e| (e.rank, e.method));
    Ranking {
        entries,
        by_method,
        scores: method_scores.to_vec(),
    }
}

/// Ochiai over `tests`, restricted to `scope`, aggregated to methods and
/// ranked. Elements outside `scope` contribute nothing.
pub fn localize(dataset: &Dataset, tests: &[usize], scope: &[usize]) -> Result<Ranking> {
    let all = ochiai_statement_scores(dataset, tests)?;
    let mut masked = vec![0.0; all.len()];
    for &e in scope {
        masked[e] = all[e];
    }
    Ok(rank_max_tiebreak(&aggregate_to_methods(&masked, dataset)))
}

/// Best (numerically smallest) rank among the buggy methods.
pub fn best_buggy_rank(ranking: &Ranking, buggy_methods: &[usize]) -> Result<usize> {
    buggy_methods
        .iter()
        .filter(|&&m| m < ranking.len())
        .map(|&m| ranking.rank_of(m))
        .min()
        .ok_or(Error::NoRankedFault)
}

/// Relative rank improvement against the episode's initial rank.
pub fn reward(init_rank: usize, cur_rank: usize) -> f64 {
    (init_rank as f64 - cur_rank as f64) / init_rank as f64
}

pub fn acc_at_n(best_ranks: &[usize], n: usize) -> usize {
    best_ranks.iter().filter(|&&r| r <= n).count()
}

/// Average precision of one fault given the ranks of its buggy methods.
pub fn average_precision(buggy_ranks: &[usize]) -> Result<f64> {
    if buggy_ranks.is_empty() {
        return Err(Error::NoRankedFault);
    }
    let sum: f64 = buggy_ranks
        .iter()
        .map(|&r| {
            let at_or_above = buggy_ranks.iter().filter(|&&o| o <= r).count();
            at_or_above as f64 / r as f64
        })
        .sum();
    Ok(sum / buggy_ranks.len() as f64)
}

/// Mean of per-fault average precision; each item holds one fault's buggy
/// method ranks. An empty fault list scores 0.
pub fn mean_average_precision(per_fault_buggy_ranks: &[Vec<usize>]) -> Result<f64> {
    if per_fault_buggy_ranks.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for ranks in per_fault_buggy_ranks {
        total += average_precision(ranks)?;
    }
    Ok(total / per_fault_buggy_ranks.len() as f64)
}

/// Ranks of `buggy_methods` in `ranking`.
pub fn buggy_ranks(ranking: &Ranking, buggy_methods: &[usize]) -> Vec<usize> {
    buggy_methods.iter().map(|&m| ranking.rank_of(m)).collect()
}
