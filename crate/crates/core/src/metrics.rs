//! Baseline fault-diagnosability metrics and the scorer interface shared by
//! selection and generation.
//!
//! Suite-level metrics (TfD, DDU, EntBug) are evaluated over the columns in a
//! scope. As candidate scorers they value `metric(T ∪ {t})`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coverage::{cover_of, split_of, SuiteContext};
use crate::dataset::{Coverage, Dataset};
use crate::error::{Error, Result};
use crate::rl::QModel;
use crate::sbfl;

fn density_rows(rows: &[&Coverage], scope: &[usize]) -> Result<f64> {
    if rows.is_empty() || scope.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let ones: usize = rows
        .iter()
        .map(|r| scope.iter().filter(|&&e| r.get(e)).count())
        .sum();
    Ok(ones as f64 / (rows.len() * scope.len()) as f64)
}

fn column_groups_rows(rows: &[&Coverage], scope: &[usize]) -> usize {
    let seen: HashSet<Vec<bool>> = scope
        .iter()
        .map(|&e| rows.iter().map(|r| r.get(e)).collect())
        .collect();
    seen.len()
}

fn diversity_rows(rows: &[&Coverage], scope: &[usize]) -> f64 {
    let m = rows.len();
    if m < 2 {
        return 0.0;
    }
    let mut counts: HashMap<Vec<bool>, usize> = HashMap::new();
    for r in rows {
        *counts
            .entry(scope.iter().map(|&e| r.get(e)).collect())
            .or_default() += 1;
    }
    let same: usize = counts.values().map(|&c| c * (c - 1)).sum();
    1.0 - same as f64 / (m * (m - 1)) as f64
}

fn entbug_rows(rows: &[&Coverage], scope: &[usize]) -> Result<f64> {
    let rho = density_rows(rows, scope)?;
    Ok(1.0 - (1.0 - 2.0 * rho).abs())
}

fn ddu_rows(rows: &[&Coverage], scope: &[usize]) -> Result<f64> {
    let density = density_rows(rows, scope)?;
    let uniqueness = column_groups_rows(rows, scope) as f64 / scope.len() as f64;
    Ok(density * diversity_rows(rows, scope) * uniqueness)
}

fn rows<'d>(dataset: &'d Dataset, tests: &[usize]) -> Vec<&'d Coverage> {
    tests.iter().map(|&t| dataset.coverage(t)).collect()
}

pub fn density(dataset: &Dataset, tests: &[usize], scope: &[usize]) -> Result<f64> {
    density_rows(&rows(dataset, tests), scope)
}

/// `1 - |1 - 2ρ|` where ρ is the matrix density.
pub fn entbug(dataset: &Dataset, tests: &[usize], scope: &[usize]) -> Result<f64> {
    entbug_rows(&rows(dataset, tests), scope)
}

/// Density × Gini-Simpson row diversity × column uniqueness.
pub fn ddu(dataset: &Dataset, tests: &[usize], scope: &[usize]) -> Result<f64> {
    ddu_rows(&rows(dataset, tests), scope)
}

/// Number of ambiguity groups.
pub fn tfd(dataset: &Dataset, tests: &[usize], scope: &[usize]) -> usize {
    column_groups_rows(&rows(dataset, tests), scope)
}

/// Balance between the group term and the coverage term when none is given.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Result-aware FDG value of adding `coverage` to the suite. Weights are the
/// Ochiai scores of the current suite's known outcomes.
pub fn fdg_of(ctx: &SuiteContext<'_>, coverage: &Coverage, alpha: f64) -> f64 {
    let scope = ctx.scope();
    let n = scope.len();
    if n == 0 {
        return 0.0;
    }
    let counts = sbfl::spectrum_counts(ctx.dataset(), &ctx.suite());
    let w: Vec<f64> = counts.iter().map(sbfl::SpectrumCounts::ochiai).collect();
    let mass: f64 = scope.iter().map(|&e| w[e]).sum();

    let coverage_term = scope
        .iter()
        .filter(|&&e| coverage.get(e))
        .map(|&e| w[e])
        .sum::<f64>()
        / n as f64;

    let group_term = if mass == 0.0 {
        0.0
    } else if n == 1 {
        1.0
    } else {
        let mut weighted = 0.0;
        for g in ctx.partition().groups() {
            let (mut p_in, mut n_in, mut p_out, mut n_out) = (0.0, 0usize, 0.0, 0usize);
            for &e in g {
                if coverage.get(e) {
                    p_in += w[e] / mass;
                    n_in += 1;
                } else {
                    p_out += w[e] / mass;
                    n_out += 1;
                }
            }
            if n_in > 0 {
                weighted += p_in * (n_in - 1) as f64;
            }
            if n_out > 0 {
                weighted += p_out * (n_out - 1) as f64;
            }
        }
        1.0 - weighted / (n - 1) as f64
    };

    alpha * group_term + (1.0 - alpha) * coverage_term
}

pub fn fdg(ctx: &SuiteContext<'_>, candidate: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    ctx.check_candidate(candidate)?;
    Ok(fdg_of(ctx, ctx.dataset().coverage(candidate), alpha))
}

pub fn weighted_of(ctx: &SuiteContext<'_>, coverage: &Coverage, alpha: f64) -> f64 {
    let (_, split_norm) = split_of(ctx, coverage);
    alpha * split_norm + (1.0 - alpha) * cover_of(ctx, coverage)
}

/// `α · split_norm + (1 − α) · cover`.
pub fn weighted_cover_split(ctx: &SuiteContext<'_>, candidate: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    ctx.check_candidate(candidate)?;
    Ok(weighted_of(ctx, ctx.dataset().coverage(candidate), alpha))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha {alpha} outside [0, 1]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScorerKind {
    Rlfdc,
    Tfd,
    Ddu,
    Entbug,
    Fdg,
    Cover,
    Split,
    Weighted,
    Random,
}

impl ScorerKind {
    pub const ALL: [ScorerKind; 9] = [
        ScorerKind::Rlfdc,
        ScorerKind::Tfd,
        ScorerKind::Ddu,
        ScorerKind::Entbug,
        ScorerKind::Fdg,
        ScorerKind::Cover,
        ScorerKind::Split,
        ScorerKind::Weighted,
        ScorerKind::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScorerKind::Rlfdc => "rlfdc",
            ScorerKind::Tfd => "tfd",
            ScorerKind::Ddu => "ddu",
            ScorerKind::Entbug => "entbug",
            ScorerKind::Fdg => "fdg",
            ScorerKind::Cover => "cover",
            ScorerKind::Split => "split",
            ScorerKind::Weighted => "weighted",
            ScorerKind::Random => "random",
        }
    }

    pub fn takes_alpha(self) -> bool {
        matches!(self, ScorerKind::Fdg | ScorerKind::Weighted)
    }

    pub fn is_suite_level(self) -> bool {
        matches!(self, ScorerKind::Tfd | ScorerKind::Ddu | ScorerKind::Entbug)
    }
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScorerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric {s:?}")))
    }
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct ScorerSpec {
    pub kind: ScorerKind,
    pub alpha: Option<f64>,
    pub model: Option<Arc<QModel>>,
    pub seed: Option<u64>,
}

impl ScorerSpec {
    pub fn new(kind: ScorerKind) -> Self {
        ScorerSpec {
            kind,
            alpha: None,
            model: None,
            seed: None,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_model(mut self, model: Arc<QModel>) -> Self {
        self.model = Some(model);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn rlfdc(model: Arc<QModel>) -> Self {
        ScorerSpec::new(ScorerKind::Rlfdc).with_model(model)
    }

    pub fn random(seed: u64) -> Self {
        ScorerSpec::new(ScorerKind::Random).with_seed(seed)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.kind;
        match (k.takes_alpha(), self.alpha) {
            (true, None) => return Err(Error::Config(format!("metric {k} requires alpha"))),
            (false, Some(_)) => return Err(Error::Config(format!("metric {k} takes no alpha"))),
            (true, Some(a)) => check_alpha(a)?,
            (false, None) => {}
        }
        match (k == ScorerKind::Rlfdc, &self.model) {
            (true, None) => return Err(Error::Config("metric rlfdc requires a model".into())),
            (false, Some(_)) => return Err(Error::Config(format!("metric {k} takes no model"))),
            _ => {}
        }
        if k == ScorerKind::Random && self.seed.is_none() {
            return Err(Error::Config("metric random requires a seed".into()));
        }
        Ok(())
    }
}

/// A per-candidate value function. Higher is better.
pub trait Scorer: Send {
    fn kind(&self) -> ScorerKind;

    fn score(&mut self, ctx: &SuiteContext<'_>, coverage: &Coverage) -> f64;

    fn score_test(&mut self, ctx: &SuiteContext<'_>, candidate: usize) -> Result<f64> {
        ctx.check_candidate(candidate)?;
        Ok(self.score(ctx, ctx.dataset().coverage(candidate)))
    }
}

struct SuiteMetricScorer {
    kind: ScorerKind,
}

impl Scorer for SuiteMetricScorer {
    fn kind(&self) -> ScorerKind {
        self.kind
    }

    fn score(&mut self, ctx: &SuiteContext<'_>, coverage: &Coverage) -> f64 {
        let scope = ctx.scope();
        if self.kind == ScorerKind::Tfd {
            return ctx.partition().count_refined(coverage) as f64;
        }
        let mut rows = rows(ctx.dataset(), &ctx.suite());
        rows.push(coverage);
        let value = match self.kind {
            ScorerKind::Ddu => ddu_rows(&rows, scope),
            _ => entbug_rows(&rows, scope),
        };
        value.unwrap_or(0.0)
    }
}

struct FeatureScorer {
    kind: ScorerKind,
    alpha: f64,
}

impl Scorer for FeatureScorer {
    fn kind(&self) -> ScorerKind {
        self.kind
    }

    fn score(&mut self, ctx: &SuiteContext<'_>, coverage: &Coverage) -> f64 {
        match self.kind {
            ScorerKind::Cover => cover_of(ctx, coverage),
            ScorerKind::Split => split_of(ctx, coverage).1,
            ScorerKind::Weighted => weighted_of(ctx, coverage, self.alpha),
            _ => fdg_of(ctx, coverage, self.alpha),
        }
    }
}

struct ModelScorer {
    model: Arc<QModel>,
}

impl Scorer for ModelScorer {
    fn kind(&self) -> ScorerKind {
        ScorerKind::Rlfdc
    }

    fn score(&mut self, ctx: &SuiteContext<'_>, coverage: &Coverage) -> f64 {
        self.model.predict_coverage(ctx, coverage)
    }
}

struct RandomScorer {
    rng: ChaCha8Rng,
}

impl Scorer for RandomScorer {
    fn kind(&self) -> ScorerKind {
        ScorerKind::Random
    }

    fn score(&mut self, _ctx: &SuiteContext<'_>, _coverage: &Coverage) -> f64 {
        self.rng.gen::<f64>()
    }
}

pub fn make_scorer(spec: &ScorerSpec) -> Result<Box<dyn Scorer>> {
    spec.validate()?;
    Ok(match spec.kind {
        ScorerKind::Tfd | ScorerKind::Ddu | ScorerKind::Entbug => {
            Box::new(SuiteMetricScorer { kind: spec.kind })
        }
        ScorerKind::Cover | ScorerKind::Split | ScorerKind::Weighted | ScorerKind::Fdg => {
            Box::new(FeatureScorer {
                kind: spec.kind,
                alpha: spec.alpha.unwrap_or(0.0),
            })
        }
        ScorerKind::Rlfdc => Box::new(ModelScorer {
            model: Arc::clone(spec.model.as_ref().expect("validated")),
        }),
        ScorerKind::Random => Box::new(RandomScorer {
            rng: ChaCha8Rng::seed_from_u64(spec.seed.expect("validated")),
        }),
    })
}
