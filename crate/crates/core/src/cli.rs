//! Command-line front end. Every subcommand writes its artifacts atomically
//! and prints one summary line on success.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::coverage::{ScopePolicy, SuiteContext};
use crate::datagen::{generate_benchmark, write_benchmark, SyntheticSpec, MANIFEST_FILE};
use crate::dataset::{load_dataset_file, Dataset};
use crate::harness::generate::{generated_fragment, label_generated};
use crate::harness::{evaluate, ga_generate, select, GenConfig};
use crate::io::write_atomic;
use crate::metrics::{self, make_scorer, ScorerKind, ScorerSpec};
use crate::rl::trainer::episode_setup;
use crate::rl::{train, OptimizerKind, QModel, TrainConfig, Variant};

#[derive(Debug, Parser)]
#[command(
    name = "rlfdc",
    version,
    about = "Learned fault-diagnosability metrics for test selection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic benchmark: one dataset per fault plus a manifest.
    Bench(BenchArgs),
    /// Train a model on every dataset in --data.
    Train(TrainArgs),
    /// Greedy selection on one dataset, written as a per-step trace.
    Select(SelectArgs),
    /// Simulated metric-guided generation of new tests.
    Generate(GenerateArgs),
    /// Print metric values for a dataset.
    Metric(MetricArgs),
    /// acc@n / mAP report for several metrics over many faults.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Elements considered for ambiguity groups and localization.
    #[arg(long, default_value = "failing-covered", value_parser = parse_scope)]
    pub scope: ScopePolicy,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub faults: usize,
    #[arg(long, default_value_t = 20)]
    pub methods: usize,
    /// Statements per method, `N` or `MIN-MAX`.
    #[arg(long, default_value = "3-8", value_parser = parse_range)]
    pub stmts: (usize, usize),
    #[arg(long, default_value_t = 100)]
    pub tests: usize,
    #[arg(long, default_value_t = 0.8)]
    pub trigger_prob: f64,
    #[arg(long, default_value_t = 0.2)]
    pub method_prob: f64,
    #[arg(long, default_value_t = 0.6)]
    pub stmt_prob: f64,
    #[arg(long, default_value_t = 1)]
    pub bugs: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value = "default")]
    pub variant: Variant,
    #[arg(long, default_value = "adam")]
    pub optimizer: OptimizerKind,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MetricChoice {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub metric: ScorerKind,
    #[command(flatten)]
    pub choice: MetricChoice,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub trace: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub fitness: ScorerKind,
    #[command(flatten)]
    pub choice: MetricChoice,
    #[arg(long, default_value_t = 60)]
    pub generations: usize,
    #[arg(long, default_value_t = 50)]
    pub pop: usize,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Probability that a generated test covering the fault fails.
    #[arg(long, default_value_t = 0.8)]
    pub trigger_prob: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub metric: ScorerKind,
    #[command(flatten)]
    pub choice: MetricChoice,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated metric names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub metrics: Vec<ScorerKind>,
    #[command(flatten)]
    pub choice: MetricChoice,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub report: PathBuf,
    /// Worker threads for per-fault traces; 0 lets the pool decide.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[command(flatten)]
    pub common: Common,
}

fn parse_scope(s: &str) -> Result<ScopePolicy, String> {
    match s {
        "failing-covered" => Ok(ScopePolicy::FailingCovered),
        "all-elements" => Ok(ScopePolicy::AllElements),
        _ => Err(format!(
            "expected failing-covered or all-elements, got {s:?}"
        )),
    }
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    match s.split_once('-') {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => parse(s).map(|v| (v, v)),
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit status: 0 on success, 1 on a domain error, 2 on
/// a usage error.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> anyhow::Result<()> {
    let (name, seed, artifacts) = match cmd {
        Command::Bench(a) => ("bench", a.common.seed, bench(a)?),
        Command::Train(a) => ("train", a.common.seed, train_cmd(a)?),
        Command::Select(a) => ("select", a.common.seed, select_cmd(a)?),
        Command::Generate(a) => ("generate", a.common.seed, generate_cmd(a)?),
        Command::Metric(a) => ("metric", a.common.seed, metric_cmd(a, out)?),
        Command::Eval(a) => ("eval", a.common.seed, eval_cmd(a)?),
    };
    writeln!(
        out,
        "subcommand={name} status=ok artifacts={artifacts} seed={seed}"
    )?;
    Ok(())
}

fn bench(a: &BenchArgs) -> anyhow::Result<usize> {
    let spec = SyntheticSpec {
        methods: a.methods,
        min_statements: a.stmts.0,
        max_statements: a.stmts.1,
        tests: a.tests,
        method_prob: a.method_prob,
        statement_prob: a.stmt_prob,
        faults: a.bugs,
        trigger_prob: a.trigger_prob,
        seed: a.common.seed,
        ..Default::default()
    };
    let datasets = generate_benchmark(&spec, a.faults)?;
    let manifest = write_benchmark(&a.out, &spec, &datasets)?;
    Ok(manifest.files.len() + 1)
}

/// A single dataset file, or every `*.json` in a directory except the
/// manifest, in file-name order.
pub fn load_datasets(path: &Path) -> anyhow::Result<Vec<Dataset>> {
    if !path.is_dir() {
        let d = load_dataset_file(path).with_context(|| format!("loading {}", path.display()))?;
        return Ok(vec![d]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    files.retain(|p| {
        p.extension().is_some_and(|x| x == "json")
            && p.file_name().is_some_and(|n| n != MANIFEST_FILE)
    });
    files.sort();
    if files.is_empty() {
        bail!("no dataset files in {}", path.display());
    }
    files
        .iter()
        .map(|p| load_dataset_file(p).with_context(|| format!("loading {}", p.display())))
        .collect()
}

fn load_one(path: &Path) -> anyhow::Result<Dataset> {
    let mut all = load_datasets(path)?;
    if all.len() != 1 {
        bail!(
            "expected one dataset file, found {} in {}",
            all.len(),
            path.display()
        );
    }
    Ok(all.remove(0))
}

fn train_cmd(a: &TrainArgs) -> anyhow::Result<usize> {
    let datasets = load_datasets(&a.data)?;
    let config = TrainConfig {
        epochs: a.epochs,
        steps: a.k,
        seed: a.common.seed,
        variant: a.variant,
        optimizer: a.optimizer,
        scope: a.common.scope,
        ..Default::default()
    };
    let model = train(&datasets, &config)?;
    model.save(&a.out)?;
    Ok(1)
}

fn scorer_spec(kind: ScorerKind, choice: &MetricChoice, seed: u64) -> anyhow::Result<ScorerSpec> {
    let mut spec = ScorerSpec::new(kind);
    if kind.takes_alpha() {
        spec = spec.with_alpha(choice.alpha.unwrap_or(metrics::DEFAULT_ALPHA));
    } else if choice.alpha.is_some() {
        bail!("metric {kind} takes no --alpha");
    }
    if kind == ScorerKind::Rlfdc {
        let path = choice
            .model
            .as_ref()
            .context("metric rlfdc requires --model")?;
        let model = QModel::load(path).with_context(|| format!("loading {}", path.display()))?;
        spec = spec.with_model(Arc::new(model));
    }
    if kind == ScorerKind::Random {
        spec = spec.with_seed(seed);
    }
    spec.validate()?;
    Ok(spec)
}

fn select_cmd(a: &SelectArgs) -> anyhow::Result<usize> {
    let d = load_one(&a.data)?;
    let (root, _) = episode_setup(&d)?;
    let mut scorer = make_scorer(&scorer_spec(a.metric, &a.choice, a.common.seed)?)?;
    let trace = select(&d, root, scorer.as_mut(), a.k, a.common.scope)?;
    write_atomic(&a.trace, trace.to_csv().as_bytes())?;
    Ok(1)
}

fn generate_cmd(a: &GenerateArgs) -> anyhow::Result<usize> {
    let d = load_one(&a.data)?;
    let (root, _) = episode_setup(&d)?;
    let mut scorer = make_scorer(&scorer_spec(a.fitness, &a.choice, a.common.seed)?)?;
    let config = GenConfig {
        population: a.pop,
        generations: a.generations,
        seed: a.common.seed,
        output_count: a.count,
        ..Default::default()
    };
    let result = ga_generate(&d, root, &config, scorer.as_mut(), a.common.scope)?;
    let vectors: Vec<_> = result.individuals.into_iter().map(|(c, _)| c).collect();
    let labeled = label_generated(&d, &vectors, a.trigger_prob, a.common.seed)?;
    let mut text = serde_json::to_string_pretty(&generated_fragment(&d, &labeled))?;
    text.push('\n');
    write_atomic(&a.out, text.as_bytes())?;
    Ok(1)
}

/// Suite-level metrics print one value for the whole stored suite; the
/// others print one line per candidate against the suite of the failing
/// test alone.
fn metric_cmd(a: &MetricArgs, out: &mut dyn Write) -> anyhow::Result<usize> {
    let d = load_one(&a.data)?;
    let (root, pool) = episode_setup(&d)?;
    let spec = scorer_spec(a.metric, &a.choice, a.common.seed)?;
    if a.metric.is_suite_level() {
        let all: Vec<usize> = (0..d.num_tests()).collect();
        let scope = a.common.scope.scope(&d, root);
        let value = match a.metric {
            ScorerKind::Tfd => metrics::tfd(&d, &all, &scope) as f64,
            ScorerKind::Ddu => metrics::ddu(&d, &all, &scope)?,
            _ => metrics::entbug(&d, &all, &scope)?,
        };
        writeln!(out, "{}={value:.6}", a.metric)?;
        return Ok(0);
    }
    let ctx = SuiteContext::new(&d, root, a.common.scope)?;
    let mut scorer = make_scorer(&spec)?;
    writeln!(out, "test,{}", a.metric)?;
    for t in pool {
        writeln!(
            out,
            "{},{:.6}",
            d.tests()[t].name,
            scorer.score_test(&ctx, t)?
        )?;
    }
    Ok(0)
}

fn eval_cmd(a: &EvalArgs) -> anyhow::Result<usize> {
    let datasets = load_datasets(&a.data)?;
    let specs = a
        .metrics
        .iter()
        .map(|&k| scorer_spec(k, &a.choice, a.common.seed))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()?;
    let report = pool.install(|| evaluate(&datasets, &specs, a.k, a.common.scope))?;
    write_atomic(&a.report, report.to_csv().as_bytes())?;
    Ok(1)
}
