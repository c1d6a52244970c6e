//! Double Q-learning with experience replay over a set of training faults.
//!
//! Each epoch runs one episode per training environment, in order. For a
//! labeled fault an episode starts from the lone failing test, records the
//! initial buggy rank once, then takes `steps` ε-greedy selections. Learning
//! starts only when the replay memory is full, happens every `learn_period`
//! global steps, and the target network is refreshed every `sync_period`
//! global steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::model::{normalize_action, normalize_state, QModel};
use super::network::{QNetwork, Sample, ACTION_DIM, STATE_DIM};
use super::optim::Optimizer;
use super::replay::{ReplayMemory, Transition};
use crate::coverage::{ScopePolicy, SuiteContext};
use crate::dataset::{Dataset, Outcome};
use crate::error::{Error, Result};
use crate::sbfl::{best_buggy_rank, localize, reward};

/// Independent random streams derived from the training seed.
pub const STREAM_INIT: u64 = 0;
pub const STREAM_EXPLORE: u64 = 1;
pub const STREAM_REPLAY: u64 = 2;

pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Online network at initialization for `config`.
pub fn init_network(config: &TrainConfig) -> QNetwork {
    QNetwork::new(
        !config.variant.no_embed,
        &mut rng_stream(config.seed, STREAM_INIT),
    )
}

pub fn init_model(config: &TrainConfig) -> Result<QModel> {
    config.validate()?;
    QModel::new(init_network(config), config.clone())
}

/// `r` for terminal transitions, otherwise `r + γ · max_a' Q(s', a')` where Q
/// is the target network, or the online network under `regular_q`.
pub fn td_target(
    t: &Transition,
    online: &QNetwork,
    target: &QNetwork,
    gamma: f64,
    regular_q: bool,
) -> f64 {
    if t.terminal || t.next_actions.is_empty() {
        return t.reward;
    }
    let net = if regular_q { online } else { target };
    let embedded = net.embed_state(&t.next_state);
    let best = t
        .next_actions
        .iter()
        .map(|a| net.head(&embedded, a))
        .fold(f64::NEG_INFINITY, f64::max);
    t.reward + gamma * best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetRecord {
    pub terminal: bool,
    pub reward: f64,
    pub target: f64,
}

/// One gradient step on a replay batch. Returns the pre-update loss and the
/// targets that were regressed on. `target` is never modified.
pub fn train_step(
    online: &mut QNetwork,
    target: &QNetwork,
    batch: &[&Transition],
    config: &TrainConfig,
    optimizer: &mut Optimizer,
) -> Result<(f64, Vec<TargetRecord>)> {
    if batch.is_empty() {
        return Err(Error::Model("empty training batch".into()));
    }
    let regular_q = config.variant.regular_q;
    let records: Vec<TargetRecord> = batch
        .iter()
        .map(|t| TargetRecord {
            terminal: t.terminal,
            reward: t.reward,
            target: td_target(t, online, target, config.gamma, regular_q),
        })
        .collect();
    let samples: Vec<Sample> = batch
        .iter()
        .zip(&records)
        .map(|(t, r)| Sample {
            state: t.state,
            action: t.action,
            target: r.target,
        })
        .collect();
    let (loss, grads) = online.loss_and_gradient(&samples);
    optimizer.step(online, &grads);
    Ok((loss, records))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub epoch: usize,
    pub env: usize,
    pub rewards: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnRecord {
    /// Global step (1-based) after which learning ran.
    pub step: usize,
    pub memory_len: usize,
    pub loss: f64,
    pub targets: Vec<TargetRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionRecord {
    pub step: usize,
    pub explored: bool,
    /// Position in the remaining candidate list at selection time.
    pub index: usize,
    pub test: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvictionRecord {
    pub step: usize,
    pub evicted: u64,
    pub inserted: u64,
}

/// Everything the training loop did, for inspection in tests.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub episodes: Vec<EpisodeRecord>,
    pub selections: Vec<SelectionRecord>,
    pub learn_steps: Vec<LearnRecord>,
    pub syncs: Vec<usize>,
    pub evictions: Vec<EvictionRecord>,
    /// Replay memory length after each global step.
    pub memory_lens: Vec<usize>,
}

/// A selection episode seen by the learner. Candidates are kept in a list;
/// taking one removes it and yields a reward.
pub trait Environment {
    /// Starts a fresh episode.
    fn reset(&mut self) -> Result<()>;

    /// Normalized features of the current suite.
    fn state(&self) -> [f64; STATE_DIM];

    /// Normalized action features of the remaining candidates, in list order.
    fn actions(&self) -> Vec<[f64; ACTION_DIM]>;

    /// Takes the candidate at `index`; returns its test id and the reward.
    fn step(&mut self, index: usize) -> Result<(usize, f64)>;
}

/// The failing test an episode starts from and the candidate pool: every
/// other test that is not failing.
pub fn episode_setup(dataset: &Dataset) -> Result<(usize, Vec<usize>)> {
    let root = dataset
        .initial_failing()
        .first()
        .copied()
        .or_else(|| dataset.failing_tests().next())
        .ok_or(Error::NoFailingTest)?;
    let pool = (0..dataset.num_tests())
        .filter(|&t| t != root && dataset.outcome(t) != Outcome::Fail)
        .collect();
    Ok((root, pool))
}

/// Localization environment over one labeled fault: reward is the relative
/// improvement of the best buggy rank over the episode's initial rank.
pub struct FaultEnv<'a> {
    dataset: &'a Dataset,
    root: usize,
    policy: ScopePolicy,
    divisor: f64,
    buggy: Vec<usize>,
    ctx: SuiteContext<'a>,
    pool: Vec<usize>,
    init_rank: usize,
}

impl<'a> FaultEnv<'a> {
    pub fn new(dataset: &'a Dataset, steps: usize, policy: ScopePolicy) -> Result<Self> {
        let (root, pool) = episode_setup(dataset)?;
        let ctx = SuiteContext::new(dataset, root, policy)?;
        let buggy = dataset.buggy_methods();
        let mut env = FaultEnv {
            dataset,
            root,
            policy,
            divisor: (steps + 1) as f64,
            buggy,
            ctx,
            pool,
            init_rank: 0,
        };
        env.reset()?;
        Ok(env)
    }

    pub fn init_rank(&self) -> usize {
        self.init_rank
    }

    fn best_rank(&self) -> Result<usize> {
        let ranking = localize(self.dataset, &self.ctx.suite(), self.ctx.scope())?;
        best_buggy_rank(&ranking, &self.buggy)
    }
}

impl Environment for FaultEnv<'_> {
    fn reset(&mut self) -> Result<()> {
        self.ctx = SuiteContext::new(self.dataset, self.root, self.policy)?;
        self.pool = episode_setup(self.dataset)?.1;
        self.init_rank = self.best_rank()?;
        Ok(())
    }

    fn state(&self) -> [f64; STATE_DIM] {
        normalize_state(&self.ctx, self.divisor)
    }

    fn actions(&self) -> Vec<[f64; ACTION_DIM]> {
        self.pool
            .iter()
            .map(|&t| normalize_action(&self.ctx, self.dataset.coverage(t)))
            .collect()
    }

    fn step(&mut self, index: usize) -> Result<(usize, f64)> {
        let test = self.pool.remove(index);
        self.ctx.add(test)?;
        Ok((test, reward(self.init_rank, self.best_rank()?)))
    }
}

fn check_dataset(index: usize, dataset: &Dataset, steps: usize) -> Result<()> {
    let fail = |msg: String| Error::InvalidDataset(format!("training dataset {index}: {msg}"));
    let (_, pool) = episode_setup(dataset).map_err(|e| fail(e.to_string()))?;
    if pool.len() < steps + 1 {
        return Err(fail(format!(
            "{} candidate tests, need at least {}",
            pool.len(),
            steps + 1
        )));
    }
    if dataset.faults().is_empty() {
        return Err(fail("no faults".into()));
    }
    Ok(())
}

fn fault_envs<'a>(datasets: &'a [Dataset], config: &TrainConfig) -> Result<Vec<FaultEnv<'a>>> {
    if datasets.is_empty() {
        return Err(Error::InvalidDataset("no training datasets".into()));
    }
    datasets
        .iter()
        .enumerate()
        .map(|(i, d)| {
            check_dataset(i, d, config.steps)?;
            FaultEnv::new(d, config.steps, config.scope).map_err(|e| Error::Fault {
                index: i,
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn train(datasets: &[Dataset], config: &TrainConfig) -> Result<QModel> {
    let mut envs = fault_envs(datasets, config)?;
    train_envs(&mut envs, config, None)
}

pub fn train_with_trace(
    datasets: &[Dataset],
    config: &TrainConfig,
) -> Result<(QModel, TrainTrace)> {
    let mut envs = fault_envs(datasets, config)?;
    let mut trace = TrainTrace::default();
    let model = train_envs(&mut envs, config, Some(&mut trace))?;
    Ok((model, trace))
}

/// Runs `epochs` rounds of one episode per environment, in order.
pub fn train_envs<E: Environment>(
    envs: &mut [E],
    config: &TrainConfig,
    mut trace: Option<&mut TrainTrace>,
) -> Result<QModel> {
    let mut trainer = Trainer::new(config)?;
    if envs.is_empty() {
        return Err(Error::InvalidDataset("no training environments".into()));
    }
    for epoch in 0..config.epochs {
        for (i, env) in envs.iter_mut().enumerate() {
            let rewards = trainer.episode(env, trace.as_deref_mut())?;
            if let Some(t) = trace.as_deref_mut() {
                t.episodes.push(EpisodeRecord {
                    epoch,
                    env: i,
                    rewards,
                });
            }
        }
    }
    QModel::new(trainer.online, config.clone())
}

struct Trainer<'c> {
    config: &'c TrainConfig,
    online: QNetwork,
    target: QNetwork,
    memory: ReplayMemory,
    optimizer: Optimizer,
    explore_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    step: usize,
}

impl<'c> Trainer<'c> {
    fn new(config: &'c TrainConfig) -> Result<Self> {
        config.validate()?;
        let online = init_network(config);
        let target = online.clone();
        let optimizer = Optimizer::new(config.optimizer, config.learning_rate, online.num_params());
        Ok(Trainer {
            config,
            target,
            memory: ReplayMemory::new(config.capacity),
            optimizer,
            explore_rng: rng_stream(config.seed, STREAM_EXPLORE),
            replay_rng: rng_stream(config.seed, STREAM_REPLAY),
            online,
            step: 0,
        })
    }

    fn episode<E: Environment>(
        &mut self,
        env: &mut E,
        mut trace: Option<&mut TrainTrace>,
    ) -> Result<Vec<f64>> {
        let cfg = self.config;
        env.reset()?;
        let mut state = env.state();
        let mut actions = env.actions();
        let mut rewards = Vec::with_capacity(cfg.steps);
        for k in 0..cfg.steps {
            if actions.is_empty() {
                break;
            }
            let explored = self.explore_rng.gen::<f64>() < cfg.sigma;
            let index = if explored {
                self.explore_rng.gen_range(0..actions.len())
            } else {
                greedy_index(&self.online, &state, &actions)
            };
            let action = actions[index];
            let (test, r) = env.step(index)?;
            rewards.push(r);

            let next_state = env.state();
            let next_actions = env.actions();
            let terminal = k + 1 == cfg.steps || next_actions.is_empty();
            let evicted = self.memory.push(Transition {
                state,
                action,
                reward: r,
                next_state,
                next_actions: next_actions.clone(),
                terminal,
            });
            self.step += 1;
            if let Some(t) = trace.as_deref_mut() {
                t.selections.push(SelectionRecord {
                    step: self.step,
                    explored,
                    index,
                    test,
                });
                if let Some(evicted) = evicted {
                    t.evictions.push(EvictionRecord {
                        step: self.step,
                        evicted,
                        inserted: self.memory.serials().last().expect("non-empty"),
                    });
                }
                t.memory_lens.push(self.memory.len());
            }
            self.maybe_learn(trace.as_deref_mut())?;
            if self.step.is_multiple_of(cfg.sync_period) {
                self.target = self.online.clone();
                if let Some(t) = trace.as_deref_mut() {
                    t.syncs.push(self.step);
                }
            }
            state = next_state;
            actions = next_actions;
        }
        Ok(rewards)
    }

    fn maybe_learn(&mut self, trace: Option<&mut TrainTrace>) -> Result<()> {
        if !self.memory.is_full() || !self.step.is_multiple_of(self.config.learn_period) {
            return Ok(());
        }
        let batch = self
            .memory
            .sample(&mut self.replay_rng, self.config.batch_size);
        let (loss, targets) = train_step(
            &mut self.online,
            &self.target,
            &batch,
            self.config,
            &mut self.optimizer,
        )?;
        if !loss.is_finite() || !self.online.all_finite() {
            return Err(Error::Diverged(self.step));
        }
        if let Some(t) = trace {
            t.learn_steps.push(LearnRecord {
                step: self.step,
                memory_len: self.memory.len(),
                loss,
                targets,
            });
        }
        Ok(())
    }
}

/// Index of the highest-valued action; ties go to the earliest, which is the
/// lowest test id since candidate lists stay in ascending id order.
pub fn greedy_index(
    net: &QNetwork,
    state: &[f64; STATE_DIM],
    actions: &[[f64; ACTION_DIM]],
) -> usize {
    let embedded = net.embed_state(state);
    let mut best = 0;
    let mut best_q = f64::NEG_INFINITY;
    for (i, a) in actions.iter().enumerate() {
        let q = net.head(&embedded, a);
        if q > best_q {
            best_q = q;
            best = i;
        }
    }
    best
}
