//! Using a metric: greedy test selection, evaluation sweeps over many
//! faults, and simulated metric-guided test generation.

pub mod evaluate;
pub mod generate;
pub mod select;

pub use evaluate::{evaluate, mean_rewards, metric_traces, EvalReport, EvalRow};
pub use generate::{ga_generate, label_generated, GenConfig, GenResult};
pub use select::{select, SelectionStep, SelectionTrace};
