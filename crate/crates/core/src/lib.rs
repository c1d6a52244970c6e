//! Learned and classic fault-diagnosability metrics for test selection.
//!
//! A metric scores how much a candidate test would help spectrum-based fault
//! localization pinpoint the fault behind a failing test. This crate provides
//! the coverage features, the Ochiai localizer used as reward, the classic
//! metrics (EntBug, DDU, TfD, FDG), a Q-learning trained metric, greedy
//! selection and simulated generation harnesses, and a synthetic benchmark
//! generator.

pub mod cli;
pub mod coverage;
pub mod datagen;
pub mod dataset;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod rl;
pub mod sbfl;

pub use coverage::{ScopePolicy, SuiteContext};
pub use dataset::{load_dataset, load_dataset_file, Coverage, Dataset, Outcome};
pub use error::{Error, Result};
pub use metrics::{make_scorer, Scorer, ScorerKind, ScorerSpec};
pub use rl::{QModel, TrainConfig, Variant};
