//! The learned FDC metric: a small Q network trained with double
//! Q-learning and experience replay to value candidate tests.

pub mod config;
pub mod model;
pub mod network;
pub mod optim;
pub mod replay;
pub mod trainer;

pub use config::{OptimizerKind, TrainConfig, Variant};
pub use model::{normalize_action, normalize_state, ModelDocument, QModel, MODEL_VERSION};
pub use network::{QNetwork, Sample};
pub use replay::{ReplayMemory, Transition};
pub use trainer::{
    init_model, td_target, train, train_envs, train_step, train_with_trace, Environment, FaultEnv,
    TrainTrace,
};
