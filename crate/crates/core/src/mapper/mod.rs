//! The truth-anchoring mapper: a small ReLU network from raw score(s) to a
//! correctness probability, trained on cross-entropy plus an optional
//! pairwise ranking term.

mod adam;
mod backprop;
mod config;
mod document;
mod loss;
mod network;
mod train;

pub use adam::{adam_step, AdamState};
pub use backprop::{gradients, Evaluation};
pub use config::MapperConfig;
pub use document::{MapperDocument, MapperInput, MAPPER_FORMAT_VERSION};
pub use loss::{bce_loss, bce_with_logits, objective_with_grad, rank_loss, sigmoid, softplus, total_loss, LogitObjective, RankLoss};
pub use network::{Dense, Gradients, MapperParams};
pub use train::{train, train_scalar, EpochStats, TrainHistory};
