//! Truth-anchored calibration for uncertainty scores.
//!
//! Raw uncertainty proxies (entropy, sequence probability, consistency
//! scores and so on) are mapped to correctness probabilities by a small
//! learned network, evaluated with exact ECE and AUROC, and the
//! information-theoretic limits on what any proxy can achieve are checked
//! numerically on finite distributions.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix them to `f64`, which is what the file
//! formats and the CLI use.

// Negated comparisons are used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ingest;
pub mod mapper;
pub mod metrics;
pub mod model;
pub mod proxy_lab;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod split;
pub mod supervision;
pub mod synth;

pub use error::{Error, Result};
pub use model::{correctness_prior, extract_score_column, Direction, LabeledDataset, Orientation, ScoreRecord};
pub use scalar::Scalar;

pub type ReliabilityReport = metrics::ReliabilityReport<f64>;
pub type DiscreteJoint = metrics::DiscreteJoint<f64>;
pub type Mapper = mapper::MapperParams<f64>;
pub type MapperDocument = mapper::MapperDocument<f64>;
pub type TrainHistory = mapper::TrainHistory<f64>;
pub type World = proxy_lab::TwoResponseWorld<f64>;
pub type Prop2Row = proxy_lab::Prop2Row<f64>;
