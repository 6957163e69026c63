//! Exact evaluation primitives: ranking, calibration and information
//! quantities on finite distributions.

mod auroc;
mod calibration;
mod info;

pub use auroc::{auroc, auroc_counts, AucCounts};
pub use calibration::{bin_index, ece, min_max_normalize, reliability_bins, ReliabilityBin, ReliabilityReport, DEFAULT_BINS};
pub use info::{
    binary_entropy, kl_divergence, lemma1_check, mutual_information, mutual_information_kl, pinsker_check,
    prop1_bound, tv_distance, BoundCheck, DiscreteJoint, FiniteDist,
};
