//! Joint training of a cohort of graph models.
//!
//! Each member minimizes cross-entropy on the training rows plus, depending
//! on the [`Variant`], the mean KL divergence from every peer's prediction to
//! its own, an adaptive class weighting of the compared distributions with an
//! L1 penalty on the weighting unit, and a confidence term on its entropy.
//! Peer predictions are snapshots and never receive gradient.

mod adam;
mod config;
mod distill;
mod loss;
mod train;
mod weighting;

pub use adam::Adam;
pub use config::{CohortConfig, Hyper, MemberConfig, PenaltySign, Variant};
pub use distill::{distill, distill_loss, teacher_targets, DistillConfig, DistillOutcome};
pub use loss::{member_probs, mutual_loss, LossTerms, LossWeights};
pub use train::{accuracy, mean_entropy, train_cohort, EpochRecord, MemberReport, TrainData, TrainOptions, TrainOutcome, TrainReport};
pub use weighting::{adaptive_weights, apply_weighting, AdaptiveWeightUnit, UnitVars};
