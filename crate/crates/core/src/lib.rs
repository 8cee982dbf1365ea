//! Opportunistic spectrum access with coordinated, collaborative UCB1
//! learners.
//!
//! Secondary users sense primary channels through imperfect detectors,
//! learn channel quality with UCB1 indices, share what they observe and are
//! spread over channels by a fairness-rotated Hungarian solver or by a
//! Round-Robin rotation. The [`harness`] module turns this into seeded,
//! averaged experiments with CSV output.
//!
//! The numeric core is generic: assignment runs over any [`scalar::Weight`]
//! (`f32`, `f64`, `Ratio<i64>`) and learning over any [`scalar::Real`]. The
//! aliases below fix the scalar to `f64`, which is what the harness uses.

pub mod assignment;
pub mod bandit;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod policy;
pub mod primary;
pub mod scalar;
pub mod sensing;
pub mod streams;

pub use error::{Error, Result};
pub use scalar::{Real, Weight};

pub type WeightMatrix = assignment::WeightMatrix<f64>;
pub type Assignment = assignment::Assignment<f64>;
pub type UcbState = bandit::UcbState<f64>;
pub type IndexMatrix = bandit::IndexMatrix<f64>;
pub type PrimaryNetwork = primary::PrimaryNetwork<f64>;
pub type SensorProfile = sensing::SensorProfile<f64>;
pub type PolicyConfig = policy::PolicyConfig<f64>;
pub type SlotOutcome = policy::SlotOutcome<f64>;
pub type BoundParams = metrics::BoundParams<f64>;
pub type RegretTrace = metrics::RegretTrace<f64>;
