//! Deterministic simulator and library for over-the-air federated learning.
//!
//! Model aggregation in federated learning can be carried out directly over a
//! multiple-access fading channel: all devices transmit simultaneously and the
//! server reads the superposed signal. This crate implements five aggregation
//! schemes built on that idea behind a common interface, together with the
//! solvers they need, a FedAvg training loop with synthetic non-i.i.d. tasks,
//! and a reproducible experiment harness.
//!
//! The schemes, grouped by what each design leans on:
//!
//! * power control at the devices — [`schemes::local_csit_aggregate`]
//!   (truncated channel inversion) and [`schemes::global_csit_aggregate`]
//!   (centralized equalizer + device selection);
//! * equalization at the server — [`schemes::fully_blind_aggregate`]
//!   (massive-antenna averaging) and [`schemes::partial_phase_blind_aggregate`]
//!   (quadrant phase compensation, no post-processing);
//! * aggregation weights — [`schemes::wafel_aggregate`] (adaptive weighted
//!   aggregation with an MMSE equalizer).
//!
//! Everything is driven by value-type RNG streams ([`numerics::RngStream`]),
//! so a full experiment is reproducible from `(seed, config)` alone and all
//! schemes inside one repetition observe identical channel, noise, and data
//! draws.

pub mod channel;
pub mod error;
pub mod harness;
pub mod learning;
pub mod numerics;
pub mod optim;
pub mod schemes;

pub use channel::{ChannelModel, ChannelRealization, CsiView, NoiseConfig, RoundNoise};
pub use error::{Error, Result};
pub use learning::{
    FederatedTask, HeterogeneityProfile, LossKind, ModelVector, TrainingConfig, TrainingOutput,
};
pub use numerics::{ComplexVec, RngStream};
pub use optim::{SelectionResult, WeightProblem, WeightSolution, WeightVector};
pub use schemes::{AggregationInput, AggregationOutcome, Equalizer, SchemeConfig};
