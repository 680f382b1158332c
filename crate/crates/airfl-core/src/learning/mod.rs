//! Federated training: models, losses, synthetic tasks, local SGD, the
//! FedAvg loop with pluggable aggregation, heterogeneity profiles, and
//! convergence-bound evaluators.

pub mod bounds;
mod hetero;
mod losses;
mod model;
mod sgd;
mod task;
mod training;

pub use bounds::{
    compensated_channel_moments, eval_convergence_bound, least_squares_optimum,
    measure_gradient_variance, measure_smoothness, BoundConstants, BoundValue, PerRound,
};
pub use hetero::{assign_heterogeneous_batches, HeterogeneityProfile};
pub use losses::LossKind;
pub use model::ModelVector;
pub use sgd::local_sgd;
pub use task::{generate_synthetic_task, DeviceData, FederatedTask};
pub use training::{
    ideal_orthogonal_aggregate, repetition_initial_model, run_federated_training,
    run_federated_training_resilient, LrSchedule, RoundLog, TrainingConfig, TrainingOutput,
    WirelessConfig,
};
