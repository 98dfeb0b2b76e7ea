//! Age-of-information oriented slotted random access: analytic expressions,
//! an exact small-network oracle, a slot-accurate simulator with collision,
//! capture and misdetection channels, the frame codec of the prototype's
//! synchronised slot structure, and an experiment harness.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod age;
pub mod channel;
pub mod codec;
pub mod engine;
pub mod harness;
pub mod protocols;
mod real;

pub use age::{
    average_aoi, network_average_aoi, step_age, Age, AoiError, AoiTrace, DeviceId, SlotIndex,
};
pub use channel::{
    resolve_slot, ChannelModel, ChannelOutcome, ChannelParams, OutcomeCause, TransmissionAttempt,
};
pub use codec::{decode, encode, CodecError, Frame};
pub use engine::{
    run, run_summary, run_with_drift, ConfigError, NetworkConfig, RunOutput, RunSummary,
};
pub use harness::{
    emit_csv, run_experiment, run_experiment_e1, run_experiment_e2, run_experiment_e3,
    ExperimentConfig, ExperimentId, ExperimentReport, HarnessError, ReportRow,
};
pub use protocols::{
    adra_average_aoi, adra_optimize_cap, adra_success_probability, aira_average_aoi,
    aira_optimal_cap, exact_average_aoi_markov, AdraPolicy, AiraPolicy, AnalyticError,
    AnalyticParams, Policy,
};
pub use real::Real;

pub type Policy64 = Policy<f64>;
pub type Policy32 = Policy<f32>;
pub type ChannelParams64 = ChannelParams<f64>;
pub type ChannelParams32 = ChannelParams<f32>;
pub type NetworkConfig64 = NetworkConfig<f64>;
pub type NetworkConfig32 = NetworkConfig<f32>;
pub type AnalyticParams64 = AnalyticParams<f64>;
pub type TransmissionAttempt64 = TransmissionAttempt<f64>;
