//! Downlink NOMA through an intelligent reflecting surface: channel and rate
//! models, a DDPG agent that learns the surface phases, an exhaustive-search
//! oracle, and a Monte-Carlo experiment harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod ddpg;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod noma;
pub mod oracle;
pub mod par;

pub use channel::{sample_scenario, ChannelRealization};
pub use config::{SystemConfig, TrainConfig};
pub use ddpg::DdpgAgent;
pub use env::{IrsEnv, PhaseVector};
pub use error::{Error, Result};
pub use harness::{run_experiment, ExperimentKind, ExperimentSpec, ResultRow};
pub use noma::RateReport;
pub use oracle::{exhaustive_search, GridSpec, OracleResult};
pub use par::Execution;
