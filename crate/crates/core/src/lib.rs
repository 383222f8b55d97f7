//! Pool-based active learning simulator.
//!
//! Generates noisy synthetic binary-classification pools, runs the query
//! loop under random, uncertainty and shifted-normal selection, and measures
//! model quality against labeling cost when positive labels are more
//! expensive than negative ones.

pub mod datagen;
pub mod error;
pub mod format;
pub mod glm;
pub mod metrics;
pub mod simulation;
pub mod special;
pub mod strategies;

pub use datagen::{DataPool, DatasetConfig, Instance, InstanceId, Label, PoolRole, Pools};
pub use error::{Error, Result};
pub use glm::{GlmHyperparams, GlmModel};
pub use metrics::{CiSummary, CostModel, MetricSample, PerformanceMeasure};
pub use simulation::{ExperimentSummary, QueryAggregate, QuerySnapshot, RoundResult, SimulationConfig};
pub use strategies::{BetaParams, QueryStrategy, ScoredCandidate};
