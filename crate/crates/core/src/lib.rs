//! Bayesian cross-validation of geostatistical models under split
//! uncertainty: spatial likelihoods, adaptive MCMC, MC and SIR estimators of
//! expected predictive discrepancy, stratified variants, and scenario
//! simulators.
//!
//! All numerical code is generic over the scalar type through [`Scalar`]
//! (implemented for `f32` and `f64`); the `*64`/`*32` aliases below pin
//! concrete precisions.

pub mod discrepancy;
pub mod error;
pub mod estimators;
pub mod geodata;
pub mod mcmc;
pub mod models;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod scenarios;
pub mod special;
pub mod splits;

pub use discrepancy::DiscrepancyKind;
pub use error::{Error, Result};
pub use models::ModelKind;
pub use rng::derive_rng;
pub use scalar::Scalar;
pub use splits::{SplitBatch, SplitVector, StratifiedDesign};

pub type Location64 = geodata::Location<f64>;
pub type GeoDataset64 = geodata::GeoDataset<f64>;
pub type ModelParams64 = models::ModelParams<f64>;
pub type PriorConfig64 = mcmc::PriorConfig<f64>;
pub type ChainConfig64 = mcmc::ChainConfig<f64>;
pub type EstimatorOutput64 = estimators::EstimatorOutput<f64>;
pub type ScenarioConfig64 = scenarios::ScenarioConfig<f64>;
pub type FieldGrid64 = scenarios::FieldGrid<f64>;

pub type Location32 = geodata::Location<f32>;
pub type GeoDataset32 = geodata::GeoDataset<f32>;
pub type ModelParams32 = models::ModelParams<f32>;
pub type PriorConfig32 = mcmc::PriorConfig<f32>;
pub type ChainConfig32 = mcmc::ChainConfig<f32>;
pub type EstimatorOutput32 = estimators::EstimatorOutput<f32>;
pub type ScenarioConfig32 = scenarios::ScenarioConfig<f32>;
pub type FieldGrid32 = scenarios::FieldGrid<f32>;
