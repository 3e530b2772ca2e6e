//! Simulation-based inference for partially observed Markov process (POMP)
//! models by accelerated iterated filtering.
//!
//! A bootstrap particle filter run on a model with randomly perturbed
//! parameters yields filter means whose displacement estimates the score.
//! The accelerated inexact gradient method in [`aig`] turns those noisy,
//! biased scores into a maximum-likelihood search ([`estimators`]).

pub mod aig;
pub mod csvio;
pub mod data;
pub mod error;
pub mod harness;
pub mod estimators;
pub mod model;
pub mod models;
pub mod params;
pub mod rng;
pub mod smc;

pub use data::{Covariates, TimeSeriesData};
pub use error::{Error, Result};
pub use model::{validate_model, PompModel, ValidationReport};
pub use params::{inverse_transform_params, transform_params, ParamTransform, ParameterVector, Transform};
pub use rng::{RngStream, StreamRng};
