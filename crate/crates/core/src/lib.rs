//! Bayesian linear regression with Normal, Student-t and Slash errors, fitted
//! as a finite mixture whose single indicator selects the error law.
//!
//! The sampler is a blocked Gibbs scheme with Metropolis steps for the
//! degrees of freedom. Model probabilities come straight from the indicator
//! draws, and the usual information criteria are computed from the stored
//! chain.

pub mod criteria;
pub mod data;
pub mod divergence;
pub mod error;
pub mod priors;
pub mod quadrature;
pub mod sampler;
pub mod sampling;
pub mod simstudies;
pub mod smn;
pub mod special;

pub mod cli;

pub use data::{CsvSpec, Dataset};
pub use error::{Error, Result};
pub use priors::{DirichletPrior, PcPrior, RegressionPrior};
pub use sampler::{ChainOutput, ChainState, MixtureConfig, SamplerConfig};
pub use smn::{ModelKind, SmnParams};
