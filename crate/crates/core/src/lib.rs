//! Binary multiplicative attribute graphs: exact sampling, isolated-node
//! moments, and the zero-one laws for the absence of isolated nodes.

pub mod asymptotics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod moments;
pub mod numerics;
pub mod output;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use model::{AffinityMatrix, AttributePmf, AttributeVector, MagParams};
