//! Green's functions, exact field samplers and the harmonic decomposition.

mod domain;
pub mod dst;
pub mod dump;
mod green;
mod harmonic;
pub mod rng;
mod sample;
pub mod solve;
pub mod stats;

pub use domain::Domain;
pub use green::{greens_matrix, GreensMatrix};
pub use harmonic::{harmonic_extension, markov_decompose, HarmonicField};
pub use sample::{
    sample_dense, sample_spectral, spectral_covariance, DenseSampler, FieldSample, SamplerKind, SpectralSampler,
    DENSE_LIMIT,
};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum DgffError {
    #[error("domain has no interior vertex")]
    NoInterior,
    #[error("domain is empty")]
    EmptyDomain,
    #[error("interior has {0} vertices, above the dense limit of {DENSE_LIMIT}; use the spectral sampler")]
    TooLarge(usize),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("domain is not a rectangle")]
    NotRectangular,
    #[error("subdomain is not contained in the sampled domain: {0}")]
    NotContained(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("iterative solve did not converge: residual {0:e}")]
    NoConvergence(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("field dump: {0}")]
    Dump(String),
}
