//! k-means in one and several dimensions: population updates on 1-D
//! Gaussian mixtures and certificates for their stable regions, Lloyd's
//! algorithm on samples, seeding schemes, and stability protocols.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gmm1d;
pub mod init;
pub mod kmeans;
pub mod model;
pub mod points;
pub mod population;
pub mod region;
pub mod stability;

pub use error::{Error, Result};
pub use gmm1d::{GaussianMixture1D, Interval};
pub use init::{InitScheme, PrunedDiagnostics};
pub use kmeans::{Assignment, RunResult};
pub use model::ModelSpec;
pub use points::{CenterVector, Dataset};
pub use population::FixedPoint;
pub use region::{Certificate, CertificateMode, InitParams, RegionSpec};
pub use stability::{ProtocolMode, ProtocolSpec, StabilityReport};
