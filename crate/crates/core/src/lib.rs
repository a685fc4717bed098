//! One-dimensional bi-fluid compressible flow: two-species transport with
//! artificial diffusion, Galerkin momentum, a Picard coupler and
//! energy/defect diagnostics.

pub mod config;
pub mod coupler;
pub mod diagnostics;
pub mod discretization;
pub mod eos;
pub mod error;
pub mod momentum;
pub mod output;
pub mod profile;
pub mod reference;
pub mod transport;

pub use error::{Error, Result};
