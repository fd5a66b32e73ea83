//! Ball Banach function-space norms, maximal operators, Muckenhoupt weights
//! and nonlocal Sobolev functionals evaluated on uniform grids.

pub mod domain;
pub mod functionals;
pub mod error;
pub mod grid;
pub mod harness;
pub mod quad;
pub mod reduce;
pub mod spaces;
pub mod spec_text;
pub(crate) mod stencil;
pub mod weights;

pub use domain::{mask, zero_extend, DomainMask, DomainSpec, EpsilonCertificate};
pub use error::{Error, Result};
pub use grid::{gradient_fd, truncate, Grid, SampledField, TestFunctionSpec};
