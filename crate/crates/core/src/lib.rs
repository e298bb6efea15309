//! SNR distribution of a one-dimensional continuous aperture array (CAPA)
//! under spatially correlated Rayleigh fading.
//!
//! The channel along the aperture is expanded in a cosine basis; the
//! diagonal of the kernel in that basis gives approximate Karhunen–Loève
//! eigenvalues, and the matched-filter SNR is modelled as a weighted sum of
//! exponentials plus a gamma-distributed correction for the truncated tail.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod kleigen;
mod linalg;
pub mod montecarlo;
pub mod quad;
pub mod snrdist;
pub mod specfun;

pub use error::{Error, Result};
pub use kernels::{make_config, CorrelationKernel, KernelKind, Moments, SystemConfig};
