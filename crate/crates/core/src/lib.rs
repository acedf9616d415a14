//! Receiver laboratory for orthogonal approximate message passing over large
//! unitarily invariant linear systems: Gram-Schmidt orthogonalized
//! estimators, state evolution, area-based capacity computation, and
//! LDPC-coded bit-error-rate experiments.

pub mod denoiser;
pub mod error;
pub mod experiments;
pub mod gs;
pub mod ldpc;
pub mod le;
pub mod linalg;
pub mod modem;
pub mod oamp;
pub mod quad;
pub mod rates;
pub mod se;
pub mod seeds;
pub mod spectrum;

pub use error::{Error, Result};
