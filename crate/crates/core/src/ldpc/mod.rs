//! LDPC machinery: edge-perspective degree distributions (with the shipped
//! optimized presets), socket-permutation code construction, sum-product APP
//! decoding, the measured decoder transfer curve, and the curve-matching
//! verifier.

mod code;
mod curve;
mod decoder;
mod degree;

pub use code::LdpcCode;
pub use curve::{
    check_matching, default_rho_grid, matching_threshold_db, trace_decoder_curve, CurveConfig,
    CurvePoint, DecoderCurve, MatchingReport,
};
pub use decoder::{decode, DecodeOutput, SumProductDecoder};
pub use degree::DegreeDistribution;
