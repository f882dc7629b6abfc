//! Sensing-assisted near-field wireless power transfer with visibility
//! regions: array geometry, channel model, echo simulation, VR
//! identification, localization, CRB-driven sensing duration, energy
//! beamforming and a Monte-Carlo harness.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamforming;
pub mod channel;
pub mod crb;
pub mod echo;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod localization;
pub mod vr;

pub use error::{Error, Result};
