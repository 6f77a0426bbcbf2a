//! Digital over-the-air computation of vector functions across a simulated
//! MIMO multiple-access channel.
//!
//! The crate is organised bottom-up:
//!
//! - [`field`] tabulates a target function over its finite input domain and
//!   derives the separation constraints that a constellation must satisfy.
//! - [`design`] turns those constraints into per-stream constellations, either
//!   exactly (non-orthogonal vector search) or robustly (semidefinite
//!   relaxation with randomized rounding), and assembles encoders/decoders.
//! - [`closed_form`] provides analytic PAM (affine) and QAM (convolution) codecs.
//! - [`channel`] samples fading channels and random beamformers and forms the
//!   receiver combiner.
//! - [`bounds`] evaluates receive-antenna lower bounds and runs empirical
//!   concentration checks.
//! - [`sim`] drives seeded Monte Carlo experiments and sweeps.
//! - [`config`] parses the flat key-value configuration format used by the CLI.
//!
//! Channel simulation is generic over the real scalar type (see [`Real`]);
//! constellation design always runs in `f64`.

// `!(x > 0.0)` checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod closed_form;
pub mod config;
pub mod design;
pub mod error;
pub mod field;
pub mod rng;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Real;

pub use num_complex::Complex;

/// Complex sample type used by the design modules.
pub type C64 = Complex<f64>;

pub type ChannelRealization64 = channel::ChannelRealization<f64>;
pub type ChannelRealization32 = channel::ChannelRealization<f32>;
pub type BeamformerSet64 = channel::BeamformerSet<f64>;
pub type BeamformerSet32 = channel::BeamformerSet<f32>;
pub type ReceivedSignal64 = channel::ReceivedSignal<f64>;
pub type ReceivedSignal32 = channel::ReceivedSignal<f32>;
