//! Ergodic uplink throughput of a single-antenna wireless-powered
//! communication network under Rayleigh block fading.
//!
//! The crate evaluates and optimizes two families of duplexing policies:
//!
//! * harvest-then-transmit (HTT), which splits every frame into a harvesting
//!   phase of fraction `tau` and a transmission phase of fraction `1 - tau`;
//! * probabilistic harvest-and-transmit (PHAT), which hands whole frames to
//!   either power transfer or information transfer depending on where the
//!   normalized channel power gain falls relative to one or two thresholds
//!   (the IP, PI and PIP schemes).
//!
//! Every closed-form evaluator has an independent quadrature route in
//! [`schemes::quad_throughput_oracle`] and a Monte-Carlo route in
//! [`sim::mc_throughput`].

// Range checks are written so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod numerics;
pub mod optimize;
pub mod schemes;
pub mod sim;

pub use error::{Error, Result};
