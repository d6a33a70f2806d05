//! Tube-based safe voltage control for meshed AC microgrids with constant
//! power loads.
//!
//! The crate models a network of grid-forming inverters in a rotating d-q
//! frame, designs the gains of a two-part controller (a nominal saturating PI
//! loop plus error feedback), certifies the resulting voltage tube
//! numerically and simulates the closed loop.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod netmodel;
pub mod output;
pub mod sim;

pub use error::{Error, Result};
