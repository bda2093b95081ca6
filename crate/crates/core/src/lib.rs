//! Postselected polarization entanglement of photon pairs emitted by two
//! distant three-level (Lambda) sources, modelled with the quantum-jump
//! approach.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod efficiency;
pub mod error;
pub mod geometry;
pub mod io;
pub mod jump;
pub mod measures;
pub mod montecarlo;
pub mod postselection;
pub mod quadrature;
pub mod sources;
pub mod stats;

pub use error::{Error, Result};
