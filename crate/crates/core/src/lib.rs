//! Rebound winner-takes-all central pattern generators.
//!
//! Conductance-based rebound neurons coupled by filtered sigmoid synapses
//! into half-center and ring oscillators, integrated with fixed-step RK4,
//! plus event detection, rhythm statistics and an adaptive frequency
//! controller.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod controller;
pub mod error;
pub mod events;
pub mod integrator;
pub mod network;
pub mod neuron;
pub mod scenario;
pub mod synapse;

pub use error::{Error, Result};
