//! Fractional physics-informed neural networks.
//!
//! This crate holds the pure numerical core: discrete Caputo derivative
//! operators on uniform time grids, exact differentiation (second-order
//! forward jets and a reverse-mode tape), a small tanh MLP, the three
//! benchmark fractional equations, tensor-product collocation sets and the
//! Adam training loop that minimises the composite residual/IC/BC loss.
//!
//! It is `no_std` and only needs `alloc`. File formats, wall clocks and the
//! command-line front end live in the `fpinn` companion crate.
//!
//! Coordinates are always ordered with time last: `[t]`, `[x, t]` or
//! `[x, y, t]`.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod caputo;
pub mod collocation;
pub mod diff;
mod error;
pub mod network;
pub mod numerics;
pub mod problems;
pub mod trainer;

pub use caputo::{CaputoScheme, SchemeKind, TimeGrid};
pub use collocation::{CollocationSet, Face};
pub use error::{Error, Result};
pub use network::{Activation, Network, NetworkConfig};
pub use numerics::{error_metrics, gamma, ErrorMetrics};
pub use problems::{Field, Problem, ProblemKind};
pub use trainer::{train, LossParts, StopReason, TrainConfig, TrainReport};
