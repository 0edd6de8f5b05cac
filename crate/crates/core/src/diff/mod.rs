//! Exact differentiation.
//!
//! * [`DualJet2`] carries a value with its first and second derivative along
//!   one tagged input (forward mode).
//! * [`Tape`] / [`Var`] record a scalar computation and replay it backwards
//!   (reverse mode).
//!
//! Both implement [`Scalar`], the closed primitive set the network and loss
//! code is written against: `+ − × ÷`, integer/real powers, `exp` and
//! `tanh`, plus scaling by plain reals. Nesting them, `DualJet2<Var>`, gives
//! forward-over-reverse: spatial second derivatives recorded on the tape.

mod jet;
mod tape;

use core::ops::{Add, Div, Mul, Neg, Sub};

pub use jet::DualJet2;
pub use tape::{grad, Gradients, Tape, Var};

use crate::error::{Error, Result};
use crate::network::Network;

/// Arithmetic closed over the supported primitives.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A constant in the same context as `self` (same tape for [`Var`]).
    fn constant_like(&self, c: f64) -> Self;
    /// The plain-real value.
    fn primal(&self) -> f64;
    fn scale(self, c: f64) -> Self;
    fn add_const(self, c: f64) -> Self;
    fn exp(self) -> Self;
    fn tanh(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, p: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    #[inline]
    fn primal(&self) -> f64 {
        *self
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }
    #[inline]
    fn add_const(self, c: f64) -> Self {
        self + c
    }
    #[inline]
    fn exp(self) -> Self {
        libm::exp(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        libm::tanh(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        libm::pow(self, n as f64)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        libm::pow(self, p)
    }
}

/// Network output with its first and second derivative along `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialDerivatives {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `u_NN`, `∂u/∂x_axis` and `∂²u/∂x_axis²` at `point`, exact to roundoff.
pub fn second_spatial(network: &Network, point: &[f64], axis: usize) -> Result<SpatialDerivatives> {
    let dim = network.config().input_dim;
    if point.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: point.len() });
    }
    if axis >= dim {
        return Err(Error::invalid(alloc::format!("axis {axis} out of range for input dimension {dim}")));
    }
    let jet = network.forward_jet(point, axis)?;
    Ok(SpatialDerivatives { value: jet.value, d1: jet.d1, d2: jet.d2 })
}
