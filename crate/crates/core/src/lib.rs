//! Random linear packet coding over lossy packet networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`gf`]: GF(2^m) arithmetic and dense linear algebra.
//! - [`codec`]: node memories, random linear encoding, decoding at sinks.
//! - [`netmodel`]: wireline graphs and wireless hypergraphs with injection and
//!   loss processes, and the average reception rates they induce.
//! - [`capacity`]: cut values, max-flow, hypergraph flows via a small LP,
//!   cycle removal and path decomposition.
//! - [`sim`]: a discrete-event simulator of the coding scheme with optional
//!   innovative-packet tracking.
//! - [`analysis`]: fluid queue predictions, error exponents, Poisson tail
//!   bounds and empirical exponent fits.
//!
//! Rate-valued code in [`capacity`] and [`analysis`] is generic over the
//! scalar type (any [`Real`]); the `*64` aliases below fix it to `f64`, which
//! is what the simulator and the CLI use.

// Range checks are written `!(x >= 0.0)` so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod capacity;
pub mod codec;
pub mod error;
pub mod gf;
pub mod netmodel;
pub mod sim;

pub use error::{Error, Result};

use num_traits::{Float, FromPrimitive};

/// Scalar type for rates, flows and probabilities.
pub trait Real:
    Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + std::iter::Sum + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + std::fmt::Debug
        + std::fmt::Display
        + std::iter::Sum
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into `T`.
#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in scalar type")
}

/// Absolute feasibility tolerance: 1e-9 for `f64`, widened to a few ulps
/// for narrower types.
#[inline]
pub fn tolerance<T: Real>() -> T {
    lit::<T>(1e-9).max(T::epsilon() * lit(64.0))
}

pub type RateGraph64 = capacity::RateGraph<f64>;
pub type RateHypergraph64 = capacity::RateHypergraph<f64>;
pub type Cut64 = capacity::Cut<f64>;
pub type FlowSolution64 = capacity::FlowSolution<f64>;
pub type HyperFlow64 = capacity::HyperFlow<f64>;
pub type PathDecomposition64 = capacity::PathDecomposition<f64>;
pub type ExponentCurve64 = analysis::ExponentCurve<f64>;
pub type FluidPrediction64 = analysis::FluidPrediction<f64>;
