//! Optimal spectrum and power allocation for Gaussian interference channels
//! when interference is treated as noise.
//!
//! The crate models a K-user interference channel over the unit band `[0, 1]`
//! as a list of flat sub-channels, and answers three questions about it:
//!
//! - **When is FDMA exactly optimal?** [`fdma`] implements the pairwise
//!   strong-interference test (normalized cross gains at least 1/2 in both
//!   directions on every sub-channel) together with the power-invariant flat
//!   FDMA reallocation it is built on.
//! - **What is the optimum for two symmetric users?** [`symmetric`] carries
//!   the closed-form sum-rate envelope: full-band sharing at low power, FDMA
//!   at high power, and the tangent mixture of the two in between, located by
//!   a one-dimensional tangency root solve.
//! - **What is the optimum in general?** [`envelope`] builds the concave hull
//!   of the per-sub-channel weighted sum-rate over a power grid, and
//!   [`optimizer`] maximizes the total rate over all hulls by an exact linear
//!   program whose basic solutions are the (at most K+1)-piece frequency
//!   splits of each sub-channel.
//!
//! [`oracle`] provides slow, independent brute-force references (exhaustive
//! search at finite resolution, dual bounds, randomized property sweeps) used
//! to validate the fast paths.
//!
//! The crate is `no_std`-compatible: disable default features and enable
//! `libm` to build without the standard library (an allocator is required).

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
// `!(x > 0.0)`-style guards deliberately reject NaN together with the
// out-of-range values; the un-negated comparisons clippy suggests would
// let NaN slip through validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// The numeric kernels walk several parallel arrays under one index;
// zipping them would hide the shared coordinate, so indexed loops stay.
#![allow(clippy::needless_range_loop)]

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("spectra-core needs either the `std` or the `libm` feature for elementary math");

extern crate alloc;

pub mod channel;
pub mod envelope;
pub mod fdma;
mod hull;
pub mod optimizer;
pub mod oracle;
mod roots;
mod simplex;
pub mod symmetric;

pub(crate) mod math;

pub use channel::{ChannelSpec, RateVector, RawChannelSpec, SpectrumAllocation};
pub use optimizer::OptimizationResult;
