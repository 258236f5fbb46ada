//! Multivariate Liouville distributions and operator regular variation.
//!
//! The crate is `no_std` + `alloc`. Float transcendental functions come from
//! `libm`; randomness from `rand_chacha`.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod driving;
pub mod error;
pub mod liouville;
pub mod operator_scaling;
pub mod quadrature;
pub mod regvar;
pub mod special;

pub use error::{Error, Result};
