//! Confidence distributions, confidence regions, flat-prior credibility
//! regions and implied priors for zero-mean autoregressive models.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ar;
pub mod bayes;
pub mod cd;
pub mod contour;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod implied_prior;
pub mod io;
pub mod methods;
mod par;
pub mod region;
pub mod rng;
pub mod special;
pub mod wald;

pub use error::{ArcdError, Result};
