//! Online estimation of the first `n` derivatives of a sampled signal with the
//! discrete-time matching filtering differentiator, plus Euler-stepped baselines,
//! gain synthesis and stability analysis.

// NaN must fail validity checks, which `!(x < y)` expresses directly
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod differentiators;
pub mod error;
pub mod harness;
pub mod poly;
pub mod synthesis;

pub use differentiators::{Differentiator, DifferentiatorParams, FilterState, RootSpec, Variant};
pub use error::{Error, Result};
pub use poly::{RealPolynomial, RootSet};

pub use nalgebra;
pub use num_complex;
