//! Fourier spectra of subsets of finite abelian groups, coherence-matrix
//! regularity, and the refinement procedures that shrink a set until its
//! spectrum has a small sumset.

// NaN must fail range checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherence;
pub mod diagnostics;
pub mod error;
pub mod fourier;
pub mod group;
pub mod io;
pub mod linalg;
pub mod par;
pub mod refine;
pub mod regularity;

pub use error::{Error, Result};
