//! Warped time-frequency analysis: warping maps, induced frequency coverings,
//! partitions of unity, the warped voice transform, decomposition norms and
//! embedding decisions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bapu;
pub mod bump;
pub mod catalog;
pub mod covering;
pub mod decomp_norms;
pub mod embeddings;
pub mod error;
pub mod exponent;
pub mod fftnd;
pub mod numdiff;
pub mod quadrature;
pub mod radial_warping;
pub mod transform;
pub mod warping_core;

pub use error::{Error, Result};
pub use radial_warping::{Family, RadialComponent, SlowStartParams, WeaklyAdmissibleComponent};
pub use warping_core::{AssociatedWeight, CheckReport, ControlWeight, Domain, PhiTauMatrix, WarpingMap};
