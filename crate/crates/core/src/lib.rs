//! High-precision Lindstedt expansions of quasi-periodic invariant circles of
//! the dissipative standard map, with growth analysis of the coefficients.
//!
//! The pipeline: [`arith`] fixes precision and materializes quadratic
//! irrational frequencies; [`trigpoly`] provides exact Fourier-coefficient
//! algebra; [`lindstedt`] runs the order-by-order solver for the corrections
//! u_k and drifts c_k; [`gevrey`] turns the series into growth sequences,
//! fits, and oscillation reports; [`validate`] measures residuals of the
//! functional equation; [`store`] persists everything losslessly.

pub mod arith;
pub mod error;
pub mod gevrey;
pub mod lindstedt;
pub mod store;
pub mod trigpoly;
pub mod validate;

pub use arith::{Complex, Context, Frequency};
pub use error::{Error, Result};
pub use trigpoly::{Grid, NormConvention, TrigPoly};
