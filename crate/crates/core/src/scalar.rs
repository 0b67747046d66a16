//! Floating-point scalar abstraction shared by the state algebra and the decoder.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar: `f32` or `f64`.
///
/// The tolerance hooks let the same algebra run at either precision; the
/// `f64` values are the ones the invariants are stated in.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Elementwise slack for algebraic identities (hermiticity, trace, unitarity).
    fn algebra_tol() -> Self;
    /// Slack allowed below zero for the smallest eigenvalue of a density matrix.
    fn psd_tol() -> Self;
    /// Slack on `Tr(ρ²) = 1` when a state is required to be pure.
    fn purity_tol() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl Real for f64 {
    fn algebra_tol() -> Self {
        1e-12
    }
    fn psd_tol() -> Self {
        1e-10
    }
    fn purity_tol() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn algebra_tol() -> Self {
        1e-5
    }
    fn psd_tol() -> Self {
        1e-5
    }
    fn purity_tol() -> Self {
        1e-5
    }
}
