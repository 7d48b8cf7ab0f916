//! Scalar abstraction for the numeric kernels.
//!
//! Special functions, quadrature, test-function evaluation and empirical
//! characteristic functions are written against [`Real`] so they can run
//! at `f32` or `f64`. The domain layer (simulator, Volterra solver,
//! harness) is instantiated at `f64` via the crate-root [`crate::Scalar`]
//! alias; single precision is supported where it makes sense (kernel-level
//! math), not where it does not (accumulated Monte Carlo statistics).

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar with everything the numeric kernels need:
/// IEEE float ops, math constants, conversions from literals, and
/// assignment operators.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssignOps + std::fmt::Debug + std::fmt::Display + 'static
{
    /// Convert an `f64` literal/constant into `Self`. Panics only if the
    /// conversion is impossible, which cannot happen for finite literals.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts to Real")
    }

    /// Lossy view as `f64` (exact for `f64`, widening for `f32`).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    /// Machine epsilon for the concrete type.
    fn eps() -> Self {
        Self::epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}
