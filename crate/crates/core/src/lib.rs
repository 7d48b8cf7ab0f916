//! Simulation and numerical-verification toolkit for critical branching
//! particle systems with isotropic α-stable motion.
//!
//! The model: particles in `R^d` move as independent isotropic α-stable
//! Lévy processes (Fourier symbol `exp(-t|z|^α)`), live `Exp(V)` lifetimes,
//! and branch critically at death with generating function
//! `F(s) = s + (1-s)^{1+β}/(1+β)`, `β ∈ (0,1)`. The initial configuration is
//! a Poisson field with homogeneous intensity. The toolkit provides:
//!
//! * exact event-level Monte Carlo of the particle system ([`branching`]),
//! * rescaled occupation-time fluctuation functionals ([`occupation`]),
//! * deterministic stable-kernel numerics: densities, semigroup, potential
//!   operator, and closed-form constants ([`stable`]),
//! * the limit laws of the fluctuations and their characteristic functions
//!   ([`limit_laws`]),
//! * the exact (non-asymptotic) Laplace-functional machinery: a nonlinear
//!   Volterra solver, Monte Carlo cross-checks, and deterministic limits
//!   ([`laplace`]),
//! * statistical verification: empirical characteristic functions,
//!   goodness-of-fit, index estimation, independence and tail-envelope
//!   checks ([`stats`]),
//! * a reproducible experiment harness ([`harness`]).
//!
//! Low-level numeric kernels (special functions, quadrature, test-function
//! evaluation, empirical characteristic functions) are generic over the
//! scalar type through [`scalar::Real`]; the domain layer is instantiated
//! at the concrete [`Scalar`] alias below.

pub mod branching;
pub mod error;
pub mod harness;
pub mod laplace;
pub mod limit_laws;
pub mod model;
pub mod occupation;
pub mod quad;
pub mod samplers;
pub mod scalar;
pub mod special;
pub mod stable;
pub mod stats;
pub mod testfn;

/// Concrete scalar type used by the domain layer (simulator, solver,
/// harness). The numeric kernels underneath are generic over
/// [`scalar::Real`] and work at `f32` as well.
pub type Scalar = f64;

/// A point in `R^d`, stored padded to three coordinates (`d ≤ 3` everywhere
/// a position is simulated or a density is evaluated; trailing coordinates
/// are zero).
pub type Point = [Scalar; 3];

pub use error::{Error, Result};
pub use model::{classify_regime, norming, offspring_pmf, ModelParams, OffspringLaw, Regime, SimBox};
pub use stable::kernel::StableKernel;
pub use testfn::{TestFunction, TimeProfile};
