//! Deterministic numerics for the isotropic α-stable kernel with Fourier
//! symbol `exp(-t|z|^α)`: transition densities, the semigroup `T_t`, the
//! potential operator `G = ∫₀^∞ T_t dt`, weighted time-integral identities,
//! and closed-form constants.

pub mod constants;
pub mod density;
pub mod kernel;
pub mod potential;
pub mod profile;
pub mod semigroup;

pub use constants::{constant_k, constant_k1, riesz_constant, K1Result};
pub use kernel::StableKernel;
pub use potential::{lemma31_bound_check, potential_g, potential_g_time_integral, Lemma31Report};
pub use profile::{profile, StableProfile};
pub use semigroup::semigroup_apply;
