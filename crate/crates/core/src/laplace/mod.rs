//! Laplace-functional verification: three independent routes to
//! `E exp{-⟨X̃_T, Φ⟩}` for the centered, rescaled occupation statistic —
//! event-level Monte Carlo of the truncated particle system, a spectral
//! solve of the nonlinear mild equation, and (in the scaling regimes where
//! one exists) the closed limit value — plus the deterministic limit
//! identities for the second-route space-time integral.

mod limits;
mod mc;
mod solver;

pub use limits::{
    critical_log_limit, deterministic_limit_i2, CriticalLogReport, CriticalLogRow, I2Report, I2Row,
};
pub use mc::{mc_laplace_lhs, vt_mc_oracle, McLaplace, VtOracle};
pub use solver::{laplace_rhs, solve_vt, LaplaceRhs, SpaceTimeTest, VtConfig, VtSolution};
