//! Monte-Carlo leg of the Laplace-functional check.
//!
//! For a Poisson field of ancestors on a box `B` the centered space-time
//! statistic is `⟨X̃_T, Φ⟩ = Y - m_B` with
//!
//! `Y = (1/F_T) ∫₀^T χ(r/T) ⟨N_r, φ⟩ dr`,  `m_B = E Y` (exact, by
//! criticality of the branching), so `E exp{-⟨X̃_T, Φ⟩} = E exp{m_B - Y}`
//! is estimated by averaging the exponential tilt over independent
//! replicas.  `m_B` is computed once by the nested-quadrature route of the
//! occupation module — deliberately *not* from the mild-equation solver,
//! so the two legs of the comparison stay independent.
//!
//! The same machinery with a single ancestor pinned at `x` and the time
//! weight entering reversed gives an unbiased oracle for the solver field
//! `v(x,t) = 1 - E exp{-(1/F_T) ∫₀^t χ((T-t+r)/T) ⟨N_r^x, φ⟩ dr}`.

use rayon::prelude::*;

use crate::branching::{run_population, run_single_ancestor, BranchingConfig};
use crate::error::{Error, Result};
use crate::model::{offspring_pmf, ModelParams, SimBox};
use crate::occupation::OccupationAccumulator;
use crate::samplers::ReplicaStreams;
use crate::Point;

use super::solver::SpaceTimeTest;

/// Monte-Carlo estimate of the Laplace functional of the centered
/// statistic, with the exact-mean bookkeeping it relies on.
#[derive(Debug, Clone, Copy)]
pub struct McLaplace {
    /// `(1/n) Σ exp(m_B - Y_i)`.  Jensen puts the target at or above 1
    /// (centering a Laplace transform by the exact mean can only raise
    /// it), and the estimator is bounded by `e^{m_B}`.
    pub estimate: f64,
    pub stderr: f64,
    /// Exact mean `m_B = E Y` of the truncated system (quadrature route).
    pub m_trunc: f64,
    /// Sample mean of `Y` with its standard error — a free consistency
    /// check against `m_trunc`.
    pub mean_y: f64,
    pub mean_y_stderr: f64,
    pub replicas: u64,
}

/// Estimate `E exp{-⟨X̃_T, Φ⟩}` for the box-truncated system by direct
/// event-level simulation.
///
/// Only the product form `Φ = φ ⊗ ψ` is supported here (the step pairing
/// would need one accumulator per spatial term); the mild-equation solver
/// accepts both shapes.
#[allow(clippy::too_many_arguments)]
pub fn mc_laplace_lhs(
    params: &ModelParams,
    test: &SpaceTimeTest,
    horizon: f64,
    f_t: f64,
    bx: &SimBox,
    path_step: f64,
    replicas: u64,
    seed: u64,
) -> Result<McLaplace> {
    test.validate(params.d)?;
    let (phi, psi) = match test {
        SpaceTimeTest::Product { phi, psi } => (phi, psi),
        SpaceTimeTest::Steps { .. } => {
            return Err(Error::Unsupported(
                "Monte-Carlo Laplace leg handles the product form φ⊗ψ only".to_string(),
            ))
        }
    };
    if replicas < 2 {
        return Err(Error::invalid("need at least 2 replicas for a standard error"));
    }
    if !(f_t > 0.0 && f_t.is_finite()) {
        return Err(Error::invalid(format!("norming must be positive, got {f_t}")));
    }
    if bx.d != params.d {
        return Err(Error::invalid("ancestor box dimension does not match the model"));
    }

    // Exact mean of the χ-weighted occupation of the box system, divided
    // by the norming: one nested quadrature, shared by all replicas.
    let mut template = OccupationAccumulator::new(phi);
    template.add_chi_channel(psi.clone(), 0.0, horizon, horizon);
    let m_trunc = template.channels[0].truncated_mean(params, phi, bx)? / f_t;

    let law = offspring_pmf(params.beta, 256, true)?;
    let streams = ReplicaStreams::new(seed);
    let base_cfg = BranchingConfig::new(params.clone(), horizon, path_step)?;

    let ys: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let mut rng = streams.replica(rep);
            let mut cfg = base_cfg.clone();
            cfg.replica = rep;
            let mut acc = OccupationAccumulator::new(phi);
            acc.add_chi_channel(psi.clone(), 0.0, horizon, horizon);
            run_population(&cfg, bx, &law, &mut acc, &mut rng)?;
            Ok(acc.channels[0].total / f_t)
        })
        .collect::<Result<Vec<f64>>>()?;

    let n = ys.len() as f64;
    let mean_y = ys.iter().sum::<f64>() / n;
    let var_y = ys.iter().map(|y| (y - mean_y).powi(2)).sum::<f64>() / (n - 1.0);
    let vals: Vec<f64> = ys.iter().map(|y| (m_trunc - y).exp()).collect();
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McLaplace {
        estimate: mean,
        stderr: (var / n).sqrt(),
        m_trunc,
        mean_y,
        mean_y_stderr: (var_y / n).sqrt(),
        replicas,
    })
}

/// Monte-Carlo oracle for the solver field at one space-time point.
#[derive(Debug, Clone, Copy)]
pub struct VtOracle {
    /// `1 - (1/n) Σ exp(-Z_i)`, an unbiased estimate of `v(x, t)`.
    pub estimate: f64,
    pub stderr: f64,
    pub replicas: u64,
}

/// Estimate `v(x, t_window)` by simulating single-ancestor trees started
/// at `x` over `[0, t_window]` with the time weight entering reversed:
/// the descendant occupation at path time `r` carries `χ((T-t+r)/T)`.
#[allow(clippy::too_many_arguments)]
pub fn vt_mc_oracle(
    params: &ModelParams,
    x: &Point,
    test: &SpaceTimeTest,
    horizon: f64,
    f_t: f64,
    t_window: f64,
    path_step: f64,
    replicas: u64,
    seed: u64,
) -> Result<VtOracle> {
    test.validate(params.d)?;
    let (phi, psi) = match test {
        SpaceTimeTest::Product { phi, psi } => (phi, psi),
        SpaceTimeTest::Steps { .. } => {
            return Err(Error::Unsupported(
                "Monte-Carlo field oracle handles the product form φ⊗ψ only".to_string(),
            ))
        }
    };
    if !(t_window > 0.0 && t_window <= horizon) {
        return Err(Error::invalid(format!(
            "field window {t_window} must lie in (0, horizon = {horizon}]"
        )));
    }
    if replicas < 2 {
        return Err(Error::invalid("need at least 2 replicas for a standard error"));
    }

    let law = offspring_pmf(params.beta, 256, true)?;
    let streams = ReplicaStreams::new(seed);
    let base_cfg = BranchingConfig::new(params.clone(), t_window, path_step)?;
    let shift = horizon - t_window;

    let weights: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let mut rng = streams.replica(rep);
            let mut cfg = base_cfg.clone();
            cfg.replica = rep;
            let mut acc = OccupationAccumulator::new(phi);
            acc.add_chi_channel(psi.clone(), shift, horizon, t_window);
            run_single_ancestor(&cfg, x, &law, &mut acc, &mut rng)?;
            Ok((-acc.channels[0].total / f_t).exp())
        })
        .collect::<Result<Vec<f64>>>()?;

    let n = weights.len() as f64;
    let mean = weights.iter().sum::<f64>() / n;
    let var = weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(VtOracle { estimate: 1.0 - mean, stderr: (var / n).sqrt(), replicas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupation::{occupation_series, spacetime_pairing, GridPairing};
    use crate::testfn::{GaussianBump, TestFunction, TimeProfile};
    use approx::assert_relative_eq;

    fn unit_gaussian() -> TestFunction {
        TestFunction {
            d: 1,
            bumps: vec![GaussianBump { height: 1.0, width: 1.0, center: [0.0, 0.0, 0.0] }],
        }
    }

    fn params() -> ModelParams {
        ModelParams::new(1, 1.5, 0.5, 1.0, 1.0).unwrap()
    }

    /// The χ-channel statistic must agree per replica with assembling
    /// `⟨X̃_T, Φ⟩` from the pairing route: sample `⟨N_t, φ⟩` on a grid,
    /// integrate to the occupation process, and pair with ψ over rescaled
    /// time.  Same path, two quadratures of the same functional.
    #[test]
    fn chi_channel_reproduces_pairing_route_per_replica() {
        let params = params();
        let phi = unit_gaussian();
        let horizon = 4.0_f64;
        let f_t = horizon.powf(1.0 / 1.5);
        let cfg = BranchingConfig::new(params.clone(), horizon, horizon / 2048.0).unwrap();
        let law = offspring_pmf(params.beta, 256, true).unwrap();
        let streams = ReplicaStreams::new(99);

        for rep in 0..4 {
            let mut rng_a = streams.replica(rep);
            let mut rng_b = rng_a.clone();

            // Route A: χ-weighted occupation accumulated along segments.
            let mut acc = OccupationAccumulator::new(&phi);
            acc.add_chi_channel(TimeProfile::Const, 0.0, horizon, horizon);
            run_single_ancestor(&cfg, &[0.3, 0.0, 0.0], &law, &mut acc, &mut rng_a).unwrap();
            let y_channel = acc.channels[0].total / f_t;

            // Route B: same tree (same RNG stream), grid-sampled field
            // values → occupation process → ψ-pairing over t ∈ [0,1].
            let grid = cfg.grid();
            let mut pairing = GridPairing::new(&phi, grid.len());
            run_single_ancestor(&cfg, &[0.3, 0.0, 0.0], &law, &mut pairing, &mut rng_b).unwrap();
            let h = grid[1] - grid[0];
            let occ = occupation_series(&pairing.values, h);
            let t_grid: Vec<f64> = grid.iter().map(|&s| s / horizon).collect();
            let x_t: Vec<f64> = occ.iter().map(|&o| o / f_t).collect();
            let y_pairing =
                spacetime_pairing(&t_grid, &x_t, &TimeProfile::Const).unwrap();

            if y_channel.abs() > 1e-12 {
                assert_relative_eq!(y_channel, y_pairing, max_relative = 2e-2);
            } else {
                assert!(y_pairing.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn null_profile_gives_unit_estimate_and_zero_field() {
        let params = params();
        let test = SpaceTimeTest::Product { phi: unit_gaussian(), psi: TimeProfile::Zero };
        let bx = SimBox::centered(1, 4.0);
        let mc = mc_laplace_lhs(&params, &test, 2.0, 1.0, &bx, 0.05, 16, 7).unwrap();
        assert_eq!(mc.estimate, 1.0);
        assert_eq!(mc.stderr, 0.0);
        assert_eq!(mc.m_trunc, 0.0);
        let oracle =
            vt_mc_oracle(&params, &[0.0, 0.0, 0.0], &test, 2.0, 1.0, 2.0, 0.05, 16, 7).unwrap();
        assert_eq!(oracle.estimate, 0.0);
    }

    /// The sample mean of Y must match the quadrature mean m_B: this
    /// exercises the exact-centering contract end to end on a small box.
    #[test]
    fn sample_mean_matches_quadrature_mean() {
        let params = params();
        let test = SpaceTimeTest::Product { phi: unit_gaussian(), psi: TimeProfile::Const };
        let bx = SimBox::centered(1, 8.0);
        let horizon = 2.0_f64;
        let f_t = horizon.powf(1.0 / 1.5);
        let mc =
            mc_laplace_lhs(&params, &test, horizon, f_t, &bx, horizon / 256.0, 400, 2024).unwrap();
        assert!(mc.m_trunc > 0.0);
        assert!(
            (mc.mean_y - mc.m_trunc).abs() <= 4.0 * mc.mean_y_stderr,
            "sample mean {} vs exact mean {} (stderr {})",
            mc.mean_y,
            mc.m_trunc,
            mc.mean_y_stderr
        );
        assert!(mc.estimate > 0.0 && mc.estimate.is_finite());
    }

    #[test]
    fn oracle_estimate_lies_in_unit_interval() {
        let params = params();
        let test = SpaceTimeTest::Product { phi: unit_gaussian(), psi: TimeProfile::Const };
        let oracle = vt_mc_oracle(
            &params,
            &[0.0, 0.0, 0.0],
            &test,
            4.0,
            4.0f64.powf(1.0 / 1.5),
            4.0,
            0.02,
            400,
            31,
        )
        .unwrap();
        assert!(oracle.estimate > 0.0 && oracle.estimate < 1.0);
        assert!(oracle.stderr > 0.0 && oracle.stderr < 0.1);
    }
}
