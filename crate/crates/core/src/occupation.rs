//! Occupation-time accumulation along simulated particle paths and the
//! rescaled fluctuation functionals built on top of it: the single-time
//! values ⟨X_T(t), φ⟩ and the space-time pairing ⟨X̃_T, Φ⟩ for Φ = φ⊗ψ.
//!
//! Two discretizations of the same occupation integral coexist here:
//!
//! * segment-level channels ([`OccupationAccumulator`]) — trapezoid along
//!   every emitted path segment, so birth/death times are quadrature nodes;
//! * grid-level series ([`GridPairing`] + [`occupation_series`]) — trapezoid
//!   of the per-grid population sums ⟨N_{g_j}, φ⟩, which yields the whole
//!   cumulative occupation curve in one pass.
//!
//! Both are O(Δ²)-biased estimators of the same quantity and are compared
//! against each other in tests; neither hides any adaptivity (Δ is an
//! explicit knob everywhere).

use crate::branching::PathObserver;
use crate::error::{Error, Result};
use crate::model::{norming, ModelParams, SimBox};
use crate::quad::adaptive_segments;
use crate::stable::semigroup::semigroup_apply_tol;
use crate::stable::StableKernel;
use crate::testfn::{TestFunction, TimeProfile};
use crate::Point;

/// Which mean is subtracted when forming a fluctuation value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// `intensity · λ(φ) · τ`: the mean of the infinite (untruncated)
    /// system.  Applied to a box-truncated simulation it leaves the
    /// truncation bias in the statistic — kept for bias quantification.
    Exact,
    /// `intensity · ∫_B ∫₀^τ T_sφ(x) ds dx`: the exact mean of the
    /// box-truncated system (by criticality), computed by quadrature.
    Truncated,
}

/// Time weight applied to a channel's occupation integrand.
#[derive(Debug, Clone)]
enum Weight {
    Unit,
    /// `w(s) = χ((shift + s)/scale)` where χ(u) = ∫_u¹ ψ.
    Chi { profile: TimeProfile, shift: f64, scale: f64 },
}

impl Weight {
    fn at(&self, s: f64) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::Chi { profile, shift, scale } => profile.chi((shift + s) / scale),
        }
    }

    /// `∫₀^cutoff w(s) ds` in closed form (up to the profile's own closed
    /// forms).
    fn integral_to(&self, cutoff: f64) -> f64 {
        match self {
            Weight::Unit => cutoff,
            Weight::Chi { profile, shift, scale } => {
                scale * profile.chi_integral(shift / scale, (shift + cutoff) / scale)
            }
        }
    }
}

/// One weighted occupation integral `∫₀^cutoff w(s) ⟨N_s, φ⟩ ds`.
///
/// `cutoff` must be bit-equal to an observation-grid value of the run that
/// feeds the accumulator: segments never straddle grid times, so the test
/// `t1 <= cutoff` then clips the integral exactly at the cutoff.
#[derive(Debug, Clone)]
pub struct Channel {
    cutoff: f64,
    weight: Weight,
    /// Accumulated weighted occupation.
    pub total: f64,
}

impl Channel {
    /// Mean of this channel's statistic for the untruncated system:
    /// `intensity · λ(φ) · ∫₀^cutoff w`.
    pub fn exact_mean(&self, params: &ModelParams, phi: &TestFunction) -> f64 {
        params.intensity * phi.total_integral() * self.weight.integral_to(self.cutoff)
    }

    /// Mean of this channel's statistic for the box-truncated system:
    /// `intensity · ∫₀^cutoff w(s) ∫_B T_sφ dx ds` by quadrature.
    pub fn truncated_mean(
        &self,
        params: &ModelParams,
        phi: &TestFunction,
        bx: &SimBox,
    ) -> Result<f64> {
        let w = self.weight.clone();
        weighted_truncated_mean(params, phi, bx, self.cutoff, move |s| w.at(s))
    }
}

/// Segment-level occupation accumulator; implements [`PathObserver`] so it
/// can be plugged straight into a simulation run (or combined with other
/// observers in a tuple).  φ is evaluated once per segment endpoint and
/// shared across all channels.
pub struct OccupationAccumulator<'a> {
    phi: &'a TestFunction,
    pub channels: Vec<Channel>,
}

impl<'a> OccupationAccumulator<'a> {
    pub fn new(phi: &'a TestFunction) -> Self {
        Self { phi, channels: Vec::new() }
    }

    /// Plain occupation up to `cutoff` (a grid value of the feeding run).
    pub fn add_unit_channel(&mut self, cutoff: f64) -> usize {
        self.channels.push(Channel { cutoff, weight: Weight::Unit, total: 0.0 });
        self.channels.len() - 1
    }

    /// χ-weighted occupation `∫₀^cutoff χ((shift+s)/scale) ⟨N_s,φ⟩ ds`.
    /// With `shift = 0`, `scale = cutoff = T` this is the space-time
    /// statistic `F_T ⟨X̃_T, Φ⟩ + m`; other shifts arise in the
    /// Laplace-transform oracle where the weight enters time-reversed.
    pub fn add_chi_channel(
        &mut self,
        profile: TimeProfile,
        shift: f64,
        scale: f64,
        cutoff: f64,
    ) -> usize {
        self.channels.push(Channel {
            cutoff,
            weight: Weight::Chi { profile, shift, scale },
            total: 0.0,
        });
        self.channels.len() - 1
    }
}

impl PathObserver for OccupationAccumulator<'_> {
    fn segment(&mut self, _id: u64, t0: f64, x0: &Point, t1: f64, x1: &Point) {
        let p0 = self.phi.eval(x0);
        let p1 = self.phi.eval(x1);
        if p0 == 0.0 && p1 == 0.0 {
            return;
        }
        let half = 0.5 * (t1 - t0);
        for ch in &mut self.channels {
            if t1 <= ch.cutoff {
                ch.total += half * (ch.weight.at(t0) * p0 + ch.weight.at(t1) * p1);
            }
        }
    }
}

/// Trapezoidal occupation contribution of one path segment — the same
/// arithmetic the unit channels use, exposed for direct unit-level checks.
pub fn accumulate_occupation(t0: f64, x0: &Point, t1: f64, x1: &Point, phi: &TestFunction) -> f64 {
    0.5 * (t1 - t0) * (phi.eval(x0) + phi.eval(x1))
}

/// Observer recording the per-grid population pairings ⟨N_{g_j}, φ⟩.
pub struct GridPairing<'a> {
    phi: &'a TestFunction,
    pub values: Vec<f64>,
}

impl<'a> GridPairing<'a> {
    pub fn new(phi: &'a TestFunction, grid_len: usize) -> Self {
        Self { phi, values: vec![0.0; grid_len] }
    }
}

impl PathObserver for GridPairing<'_> {
    fn at_grid(&mut self, _id: u64, j: usize, x: &Point) {
        self.values[j] += self.phi.eval(x);
    }
}

/// Cumulative trapezoid of the per-grid pairings: `out[j] ≈ ∫₀^{g_j}
/// ⟨N_s, φ⟩ ds` on the uniform grid with step `h`.
pub fn occupation_series(grid_values: &[f64], h: f64) -> Vec<f64> {
    crate::quad::cumulative_trapezoid_uniform(grid_values, h)
}

/// `(occupation_total − m(τ)) / F_T` for `τ = T·t`, with the centering
/// mean `m` picked by `centering`.  Truncated centering requires the
/// simulation box the occupation was actually generated on.
pub fn fluctuation_value(
    occupation_total: f64,
    params: &ModelParams,
    phi: &TestFunction,
    t_scale: f64,
    t: f64,
    centering: Centering,
    bx: Option<&SimBox>,
) -> Result<f64> {
    let f_t = norming(params, t_scale)?;
    let tau = t_scale * t;
    let m = match centering {
        Centering::Exact => params.intensity * phi.total_integral() * tau,
        Centering::Truncated => {
            let bx = bx.ok_or_else(|| {
                Error::InvalidConfig(
                    "truncated centering requires the simulation box metadata".into(),
                )
            })?;
            truncated_mean(params, phi, bx, tau)?
        }
    };
    Ok((occupation_total - m) / f_t)
}

/// Exact mean of the box-truncated occupation:
/// `intensity · ∫₀^τ ∫_B T_sφ(x) dx ds`.
pub fn truncated_mean(
    params: &ModelParams,
    phi: &TestFunction,
    bx: &SimBox,
    tau: f64,
) -> Result<f64> {
    weighted_truncated_mean(params, phi, bx, tau, |_| 1.0)
}

/// Truncation bias of the exact centering over `[0, τ]`:
/// `intensity · ∫_{B^c} ∫₀^τ T_sφ dx ds = intensity·λ(φ)·τ − truncated_mean`
/// (mass preservation of the semigroup).  Nonnegative for φ ≥ 0.
pub fn truncation_bias(
    params: &ModelParams,
    phi: &TestFunction,
    bx: &SimBox,
    tau: f64,
) -> Result<f64> {
    let full = params.intensity * phi.total_integral() * tau;
    Ok((full - truncated_mean(params, phi, bx, tau)?).max(0.0))
}

fn weighted_truncated_mean(
    params: &ModelParams,
    phi: &TestFunction,
    bx: &SimBox,
    tau: f64,
    w: impl Fn(f64) -> f64,
) -> Result<f64> {
    if tau <= 0.0 {
        return Ok(0.0);
    }
    if bx.d != params.d || phi.d != params.d {
        return Err(Error::invalid("box/test-function dimension mismatch"));
    }
    let kernel = StableKernel::new(params.d, params.alpha)?;
    let f = |s: f64| w(s) * box_semigroup_mass(&kernel, phi, bx, s).unwrap_or(f64::NAN);
    // A(s) = ∫_B T_sφ dx is smooth and bounded by λ(φ); geometric head
    // segments resolve the initial decay without over-refining the tail.
    // Every evaluation is itself a nested quadrature, so the outer
    // tolerance stays modest.
    let pts = [0.0, tau / 256.0, tau / 16.0, tau / 4.0, tau];
    let scale = phi.total_integral().abs() * tau;
    let r = adaptive_segments(f, &pts, 1e-8 * scale.max(1e-300), 1e-6)?;
    if !r.value.is_finite() {
        return Err(Error::invalid("semigroup evaluation failed inside truncated mean"));
    }
    Ok(params.intensity * r.value)
}

/// `A(s) = ∫_B T_sφ(x) dx`.
///
/// * d = 1: direct quadrature of `T_sφ` over the interval.
/// * d = 2: spherical reduction — requires φ centered at the origin and a
///   centered square box, so `T_sφ` is radial and the box integral becomes
///   `∫ ℓ(r)·T_sφ(r) dr` with `ℓ(r)` the circle-in-square arc length.
/// * d = 3: unsupported (use Exact centering plus the logged bias bound).
pub fn box_semigroup_mass(
    kernel: &StableKernel,
    phi: &TestFunction,
    bx: &SimBox,
    s: f64,
) -> Result<f64> {
    let inner_tol = (1e-10, 1e-7);
    match kernel.d {
        1 => {
            let (lo, hi) = (bx.lo[0], bx.hi[0]);
            let mut pts = vec![lo, hi];
            for b in &phi.bumps {
                for c in [b.center[0] - b.width, b.center[0], b.center[0] + b.width] {
                    if c > lo && c < hi {
                        pts.push(c);
                    }
                }
            }
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let f = |x: f64| {
                semigroup_apply_tol(kernel, s, phi, &[x, 0.0, 0.0], inner_tol.0, inner_tol.1)
                    .unwrap_or(f64::NAN)
            };
            let scale = phi.total_integral().abs();
            Ok(adaptive_segments(f, &pts, 1e-9 * scale.max(1e-300), 1e-7)?.value)
        }
        2 => {
            let l = bx.hi[0];
            let centered = (0..2).all(|i| bx.lo[i] == -l && bx.hi[i] == l)
                && phi.bumps.iter().all(|b| b.center.iter().all(|&c| c == 0.0));
            if !centered {
                return Err(Error::Unsupported(
                    "d=2 box mean needs an origin-centered φ and a centered square box \
                     (use Exact centering otherwise)"
                        .into(),
                ));
            }
            let f = |r: f64| {
                let g = semigroup_apply_tol(
                    kernel,
                    s,
                    phi,
                    &[r, 0.0, 0.0],
                    inner_tol.0,
                    inner_tol.1,
                )
                .unwrap_or(f64::NAN);
                arc_in_square(l, r) * g
            };
            let mut pts = vec![0.0, l, std::f64::consts::SQRT_2 * l];
            for b in &phi.bumps {
                for c in [b.width, 2.0 * b.width] {
                    if c < l {
                        pts.push(c);
                    }
                }
            }
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let scale = phi.total_integral().abs();
            Ok(adaptive_segments(f, &pts, 1e-9 * scale.max(1e-300), 1e-7)?.value)
        }
        _ => Err(Error::Unsupported(
            "d=3 box-truncated mean is not implemented; use Exact centering with the \
             logged truncation-bias bound"
                .into(),
        )),
    }
}

/// Arc length of the circle of radius `r` (centered at the origin) inside
/// the square `[-l, l]²`; `∫₀^{√2 l} ℓ(r) dr = 4l²`.
fn arc_in_square(l: f64, r: f64) -> f64 {
    use std::f64::consts::PI;
    if r <= l {
        2.0 * PI * r
    } else if r < std::f64::consts::SQRT_2 * l {
        r * (2.0 * PI - 8.0 * (l / r).acos())
    } else {
        0.0
    }
}

/// Trapezoidal time pairing `∫₀¹ values(t)·ψ(t) dt` on the given `t_grid`
/// (strictly increasing, spanning `[0, 1]`).
///
/// The step profile is handled by restricting the trapezoid to `[0, t1]`
/// so the pairing reproduces the finite-dimensional functional exactly on
/// grids containing `t1`; the Hann bump requires the grid to resolve its
/// support.
pub fn spacetime_pairing(t_grid: &[f64], values: &[f64], psi: &TimeProfile) -> Result<f64> {
    if t_grid.len() != values.len() || t_grid.len() < 2 {
        return Err(Error::invalid("time grid and values must have equal length ≥ 2"));
    }
    if t_grid[0] != 0.0 || (t_grid[t_grid.len() - 1] - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("time grid must span [0, 1]"));
    }
    psi.validate()?;
    match *psi {
        TimeProfile::Zero => Ok(0.0),
        TimeProfile::Step { t1 } => {
            // Integrate values over grid ∩ [0, t1]; t1 must sit on the grid
            // (within roundoff) or the jump cannot be resolved.
            let k = match t_grid.iter().position(|&g| (g - t1).abs() <= 1e-9) {
                Some(k) if k >= 1 => k,
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "step profile t1={t1} does not lie on the time grid"
                    )))
                }
            };
            Ok(trapezoid_nonuniform(&t_grid[..=k], &values[..=k]))
        }
        TimeProfile::Bump { a, b } => {
            let max_step = t_grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            if max_step > (b - a) / 4.0 {
                return Err(Error::InvalidConfig(format!(
                    "time grid (max step {max_step:.3}) too coarse for bump support [{a}, {b}]"
                )));
            }
            Ok(trapezoid_nonuniform_weighted(t_grid, values, |t| psi.psi(t)))
        }
        TimeProfile::Const => Ok(trapezoid_nonuniform(t_grid, values)),
    }
}

fn trapezoid_nonuniform(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn trapezoid_nonuniform_weighted(xs: &[f64], ys: &[f64], w: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut prev = ys[0] * w(xs[0]);
    for i in 1..xs.len() {
        let cur = ys[i] * w(xs[i]);
        acc += 0.5 * (xs[i] - xs[i - 1]) * (prev + cur);
        prev = cur;
    }
    acc
}

/// One replica's fluctuation measurements, as persisted by the harness.
#[derive(Debug, Clone)]
pub struct FluctuationRecord {
    pub replica: u64,
    /// Scaling parameter T.
    pub t_scale: f64,
    /// Time grid t_1..t_k in [0, 1].
    pub t_grid: Vec<f64>,
    /// ⟨X_T(t_j), φ⟩.
    pub values: Vec<f64>,
    /// ⟨X̃_T, Φ⟩ when a space-time profile was configured.
    pub spacetime: Option<f64>,
    /// Bound on the truncation bias of the Exact centering (0 when the
    /// Truncated centering is in use).
    pub bias_bound: f64,
    pub seed: u64,
    pub wall_secs: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::{run_population, BranchingConfig, GridCounts};
    use crate::model::OffspringLaw;
    use crate::samplers::ReplicaStreams;
    use crate::special::erf;
    use crate::testfn::TestFunction;

    fn big_box_params() -> (ModelParams, TestFunction, SimBox) {
        // d=1, α=0.4, β=0.5: above the no-theorem band (α/β = 0.8 < 1);
        // intermediate regime, which is all the centering tests need.
        let params = ModelParams::new(1, 0.4, 0.5, 1.0, 1.0).unwrap();
        let phi = TestFunction::gaussian(1, 1.0, 1.0).unwrap();
        let bx = SimBox::centered(1, 8.0);
        (params, phi, bx)
    }

    #[test]
    fn zero_phi_gives_zero() {
        let phi = TestFunction::gaussian(2, 0.0, 1.0).unwrap();
        let v = accumulate_occupation(0.0, &[0.1, 0.2, 0.0], 1.0, &[0.4, 0.1, 0.0], &phi);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn frozen_motion_integrates_exactly() {
        // Constant integrand: trapezoid is exact, value = φ(x)·duration.
        let phi = TestFunction::gaussian(1, 2.0, 0.7).unwrap();
        let x = [0.3, 0.0, 0.0];
        let v = accumulate_occupation(1.0, &x, 3.5, &x, &phi);
        assert!((v - 2.5 * phi.eval(&x)).abs() < 1e-15);
    }

    #[test]
    fn empty_system_fluctuation_is_zero() {
        let (mut params, phi, _) = big_box_params();
        params.intensity = 0.0;
        let v = fluctuation_value(0.0, &params, &phi, 4.0, 1.0, Centering::Exact, None).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn exact_centering_uses_closed_form_mass() {
        // d=1 unit Gaussian: λ(φ) = √(2π); feeding the exact mean back in
        // must return 0.
        let (params, phi, _) = big_box_params();
        let lambda_phi = (2.0 * std::f64::consts::PI).sqrt();
        assert!((phi.total_integral() - lambda_phi).abs() < 1e-12);
        let tau = 4.0 * 0.75;
        let total = params.intensity * lambda_phi * tau;
        let v =
            fluctuation_value(total, &params, &phi, 4.0, 0.75, Centering::Exact, None).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn truncated_centering_requires_box() {
        let (params, phi, _) = big_box_params();
        match fluctuation_value(1.0, &params, &phi, 4.0, 1.0, Centering::Truncated, None) {
            Err(Error::InvalidConfig(_)) => {}
            other => panic!("expected InvalidConfig, got {other:?}"),
        }
    }

    /// Gaussian-motion closed form for the box mean: at α = 2 the bump
    /// convolves to height·(σ²/v)^{d/2}·exp(−|x−c|²/(2v)) with v = σ² + 2s,
    /// and the box integral factorizes into erf differences per axis.
    fn gaussian_box_mass(phi: &TestFunction, bx: &SimBox, s: f64) -> f64 {
        let d = bx.d as usize;
        let mut total = 0.0;
        for b in &phi.bumps {
            let v = b.width * b.width + 2.0 * s;
            let mut m = b.height * (b.width * b.width / v).powf(d as f64 / 2.0);
            for i in 0..d {
                let z = (2.0 * v).sqrt();
                let hi = erf((bx.hi[i] - b.center[i]) / z);
                let lo = erf((bx.lo[i] - b.center[i]) / z);
                m *= (std::f64::consts::PI * v / 2.0).sqrt() * (hi - lo);
            }
            total += m;
        }
        total
    }

    #[test]
    fn box_mass_matches_gaussian_closed_form_1d() {
        let kernel = StableKernel::new(1, 2.0).unwrap();
        // Off-center bump: the 1D route has no symmetry requirement.
        let phi = TestFunction::new(
            1,
            vec![crate::testfn::GaussianBump {
                height: 1.3,
                width: 0.8,
                center: [0.6, 0.0, 0.0],
            }],
        )
        .unwrap();
        let bx = SimBox { d: 1, lo: [-2.0, 0.0, 0.0], hi: [3.0, 0.0, 0.0] };
        for s in [0.05, 0.5, 2.0] {
            let got = box_semigroup_mass(&kernel, &phi, &bx, s).unwrap();
            let want = gaussian_box_mass(&phi, &bx, s);
            assert!(
                (got - want).abs() < 1e-7 * want,
                "s={s}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn box_mass_matches_gaussian_closed_form_2d() {
        let kernel = StableKernel::new(2, 2.0).unwrap();
        let phi = TestFunction::gaussian(2, 0.9, 1.1).unwrap();
        let bx = SimBox::centered(2, 2.5);
        for s in [0.1, 1.0] {
            let got = box_semigroup_mass(&kernel, &phi, &bx, s).unwrap();
            let want = gaussian_box_mass(&phi, &bx, s);
            assert!(
                (got - want).abs() < 1e-6 * want,
                "s={s}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn arc_length_fills_square_area() {
        let l = 1.7;
        let total = crate::quad::adaptive(
            |r| arc_in_square(l, r),
            0.0,
            std::f64::consts::SQRT_2 * l,
            1e-10,
            1e-9,
        )
        .unwrap()
        .value;
        assert!((total - 4.0 * l * l).abs() < 1e-7);
    }

    #[test]
    fn box_mean_is_unbiased_for_truncated_system() {
        // Replica mean of the Truncated-centered fluctuation → 0 within 3σ.
        // fluctuation_value is linear in the occupation total, so centering
        // the replica-mean total is the same statistic as the mean of the
        // per-replica values — and needs the (expensive) quadrature mean
        // only once.
        let (params, phi, bx) = big_box_params();
        let t_scale = 2.0;
        let cfg = BranchingConfig::new(params.clone(), t_scale, 0.05).unwrap();
        let law = OffspringLaw::binary();
        let streams = ReplicaStreams::new(2024);
        let n = 400u64;
        let mut totals = Vec::with_capacity(n as usize);
        for i in 0..n {
            let mut rng = streams.replica(i);
            let mut acc = OccupationAccumulator::new(&phi);
            acc.add_unit_channel(t_scale);
            run_population(&cfg, &bx, &law, &mut acc, &mut rng).unwrap();
            totals.push(acc.channels[0].total);
        }
        let mean_total = totals.iter().sum::<f64>() / n as f64;
        let var =
            totals.iter().map(|v| (v - mean_total) * (v - mean_total)).sum::<f64>() / (n - 1) as f64;
        let mean = fluctuation_value(
            mean_total,
            &params,
            &phi,
            t_scale,
            1.0,
            Centering::Truncated,
            Some(&bx),
        )
        .unwrap();
        let f_t = norming(&params, t_scale).unwrap();
        let stderr = (var / n as f64).sqrt() / f_t;
        assert!(
            mean.abs() < 3.0 * stderr + 1e-12,
            "replica mean {mean:.5} (stderr {stderr:.5}) not centered"
        );
    }

    #[test]
    fn truncation_bias_positive_and_small_for_big_box() {
        // α = 1.5: motion scale s^{2/3} ≤ 1.6 over τ = 2, so only the
        // power-law tail reaches past ±8 and the escaped fraction of
        // λ(φ)·τ is a few percent at most.  (Heavier motions like α = 0.4
        // genuinely lose ~30% here — the bound is a property of the
        // parameters, not of the quadrature.)
        let params = ModelParams::new(1, 1.5, 0.5, 1.0, 1.0).unwrap();
        let phi = TestFunction::gaussian(1, 1.0, 1.0).unwrap();
        let bx = SimBox::centered(1, 8.0);
        let bias = truncation_bias(&params, &phi, &bx, 2.0).unwrap();
        assert!(bias >= 0.0);
        assert!(bias < 0.05 * phi.total_integral() * 2.0, "bias {bias}");
    }

    #[test]
    fn rescaled_and_direct_time_parameterizations_agree() {
        // Eq-level identity: ∫₀^{Tt} f(s) ds computed on [0, Tt] with step
        // h equals T·∫₀^t f(Tu) du on [0, t] with step h/T — same sums up
        // to floating point.
        let t_scale = 3.0;
        let h = 0.01;
        let vals: Vec<f64> = (0..=300).map(|j| ((j as f64) * 0.17).sin().abs()).collect();
        let direct = crate::quad::trapezoid_uniform(&vals, h);
        let rescaled = t_scale * crate::quad::trapezoid_uniform(&vals, h / t_scale);
        assert!((direct - rescaled).abs() <= 1e-13 * direct.abs());
    }

    #[test]
    fn pairing_is_linear_and_handles_profiles() {
        let t_grid: Vec<f64> = (0..=40).map(|j| j as f64 / 40.0).collect();
        let vals: Vec<f64> = t_grid.iter().map(|&t| (3.0 * t).cos() + 0.5).collect();
        let zero = spacetime_pairing(&t_grid, &vals, &TimeProfile::Zero).unwrap();
        assert_eq!(zero, 0.0);
        let unit = spacetime_pairing(&t_grid, &vals, &TimeProfile::Const).unwrap();
        let scaled: Vec<f64> = vals.iter().map(|v| 2.5 * v).collect();
        let unit2 = spacetime_pairing(&t_grid, &scaled, &TimeProfile::Const).unwrap();
        assert!((unit2 - 2.5 * unit).abs() < 1e-12 * unit.abs());
        // Step restricted to [0, t1] equals the plain trapezoid there.
        let step =
            spacetime_pairing(&t_grid, &vals, &TimeProfile::Step { t1: 0.5 }).unwrap();
        let manual = trapezoid_nonuniform(&t_grid[..=20], &vals[..=20]);
        assert!((step - manual).abs() < 1e-14);
        // Step off the grid is rejected.
        assert!(spacetime_pairing(&t_grid, &vals, &TimeProfile::Step { t1: 0.512 }).is_err());
        // Bump too narrow for the grid is rejected.
        assert!(
            spacetime_pairing(&t_grid, &vals, &TimeProfile::Bump { a: 0.4, b: 0.45 }).is_err()
        );
        // Bump fine enough: matches adaptive quadrature of the interpolant
        // loosely (both approximate the same smooth integral).
        let bump = TimeProfile::Bump { a: 0.2, b: 0.8 };
        let pair = spacetime_pairing(&t_grid, &vals, &bump).unwrap();
        let dense = crate::quad::adaptive(
            |t: f64| ((3.0 * t).cos() + 0.5) * bump.psi(t),
            0.0,
            1.0,
            1e-10,
            1e-9,
        )
        .unwrap()
        .value;
        assert!((pair - dense).abs() < 5e-3, "{pair} vs {dense}");
    }

    #[test]
    fn chi_channel_matches_pairing_route() {
        // Fubini consistency: the segment-level χ-weighted occupation and
        // the t-grid pairing of X_T(t)·ψ(t) approximate the same integral.
        let params = ModelParams::new(1, 2.0, 0.5, 1.0, 0.8).unwrap();
        let phi = TestFunction::gaussian(1, 1.0, 1.0).unwrap();
        let bx = SimBox::centered(1, 10.0);
        let t_scale = 2.0;
        let m_steps = 200usize;
        let cfg = BranchingConfig::new(params.clone(), t_scale, t_scale / m_steps as f64).unwrap();
        let grid = cfg.grid();
        let law = OffspringLaw::binary();
        let profile = TimeProfile::Const;

        let mut rng = ReplicaStreams::new(555).replica(7);
        let mut acc = OccupationAccumulator::new(&phi);
        acc.add_chi_channel(profile.clone(), 0.0, t_scale, t_scale);
        let mut pair = GridPairing::new(&phi, grid.len());
        {
            let mut obs = (&mut acc, (&mut pair, GridCounts::new(grid.len())));
            run_population(&cfg, &bx, &law, &mut obs, &mut rng).unwrap();
        }

        let h = grid[1] - grid[0];
        let occ = occupation_series(&pair.values, h);
        // Route (a): t-grid pairing of the un-normalized, un-centered
        // occupation curve against ψ — centering and 1/F_T cancel in the
        // comparison if applied to both sides, so compare raw integrals.
        // ∫₀¹ ψ(t)·occ(Tt) dt = ∫₀^T χ(s/T)⟨N_s,φ⟩ ds (swap the order of
        // integration; no Jacobian factor because occ is parameterized by
        // the unscaled time Tt).
        let t_grid: Vec<f64> = grid.iter().map(|g| g / t_scale).collect();
        let route_a = trapezoid_nonuniform_weighted(&t_grid, &occ, |t| profile.psi(t));
        // Route (b): direct χ-weighted segment accumulation.
        let route_b = acc.channels[0].total;
        let scale = route_b.abs().max(1.0);
        assert!(
            (route_a - route_b).abs() < 2e-2 * scale,
            "pairing route {route_a} vs direct χ route {route_b}"
        );
    }

    #[test]
    fn channel_exact_means_integrate_weights() {
        let (params, phi, _) = big_box_params();
        let mut acc = OccupationAccumulator::new(&phi);
        acc.add_unit_channel(3.0);
        acc.add_chi_channel(TimeProfile::Const, 0.0, 3.0, 3.0);
        acc.add_chi_channel(TimeProfile::Step { t1: 0.5 }, 0.0, 3.0, 3.0);
        let lam = phi.total_integral();
        let m0 = acc.channels[0].exact_mean(&params, &phi);
        assert!((m0 - lam * 3.0).abs() < 1e-12);
        // ∫₀^T χ(s/T) ds = T·chi_mass = 3·(1/2).
        let m1 = acc.channels[1].exact_mean(&params, &phi);
        assert!((m1 - lam * 1.5).abs() < 1e-12);
        // Step t1=0.5: chi_mass = t1²/2 = 1/8 → 3/8.
        let m2 = acc.channels[2].exact_mean(&params, &phi);
        assert!((m2 - lam * 3.0 * 0.125).abs() < 1e-12);
    }
}
