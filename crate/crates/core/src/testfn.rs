//! Spatial test functions and time profiles.
//!
//! Spatial test functions are finite sums of isotropic Gaussian bumps
//! `h·exp(-|x-c|²/(2σ²))` — rapidly decreasing, nonnegative for `h ≥ 0`,
//! with closed-form total integral `λ(φ) = Σ h (2πσ²)^{d/2}` and a
//! closed-form radial Fourier transform, which the stable-kernel numerics
//! exploit. Space-time test functions are products `Φ(x,t) = φ(x)·ψ(t)`
//! with `ψ` supported in `[0,1]`; the machinery mostly consumes the
//! right-tail integral `χ(t) = ∫_t^1 ψ(r) dr`, available in closed form
//! for every profile here.

use crate::error::{Error, Result};
use crate::Point;
use serde::{Deserialize, Serialize};

/// One isotropic Gaussian bump `h·exp(-|x-c|²/(2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub height: f64,
    /// Width σ (standard-deviation-like scale), σ > 0.
    pub width: f64,
    pub center: Point,
}

/// A finite sum of Gaussian bumps in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub d: u32,
    pub bumps: Vec<GaussianBump>,
}

impl TestFunction {
    /// Single bump of the given height and width centered at the origin.
    pub fn gaussian(d: u32, height: f64, width: f64) -> Result<Self> {
        TestFunction::new(d, vec![GaussianBump { height, width, center: [0.0; 3] }])
    }

    pub fn new(d: u32, bumps: Vec<GaussianBump>) -> Result<Self> {
        if d < 1 || d > 3 {
            return Err(Error::invalid("test functions are supported for d in 1..=3"));
        }
        if bumps.is_empty() {
            return Err(Error::invalid("test function needs at least one bump"));
        }
        for b in &bumps {
            if !(b.width > 0.0) || !b.height.is_finite() {
                return Err(Error::invalid("bump needs width > 0 and finite height"));
            }
        }
        Ok(TestFunction { d, bumps })
    }

    /// Pointwise evaluation; coordinates beyond `d` are ignored.
    #[inline]
    pub fn eval(&self, x: &Point) -> f64 {
        let mut acc = 0.0;
        for b in &self.bumps {
            let mut r2 = 0.0;
            for i in 0..self.d as usize {
                let dx = x[i] - b.center[i];
                r2 += dx * dx;
            }
            acc += b.height * (-r2 / (2.0 * b.width * b.width)).exp();
        }
        acc
    }

    /// Evaluation for 1-d points without padding.
    #[inline]
    pub fn eval1(&self, x: f64) -> f64 {
        debug_assert_eq!(self.d, 1);
        self.eval(&[x, 0.0, 0.0])
    }

    /// Closed-form total integral `λ(φ) = Σ_b h_b (2πσ_b²)^{d/2}`.
    pub fn total_integral(&self) -> f64 {
        let d = self.d as f64;
        self.bumps
            .iter()
            .map(|b| b.height * (2.0 * std::f64::consts::PI * b.width * b.width).powf(d / 2.0))
            .sum()
    }

    /// True when every bump height is nonnegative (so φ ≥ 0 pointwise).
    pub fn is_nonnegative(&self) -> bool {
        self.bumps.iter().all(|b| b.height >= 0.0)
    }

    /// Scale all heights by `c` (linearity helper).
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for b in &mut out.bumps {
            b.height *= c;
        }
        out
    }

    /// Largest width among bumps — sets quadrature scales.
    pub fn max_width(&self) -> f64 {
        self.bumps.iter().map(|b| b.width).fold(0.0, f64::max)
    }

    /// Largest distance of a bump center from the origin plus its width —
    /// a support-like radius for truncation heuristics.
    pub fn reach(&self) -> f64 {
        self.bumps
            .iter()
            .map(|b| {
                let r = (0..self.d as usize).map(|i| b.center[i] * b.center[i]).sum::<f64>().sqrt();
                r + b.width
            })
            .fold(0.0, f64::max)
    }
}

/// Time profile `ψ ≥ 0` supported in `[0, 1]`, with its closed-form
/// right-tail integral `χ(t) = ∫_t^1 ψ(r) dr` (so `χ(0) = ∫ψ`, `χ(1) = 0`,
/// `χ` nonincreasing).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeProfile {
    /// ψ ≡ 1 on [0,1]; χ(t) = 1-t.
    Const,
    /// ψ = 1 on [0, t1] (step profile of the finite-dimensional pairing);
    /// χ(t) = (t1 - t)⁺.
    Step { t1: f64 },
    /// Hann bump `ψ(t) = (2/(b-a))·sin²(π (t-a)/(b-a))` on `[a, b]`,
    /// normalized to ∫ψ = 1; C¹ and compactly supported inside (a, b).
    Bump { a: f64, b: f64 },
    /// ψ ≡ 0 (used by trivial-case tests).
    Zero,
}

impl TimeProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TimeProfile::Step { t1 } => {
                if !(t1 > 0.0 && t1 <= 1.0) {
                    return Err(Error::invalid(format!("step profile needs t1 in (0,1], got {t1}")));
                }
            }
            TimeProfile::Bump { a, b } => {
                if !(a >= 0.0 && b <= 1.0 && a < b) {
                    return Err(Error::invalid(format!("bump profile needs 0 ≤ a < b ≤ 1, got [{a},{b}]")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// ψ(t); zero outside [0, 1].
    pub fn psi(&self, t: f64) -> f64 {
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        match *self {
            TimeProfile::Const => 1.0,
            TimeProfile::Step { t1 } => {
                if t <= t1 {
                    1.0
                } else {
                    0.0
                }
            }
            TimeProfile::Bump { a, b } => {
                if t < a || t > b {
                    0.0
                } else {
                    let u = (t - a) / (b - a);
                    2.0 / (b - a) * (std::f64::consts::PI * u).sin().powi(2)
                }
            }
            TimeProfile::Zero => 0.0,
        }
    }

    /// χ(t) = ∫_t^1 ψ(r) dr in closed form; equals χ(0) for t < 0 and 0
    /// for t ≥ 1.
    pub fn chi(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        if t >= 1.0 {
            return 0.0;
        }
        match *self {
            TimeProfile::Const => 1.0 - t,
            TimeProfile::Step { t1 } => (t1 - t).max(0.0),
            TimeProfile::Bump { a, b } => {
                if t <= a {
                    1.0
                } else if t >= b {
                    0.0
                } else {
                    // ∫_a^u ψ = u' - sin(2π u')/(2π) with u' = (u-a)/(b-a).
                    let u = (t - a) / (b - a);
                    1.0 - (u - (2.0 * std::f64::consts::PI * u).sin() / (2.0 * std::f64::consts::PI))
                }
            }
            TimeProfile::Zero => 0.0,
        }
    }

    /// ∫₀¹ ψ = χ(0).
    pub fn mass(&self) -> f64 {
        self.chi(0.0)
    }

    /// `∫_lo^hi χ(u) du` in closed form.  Arguments are clamped to `[0, 1]`
    /// (χ vanishes beyond 1); `lo > hi` yields 0.
    pub fn chi_integral(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.clamp(0.0, 1.0);
        let hi = hi.clamp(0.0, 1.0);
        if lo >= hi {
            return 0.0;
        }
        match *self {
            TimeProfile::Const => (hi - lo) - (hi * hi - lo * lo) / 2.0,
            TimeProfile::Step { t1 } => {
                let m = hi.min(t1);
                if lo >= m {
                    0.0
                } else {
                    t1 * (m - lo) - (m * m - lo * lo) / 2.0
                }
            }
            TimeProfile::Bump { a, b } => {
                // χ = 1 on [0,a]; on (a,b), with v = (u-a)/(b-a),
                // χ = 1 - v + sin(2πv)/(2π), whose antiderivative in v is
                // H(v) = v - v²/2 - cos(2πv)/(4π²).
                let four_pi2 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
                let h = |v: f64| {
                    v - v * v / 2.0 - (2.0 * std::f64::consts::PI * v).cos() / four_pi2
                };
                let flat = (hi.min(a) - lo).max(0.0);
                let v0 = ((lo - a) / (b - a)).clamp(0.0, 1.0);
                let v1 = ((hi - a) / (b - a)).clamp(0.0, 1.0);
                flat + (b - a) * (h(v1) - h(v0))
            }
            TimeProfile::Zero => 0.0,
        }
    }

    /// `∫₀¹ χ(u) du = ∫₀¹ u ψ(u) du` (Fubini).
    pub fn chi_mass(&self) -> f64 {
        self.chi_integral(0.0, 1.0)
    }
}
