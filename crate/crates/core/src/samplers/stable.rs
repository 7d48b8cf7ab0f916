//! Exact stable-law samplers.
//!
//! * Kanter's representation for positive strictly stable laws of index
//!   a ∈ (0, 1), normalized so that `E exp(-λ S) = exp(-λ^a)`.
//! * Isotropic α-stable increments in d ≤ 3 by Gaussian subordination:
//!   `X = sqrt(2 S) Z` with `S = t^{2/α} · Kanter(α/2)` has characteristic
//!   function `exp(-t |z|^α)` (α = 2 short-circuits to a plain Gaussian).
//! * Chambers–Mallows–Stuck for general skew `b ∈ [-1, 1]`, index a ≠ 1,
//!   normalized to `E exp(i z X) = exp(-t |z|^a (1 - i b sgn(z) tan(πa/2)))`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::Point;

/// Kanter sampler: positive strictly stable with `E e^{-λS} = e^{-λ^a}`,
/// `a ∈ (0, 1)`.
pub fn sample_positive_stable(a: f64, rng: &mut impl Rng) -> f64 {
    debug_assert!(a > 0.0 && a < 1.0, "Kanter requires a in (0,1)");
    // θ ~ U(0, π), W ~ Exp(1); open-interval guards avoid 0/0 at the ends.
    let u: f64 = rng.gen();
    let theta = PI * u.clamp(1e-16, 1.0 - 1e-16);
    let w = exp1(rng);
    let s = theta.sin();
    let a_theta = ((a * theta).sin().powf(a) * (((1.0 - a) * theta).sin()).powf(1.0 - a) / s)
        .powf(1.0 / (1.0 - a));
    (a_theta / w).powf((1.0 - a) / a)
}

/// Isotropic α-stable increment over time `t` in dimension `d ≤ 3`;
/// coordinates beyond `d` are zero.
pub fn sample_isotropic_increment(d: u32, alpha: f64, t: f64, rng: &mut impl Rng) -> Point {
    debug_assert!((1..=3).contains(&d));
    debug_assert!(alpha > 0.0 && alpha <= 2.0);
    debug_assert!(t >= 0.0);
    let mut x = [0.0; 3];
    if t == 0.0 {
        return x;
    }
    let scale = if alpha == 2.0 {
        // Symbol e^{-t z²}: Gaussian with variance 2t per coordinate.
        (2.0 * t).sqrt()
    } else {
        let s = t.powf(2.0 / alpha) * sample_positive_stable(alpha / 2.0, rng);
        (2.0 * s).sqrt()
    };
    for xi in x.iter_mut().take(d as usize) {
        let z: f64 = rng.sample(StandardNormal);
        *xi = scale * z;
    }
    x
}

/// Chambers–Mallows–Stuck sampler, index `a ∈ (0, 2] \ {1}`, skew
/// `b ∈ [-1, 1]`, time scale `t > 0`:
/// `E e^{izX} = exp(-t |z|^a (1 - i b sgn(z) tan(πa/2)))`.
pub fn sample_skewed_stable(a: f64, b: f64, t: f64, rng: &mut impl Rng) -> f64 {
    debug_assert!(a > 0.0 && a <= 2.0 && (a - 1.0).abs() > 1e-12);
    debug_assert!((-1.0..=1.0).contains(&b));
    let theta0 = (b * (PI * a / 2.0).tan()).atan() / a;
    let u: f64 = rng.gen();
    let theta = PI * (u.clamp(1e-16, 1.0 - 1e-16) - 0.5);
    let w = exp1(rng);
    let x = (a * (theta0 + theta)).sin() / ((a * theta0).cos() * theta.cos()).powf(1.0 / a)
        * ((a * theta0 + (a - 1.0) * theta).cos() / w).powf((1.0 - a) / a);
    t.powf(1.0 / a) * x
}

fn exp1(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).max(1e-300).ln()
}
