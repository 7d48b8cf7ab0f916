//! Hand-rolled special functions used by the stable-kernel numerics.
//!
//! Everything here is classical: log-gamma by argument shift plus the
//! Stirling series, Bessel `J0`/scaled `I0` by power series below a switch
//! point and Hankel-type asymptotics above it, and `erf` through the
//! regularized incomplete gamma (series + Lentz continued fraction).
//! Accuracy notes are per function; they are chosen to comfortably exceed
//! what the quadratures built on top of them require.

use crate::scalar::Real;

/// Stirling coefficients `B_{2n} / (2n(2n-1))` for the log-gamma series.
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

/// Natural log of the gamma function for `x > 0`.
///
/// Arguments below 12 are shifted up with `Γ(x+1) = x·Γ(x)`, then the
/// Stirling series is applied; the truncation error of the 7-term series at
/// `x ≥ 12` is below 1e-16 relative, so the result is accurate to a few ulp.
/// Returns NaN for `x ≤ 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if x <= T::zero() {
        return T::nan();
    }
    let mut shift = T::zero();
    let mut y = x;
    let twelve = T::of(12.0);
    while y < twelve {
        shift += y.ln();
        y += T::one();
    }
    // ln Γ(y) = (y - 1/2) ln y - y + ln(2π)/2 + Σ c_n / y^{2n-1}
    let half = T::of(0.5);
    let ln_sqrt_two_pi = T::of(0.918_938_533_204_672_74); // ln(2π)/2
    let mut series = T::zero();
    let y2 = y * y;
    let mut ypow = y;
    for &c in &STIRLING {
        series += T::of(c) / ypow;
        ypow *= y2;
    }
    (y - half) * y.ln() - y + ln_sqrt_two_pi + series - shift
}

/// Gamma function for `x > 0` (overflows to +inf above ~171 at `f64`).
pub fn gamma<T: Real>(x: T) -> T {
    ln_gamma(x).exp()
}

/// Bessel function of the first kind, order zero.
///
/// Power series for `|x| < 12` (worst-case cancellation at the switch point
/// keeps ~11 correct digits), Hankel asymptotic expansion with exact
/// rational coefficients above (error ≲ 1e-12 for `x ≥ 12`).
pub fn bessel_j0<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax < T::of(12.0) {
        // J0(x) = Σ (-1)^m (x²/4)^m / (m!)²
        let q = ax * ax * T::of(0.25);
        let mut term = T::one();
        let mut sum = T::one();
        let mut m = 1.0f64;
        loop {
            term = -term * q / T::of(m * m);
            sum += term;
            if term.abs() < T::eps() * sum.abs() + T::of(1e-300) || m > 60.0 {
                break;
            }
            m += 1.0;
        }
        sum
    } else {
        let (p, q) = hankel_pq(ax);
        let omega = ax - T::FRAC_PI_4();
        (T::of(2.0) / (T::PI() * ax)).sqrt() * (omega.cos() * p - omega.sin() * q)
    }
}

/// Hankel asymptotic amplitude series for order zero:
/// `P = Σ (-1)^k a_{2k} / x^{2k}`, `Q = Σ (-1)^k a_{2k+1} / x^{2k+1}`,
/// with `a_{k+1} = -a_k (2k+1)² / (8(k+1))`. Summed to the smallest term.
fn hankel_pq<T: Real>(x: T) -> (T, T) {
    let mut p = T::zero();
    let mut q = T::zero();
    let mut a = T::one(); // a_k / x^k, starting at k=0
    let mut k = 0u32;
    let mut last = T::infinity();
    loop {
        let mag = a.abs();
        if mag > last || mag < T::of(1e-18) || k > 40 {
            break;
        }
        last = mag;
        if k % 4 == 0 {
            p += a; // (-1)^{k/2} with k even: k=0,4,.. => +a_{2j} pattern
        } else if k % 4 == 2 {
            p -= a;
        } else if k % 4 == 1 {
            q += a;
        } else {
            q -= a;
        }
        let kk = T::of(k as f64);
        a = -a * (T::of(2.0) * kk + T::one()).powi(2) / (T::of(8.0) * (kk + T::one()) * x);
        k += 1;
    }
    (p, q)
}

/// Exponentially scaled modified Bessel function `I0(x)·e^{-x}` for `x ≥ 0`.
///
/// Series (all-positive, no cancellation) below 15, asymptotic
/// `Σ ((2k-1)!!)² / (k! (8x)^k) / √(2πx)` above; both branches good to
/// ~1e-12 relative, which far exceeds what the Riesz spherical-mean
/// quadratures need.
pub fn bessel_i0e<T: Real>(x: T) -> T {
    debug_assert!(x >= T::zero(), "i0e defined for x >= 0 here");
    if x < T::of(15.0) {
        let q = x * x * T::of(0.25);
        let mut term = T::one();
        let mut sum = T::one();
        let mut m = 1.0f64;
        loop {
            term = term * q / T::of(m * m);
            sum += term;
            if term < T::eps() * sum {
                break;
            }
            m += 1.0;
        }
        sum * (-x).exp()
    } else {
        let mut term = T::one();
        let mut sum = T::one();
        let mut k = 0.0f64;
        let mut last = T::infinity();
        loop {
            let next = term * T::of((2.0 * k + 1.0) * (2.0 * k + 1.0)) / (T::of(8.0 * (k + 1.0)) * x);
            if next.abs() > last || next.abs() < T::of(1e-18) || k > 40.0 {
                break;
            }
            last = next.abs();
            sum += next;
            term = next;
            k += 1.0;
        }
        sum / (T::of(2.0) * T::PI() * x).sqrt()
    }
}

/// Regularized lower incomplete gamma `P(a, x) = γ(a,x)/Γ(a)` for `a > 0`,
/// `x ≥ 0`: power series for `x < a + 1`, Lentz continued fraction for the
/// complement above. Relative accuracy ~1e-14 away from the underflow range.
pub fn gamma_p<T: Real>(a: T, x: T) -> T {
    if !(a > T::zero()) || x < T::zero() {
        return T::nan();
    }
    if x == T::zero() {
        return T::zero();
    }
    if x < a + T::one() {
        // P(a,x) = e^{-x} x^a / Γ(a) · Σ_n x^n / (a(a+1)…(a+n)).
        let mut ap = a;
        let mut del = T::one() / a;
        let mut sum = del;
        for _ in 0..500 {
            ap += T::one();
            del = del * x / ap;
            sum += del;
            if del.abs() < sum.abs() * T::eps() {
                break;
            }
        }
        sum * (a * x.ln() - x - ln_gamma(a)).exp()
    } else {
        T::one() - gamma_q_cf(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q<T: Real>(a: T, x: T) -> T {
    if !(a > T::zero()) || x < T::zero() {
        return T::nan();
    }
    if x < a + T::one() {
        T::one() - gamma_p(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

/// Continued fraction for `Q(a,x)`, valid for `x ≥ a + 1` (modified Lentz).
fn gamma_q_cf<T: Real>(a: T, x: T) -> T {
    let fpmin = T::of(1e-300);
    let mut b = x + T::one() - a;
    let mut c = T::one() / fpmin;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..500 {
        let an = -T::of(i as f64) * (T::of(i as f64) - a);
        b += T::of(2.0);
        d = an * d + b;
        if d.abs() < fpmin {
            d = fpmin;
        }
        c = b + an / c;
        if c.abs() < fpmin {
            c = fpmin;
        }
        d = T::one() / d;
        let del = d * c;
        h *= del;
        if (del - T::one()).abs() < T::eps() {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * h
}

/// Error function via `erf(x) = sgn(x)·P(1/2, x²)`; ~1e-14 relative.
pub fn erf<T: Real>(x: T) -> T {
    let p = gamma_p(T::of(0.5), x * x);
    if x < T::zero() {
        -p
    } else {
        p
    }
}

/// Complementary error function, accurate in the deep tail
/// (`erfc(x) = Q(1/2, x²)` avoids the `1 - erf` cancellation).
pub fn erfc<T: Real>(x: T) -> T {
    if x < T::zero() {
        T::one() + gamma_p(T::of(0.5), x * x)
    } else {
        gamma_q(T::of(0.5), x * x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf<T: Real>(x: T) -> T {
    let half = T::of(0.5);
    half * erfc(-x / T::of(std::f64::consts::SQRT_2))
}
