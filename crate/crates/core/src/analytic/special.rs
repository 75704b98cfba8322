//! Hermite polynomials, the Gaussian kernel and its tail, and the closed-form
//! kernels that appear in the integral representations.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;

use crate::error::{invalid, Result};

/// Largest Hermite order accepted by [`hermite`].
pub const HERMITE_MAX_ORDER: usize = 10_000;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Probabilists' Hermite polynomial `H_n(x)` by the three-term recurrence.
pub fn hermite(n: usize, x: f64) -> Result<f64> {
    if n > HERMITE_MAX_ORDER {
        return Err(invalid(format!(
            "Hermite order {n} exceeds the guard {HERMITE_MAX_ORDER}"
        )));
    }
    Ok(hermite_unchecked(n, x))
}

pub(crate) fn hermite_unchecked(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for k in 1..n {
                let next = x * cur - k as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Fills `out[k] = H_k(x)` for `k = 0..out.len()`.
pub fn hermite_table(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 2..out.len() {
        out[k] = x * out[k - 1] - (k - 1) as f64 * out[k - 2];
    }
}

/// Centered Gaussian density with variance `s`, evaluated at `x`.
pub fn gaussian_density(s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(invalid(format!("variance must be positive, got {s}")));
    }
    Ok(density(s, x))
}

#[inline]
pub(crate) fn density(s: f64, x: f64) -> f64 {
    FRAC_1_SQRT_2PI / s.sqrt() * (-0.5 * x * x / s).exp()
}

/// Spatial derivative `d/dx p_s(x)`.
#[inline]
pub(crate) fn density_dx(s: f64, x: f64) -> f64 {
    -x / s * density(s, x)
}

/// Standard normal distribution function.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Upper tail `1 - Φ(x)`, accurate far into the tail.
#[inline]
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `e^{x²/2}·(1 - Φ(x))` for `x ≥ 0`, free of overflow.
fn scaled_tail(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 26.0 {
        (0.5 * x * x).exp() * normal_sf(x)
    } else {
        // Mills ratio asymptotic series; the omitted term is below 1e-13 relative here.
        let r = 1.0 / (x * x);
        let series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r * (1.0 - 9.0 * r))));
        series / (x * (2.0 * PI).sqrt())
    }
}

/// Closed form `e^{(x²-y²)/2}·(Φ(x) - 1_{x>y})`, defined for every `(y, x)`.
pub fn delta_closed(y: f64, x: f64) -> f64 {
    if x > y {
        if x >= 0.0 {
            -(-0.5 * y * y).exp() * scaled_tail(x)
        } else {
            // y < x < 0, so the exponent is non-positive.
            -(0.5 * (x * x - y * y)).exp() * normal_sf(x)
        }
    } else if x <= 0.0 {
        (-0.5 * y * y).exp() * scaled_tail(-x)
    } else {
        // 0 < x <= y
        (0.5 * (x * x - y * y)).exp() * normal_cdf(x)
    }
}

/// `∫_0^delta ∂_z p_τ(z) dτ = -2·sign(z)·(1 - Φ(|z|/√delta))`, with value 0 at `z = 0`.
pub fn clark_kernel_wiener(z: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(invalid(format!("time span must be positive, got {delta}")));
    }
    Ok(clark_kernel_span(z, 0.0, delta))
}

/// `∫_a^b ∂_z p_τ(z) dτ` for `0 ≤ a ≤ b`.
#[inline]
pub(crate) fn clark_kernel_span(z: f64, a: f64, b: f64) -> f64 {
    if z == 0.0 || b <= a {
        return 0.0;
    }
    let az = z.abs();
    let tail = |tau: f64| if tau <= 0.0 { 0.0 } else { normal_sf(az / tau.sqrt()) };
    -2.0 * z.signum() * (tail(b) - tail(a))
}
