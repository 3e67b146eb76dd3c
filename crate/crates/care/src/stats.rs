//! Scalar standard-normal kernels shared across the pipeline.
//!
//! Tail probabilities are always evaluated through `erfc`, which keeps full
//! relative accuracy deep into the tails. Forms like `1 - cdf(x)` would lose
//! all precision past `x ~ 8` and are never used here.

use statrs::function::erf;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() * INV_SQRT_2PI
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / SQRT_2)
}

/// Standard normal survival function `P(Z > x)`.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erf::erfc(x / SQRT_2)
}

/// z such that `P(|Z| > z) = p`, the two-sided standard normal quantile.
///
/// Requires `0 < p < 1`; callers validate.
#[inline]
pub fn two_sided_z(p: f64) -> f64 {
    SQRT_2 * erf::erfc_inv(p)
}

/// Two-sided tail probability of a z-statistic: `P(|Z| > |z|)`.
#[inline]
pub fn two_sided_p(z: f64) -> f64 {
    erf::erfc(z.abs() / SQRT_2)
}
