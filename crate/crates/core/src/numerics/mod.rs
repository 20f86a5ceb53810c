//! Numerical building blocks: special functions, adaptive quadrature,
//! one-dimensional searches and a double-double type for the
//! cancellation-prone series oracle.

mod double_double;
mod expint;
mod quadrature;
mod search;

pub use double_double::DoubleDouble;
pub use expint::{exp_integral_e1, scaled_exp_integral_e1, scaled_exp_integral_e1_dd};
pub use quadrature::{integrate_adaptive, Integral, QuadratureOptions};
pub use search::{bisect_sign_change, golden_section_max};

/// Natural logarithm. Every formula in this crate uses base e; routing the
/// double-log terms through one helper keeps the base from drifting.
#[inline]
pub fn ln(v: f64) -> f64 {
    v.ln()
}

/// `ln(ln v)`, defined for `v > e^0 = 1` and positive for `v > e`.
#[inline]
pub fn ln_ln(v: f64) -> f64 {
    ln(ln(v))
}

/// Harmonic number `H_n = sum_{k=1}^n 1/k`, summed smallest term first.
pub fn harmonic(n: usize) -> f64 {
    (1..=n).rev().map(|k| 1.0 / k as f64).sum()
}

/// Binomial coefficient as an `f64`; exact while the result fits in 53 bits.
pub fn binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc as f64
}
