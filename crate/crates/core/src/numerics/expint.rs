use super::double_double::{DoubleDouble, EULER_GAMMA};

const EULER: f64 = 0.577_215_664_901_532_9;
const TINY: f64 = 1e-300;

/// Power series `E1(x) = -gamma - ln x - sum_{n>=1} (-x)^n / (n n!)`, used for `x <= 1`.
fn e1_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 1..200 {
        term *= -x / n as f64;
        let contrib = term / n as f64;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER - x.ln() - sum
}

/// `e^x E1(x)` by the modified-Lentz continued fraction, used for `x > 1`.
fn scaled_e1_continued_fraction(x: f64) -> f64 {
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Exponential integral `E1(x) = int_x^inf e^-t / t dt` for `x > 0`.
///
/// Series below 1, continued fraction above. Returns NaN for `x <= 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x <= 1.0 {
        e1_series(x)
    } else {
        (-x).exp() * scaled_e1_continued_fraction(x)
    }
}

/// `e^x E1(x)`, finite for every `x > 0` even where `e^x` alone overflows.
pub fn scaled_exp_integral_e1(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x <= 1.0 {
        x.exp() * e1_series(x)
    } else {
        scaled_e1_continued_fraction(x)
    }
}

/// Double-double `e^x E1(x)`. The alternating binomial sums of the series
/// oracle amplify the rounding error of each term by up to `C(30, 15)`, so
/// `f64` terms are not accurate enough there. The argument is taken in
/// double-double too, so a product such as `j x` need not be rounded first.
pub fn scaled_exp_integral_e1_dd(xd: DoubleDouble) -> DoubleDouble {
    let x = xd.to_f64();
    assert!(x > 0.0, "scaled E1 requires x > 0, got {x}");
    if x <= 4.0 {
        let mut term = DoubleDouble::ONE;
        let mut sum = DoubleDouble::ZERO;
        for n in 1..400 {
            term = -(term * xd) / n as f64;
            let contrib = term / n as f64;
            sum = sum + contrib;
            if contrib.hi().abs() < 1e-34 {
                break;
            }
        }
        let e1 = -EULER_GAMMA - xd.ln() - sum;
        xd.exp() * e1
    } else {
        let mut b = xd + 1.0;
        let mut c = DoubleDouble::from(1.0 / TINY);
        let mut d = DoubleDouble::ONE / b;
        let mut h = d;
        for i in 1..20_000u64 {
            let an = -((i * i) as f64);
            b = b + 2.0;
            d = DoubleDouble::ONE / (d * an + b);
            c = b + DoubleDouble::from(an) / c;
            let del = c * d;
            h = h * del;
            if (del - 1.0).abs().hi() < 1e-33 {
                break;
            }
        }
        h
    }
}
