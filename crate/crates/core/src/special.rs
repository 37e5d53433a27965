//! Special functions in log space.
//!
//! The regularized lower incomplete gamma `P(a, x)` is evaluated with the
//! usual split: power series for `x < a + 1`, Lentz continued fraction for
//! the complement otherwise. Everything is returned as a logarithm so that
//! products over thousands of observations never under- or overflow.

use libm::erfc;
use statrs::function::erf::erfc_inv;

pub use statrs::function::gamma::{digamma, ln_gamma};

const MAX_ITER: usize = 2000;
const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Log of `Σ_{k≥0} x^k / ((a+1)(a+2)…(a+k))`.
fn ln_series_sum(a: f64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term < sum * EPS {
            break;
        }
    }
    sum.ln()
}

/// Log of the continued fraction part `h` in `Q(a,x) = e^{-x} x^a h / Γ(a)`.
fn ln_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h.ln()
}

/// `ln P(a, x)`, the log regularized lower incomplete gamma function.
///
/// Requires `a > 0`; `x <= 0` gives `-inf` and `x = +inf` gives `0`.
pub fn ln_gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < a + 1.0 {
        a * x.ln() - x - ln_gamma(a + 1.0) + ln_series_sum(a, x)
    } else {
        let ln_q = a * x.ln() - x - ln_gamma(a) + ln_continued_fraction(a, x);
        ln_one_minus_exp(ln_q)
    }
}

/// `ln Q(a, x) = ln(1 - P(a, x))`.
pub fn ln_gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return f64::NEG_INFINITY;
    }
    if x < a + 1.0 {
        let ln_p = a * x.ln() - x - ln_gamma(a + 1.0) + ln_series_sum(a, x);
        ln_one_minus_exp(ln_p)
    } else {
        a * x.ln() - x - ln_gamma(a) + ln_continued_fraction(a, x)
    }
}

/// `ln(P(a, x) / x^a)`, finite down to `x = 0` where it equals `-ln Γ(a+1)`.
///
/// This is the quantity that appears in the Slash marginal density, where the
/// `x^a` factors of numerator and denominator cancel analytically.
pub fn ln_gamma_p_over_pow(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return -ln_gamma(a + 1.0);
    }
    if x.is_infinite() {
        return f64::NEG_INFINITY;
    }
    if x < a + 1.0 {
        -x - ln_gamma(a + 1.0) + ln_series_sum(a, x)
    } else {
        ln_gamma_p(a, x) - a * x.ln()
    }
}

/// `ln(γ(a, x) / x^a)` with `γ` the unregularized lower incomplete gamma.
///
/// Equals `ln Γ(a) + ln_gamma_p_over_pow(a, x)` but avoids the cancellation
/// between `ln Γ(a)` and `ln Γ(a + 1)` when `a` is large.
pub fn ln_lower_gamma_over_pow(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return -a.ln();
    }
    if x.is_infinite() {
        return f64::NEG_INFINITY;
    }
    if x < a + 1.0 {
        -x - a.ln() + ln_series_sum(a, x)
    } else {
        ln_gamma(a) + ln_gamma_p(a, x) - a * x.ln()
    }
}

/// Log CDF of a Gamma(shape, rate) law at `x`.
pub fn ln_gamma_cdf(x: f64, shape: f64, rate: f64) -> f64 {
    ln_gamma_p(shape, rate * x)
}

/// `ln(1 - e^{v})` for `v <= 0`, accurate at both ends.
pub fn ln_one_minus_exp(v: f64) -> f64 {
    if v > -std::f64::consts::LN_2 {
        (-v.exp_m1()).ln()
    } else {
        (-v.exp()).ln_1p()
    }
}

/// Numerically stable `ln Σ e^{v_i}`. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// Log of the standard normal CDF.
pub fn ln_norm_cdf(z: f64) -> f64 {
    if z > 5.0 {
        (-0.5 * erfc(z / std::f64::consts::SQRT_2)).ln_1p()
    } else if z > -30.0 {
        (0.5 * erfc(-z / std::f64::consts::SQRT_2)).ln()
    } else {
        // Asymptotic expansion of the Mills ratio.
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2)
            + 105.0 / (z2 * z2 * z2 * z2);
        -0.5 * z2 - LN_SQRT_2PI - (-z).ln() + series.ln()
    }
}

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile, polished with one Newton step.
pub fn norm_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    let density = (-0.5 * z * z - LN_SQRT_2PI).exp();
    if density > 0.0 {
        z - (norm_cdf(z) - p) / density
    } else {
        z
    }
}
