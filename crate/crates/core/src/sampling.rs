//! Random variate generators used by the sampler.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::smn::ModelKind;
use crate::special::{ln_gamma, ln_gamma_p, ln_norm_cdf, log_sum_exp, norm_quantile};

/// Smallest probability a Dirichlet coordinate is allowed to take.
pub const SIMPLEX_FLOOR: f64 = 1e-300;

/// Law of the mixing variable `U` for one component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingLaw {
    pub kind: ModelKind,
    pub nu: f64,
}

impl MixingLaw {
    pub fn new(kind: ModelKind, nu: f64) -> Self {
        MixingLaw { kind, nu }
    }
}

/// Uniform draw on the half-open interval `(0, 1]`.
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

pub fn sample_mixing<R: Rng + ?Sized>(law: &MixingLaw, rng: &mut R) -> f64 {
    match law.kind {
        ModelKind::Normal => 1.0,
        ModelKind::StudentT => sample_gamma(0.5 * law.nu, 0.5 * law.nu, rng),
        ModelKind::Slash => open_unit(rng).powf(1.0 / law.nu),
    }
}

/// Gamma(shape, rate) draw, kept strictly positive.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(shape, 1.0 / rate).expect("positive gamma parameters");
    g.sample(rng).max(f64::MIN_POSITIVE)
}

/// `ln G` for `G ~ Gamma(shape, 1)`, accurate even when `G` underflows.
pub fn sample_ln_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        g.ln()
    } else {
        // G(a) = G(a + 1) U^{1/a}
        let g: f64 = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
        g.ln() + open_unit(rng).ln() / shape
    }
}

/// Log of a Dirichlet(alpha) draw, coordinates floored at [`SIMPLEX_FLOOR`].
pub fn sample_log_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let ln_g: Vec<f64> = alpha.iter().map(|&a| sample_ln_gamma(a, rng)).collect();
    let total = log_sum_exp(&ln_g);
    let floor = SIMPLEX_FLOOR.ln();
    let floored: Vec<f64> = ln_g.iter().map(|v| (v - total).max(floor)).collect();
    let renorm = log_sum_exp(&floored);
    floored.iter().map(|v| v - renorm).collect()
}

/// Draw from Gamma(shape, rate) restricted to `(0, 1]`.
///
/// `rate = 0` is the Beta(shape, 1) limit. Easy regimes use exact rejection
/// (Beta(shape,1) envelope for small rates, the untruncated Gamma when most
/// of its mass lies below one); otherwise the regularized incomplete gamma
/// is inverted in log space.
pub fn sample_truncated_gamma_01<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0 && rate >= 0.0);
    if rate <= 1.0 {
        // target ∝ u^{a-1} e^{-bu}; envelope u^{a-1}; acceptance >= e^{-1}
        loop {
            let u = open_unit(rng).powf(1.0 / shape).max(f64::MIN_POSITIVE);
            if rate == 0.0 || open_unit(rng).ln() <= -rate * u {
                return u;
            }
        }
    }
    let ln_mass = ln_gamma_p(shape, rate);
    if ln_mass > -std::f64::consts::LN_2 {
        let g = Gamma::new(shape, 1.0 / rate).expect("positive gamma parameters");
        loop {
            let u: f64 = g.sample(rng);
            if u <= 1.0 && u > 0.0 {
                return u;
            }
        }
    }
    let target = open_unit(rng).ln() + ln_mass;
    let x = invert_ln_gamma_p(shape, target, rate);
    (x / rate).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Solve `ln P(a, x) = target` for `x ∈ (0, upper]` with safeguarded Newton
/// steps on `t = ln x`.
fn invert_ln_gamma_p(a: f64, target: f64, upper: f64) -> f64 {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = upper.ln();
    // Small-x asymptote P(a,x) ≈ x^a / Γ(a+1).
    let mut t = ((target + ln_gamma(a + 1.0)) / a).min(hi);
    let ln_gamma_a = ln_gamma(a);
    for _ in 0..200 {
        let x = t.exp();
        let lp = ln_gamma_p(a, x);
        let h = lp - target;
        if h > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        if h.abs() < 1e-14 {
            return x;
        }
        // d ln P / d ln x = x f(x) / P(x), f the Gamma(a,1) density
        let slope = (a * t - x - ln_gamma_a - lp).exp();
        let mut next = t - h / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = if lo.is_finite() { 0.5 * (lo + hi) } else { hi - 1.0 - (hi - t).abs() };
        }
        if (next - t).abs() < 1e-15 * t.abs().max(1.0) {
            return next.exp();
        }
        t = next;
    }
    t.exp()
}

/// Draw from `N(mu, sigma2)` conditioned on `(-∞, kappa]`.
pub fn sample_truncated_normal_upper<R: Rng + ?Sized>(mu: f64, sigma2: f64, kappa: f64, rng: &mut R) -> f64 {
    let sigma = sigma2.sqrt();
    let bound = (kappa - mu) / sigma;
    let z = if bound >= 0.0 {
        loop {
            let z: f64 = StandardNormal.sample(rng);
            if z <= bound {
                break z;
            }
        }
    } else if bound >= -4.0 {
        let ln_mass = ln_norm_cdf(bound);
        let p = (open_unit(rng).ln() + ln_mass).exp();
        norm_quantile(p.clamp(f64::MIN_POSITIVE, 0.5)).min(bound)
    } else {
        -sample_normal_tail(-bound, rng)
    };
    mu + sigma * z
}

/// Standard normal conditioned on `[c, ∞)` for `c > 0`, exponential
/// rejection with the optimal rate.
fn sample_normal_tail<R: Rng + ?Sized>(c: f64, rng: &mut R) -> f64 {
    let rate = 0.5 * (c + (c * c + 4.0).sqrt());
    loop {
        let e: f64 = Exp1.sample(rng);
        let z = c + e / rate;
        let d = z - rate;
        if open_unit(rng).ln() <= -0.5 * d * d {
            return z;
        }
    }
}

/// Draw an index from unnormalized log weights.
pub fn sample_categorical_ln<R: Rng + ?Sized>(ln_weights: &[f64], rng: &mut R) -> usize {
    let total = log_sum_exp(ln_weights);
    let mut v = rng.random::<f64>();
    let mut last = 0;
    for (i, w) in ln_weights.iter().enumerate() {
        let p = (w - total).exp();
        if p > 0.0 {
            last = i;
        }
        if v < p {
            return i;
        }
        v -= p;
    }
    last
}
