#![allow(dead_code)]
//! Test oracles independent of the library's own numerics.

use nalgebra::{Cholesky, DMatrix, DVector};
use smnmix::data::Dataset;
use smnmix::RegressionPrior;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (v, err) = gk15(f, a, b);
    assert!(!err.is_nan(), "integrand is NaN on [{a}, {b}]");
    if err <= tol.max(64.0 * f64::EPSILON * v.abs()) || depth == 0 || (b - a).abs() < 1e-15 {
        return v;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`.
pub fn quad<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&mut f, a, b, tol, 40)
}

/// [`quad`] with at most `depth` bisections.
pub fn quad_depth<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    adapt(&mut f, a, b, tol, depth)
}

/// [`quad`] with a tolerance relative to a first coarse estimate of the integral.
pub fn quad_rel<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel: f64) -> f64 {
    let m = 0.5 * (a + b);
    let coarse = (gk15(&mut f, a, m).0 + gk15(&mut f, m, b).0).abs();
    adapt(&mut f, a, b, (rel * coarse).max(f64::MIN_POSITIVE), 40)
}

/// `∫_a^∞ f` through `x = a + t/(1−t)`.
pub fn quad_inf<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: f64) -> f64 {
    quad(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let x = a + t / (1.0 - t);
            let v = f(x) / ((1.0 - t) * (1.0 - t));
            if v.is_finite() { v } else { 0.0 }
        },
        0.0,
        1.0,
        tol,
    )
}

/// `∫_{−∞}^{∞} f` split at `c`.
pub fn quad_real<F: FnMut(f64) -> f64>(mut f: F, c: f64, tol: f64) -> f64 {
    quad_inf(|x| f(c + (x - c)), c, 0.5 * tol) + quad_inf(|x| f(2.0 * c - x), c, 0.5 * tol)
}

/// Kolmogorov–Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// KS critical value at level 0.01 for large samples.
pub fn ks_critical_01(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Monte Carlo standard error of the mean of an autocorrelated series by
/// non-overlapping batch means.
pub fn batch_se(v: &[f64], batches: usize) -> f64 {
    let len = v.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| v[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64).collect();
    let (_, sd) = mean_sd(&means);
    sd / (batches as f64).sqrt()
}

pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Small dataset with an intercept and one covariate.
pub fn toy_dataset(n: usize) -> Dataset {
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for i in 0..n {
        let x = (i as f64 * 0.7).sin() * 2.0;
        y.push(0.5 + 1.5 * x + ((i * 37 % 17) as f64 / 17.0 - 0.5) * 1.2);
        rows.push(vec![1.0, x]);
    }
    Dataset::from_rows(y, &rows, vec!["intercept".into(), "x".into()]).unwrap()
}

pub fn gauss(y: f64, mu: f64, var: f64) -> f64 {
    (-(y - mu).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// `∫ N(y | μ, γσ²/u) h(u) du` for each component.
pub fn marginal_by_quadrature(y: f64, mu: f64, sigma2: f64, nu_t: f64, nu_s: f64) -> [f64; 3] {
    let gt = (nu_t - 2.0) / nu_t;
    let gs = (nu_s - 1.0) / nu_s;
    let h = 0.5 * nu_t;
    let ln_norm = h * h.ln() - ln_gamma(h);
    let t = quad_inf(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            gauss(y, mu, gt * sigma2 / u) * (ln_norm + (h - 1.0) * u.ln() - h * u).exp()
        },
        0.0,
        1e-14,
    );
    let s = quad(|u| if u <= 0.0 { 0.0 } else { gauss(y, mu, gs * sigma2 / u) * nu_s * u.powf(nu_s - 1.0) }, 0.0, 1.0, 1e-14);
    [gauss(y, mu, sigma2), t, s]
}

/// Exact posterior under `β ~ N(μ₀, τ₀² I)`, `σ² ~ IG(a₀, b₀)` and normal
/// errors, by quadrature over `ln σ²` of the `β`-integrated likelihood.
pub struct ConjugateOracle {
    pub beta_mean: Vec<f64>,
    pub beta_var: Vec<f64>,
    pub sigma2_mean: f64,
    pub sigma2_var: f64,
}

pub fn conjugate_oracle(data: &Dataset, prior: &RegressionPrior) -> ConjugateOracle {
    let x = data.x().clone();
    let y = data.y().clone();
    let (n, q) = (data.n() as f64, data.q());
    let mu0 = DVector::from_column_slice(&prior.mu0);
    let given = |s2: f64| {
        let a = x.transpose() * &x / s2 + DMatrix::identity(q, q) / prior.tau0_sq;
        let b = x.transpose() * &y / s2 + &mu0 / prior.tau0_sq;
        let chol = Cholesky::new(a).unwrap();
        let mean = chol.solve(&b);
        let cov = chol.inverse();
        let ln_det_a = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let ln_ml = -0.5 * n * s2.ln() - 0.5 * ln_det_a
            - 0.5 * (y.dot(&y) / s2 + mu0.dot(&mu0) / prior.tau0_sq - b.dot(&mean));
        let ln_prior = -(prior.a0 + 1.0) * s2.ln() - prior.b0 / s2;
        (ln_ml + ln_prior + s2.ln(), mean, cov)
    };
    // locate the mode to centre the integration range
    let grid: Vec<f64> = (0..400).map(|k| -8.0 + 16.0 * k as f64 / 399.0).collect();
    let peak = grid.iter().map(|&t| given(t.exp()).0).fold(f64::NEG_INFINITY, f64::max);
    let w = |t: f64| (given(t.exp()).0 - peak).exp();
    let (lo, hi) = (-8.0, 8.0);
    // the log weight carries cancellation noise near 1e-12, so ask for less
    let z = quad_depth(w, lo, hi, 1e-10, 24);
    let e = |f: &dyn Fn(f64) -> f64| quad_depth(|t| w(t) * f(t), lo, hi, 1e-10, 24) / z;
    let mut beta_mean = vec![0.0; q];
    let mut beta_var = vec![0.0; q];
    for a in 0..q {
        beta_mean[a] = e(&|t| given(t.exp()).1[a]);
        let m2 = e(&|t| {
            let (_, m, c) = given(t.exp());
            c[(a, a)] + m[a] * m[a]
        });
        beta_var[a] = m2 - beta_mean[a] * beta_mean[a];
    }
    let sigma2_mean = e(&|t| t.exp());
    let sigma2_var = e(&|t| (2.0 * t).exp()) - sigma2_mean * sigma2_mean;
    ConjugateOracle { beta_mean, beta_var, sigma2_mean, sigma2_var }
}
