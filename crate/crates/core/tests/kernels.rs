mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use smnmix::sampling::*;
use smnmix::smn::*;
use smnmix::special::*;
use statrs::function::gamma::ln_gamma as sr_ln_gamma;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn normal_pdf(y: f64, var: f64) -> f64 {
    (-0.5 * y * y / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn gamma_pdf(u: f64, a: f64, b: f64) -> f64 {
    (a * b.ln() + (a - 1.0) * u.ln() - b * u - sr_ln_gamma(a)).exp()
}

/// `∫ N(y; μ, σ²/u) h(u|ν) du` by quadrature over the mixing variable.
fn mixture_density(y: f64, p: &SmnParams, kind: ModelKind) -> f64 {
    let r = y - p.mu;
    match kind {
        ModelKind::Normal => normal_pdf(r, p.sigma2),
        ModelKind::StudentT => quad_inf(|u| normal_pdf(r, p.sigma2 / u) * gamma_pdf(u, p.nu / 2.0, p.nu / 2.0), 0.0, 1e-14),
        ModelKind::Slash => quad(|u| normal_pdf(r, p.sigma2 / u) * p.nu * u.powf(p.nu - 1.0), 0.0, 1.0, 1e-14),
    }
}

#[test]
fn student_t_density_matches_mixture_quadrature() {
    let p = SmnParams::new(0.0, 1.0, 3.0);
    let exact = marginal_logdensity(1.0, &p, ModelKind::StudentT).exp();
    let oracle = mixture_density(1.0, &p, ModelKind::StudentT);
    assert!(((exact - oracle) / oracle).abs() < 1e-8, "{exact} vs {oracle}");
    let sr = statrs::distribution::StudentsT::new(0.0, 1.0, 3.0).unwrap();
    use statrs::distribution::Continuous;
    assert!((exact - sr.pdf(1.0)).abs() < 1e-12);
}

#[test]
fn slash_density_matches_mixture_quadrature() {
    for (y, s2, nu) in [(0.3, 1.0, 1.25), (2.5, 0.7, 3.36), (-4.0, 2.0, 1.05), (0.0, 1.0, 1.0)] {
        let p = SmnParams::new(0.0, s2, nu);
        let exact = marginal_logdensity(y, &p, ModelKind::Slash).exp();
        let oracle = mixture_density(y, &p, ModelKind::Slash);
        assert!(((exact - oracle) / oracle).abs() < 1e-8, "y={y} ν={nu}: {exact} vs {oracle}");
    }
    let at_mode = marginal_logdensity(0.0, &SmnParams::new(0.0, 1.0, 1.0), ModelKind::Slash);
    assert!((at_mode - (1.0f64 / 1.5 / (2.0 * std::f64::consts::PI).sqrt()).ln()).abs() < 1e-12);
}

#[test]
fn slash_cdf_matches_integrated_density() {
    for (y, nu) in [(-0.5, 1.25), (-3.0, 1.1), (1.5, 3.36), (-12.0, 2.0), (0.0, 1.5)] {
        let p = SmnParams::new(0.2, 1.3, nu);
        let f = |t: f64| marginal_logdensity(t, &p, ModelKind::Slash).exp();
        let lower = quad_inf(|x| f(y - (x - y)), y, 1e-13);
        let exact = marginal_logcdf(y, &p, ModelKind::Slash).exp();
        assert!(((exact - lower) / lower).abs() < 1e-7, "y={y}: {exact} vs {lower}");
    }
}

#[test]
fn student_t_cdf_matches_statrs() {
    use statrs::distribution::ContinuousCDF;
    let d = statrs::distribution::StudentsT::new(0.5, 1.2f64.sqrt(), 4.0).unwrap();
    for y in [-30.0, -2.0, 0.5, 1.0, 6.0] {
        let ours = marginal_logcdf(y, &SmnParams::new(0.5, 1.2, 4.0), ModelKind::StudentT).exp();
        assert!((ours - d.cdf(y)).abs() < 1e-12, "{y}");
    }
}

#[test]
fn log_gamma_cdf_matches_quadrature() {
    let oracle = quad(|u| gamma_pdf(u, 2.5, 1.3), 0.0, 0.5, 1e-16);
    let ours = ln_gamma_cdf(0.5, 2.5, 1.3).exp();
    assert!((ours - oracle).abs() < 1e-10, "{ours} vs {oracle}");
    assert!((ln_gamma_cdf(1.0, 1.0, 1.0) - (1.0 - (-1.0f64).exp()).ln()).abs() < 1e-14);
    assert!(ln_gamma_cdf(1e4, 2.0, 1.0).abs() < 1e-300);
}

#[test]
fn densities_integrate_to_one_on_grid() {
    for kind in [ModelKind::Normal, ModelKind::StudentT, ModelKind::Slash] {
        for nu in [1.05, 2.5, 4.0, 30.0] {
            if kind == ModelKind::StudentT && nu <= 2.0 {
                continue;
            }
            let p = SmnParams::new(-1.0, 2.0, nu);
            let total = quad_real(|y| marginal_logdensity(y, &p, kind).exp(), -1.0, 1e-10);
            assert!((total - 1.0).abs() < 1e-6, "{kind} ν={nu}: {total}");
        }
    }
}

#[test]
fn heavy_tails_approach_normal() {
    let nu = 1e6;
    let p = SmnParams::new(0.0, 1.0, nu);
    for y in [-5.0, -4.0, -2.0, 0.0, 1.0, 3.0, 4.0, 5.0] {
        let n = marginal_logdensity(y, &p, ModelKind::Normal);
        let slash = marginal_logdensity(y, &p, ModelKind::Slash) - n;
        assert!(slash.abs() < 1e-4, "slash at {y}: {slash}");
        // The Student-t gap has leading term (y⁴/4 − y²/2 − 1/4)/ν, which is
        // 1.44e-4 at |y| = 5, so compare against the expansion as well.
        let t = marginal_logdensity(y, &p, ModelKind::StudentT) - n;
        let leading = (y.powi(4) / 4.0 - y * y / 2.0 - 0.25) / nu;
        assert!((t - leading).abs() < 1e-8, "student-t at {y}: {t} vs {leading}");
        if y.abs() <= 4.0 {
            assert!(t.abs() < 1e-4, "student-t at {y}: {t}");
        }
    }
}

#[test]
fn variance_correction_gives_common_variance() {
    let mut r = rng(4);
    for (kind, nu) in [(ModelKind::Normal, 1.0), (ModelKind::StudentT, 6.0), (ModelKind::Slash, 3.0)] {
        let gamma = variance_correction(kind, nu).unwrap();
        let sigma2 = 1.7;
        let n = 200_000;
        let ys: Vec<f64> = (0..n)
            .map(|_| {
                let u = sample_mixing(&MixingLaw::new(kind, nu), &mut r);
                let z: f64 = StandardNormal.sample(&mut r);
                (gamma * sigma2 / u).sqrt() * z
            })
            .collect();
        let sq: Vec<f64> = ys.iter().map(|y| y * y).collect();
        let (m, sd) = mean_sd(&sq);
        let se = sd / (n as f64).sqrt();
        assert!((m - sigma2).abs() < 3.0 * se, "{kind}: {m} vs {sigma2} (se {se})");
    }
}

#[test]
fn moments_match_closed_forms() {
    for i in 0..20 {
        let nu = 4.5 + i as f64 * 1.7;
        let t2 = moment_k(ModelKind::StudentT, nu, 2).unwrap();
        let t4 = moment_k(ModelKind::StudentT, nu, 4).unwrap();
        assert!((t2 - nu / (nu - 2.0)).abs() < 1e-10);
        assert!((t4 - nu * nu / ((nu - 2.0) * (nu - 4.0))).abs() < 1e-9);
        assert!((excess_kurtosis(ModelKind::StudentT, nu).unwrap() - 6.0 / (nu - 4.0)).abs() < 1e-8);
        let s2 = moment_k(ModelKind::Slash, nu, 2).unwrap();
        let s4 = moment_k(ModelKind::Slash, nu, 4).unwrap();
        assert!((s2 - nu / (nu - 1.0)).abs() < 1e-12);
        assert!((s4 - nu / (nu - 2.0)).abs() < 1e-12);
    }
    assert_eq!(excess_kurtosis(ModelKind::Normal, 1.0).unwrap(), 0.0);
}

#[test]
fn mixing_law_means() {
    let mut r = rng(8);
    let n = 100_000;
    let t: f64 = (0..n).map(|_| sample_mixing(&MixingLaw::new(ModelKind::StudentT, 5.0), &mut r)).sum::<f64>() / n as f64;
    assert!((t - 1.0).abs() < 0.02);
    let s: f64 = (0..n).map(|_| sample_mixing(&MixingLaw::new(ModelKind::Slash, 2.0), &mut r)).sum::<f64>() / n as f64;
    assert!((s - 2.0 / 3.0).abs() < 0.01);
    assert!((0..100).all(|_| sample_mixing(&MixingLaw::new(ModelKind::Normal, 3.0), &mut r) == 1.0));
}

#[test]
fn truncated_gamma_matches_normalized_cdf() {
    let mut r = rng(13);
    let mut xs: Vec<f64> = (0..20_000).map(|_| sample_truncated_gamma_01(3.0, 2.0, &mut r)).collect();
    assert!(xs.iter().all(|&u| u > 0.0 && u <= 1.0));
    let norm = quad(|u| gamma_pdf(u, 3.0, 2.0), 0.0, 1.0, 1e-14);
    let cdf = |x: f64| quad(|u| gamma_pdf(u, 3.0, 2.0), 0.0, x.clamp(0.0, 1.0), 1e-13) / norm;
    let n = xs.len();
    let d = ks_statistic(&mut xs, cdf);
    assert!(d < ks_critical_01(n), "KS {d}");
}

#[test]
fn truncated_gamma_zero_rate_is_beta_limit() {
    let mut r = rng(14);
    let n = 100_000;
    let m = (0..n).map(|_| sample_truncated_gamma_01(2.0, 0.0, &mut r)).sum::<f64>() / n as f64;
    assert!((m - 2.0 / 3.0).abs() < 0.01);
}

#[test]
fn truncated_normal_moments_and_tail() {
    let mut r = rng(15);
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| sample_truncated_normal_upper(0.0, 1.0, 0.0, &mut r)).collect();
    assert!(xs.iter().all(|&x| x <= 0.0));
    let m = xs.iter().sum::<f64>() / n as f64;
    assert!((m + (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.01);
    for _ in 0..1000 {
        let x = sample_truncated_normal_upper(3.0, 4.0, 3.0 - 16.0, &mut r);
        assert!(x.is_finite() && x <= -13.0);
    }
    let deep: Vec<f64> = (0..20_000).map(|_| sample_truncated_normal_upper(0.0, 1.0, -10.0, &mut r)).collect();
    // E[X | X ≤ −10] = −φ(10)/Φ(−10)
    let target = -(normal_pdf(10.0, 1.0) / ln_norm_cdf(-10.0).exp());
    let (dm, dsd) = mean_sd(&deep);
    assert!((dm - target).abs() < 3.0 * dsd / (deep.len() as f64).sqrt() + 1e-9, "{dm} vs {target}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn density_is_proper(kind in 0usize..3, nu in 2.05f64..60.0, mu in -3.0f64..3.0, s2 in 0.2f64..5.0) {
        let kind = ModelKind::from_index(kind).unwrap();
        let p = SmnParams::new(mu, s2, nu);
        let total = quad_real(|y| marginal_logdensity(y, &p, kind).exp(), mu, 1e-10);
        prop_assert!((total - 1.0).abs() < 1e-6, "{} ν={}: {}", kind, nu, total);
    }

    #[test]
    fn log_gamma_cdf_monotone(a in 0.1f64..50.0, b in 0.01f64..10.0, x in 1e-3f64..50.0, dx in 1e-3f64..5.0) {
        prop_assert!(ln_gamma_cdf(x + dx, a, b) >= ln_gamma_cdf(x, a, b));
        prop_assert!(ln_gamma_cdf(x, a, b * 1.5) >= ln_gamma_cdf(x, a, b));
        prop_assert!(ln_gamma_cdf(x, a, b) <= 0.0);
    }

    #[test]
    fn truncated_gamma_in_unit_interval(a in 0.05f64..500.0, b in 0.0f64..1e4, seed in any::<u64>()) {
        let mut r = rng(seed);
        for _ in 0..20 {
            let u = sample_truncated_gamma_01(a, b, &mut r);
            prop_assert!(u > 0.0 && u <= 1.0, "{}", u);
        }
    }

    #[test]
    fn log_cdf_is_monotone(kind in 0usize..3, nu in 1.01f64..50.0, y in -40.0f64..40.0, dy in 0.01f64..3.0) {
        let kind = ModelKind::from_index(kind).unwrap();
        let p = SmnParams::new(0.0, 1.0, nu);
        prop_assert!(marginal_logcdf(y + dy, &p, kind) >= marginal_logcdf(y, &p, kind) - 1e-14);
    }
}
