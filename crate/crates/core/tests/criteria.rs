mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use smnmix::criteria::*;
use smnmix::sampler::{ChainOutput, Draw};
use smnmix::{Dataset, ModelKind};
use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};

fn matrix(rows: &[Vec<f64>]) -> DrawLogLik {
    DrawLogLik::new(rows.to_vec()).unwrap()
}

#[test]
fn identical_draws_have_no_effective_parameters() {
    let row = vec![-0.3, -1.7, -2.2, -0.9];
    let ll = matrix(&vec![row.clone(); 25]);
    let (d, rho) = dic(&ll, &row);
    let d_theta = -2.0 * row.iter().sum::<f64>();
    assert_eq!(rho, 0.0);
    assert!((d - d_theta).abs() < 1e-12);
    let w = waic(&ll).unwrap();
    assert_eq!(w.rho_waic, 0.0);
    assert!((w.waic - d_theta).abs() < 1e-12);
    let (cpo, lpml) = cpo_lpml(&ll);
    for (c, r) in cpo.iter().zip(&row) {
        assert!((c - r.exp()).abs() < 1e-12);
    }
    assert!((lpml - row.iter().sum::<f64>()).abs() < 1e-12);
}

#[test]
fn hand_computed_cases() {
    let ll = matrix(&[vec![-1.0], vec![-3.0]]);
    let (d, rho) = dic(&ll, &[-1.5]);
    assert!((d - 5.0).abs() < 1e-12 && (rho - 1.0).abs() < 1e-12);
    let w = waic(&matrix(&[vec![0.0], vec![-2.0]])).unwrap();
    let lppd = ((1.0 + (-2.0f64).exp()) / 2.0).ln();
    assert!((w.lppd - lppd).abs() < 1e-12);
    assert!((w.rho_waic - 2.0).abs() < 1e-12);
    assert!((w.waic + 2.0 * (lppd - 2.0)).abs() < 1e-12);
    // harmonic mean of {e^0, e^-2}
    let (cpo, _) = cpo_lpml(&matrix(&[vec![0.0], vec![-2.0]]));
    assert!((cpo[0] - 2.0 / (1.0 + 2.0f64.exp())).abs() < 1e-12);
    let (a, b) = eaic_ebic(100.0, 4, 50);
    assert!((a - 108.0).abs() < 1e-12 && (b - (100.0 + 4.0 * 50f64.ln())).abs() < 1e-12);
}

#[test]
fn waic_needs_two_draws() {
    assert!(waic(&matrix(&[vec![-1.0, -2.0]])).is_err());
}

#[test]
fn extreme_log_likelihoods_stay_finite() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..30).map(|i| -700.0 * ((i as f64 + rand::Rng::random::<f64>(&mut rng)) / 30.0)).collect())
        .collect();
    let ll = matrix(&rows);
    let w = waic(&ll).unwrap();
    let (cpo_raw, lpml) = cpo_lpml(&ll);
    assert!(w.waic.is_finite() && w.lppd.is_finite() && w.rho_waic.is_finite() && lpml.is_finite());
    assert!(cpo_raw.iter().all(|c| c.is_finite()));
    // far below the exp range the harmonic mean is still exact in log space
    let deep = matrix(&[vec![-5000.0, -1.0], vec![-5002.0, -1.0]]);
    let (_, lpml) = cpo_lpml(&deep);
    let exact = -5000.0 - ((1.0 + 2.0f64.exp()) / 2.0).ln() - 1.0;
    assert!((lpml - exact).abs() < 1e-9, "{lpml} vs {exact}");
    let w = waic(&deep).unwrap();
    assert!((w.lppd - (-5000.0 + ((1.0 + (-2.0f64).exp()) / 2.0).ln() - 1.0)).abs() < 1e-9);
}

#[test]
fn hpd_of_exponential_hugs_zero() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let law = Exp::new(1.0).unwrap();
    let v: Vec<f64> = (0..200_000).map(|_| law.sample(&mut rng)).collect();
    let s = posterior_summary(&v, 0.95).unwrap();
    assert!(s.hpd_low < 1e-3, "{s:?}");
    assert!((s.hpd_high - 20f64.ln()).abs() < 0.03, "{s:?}");
    assert!((s.median - 2f64.ln()).abs() < 0.01);
    assert!(s.hpd_low <= s.median && s.median <= s.hpd_high);
}

#[test]
fn geweke_flags_a_drifting_series() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let noise: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
    assert!(geweke_z(&noise, 0.1, 0.5).unwrap().abs() < 3.0);
    let drift: Vec<f64> = noise.iter().enumerate().map(|(i, e)| e + i as f64 / 1000.0).collect();
    assert!(geweke_z(&drift, 0.1, 0.5).unwrap().abs() > 3.0);
    assert!(geweke_z(&noise[..50], 0.1, 0.5).is_err());
}

fn small_data() -> Dataset {
    let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64 * 0.4 - 1.0]).collect();
    Dataset::from_rows(vec![0.3, -1.1, 2.4, 0.8, -0.2, 5.0], &rows, vec!["c".into(), "x".into()]).unwrap()
}

#[test]
fn pointwise_loglik_matches_reference_densities() {
    let data = small_data();
    let beta = [0.2, 0.9];
    let mu: Vec<f64> = (0..6).map(|i| beta[0] + beta[1] * data.x()[(i, 1)]).collect();
    let sigma2 = 1.7;

    let normal = pointwise_loglik(&data, ModelKind::Normal, &beta, sigma2, f64::INFINITY);
    let t = pointwise_loglik(&data, ModelKind::StudentT, &beta, sigma2, 3.5);
    let s = pointwise_loglik(&data, ModelKind::Slash, &beta, sigma2, 1.6);
    let scale_t = (sigma2 * 1.5 / 3.5).sqrt();
    let gs = 0.6 / 1.6;
    for i in 0..6 {
        let y = data.y()[i];
        let n = Normal::new(mu[i], sigma2.sqrt()).unwrap();
        assert!((normal[i] - n.ln_pdf(y)).abs() < 1e-12);
        let st = StudentsT::new(mu[i], scale_t, 3.5).unwrap();
        assert!((t[i] - st.ln_pdf(y)).abs() < 1e-10, "{} vs {}", t[i], st.ln_pdf(y));
        let slash = quad(
            |u| {
                if u <= 0.0 {
                    return 0.0;
                }
                let v = gs * sigma2 / u;
                1.6 * u.powf(0.6) * (-(y - mu[i]).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
            },
            0.0,
            1.0,
            1e-15,
        );
        assert!((s[i] - slash.ln()).abs() < 1e-8, "{} vs {}", s[i], slash.ln());
    }

    let cens = small_data().with_censoring(vec![false, true, false, false, false, false], vec![0.0, -1.1, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let c = pointwise_loglik(&cens, ModelKind::StudentT, &beta, sigma2, 3.5);
    let st = StudentsT::new(mu[1], scale_t, 3.5).unwrap();
    assert!((c[1] - st.cdf(-1.1).ln()).abs() < 1e-10);
    assert_eq!(c[0], t[0]);
}

fn chain_of(draws: Vec<Draw>) -> ChainOutput {
    ChainOutput::from_draws(vec!["c".into(), "x".into()], draws)
}

fn random_draws(m: usize, seed: u64) -> Vec<Draw> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..m)
        .map(|k| {
            let e: f64 = StandardNormal.sample(&mut rng);
            let z = if k % 4 == 0 { ModelKind::Slash } else { ModelKind::StudentT };
            Draw { beta: vec![0.2 + 0.1 * e, 0.9], sigma2: 1.5 + 0.2 * e.abs(), z, nu_t: 4.0 + e.abs(), nu_s: 1.8, p: z.one_hot() }
        })
        .collect()
}

#[test]
fn report_is_invariant_to_draw_order() {
    let data = small_data();
    let draws = random_draws(300, 4);
    let mut rev = draws.clone();
    rev.reverse();
    let a = criteria_report(&chain_of(draws), &data, 10_000).unwrap();
    let b = criteria_report(&chain_of(rev), &data, 10_000).unwrap();
    for (x, y) in [(a.dic, b.dic), (a.waic, b.waic), (a.lpml, b.lpml), (a.eaic, b.eaic), (a.ebic, b.ebic)] {
        assert!((x - y).abs() < 1e-9 * x.abs().max(1.0), "{x} vs {y}");
    }
    assert_eq!(a.selected_model, ModelKind::StudentT);
    assert!((a.lpml - a.cpo.iter().map(|c| c.ln()).sum::<f64>()).abs() < 1e-9);
}

#[test]
fn duplicating_draws_keeps_mean_based_criteria() {
    let data = small_data();
    let draws = random_draws(200, 5);
    let doubled: Vec<Draw> = draws.iter().flat_map(|d| [d.clone(), d.clone()]).collect();
    let a = criteria_report(&chain_of(draws), &data, 10_000).unwrap();
    let b = criteria_report(&chain_of(doubled), &data, 10_000).unwrap();
    for (x, y) in [(a.dic, b.dic), (a.lpml, b.lpml), (a.lppd, b.lppd), (a.dbar, b.dbar)] {
        assert!((x - y).abs() < 1e-9 * x.abs().max(1.0), "{x} vs {y}");
    }
    // the sample variance only changes through its M − 1 denominator
    let m = 200.0;
    assert!((b.rho_waic - a.rho_waic * (m - 1.0) * 2.0 / (2.0 * m - 1.0)).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn permuting_draws_leaves_criteria(
        rows in prop::collection::vec(prop::collection::vec(-50.0f64..0.0, 3), 2..12),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
        let a = matrix(&rows);
        let b = matrix(&shuffled);
        let (wa, wb) = (waic(&a).unwrap(), waic(&b).unwrap());
        prop_assert!((wa.waic - wb.waic).abs() < 1e-9);
        prop_assert!((cpo_lpml(&a).1 - cpo_lpml(&b).1).abs() < 1e-9);
        prop_assert!((a.mean_deviance() - b.mean_deviance()).abs() < 1e-9);
    }

    #[test]
    fn shifting_all_loglik_shifts_dic_linearly(c in -20.0f64..20.0) {
        let rows = vec![vec![-1.0, -2.5, -0.1], vec![-1.4, -2.0, -0.3], vec![-0.7, -3.1, -0.2]];
        let at_mean = vec![-1.0, -2.4, -0.2];
        let (d0, r0) = dic(&matrix(&rows), &at_mean);
        let shifted: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v + c).collect()).collect();
        let (d1, r1) = dic(&matrix(&shifted), &at_mean.iter().map(|v| v + c).collect::<Vec<_>>());
        prop_assert!((d1 - (d0 - 2.0 * c * 3.0)).abs() < 1e-9);
        prop_assert!((r1 - r0).abs() < 1e-9);
    }

    #[test]
    fn hpd_contains_median(v in prop::collection::vec(-100.0f64..100.0, 2..300), level in 0.6f64..0.99) {
        let s = posterior_summary(&v, level).unwrap();
        prop_assert!(s.hpd_low <= s.median && s.median <= s.hpd_high);
        let inside = v.iter().filter(|&&x| x >= s.hpd_low && x <= s.hpd_high).count();
        prop_assert!(inside as f64 >= level * v.len() as f64);
    }
}
