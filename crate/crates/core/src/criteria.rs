//! Model-comparison criteria, convergence diagnostics and posterior summaries.
//!
//! Criteria are computed from `log f(y_i | θ_m)`, the marginal density (or,
//! for censored rows, the marginal CDF at the limit) of the component that
//! is active at draw `m`. Everything runs in log space.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::sampler::{ChainOutput, Draw};
use crate::smn::{marginal_logcdf, marginal_logdensity, ModelKind, SmnParams};

/// Per-draw, per-observation log-likelihoods, stored row-major (`M × n`).
#[derive(Clone, Debug, PartialEq)]
pub struct DrawLogLik {
    m: usize,
    n: usize,
    values: Vec<f64>,
}

impl DrawLogLik {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("log-likelihood rows have different lengths"));
        }
        Ok(DrawLogLik { m, n, values: rows.into_iter().flatten().collect() })
    }

    pub fn draws(&self) -> usize {
        self.m
    }

    pub fn observations(&self) -> usize {
        self.n
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.values[m * self.n..(m + 1) * self.n]
    }

    pub fn column(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(move |m| self.values[m * self.n + i])
    }

    /// Posterior mean deviance `D̄ = −2 · mean_m Σ_i log f`.
    pub fn mean_deviance(&self) -> f64 {
        let mut acc = PointwiseAccumulator::new(self.n);
        for m in 0..self.m {
            acc.push(self.row(m));
        }
        acc.mean_deviance()
    }
}

/// `(DIC, ρ_D)` with `DIC = 2D̄ − D(θ̃)` and `ρ_D = D̄ − D(θ̃)`.
pub fn dic(loglik: &DrawLogLik, loglik_at_posterior_mean: &[f64]) -> (f64, f64) {
    dic_from(loglik.mean_deviance(), loglik_at_posterior_mean)
}

fn dic_from(dbar: f64, loglik_at_posterior_mean: &[f64]) -> (f64, f64) {
    let d_hat = -2.0 * loglik_at_posterior_mean.iter().sum::<f64>();
    (2.0 * dbar - d_hat, dbar - d_hat)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waic {
    pub waic: f64,
    pub rho_waic: f64,
    pub lppd: f64,
}

/// `WAIC = −2(lppd − ρ_WAIC)`, with `ρ_WAIC` the summed sample variances
/// (denominator `M − 1`) of the pointwise log-likelihoods.
pub fn waic(loglik: &DrawLogLik) -> Result<Waic> {
    if loglik.m < 2 {
        return Err(Error::invalid(format!("WAIC needs at least 2 draws, got {}", loglik.m)));
    }
    let mut acc = PointwiseAccumulator::new(loglik.n);
    for m in 0..loglik.m {
        acc.push(loglik.row(m));
    }
    acc.waic()
}

/// `(EAIC, EBIC) = (D̄ + 2ϑ, D̄ + ϑ ln n)`.
pub fn eaic_ebic(dbar: f64, n_params: usize, n_obs: usize) -> (f64, f64) {
    let k = n_params as f64;
    (dbar + 2.0 * k, dbar + k * (n_obs as f64).ln())
}

/// Harmonic-mean CPO estimates and `LPML = Σ log CPO_i`.
pub fn cpo_lpml(loglik: &DrawLogLik) -> (Vec<f64>, f64) {
    let mut acc = PointwiseAccumulator::new(loglik.n);
    for m in 0..loglik.m {
        acc.push(loglik.row(m));
    }
    let ln_cpo = acc.ln_cpo();
    let lpml = ln_cpo.iter().sum();
    (ln_cpo.iter().map(|v| v.exp()).collect(), lpml)
}

/// Number of free parameters `ϑ` of a separately fitted model.
pub fn n_params(kind: ModelKind, q: usize) -> usize {
    match kind {
        ModelKind::Normal => q + 1,
        _ => q + 2,
    }
}

/// Streaming per-observation accumulator, so that criteria never need the
/// full `M × n` matrix in memory.
#[derive(Clone, Debug)]
pub struct PointwiseAccumulator {
    m: usize,
    lse: Vec<f64>,
    lse_neg: Vec<f64>,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

impl PointwiseAccumulator {
    pub fn new(n: usize) -> Self {
        PointwiseAccumulator {
            m: 0,
            lse: vec![f64::NEG_INFINITY; n],
            lse_neg: vec![f64::NEG_INFINITY; n],
            mean: vec![0.0; n],
            m2: vec![0.0; n],
        }
    }

    pub fn push(&mut self, loglik: &[f64]) {
        self.m += 1;
        let k = self.m as f64;
        for (i, &l) in loglik.iter().enumerate() {
            self.lse[i] = log_add_exp(self.lse[i], l);
            self.lse_neg[i] = log_add_exp(self.lse_neg[i], -l);
            let delta = l - self.mean[i];
            self.mean[i] += delta / k;
            self.m2[i] += delta * (l - self.mean[i]);
        }
    }

    pub fn draws(&self) -> usize {
        self.m
    }

    /// Summed over running per-observation means, so that identical draws
    /// reproduce `D(θ)` exactly.
    pub fn mean_deviance(&self) -> f64 {
        -2.0 * self.mean.iter().sum::<f64>()
    }

    pub fn ln_cpo(&self) -> Vec<f64> {
        let ln_m = (self.m as f64).ln();
        self.lse_neg.iter().map(|v| -(v - ln_m)).collect()
    }

    pub fn waic(&self) -> Result<Waic> {
        if self.m < 2 {
            return Err(Error::invalid(format!("WAIC needs at least 2 draws, got {}", self.m)));
        }
        let ln_m = (self.m as f64).ln();
        let lppd: f64 = self.lse.iter().map(|v| v - ln_m).sum();
        let rho_waic: f64 = self.m2.iter().map(|v| v / (self.m - 1) as f64).sum();
        Ok(Waic { waic: -2.0 * (lppd - rho_waic), rho_waic, lppd })
    }
}

/// Geweke's z: mean of the first `frac_a` against the last `frac_b`, each
/// with a batch-means estimate (⌊√len⌋ batches) of the variance of its mean.
pub fn geweke_z(series: &[f64], frac_a: f64, frac_b: f64) -> Result<f64> {
    if series.len() < 100 {
        return Err(Error::invalid(format!("Geweke needs at least 100 draws, got {}", series.len())));
    }
    if !(frac_a > 0.0 && frac_b > 0.0 && frac_a + frac_b <= 1.0) {
        return Err(Error::invalid(format!("bad Geweke fractions ({frac_a}, {frac_b})")));
    }
    let n = series.len();
    let na = ((frac_a * n as f64) as usize).max(2);
    let nb = ((frac_b * n as f64) as usize).max(2);
    let a = &series[..na];
    let b = &series[n - nb..];
    let (ma, va) = mean_and_batch_variance(a);
    let (mb, vb) = mean_and_batch_variance(b);
    let v = va + vb;
    if !(v > 0.0) {
        return Err(Error::numerical("constant chain: Geweke variance is zero"));
    }
    Ok((ma - mb) / v.sqrt())
}

/// Sample mean and batch-means variance of that mean.
fn mean_and_batch_variance(x: &[f64]) -> (f64, f64) {
    let len = x.len();
    let mean = x.iter().sum::<f64>() / len as f64;
    let batches = ((len as f64).sqrt().floor() as usize).max(2);
    let size = len / batches;
    if size == 0 {
        return (mean, 0.0);
    }
    let means: Vec<f64> = (0..batches).map(|b| x[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var_batch = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, var_batch / batches as f64)
}

/// Posterior mean, median, SD and HPD interval of one parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub hpd_low: f64,
    pub hpd_high: f64,
}

/// Summary with the shortest interval holding `level` of the sorted draws.
pub fn posterior_summary(series: &[f64], level: f64) -> Result<Summary> {
    if series.len() < 2 {
        return Err(Error::invalid(format!("summary needs at least 2 draws, got {}", series.len())));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("HPD level must lie in (0, 1), got {level}")));
    }
    let mut s = series.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let mean = s.iter().sum::<f64>() / n as f64;
    let sd = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let median = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
    let k = ((level * n as f64).ceil() as usize).clamp(1, n);
    let (mut lo, mut hi) = (s[0], s[k - 1]);
    for i in 1..=n - k {
        if s[i + k - 1] - s[i] < hi - lo {
            lo = s[i];
            hi = s[i + k - 1];
        }
    }
    Ok(Summary { mean, median, sd, hpd_low: lo, hpd_high: hi })
}

/// Parameters of the component active at a draw, with the scale of each
/// observation's kernel adjusted by `γ`.
fn active_params(draw: &Draw) -> (ModelKind, f64, f64) {
    (draw.z, draw.sigma2 * draw.gamma(), draw.active_nu().unwrap_or(f64::INFINITY))
}

/// Pointwise `log f(y_i | θ)` under `kind` with parameters `(β, σ², ν)`.
pub fn pointwise_loglik(data: &Dataset, kind: ModelKind, beta: &[f64], sigma2: f64, nu: f64) -> Vec<f64> {
    let gamma = match kind {
        ModelKind::Normal => 1.0,
        _ => crate::smn::variance_correction(kind, nu).unwrap_or(f64::NAN),
    };
    let scale = sigma2 * gamma;
    let x = data.x();
    let y = data.y();
    (0..data.n())
        .map(|i| {
            let mu: f64 = (0..data.q()).map(|j| x[(i, j)] * beta[j]).sum();
            let params = SmnParams::new(mu, scale, nu);
            if data.is_censored(i) {
                marginal_logcdf(data.kappa().expect("censored rows have limits")[i], &params, kind)
            } else {
                marginal_logdensity(y[i], &params, kind)
            }
        })
        .collect()
}

fn draw_loglik(data: &Dataset, draw: &Draw) -> Vec<f64> {
    let (kind, _, nu) = active_params(draw);
    pointwise_loglik(data, kind, &draw.beta, draw.sigma2, nu)
}

/// Criteria of one model over a set of draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCriteria {
    pub model: ModelKind,
    pub draws_used: usize,
    pub n_params: usize,
    pub dbar: f64,
    pub d_at_mean: f64,
    pub dic: f64,
    pub rho_d: f64,
    pub eaic: f64,
    pub ebic: f64,
    pub waic: f64,
    pub rho_waic: f64,
    pub lppd: f64,
    pub lpml: f64,
    pub cpo_near_zero: usize,
}

/// The JSON criteria report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriteriaReport {
    /// Sign convention of `lpml`.
    pub lpml_sign: String,
    pub lpml: f64,
    pub dic: f64,
    pub eaic: f64,
    pub ebic: f64,
    pub waic: f64,
    pub rho_d: f64,
    pub rho_waic: f64,
    pub lppd: f64,
    pub dbar: f64,
    pub selected_model: ModelKind,
    pub n_params: usize,
    pub draws_used: usize,
    pub cpo: Vec<f64>,
    pub geweke: BTreeMap<String, Option<f64>>,
    pub summaries: BTreeMap<String, Option<Summary>>,
    pub per_model: BTreeMap<String, ModelCriteria>,
}

/// Largest number of draws fed to the criteria; longer chains are thinned evenly.
pub const DEFAULT_CRITERIA_DRAWS: usize = 4000;

fn thin_evenly<T>(items: &[T], max: usize) -> Vec<&T> {
    if items.len() <= max {
        return items.iter().collect();
    }
    (0..max).map(|k| &items[k * items.len() / max]).collect()
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    s / c as f64
}

/// Posterior-mean plug-in `θ̃` for `kind` over the given draws.
fn loglik_at_mean(data: &Dataset, kind: ModelKind, draws: &[&Draw]) -> Vec<f64> {
    let q = data.q();
    let beta: Vec<f64> = (0..q).map(|j| mean_of(draws.iter().map(|d| d.beta[j]))).collect();
    let sigma2 = mean_of(draws.iter().map(|d| d.sigma2));
    let nu = match kind {
        ModelKind::Normal => f64::INFINITY,
        ModelKind::StudentT => mean_of(draws.iter().map(|d| d.nu_t)),
        ModelKind::Slash => mean_of(draws.iter().map(|d| d.nu_s)),
    };
    pointwise_loglik(data, kind, &beta, sigma2, nu)
}

fn model_criteria(data: &Dataset, kind: ModelKind, draws: &[&Draw]) -> Result<(ModelCriteria, Vec<f64>)> {
    let mut acc = PointwiseAccumulator::new(data.n());
    for d in draws {
        acc.push(&draw_loglik(data, d));
    }
    let dbar = acc.mean_deviance();
    let at_mean = loglik_at_mean(data, kind, draws);
    let (dic_v, rho_d) = dic_from(dbar, &at_mean);
    let w = acc.waic()?;
    let k = n_params(kind, data.q());
    let (eaic, ebic) = eaic_ebic(dbar, k, data.n());
    let ln_cpo = acc.ln_cpo();
    let near_zero = ln_cpo.iter().filter(|v| **v < -700.0).count();
    if near_zero > 0 {
        log::warn!("{near_zero} CPO values are numerically zero under {kind}; the harmonic-mean estimate is unstable");
    }
    let lpml = ln_cpo.iter().sum();
    Ok((
        ModelCriteria {
            model: kind,
            draws_used: draws.len(),
            n_params: k,
            dbar,
            d_at_mean: -2.0 * at_mean.iter().sum::<f64>(),
            dic: dic_v,
            rho_d,
            eaic,
            ebic,
            waic: w.waic,
            rho_waic: w.rho_waic,
            lppd: w.lppd,
            lpml,
            cpo_near_zero: near_zero,
        },
        ln_cpo.iter().map(|v| v.exp()).collect(),
    ))
}

/// Criteria, diagnostics and summaries for a fitted chain.
///
/// Headline criteria use every (evenly thinned) draw with the component
/// active at that draw, and `θ̃` from the selected model; `per_model` repeats
/// the computation on each visited model's own draws.
pub fn criteria_report(chain: &ChainOutput, data: &Dataset, max_draws: usize) -> Result<CriteriaReport> {
    if chain.len() < 2 {
        return Err(Error::invalid("criteria need at least 2 stored draws"));
    }
    if chain.columns.len() != data.q() {
        return Err(Error::invalid("draws and dataset have different numbers of covariates"));
    }
    let selected = chain.selected_model();
    let used = thin_evenly(&chain.draws, max_draws.max(2));
    let selected_draws: Vec<&Draw> = used.iter().copied().filter(|d| d.z == selected).collect();
    let (mut overall, cpo) = model_criteria(data, selected, &used)?;
    let at_mean = loglik_at_mean(data, selected, if selected_draws.is_empty() { &used } else { &selected_draws });
    let (dic_v, rho_d) = dic_from(overall.dbar, &at_mean);
    overall.dic = dic_v;
    overall.rho_d = rho_d;

    let mut per_model = BTreeMap::new();
    for kind in ModelKind::ALL {
        let subset: Vec<&Draw> = used.iter().copied().filter(|d| d.z == kind).collect();
        if subset.len() >= 2 {
            per_model.insert(kind.name().to_string(), model_criteria(data, kind, &subset)?.0);
        }
    }

    let mut geweke = BTreeMap::new();
    let mut summaries = BTreeMap::new();
    let mut series: Vec<(String, Option<Vec<f64>>)> = Vec::new();
    for (j, c) in chain.columns.iter().enumerate() {
        series.push((format!("beta.{c}"), Some(chain.draws.iter().map(|d| d.beta[j]).collect())));
    }
    series.push(("sigma2".into(), Some(chain.draws.iter().map(|d| d.sigma2).collect())));
    series.push(("nu_t".into(), chain.df_draws_for_summary(ModelKind::StudentT)));
    series.push(("nu_s".into(), chain.df_draws_for_summary(ModelKind::Slash)));
    for (name, values) in series {
        let g = values.as_ref().filter(|v| v.len() >= 100).and_then(|v| geweke_z(v, 0.1, 0.5).ok());
        geweke.insert(name.clone(), g);
        summaries.insert(name, values.and_then(|v| posterior_summary(&v, 0.95).ok()));
    }
    for j in 0..3 {
        let p: Vec<f64> = chain.draws.iter().map(|d| d.p[j]).collect();
        summaries.insert(format!("p_{}", j + 1), posterior_summary(&p, 0.95).ok());
    }

    Ok(CriteriaReport {
        lpml_sign: "lpml = sum of log CPO (larger is better); tables reporting -LPML negate it".into(),
        lpml: overall.lpml,
        dic: overall.dic,
        eaic: overall.eaic,
        ebic: overall.ebic,
        waic: overall.waic,
        rho_d: overall.rho_d,
        rho_waic: overall.rho_waic,
        lppd: overall.lppd,
        dbar: overall.dbar,
        selected_model: selected,
        n_params: overall.n_params,
        draws_used: used.len(),
        cpo,
        geweke,
        summaries,
        per_model,
    })
}
