use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::smn::{variance_correction, ModelKind};

use super::blocks::{gibbs_beta, gibbs_sigma2, impute_censored, mh_df_step, sample_p_z_u, DfMove};
use super::warmup::{warm_up, WarmupReport};
use super::{ChainState, MixtureConfig, SamplerConfig};

/// Df posterior summaries need at least this many draws from the model.
pub const MIN_DF_SUMMARY_DRAWS: usize = 100;

/// One kept iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub z: ModelKind,
    pub nu_t: f64,
    pub nu_s: f64,
    pub p: [f64; 3],
}

impl Draw {
    pub fn active_nu(&self) -> Option<f64> {
        match self.z {
            ModelKind::Normal => None,
            ModelKind::StudentT => Some(self.nu_t),
            ModelKind::Slash => Some(self.nu_s),
        }
    }

    /// `γ` of the component active at this draw.
    pub fn gamma(&self) -> f64 {
        match self.z {
            ModelKind::Normal => 1.0,
            ModelKind::StudentT => variance_correction(ModelKind::StudentT, self.nu_t).unwrap_or(f64::NAN),
            ModelKind::Slash => variance_correction(ModelKind::Slash, self.nu_s).unwrap_or(f64::NAN),
        }
    }

    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.beta.iter().zip(x).map(|(b, v)| b * v).sum()
    }
}

/// Running record of the censored-row imputations at kept iterations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImputationSummary {
    pub rows: Vec<usize>,
    /// Largest `y_c − κ_c` seen at any kept iteration (never positive).
    pub max_excess: f64,
    pub mean: Vec<f64>,
    pub draws: usize,
}

/// Everything a fit produces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainOutput {
    pub columns: Vec<String>,
    pub draws: Vec<Draw>,
    pub rho_hat: [f64; 3],
    /// Df acceptance rates over main-chain iterations in which the model was active.
    pub accept_rate_t: Option<f64>,
    pub accept_rate_s: Option<f64>,
    pub warmup: WarmupReport,
    pub imputation: Option<ImputationSummary>,
    pub mean_rs_proposals: f64,
}

impl ChainOutput {
    /// Wrap stored draws (for example read back from disk).
    pub fn from_draws(columns: Vec<String>, draws: Vec<Draw>) -> Self {
        let rho_hat = model_frequencies(&draws);
        ChainOutput {
            columns,
            draws,
            rho_hat,
            accept_rate_t: None,
            accept_rate_s: None,
            warmup: WarmupReport::default(),
            imputation: None,
            mean_rs_proposals: f64::NAN,
        }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draws_for(&self, kind: ModelKind) -> Vec<&Draw> {
        self.draws.iter().filter(|d| d.z == kind).collect()
    }

    pub fn visited(&self, kind: ModelKind) -> bool {
        self.draws.iter().any(|d| d.z == kind)
    }

    /// Draws of `ν_t` from iterations with the Student-t component active.
    pub fn nu_t_draws_given_z2(&self) -> Vec<f64> {
        self.draws.iter().filter(|d| d.z == ModelKind::StudentT).map(|d| d.nu_t).collect()
    }

    pub fn nu_s_draws_given_z3(&self) -> Vec<f64> {
        self.draws.iter().filter(|d| d.z == ModelKind::Slash).map(|d| d.nu_s).collect()
    }

    /// Conditional df draws; `None` below [`MIN_DF_SUMMARY_DRAWS`].
    pub fn df_draws_for_summary(&self, kind: ModelKind) -> Option<Vec<f64>> {
        let v = match kind {
            ModelKind::Normal => return None,
            ModelKind::StudentT => self.nu_t_draws_given_z2(),
            ModelKind::Slash => self.nu_s_draws_given_z3(),
        };
        (v.len() >= MIN_DF_SUMMARY_DRAWS).then_some(v)
    }

    /// Argmax of `ρ̂`, ties going to the simpler model.
    pub fn selected_model(&self) -> ModelKind {
        select_model(&self.rho_hat)
    }

    pub fn beta_mean(&self) -> Vec<f64> {
        let q = self.columns.len();
        let mut m = vec![0.0; q];
        for d in &self.draws {
            for (a, b) in m.iter_mut().zip(&d.beta) {
                *a += b;
            }
        }
        m.iter().map(|v| v / self.draws.len() as f64).collect()
    }

    pub fn sigma2_mean(&self) -> f64 {
        self.draws.iter().map(|d| d.sigma2).sum::<f64>() / self.draws.len() as f64
    }

    /// Posterior mean of the weights `p`.
    pub fn p_mean(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for d in &self.draws {
            for j in 0..3 {
                m[j] += d.p[j];
            }
        }
        m.map(|v| v / self.draws.len() as f64)
    }
}

pub(crate) fn model_frequencies(draws: &[Draw]) -> [f64; 3] {
    let mut counts = [0usize; 3];
    for d in draws {
        counts[d.z.index()] += 1;
    }
    let total = draws.len().max(1) as f64;
    counts.map(|c| c as f64 / total)
}

/// Argmax of the model probabilities with ties broken toward Normal, then Student-t.
pub fn select_model(rho: &[f64; 3]) -> ModelKind {
    let mut best = 0;
    for j in 1..3 {
        if rho[j] > rho[best] {
            best = j;
        }
    }
    ModelKind::from_index(best).expect("three components")
}

/// A running sampler over one dataset.
pub struct Chain<'a> {
    data: &'a Dataset,
    mixture: &'a MixtureConfig,
    state: ChainState,
    tau_t: f64,
    tau_s: f64,
    rng: &'a mut ChaCha20Rng,
}

/// What happened during one iteration.
#[derive(Clone, Copy, Debug)]
pub struct StepInfo {
    pub df: DfMove,
    pub proposals: usize,
}

impl<'a> Chain<'a> {
    pub fn new(
        data: &'a Dataset,
        mixture: &'a MixtureConfig,
        state: ChainState,
        tau_t: f64,
        tau_s: f64,
        rng: &'a mut ChaCha20Rng,
    ) -> Self {
        Chain { data, mixture, state, tau_t, tau_s, rng }
    }

    /// Regularised least-squares start with equal weights and `u ≡ 1`.
    pub fn initial_state(data: &Dataset, mixture: &MixtureConfig, nu_t: f64, nu_s: f64) -> Result<ChainState> {
        let q = data.q();
        let n = data.n();
        let y = data.y();
        let x = data.x();
        let mean_y = if n > 0 { y.sum() / n as f64 } else { 0.0 };
        let var_y = if n > 1 { y.iter().map(|v| (v - mean_y).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 1.0 };
        let scale = if var_y > 0.0 { var_y } else { 1.0 };
        let prior = &mixture.regression;
        let precision = x.transpose() * x / scale + DMatrix::identity(q, q) / prior.tau0_sq;
        let rhs = x.transpose() * y / scale + DVector::from_column_slice(&prior.mu0) / prior.tau0_sq;
        let beta = Cholesky::new(precision)
            .ok_or_else(|| Error::numerical("initial normal equations are not positive definite"))?
            .solve(&rhs);
        let resid = y - x * &beta;
        let sigma2 = if n > 0 { resid.norm_squared() / n as f64 } else { 1.0 };
        let start = ModelKind::ALL.iter().copied().find(|k| mixture.allows(*k)).expect("validated");
        Ok(ChainState {
            beta,
            sigma2: sigma2.max(1e-8 * scale),
            ln_p: [(1.0f64 / 3.0).ln(); 3],
            z: start,
            u: vec![1.0; n],
            nu_t,
            nu_s,
            y: y.clone(),
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn set_tau(&mut self, tau_t: f64, tau_s: f64) {
        self.tau_t = tau_t;
        self.tau_s = tau_s;
    }

    pub fn tau(&self) -> (f64, f64) {
        (self.tau_t, self.tau_s)
    }

    /// One full Gibbs cycle.
    pub fn step(&mut self) -> Result<StepInfo> {
        let pzu = sample_p_z_u(&self.state, self.data, &self.mixture.dirichlet, &self.mixture.allowed, self.rng)?;
        self.state.ln_p = pzu.ln_p;
        self.state.z = pzu.z;
        self.state.u = pzu.u;
        if self.data.n_censored() > 0 {
            self.state.y = impute_censored(&self.state, self.data, self.rng);
        }
        self.state.beta = gibbs_beta(&self.state, self.data, &self.mixture.regression, self.rng)?;
        self.state.sigma2 = gibbs_sigma2(&self.state, self.data, &self.mixture.regression, self.rng);
        let df = mh_df_step(&self.state, self.data, self.mixture, self.tau_t, self.tau_s, self.rng);
        self.state.nu_t = df.nu_t;
        self.state.nu_s = df.nu_s;
        debug_assert!(self.state.check_invariants().is_ok(), "{:?}", self.state.check_invariants());
        Ok(StepInfo { df, proposals: pzu.proposals })
    }
}

fn new_rng(config: &SamplerConfig) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(config.stream);
    rng
}

/// Warm up, then run the main chain and collect the kept draws.
pub fn run_chain(data: &Dataset, mixture: &MixtureConfig, config: &SamplerConfig) -> Result<ChainOutput> {
    config.validate()?;
    mixture.validate(data.q())?;
    if !data.has_full_rank() {
        log::warn!("design matrix is rank deficient; the proper β prior keeps the posterior well defined");
    }
    let mut rng = new_rng(config);
    let warmup = warm_up(data, mixture, config, &mut rng)?;
    for w in &warmup.warnings {
        log::warn!("{w}");
    }
    let state = Chain::initial_state(data, mixture, warmup.nu_t, warmup.nu_s)?;
    let mut chain = Chain::new(data, mixture, state, warmup.tau_t, warmup.tau_s, &mut rng);

    let censored_rows = data.censored_rows();
    let kappa = data.kappa().map(<[f64]>::to_vec).unwrap_or_default();
    let mut imputation = (!censored_rows.is_empty()).then(|| ImputationSummary {
        rows: censored_rows.clone(),
        max_excess: f64::NEG_INFINITY,
        mean: vec![0.0; censored_rows.len()],
        draws: 0,
    });

    let mut draws = Vec::with_capacity(config.kept());
    let mut tried = [0usize; 3];
    let mut accepted = [0usize; 3];
    let mut proposals = 0usize;
    for it in 0..config.iterations {
        let info = chain.step()?;
        proposals += info.proposals;
        if let Some(kind) = info.df.moved {
            tried[kind.index()] += 1;
            accepted[kind.index()] += info.df.accepted as usize;
        }
        if it < config.burn_in || (it - config.burn_in) % config.thin != 0 {
            continue;
        }
        let s = chain.state();
        if let Some(summary) = imputation.as_mut() {
            summary.draws += 1;
            for (k, &i) in censored_rows.iter().enumerate() {
                summary.max_excess = summary.max_excess.max(s.y[i] - kappa[i]);
                summary.mean[k] += s.y[i];
            }
        }
        draws.push(Draw {
            beta: s.beta.iter().copied().collect(),
            sigma2: s.sigma2,
            z: s.z,
            nu_t: s.nu_t,
            nu_s: s.nu_s,
            p: s.p(),
        });
    }
    if let Some(summary) = imputation.as_mut() {
        let m = summary.draws.max(1) as f64;
        summary.mean.iter_mut().for_each(|v| *v /= m);
    }
    let rate = |j: usize| (tried[j] > 0).then(|| accepted[j] as f64 / tried[j] as f64);
    Ok(ChainOutput {
        columns: data.columns().to_vec(),
        rho_hat: model_frequencies(&draws),
        draws,
        accept_rate_t: rate(1),
        accept_rate_s: rate(2),
        warmup,
        imputation,
        mean_rs_proposals: proposals as f64 / config.iterations as f64,
    })
}
