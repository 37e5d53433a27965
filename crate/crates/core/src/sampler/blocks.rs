//! The individual Gibbs and Metropolis updates.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::priors::{DirichletPrior, RegressionPrior};
use crate::sampling::{
    open_unit, sample_categorical_ln, sample_gamma, sample_log_dirichlet, sample_truncated_gamma_01,
    sample_truncated_normal_upper,
};
use crate::smn::{variance_correction, ModelKind, DF_CAP};
use crate::special::{ln_gamma, ln_lower_gamma_over_pow, log_sum_exp};

use super::{ChainState, DfTarget, MixtureConfig};

/// Proposals allowed in the rejection step for `p` before giving up.
pub const MAX_RS_PROPOSALS: usize = 1_000_000;

/// Squared residuals `(y_i − x_i'β)²` of the working response.
#[derive(Clone, Debug)]
pub struct Residuals(pub Vec<f64>);

impl Residuals {
    pub fn compute(state: &ChainState, data: &Dataset) -> Self {
        let fitted = data.x() * &state.beta;
        Residuals(state.y.iter().zip(fitted.iter()).map(|(y, f)| (y - f) * (y - f)).collect())
    }
}

/// `β | rest ~ N_q(Σ_β (μ₀/τ₀² + X'Wy/(γσ²)), Σ_β)` with `W = diag(u)`.
pub fn gibbs_beta<R: Rng + ?Sized>(
    state: &ChainState,
    data: &Dataset,
    prior: &RegressionPrior,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let q = data.q();
    let scale = state.gamma() * state.sigma2;
    let x = data.x();
    let mut precision = DMatrix::<f64>::identity(q, q) / prior.tau0_sq;
    let mut rhs = DVector::from_column_slice(&prior.mu0) / prior.tau0_sq;
    for i in 0..data.n() {
        let w = state.u[i] / scale;
        let row = x.row(i);
        for a in 0..q {
            let xa = row[a] * w;
            rhs[a] += xa * state.y[i];
            for b in 0..=a {
                precision[(a, b)] += xa * row[b];
            }
        }
    }
    for a in 0..q {
        for b in 0..a {
            precision[(b, a)] = precision[(a, b)];
        }
    }
    let chol = Cholesky::new(precision)
        .ok_or_else(|| Error::numerical("posterior precision of β is not positive definite"))?;
    let mean = chol.solve(&rhs);
    let eps = DVector::from_fn(q, |_, _| StandardNormal.sample(rng));
    let noise = chol
        .l()
        .transpose()
        .solve_upper_triangular(&eps)
        .ok_or_else(|| Error::numerical("singular Cholesky factor in the β update"))?;
    Ok(mean + noise)
}

/// `σ² | rest ~ IG(a₀ + n/2, b₀ + Σ u_i ỹ_i² / (2γ))`.
pub fn gibbs_sigma2<R: Rng + ?Sized>(
    state: &ChainState,
    data: &Dataset,
    prior: &RegressionPrior,
    rng: &mut R,
) -> f64 {
    let res = Residuals::compute(state, data);
    let gamma = state.gamma();
    let ss: f64 = res.0.iter().zip(&state.u).map(|(s, u)| u * s).sum();
    let shape = prior.a0 + 0.5 * data.n() as f64;
    let rate = prior.b0 + ss / (2.0 * gamma);
    (rate / sample_gamma(shape, 1.0, rng)).min(f64::MAX)
}

/// Log of `r_j`, the likelihood of the whole sample under component `j`
/// with `U` integrated out, without the common `(2πσ²)^{−n/2}` factor.
pub fn log_model_weights(state: &ChainState, data: &Dataset) -> [f64; 3] {
    log_weights_from(&Residuals::compute(state, data), state.sigma2, state.nu_t, state.nu_s)
}

fn log_weights_from(res: &Residuals, sigma2: f64, nu_t: f64, nu_s: f64) -> [f64; 3] {
    let n = res.0.len() as f64;
    let r1 = -res.0.iter().sum::<f64>() / (2.0 * sigma2);

    let g2 = variance_correction(ModelKind::StudentT, nu_t).expect("ν_t inside support");
    let half = 0.5 * nu_t;
    let c2 = -0.5 * g2.ln() + half * half.ln() + ln_gamma(0.5 * (nu_t + 1.0)) - ln_gamma(half);
    let e2 = 0.5 * (nu_t + 1.0);
    let r2 = n * c2 - e2 * res.0.iter().map(|s| (s / (2.0 * g2 * sigma2) + half).ln()).sum::<f64>();

    let g3 = variance_correction(ModelKind::Slash, nu_s).expect("ν_s inside support");
    let a3 = nu_s + 0.5;
    let floor = 1e-12 * sigma2;
    let c3 = -0.5 * g3.ln() + nu_s.ln();
    let r3 = n * c3
        + res
            .0
            .iter()
            .map(|&s| ln_lower_gamma_over_pow(a3, s.max(floor) / (2.0 * g3 * sigma2)))
            .sum::<f64>();
    [r1, r2, r3]
}

/// Result of the joint `(p, Z, U)` update.
#[derive(Clone, Debug)]
pub struct PzuDraw {
    pub ln_p: [f64; 3],
    pub z: ModelKind,
    pub u: Vec<f64>,
    pub log_r: [f64; 3],
    pub proposals: usize,
}

/// Joint draw of the weights, indicator and mixing values.
///
/// `p` comes from `π(p) Σ_j p_j r_j` by rejection from the Dirichlet prior,
/// `Z | p` from weights `p_j r_j`, and `U | Z` from its conditional.
/// Components not in `allowed` get `r_j = 0`.
pub fn sample_p_z_u<R: Rng + ?Sized>(
    state: &ChainState,
    data: &Dataset,
    prior: &DirichletPrior,
    allowed: &[bool; 3],
    rng: &mut R,
) -> Result<PzuDraw> {
    let res = Residuals::compute(state, data);
    let mut log_r = log_weights_from(&res, state.sigma2, state.nu_t, state.nu_s);
    for j in 0..3 {
        if !allowed[j] {
            log_r[j] = f64::NEG_INFINITY;
        }
    }
    let (ln_p, z, proposals) = sample_p_z(&log_r, prior, rng)?;
    let u = sample_u(z, &res, state.sigma2, state.nu_t, state.nu_s, rng);
    Ok(PzuDraw { ln_p, z, u, log_r, proposals })
}

/// Rejection step for `p` followed by the indicator draw.
pub(crate) fn sample_p_z<R: Rng + ?Sized>(
    log_r: &[f64; 3],
    prior: &DirichletPrior,
    rng: &mut R,
) -> Result<([f64; 3], ModelKind, usize)> {
    let max_r = log_r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max_r.is_finite() {
        return Err(Error::numerical(format!("no component has positive likelihood: log r = {log_r:?}")));
    }
    for k in 1..=MAX_RS_PROPOSALS {
        let lp = sample_log_dirichlet(&prior.alpha, rng);
        let joint = [lp[0] + log_r[0], lp[1] + log_r[1], lp[2] + log_r[2]];
        let ln_w = log_sum_exp(&joint);
        if open_unit(rng).ln() <= ln_w - max_r {
            let z = ModelKind::from_index(sample_categorical_ln(&joint, rng)).expect("three components");
            return Ok(([lp[0], lp[1], lp[2]], z, k));
        }
    }
    Err(Error::numerical(format!(
        "rejection sampling for p accepted nothing in {MAX_RS_PROPOSALS} proposals \
         (log r = {log_r:?}, α = {:?})",
        prior.alpha
    )))
}

fn sample_u<R: Rng + ?Sized>(z: ModelKind, res: &Residuals, sigma2: f64, nu_t: f64, nu_s: f64, rng: &mut R) -> Vec<f64> {
    match z {
        ModelKind::Normal => vec![1.0; res.0.len()],
        ModelKind::StudentT => {
            let g = variance_correction(ModelKind::StudentT, nu_t).expect("ν_t inside support");
            let shape = 0.5 * (nu_t + 1.0);
            res.0.iter().map(|s| sample_gamma(shape, s / (2.0 * g * sigma2) + 0.5 * nu_t, rng)).collect()
        }
        ModelKind::Slash => {
            let g = variance_correction(ModelKind::Slash, nu_s).expect("ν_s inside support");
            let shape = nu_s + 0.5;
            res.0.iter().map(|s| sample_truncated_gamma_01(shape, s / (2.0 * g * sigma2), rng)).collect()
        }
    }
}

/// Redraw censored responses from `N(x_i'β, γσ²/u_i)` truncated to `(−∞, κ_i]`.
pub fn impute_censored<R: Rng + ?Sized>(state: &ChainState, data: &Dataset, rng: &mut R) -> DVector<f64> {
    let mut y = state.y.clone();
    let (Some(flags), Some(kappa)) = (data.censored(), data.kappa()) else {
        return y;
    };
    let scale = state.gamma() * state.sigma2;
    for i in 0..data.n() {
        if flags[i] {
            let mean = (data.x().row(i) * &state.beta)[0];
            y[i] = sample_truncated_normal_upper(mean, scale / state.u[i], kappa[i], rng);
        }
    }
    y
}

/// Sufficient statistics of the df full conditional.
struct DfStats {
    n: f64,
    sum_ln_u: f64,
    sum_u: f64,
    sum_u_res: f64,
    sigma2: f64,
}

impl DfStats {
    fn new(state: &ChainState, data: &Dataset) -> Self {
        let res = Residuals::compute(state, data);
        DfStats {
            n: data.n() as f64,
            sum_ln_u: state.u.iter().map(|u| u.ln()).sum(),
            sum_u: state.u.iter().sum(),
            sum_u_res: state.u.iter().zip(&res.0).map(|(u, s)| u * s).sum(),
            sigma2: state.sigma2,
        }
    }

    fn log_target(&self, kind: ModelKind, nu: f64, mixture: &MixtureConfig) -> f64 {
        let Some(prior) = mixture.pc_prior(kind) else {
            return f64::NEG_INFINITY;
        };
        let lp = prior.log_density(nu);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        let mixing = match kind {
            ModelKind::StudentT => {
                let h = 0.5 * nu;
                self.n * (h * h.ln() - ln_gamma(h)) + (h - 1.0) * self.sum_ln_u - h * self.sum_u
            }
            ModelKind::Slash => self.n * nu.ln() + (nu - 1.0) * self.sum_ln_u,
            ModelKind::Normal => unreachable!(),
        };
        let residual = match mixture.df_target {
            DfTarget::MixingOnly => 0.0,
            DfTarget::Full => {
                let g = variance_correction(kind, nu).expect("inside support");
                -0.5 * self.n * g.ln() - self.sum_u_res / (2.0 * g * self.sigma2)
            }
        };
        lp + mixing + residual
    }
}

/// Log of the (unnormalised) df target of `kind` at `nu`, given the rest of
/// the state, as used by [`mh_df_step`].
pub fn df_log_target(state: &ChainState, data: &Dataset, mixture: &MixtureConfig, kind: ModelKind, nu: f64) -> f64 {
    DfStats::new(state, data).log_target(kind, nu, mixture)
}

/// Outcome of one df update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DfMove {
    pub nu_t: f64,
    pub nu_s: f64,
    pub accepted: bool,
    /// Component whose df was proposed, `None` when the indicator is Normal.
    pub moved: Option<ModelKind>,
}

/// Random-walk Metropolis step on the df of the active component; the other
/// df is carried unchanged.
pub fn mh_df_step<R: Rng + ?Sized>(
    state: &ChainState,
    data: &Dataset,
    mixture: &MixtureConfig,
    tau_t: f64,
    tau_s: f64,
    rng: &mut R,
) -> DfMove {
    let (kind, nu, tau) = match state.z {
        ModelKind::Normal => {
            return DfMove { nu_t: state.nu_t, nu_s: state.nu_s, accepted: true, moved: None };
        }
        ModelKind::StudentT => (ModelKind::StudentT, state.nu_t, tau_t),
        ModelKind::Slash => (ModelKind::Slash, state.nu_s, tau_s),
    };
    let eps: f64 = StandardNormal.sample(rng);
    let proposal = nu + tau * eps;
    let lower = kind.df_lower_bound().expect("heavy-tailed kind");
    let mut accepted = false;
    if proposal > lower && proposal <= DF_CAP {
        let stats = DfStats::new(state, data);
        let log_ratio = stats.log_target(kind, proposal, mixture) - stats.log_target(kind, nu, mixture);
        accepted = open_unit(rng).ln() <= log_ratio;
    }
    let new_nu = if accepted { proposal } else { nu };
    match kind {
        ModelKind::StudentT => DfMove { nu_t: new_nu, nu_s: state.nu_s, accepted, moved: Some(kind) },
        _ => DfMove { nu_t: state.nu_t, nu_s: new_nu, accepted, moved: Some(kind) },
    }
}
