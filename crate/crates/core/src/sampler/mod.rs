//! Blocked Gibbs sampler for the three-component error mixture.
//!
//! One iteration updates, in order: the joint block `(p, Z, U)`, the latent
//! censored responses, `β`, `σ²`, and finally the degrees of freedom of the
//! currently active heavy-tailed component.

mod blocks;
mod chain;
mod draws_io;
mod predict;
mod warmup;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::{DirichletPrior, PcPrior, RegressionPrior};
use crate::smn::{variance_correction, ModelKind, DF_CAP};

pub use blocks::{
    df_log_target, gibbs_beta, gibbs_sigma2, impute_censored, log_model_weights, mh_df_step, sample_p_z_u,
    DfMove, Residuals, MAX_RS_PROPOSALS,
};
pub use chain::{run_chain, select_model, Chain, ChainOutput, Draw, ImputationSummary, MIN_DF_SUMMARY_DRAWS};
pub use draws_io::{read_draws_csv, write_draws_csv, DrawsFile};
pub use predict::{predict, predict_draws, PredictiveSummary};
pub use warmup::{warm_up, WarmupReport, ACCEPT_HIGH, ACCEPT_LOW, ACCEPT_TARGET};

/// Target density used by the Metropolis step on the degrees of freedom.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DfTarget {
    /// Full conditional: the mixing law of `u`, the likelihood of the
    /// residuals through `γ(ν)`, and the PC prior.
    #[default]
    Full,
    /// Mixing law of `u` and PC prior only, ignoring the dependence of the
    /// residual likelihood on `γ(ν)`.
    MixingOnly,
}

impl std::str::FromStr for DfTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(DfTarget::Full),
            "mixing-only" | "mixing_only" | "mixing" => Ok(DfTarget::MixingOnly),
            other => Err(Error::invalid(format!("unknown df target '{other}' (expected full or mixing-only)"))),
        }
    }
}

/// Priors and admissible components of the mixture.
#[derive(Clone, Debug)]
pub struct MixtureConfig {
    pub regression: RegressionPrior,
    pub dirichlet: DirichletPrior,
    pub pc_t: PcPrior,
    pub pc_s: PcPrior,
    /// Components the indicator may visit, indexed like [`ModelKind::index`].
    pub allowed: [bool; 3],
    pub df_target: DfTarget,
}

impl MixtureConfig {
    /// Vague regression prior, sparse Dirichlet and default PC priors.
    pub fn default_for(q: usize) -> Result<Self> {
        Ok(MixtureConfig {
            regression: RegressionPrior::vague(q),
            dirichlet: DirichletPrior::sparse(3),
            pc_t: PcPrior::default_for(ModelKind::StudentT)?,
            pc_s: PcPrior::default_for(ModelKind::Slash)?,
            allowed: [true; 3],
            df_target: DfTarget::default(),
        })
    }

    /// Restrict the indicator to the given components.
    pub fn restricted_to(mut self, kinds: &[ModelKind]) -> Self {
        self.allowed = [false; 3];
        for k in kinds {
            self.allowed[k.index()] = true;
        }
        self
    }

    pub fn allows(&self, kind: ModelKind) -> bool {
        self.allowed[kind.index()]
    }

    pub fn pc_prior(&self, kind: ModelKind) -> Option<&PcPrior> {
        match kind {
            ModelKind::Normal => None,
            ModelKind::StudentT => Some(&self.pc_t),
            ModelKind::Slash => Some(&self.pc_s),
        }
    }

    pub fn validate(&self, q: usize) -> Result<()> {
        if self.regression.mu0.len() != q {
            return Err(Error::invalid(format!("prior mean has length {}, design has {q} columns", self.regression.mu0.len())));
        }
        if self.dirichlet.alpha.len() != 3 {
            return Err(Error::invalid("the Dirichlet prior needs one concentration per component (3)"));
        }
        if !self.allowed.iter().any(|&a| a) {
            return Err(Error::invalid("at least one mixture component must be allowed"));
        }
        if self.pc_t.kind() != ModelKind::StudentT || self.pc_s.kind() != ModelKind::Slash {
            return Err(Error::invalid("PC priors must be given for Student-t and Slash respectively"));
        }
        Ok(())
    }
}

/// Run lengths, proposal scales and RNG seeding of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Total number of main-chain iterations, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Iterations of each pinned warm-up chain; 0 disables warm-up.
    pub warmup_iters: usize,
    pub tau_t: f64,
    pub tau_s: f64,
    pub nu_t_init: f64,
    pub nu_s_init: f64,
    pub seed: u64,
    /// ChaCha stream, used to give replications independent sequences.
    pub stream: u64,
}

impl SamplerConfig {
    pub fn new(seed: u64) -> Self {
        SamplerConfig {
            iterations: 20_000,
            burn_in: 4_000,
            thin: 1,
            warmup_iters: 2_000,
            tau_t: 1.0,
            tau_s: 0.5,
            nu_t_init: 10.0,
            nu_s_init: 3.0,
            seed,
            stream: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::invalid(format!(
                "need 0 <= burn-in < iterations, got burn-in {} and iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thinning interval must be at least 1"));
        }
        if !(self.tau_t > 0.0 && self.tau_s > 0.0 && self.tau_t.is_finite() && self.tau_s.is_finite()) {
            return Err(Error::invalid(format!("proposal SDs must be positive, got {} and {}", self.tau_t, self.tau_s)));
        }
        for (kind, nu) in [(ModelKind::StudentT, self.nu_t_init), (ModelKind::Slash, self.nu_s_init)] {
            kind.check_df(nu)?;
            if nu > DF_CAP {
                return Err(Error::invalid(format!("initial {kind} df {nu} exceeds the cap {DF_CAP}")));
            }
        }
        Ok(())
    }

    /// Number of draws kept after burn-in and thinning.
    pub fn kept(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// One Gibbs iteration's worth of unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub beta: DVector<f64>,
    pub sigma2: f64,
    /// Mixture weights on the log scale.
    pub ln_p: [f64; 3],
    pub z: ModelKind,
    pub u: Vec<f64>,
    pub nu_t: f64,
    pub nu_s: f64,
    /// Working response: observed values, with censored rows replaced by
    /// their current imputations.
    pub y: DVector<f64>,
}

impl ChainState {
    pub fn p(&self) -> [f64; 3] {
        self.ln_p.map(f64::exp)
    }

    /// Degrees of freedom of the active component (`None` for Normal).
    pub fn active_nu(&self) -> Option<f64> {
        match self.z {
            ModelKind::Normal => None,
            ModelKind::StudentT => Some(self.nu_t),
            ModelKind::Slash => Some(self.nu_s),
        }
    }

    pub fn nu_of(&self, kind: ModelKind) -> f64 {
        match kind {
            ModelKind::Normal => f64::NAN,
            ModelKind::StudentT => self.nu_t,
            ModelKind::Slash => self.nu_s,
        }
    }

    /// `γ` of the active component.
    pub fn gamma(&self) -> f64 {
        self.gamma_of(self.z)
    }

    pub fn gamma_of(&self, kind: ModelKind) -> f64 {
        variance_correction(kind, self.nu_of(kind)).expect("df kept inside its support")
    }

    /// Simplex, one-hot and mixing-support invariants.
    pub fn check_invariants(&self) -> Result<()> {
        let p = self.p();
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 || p.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::numerical(format!("mixture weights left the simplex: {p:?}")));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::numerical(format!("σ² = {} is not positive and finite", self.sigma2)));
        }
        let bad_u = match self.z {
            ModelKind::Normal => self.u.iter().any(|&u| u != 1.0),
            ModelKind::StudentT => self.u.iter().any(|&u| !(u > 0.0 && u.is_finite())),
            ModelKind::Slash => self.u.iter().any(|&u| !(u > 0.0 && u <= 1.0)),
        };
        if bad_u {
            return Err(Error::numerical(format!("mixing values outside the support of the {} law", self.z)));
        }
        if !(ModelKind::StudentT.df_in_support(self.nu_t) && ModelKind::Slash.df_in_support(self.nu_s)) {
            return Err(Error::numerical(format!("df left the support: ν_t = {}, ν_s = {}", self.nu_t, self.nu_s)));
        }
        Ok(())
    }
}
