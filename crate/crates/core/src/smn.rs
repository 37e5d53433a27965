//! Normal-independent scale mixtures of normals: `Y | U=u ~ N(μ, σ²/u)`.
//!
//! Three members are supported and always indexed in the same order:
//! Normal (`U ≡ 1`), Student-t (`U ~ Gamma(ν/2, ν/2)`) and Slash
//! (`U ~ Beta(ν, 1)`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_gamma, ln_lower_gamma_over_pow, ln_norm_cdf, ln_one_minus_exp, log_sum_exp, LN_SQRT_2PI};

/// Degrees of freedom are never sampled above this value.
pub const DF_CAP: f64 = 200.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Normal,
    StudentT,
    Slash,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Normal, ModelKind::StudentT, ModelKind::Slash];

    /// Zero-based position in every K = 3 vector.
    pub fn index(self) -> usize {
        match self {
            ModelKind::Normal => 0,
            ModelKind::StudentT => 1,
            ModelKind::Slash => 2,
        }
    }

    /// One-based component number `j` (Normal = 1, Student-t = 2, Slash = 3).
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_index(i: usize) -> Option<ModelKind> {
        ModelKind::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Normal => "normal",
            ModelKind::StudentT => "student-t",
            ModelKind::Slash => "slash",
        }
    }

    /// Open lower bound of the finite-variance df support, `None` for Normal.
    pub fn df_lower_bound(self) -> Option<f64> {
        match self {
            ModelKind::Normal => None,
            ModelKind::StudentT => Some(2.0),
            ModelKind::Slash => Some(1.0),
        }
    }

    /// Whether `nu` lies in the open finite-variance support (uncapped).
    pub fn df_in_support(self, nu: f64) -> bool {
        match self.df_lower_bound() {
            None => true,
            Some(lo) => nu.is_finite() && nu > lo,
        }
    }

    pub fn check_df(self, nu: f64) -> Result<()> {
        if self.df_in_support(nu) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{} requires ν > {}, got {nu}",
                self.name(),
                self.df_lower_bound().unwrap_or(f64::NEG_INFINITY)
            )))
        }
    }

    pub fn one_hot(self) -> [f64; 3] {
        let mut z = [0.0; 3];
        z[self.index()] = 1.0;
        z
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "gaussian" | "1" => Ok(ModelKind::Normal),
            "student-t" | "student_t" | "studentt" | "t" | "2" => Ok(ModelKind::StudentT),
            "slash" | "3" => Ok(ModelKind::Slash),
            other => Err(Error::invalid(format!(
                "unknown model kind '{other}' (expected normal, student-t or slash)"
            ))),
        }
    }
}

/// Location, scale and tail parameter of one SMN member.
///
/// `sigma2` is the scale of the Gaussian kernel in `Y | u ~ N(mu, sigma2/u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmnParams {
    pub mu: f64,
    pub sigma2: f64,
    pub nu: f64,
}

impl SmnParams {
    pub fn new(mu: f64, sigma2: f64, nu: f64) -> Self {
        SmnParams { mu, sigma2, nu }
    }

    /// Construct parameters valid for the finite-variance model `kind`.
    pub fn validated(kind: ModelKind, mu: f64, sigma2: f64, nu: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(format!("σ² must be positive, got {sigma2}")));
        }
        kind.check_df(nu)?;
        Ok(SmnParams { mu, sigma2, nu })
    }
}

/// Factor `γ` such that the variance of the component with scale `γσ²` is `σ²`.
pub fn variance_correction(kind: ModelKind, nu: f64) -> Result<f64> {
    kind.check_df(nu)?;
    Ok(match kind {
        ModelKind::Normal => 1.0,
        ModelKind::StudentT => (nu - 2.0) / nu,
        ModelKind::Slash => (nu - 1.0) / nu,
    })
}

/// `k_m = E[U^{-m/2}]` for even `m`.
pub fn moment_k(kind: ModelKind, nu: f64, m: u32) -> Result<f64> {
    if m == 0 || m % 2 != 0 {
        return Err(Error::domain(format!("moment order must be even and positive, got {m}")));
    }
    let mf = m as f64;
    match kind {
        ModelKind::Normal => Ok(1.0),
        ModelKind::StudentT => {
            if !(nu > mf) {
                return Err(Error::domain(format!("k_{m} of Student-t needs ν > {m}, got {nu}")));
            }
            let ln = 0.5 * mf * (0.5 * nu).ln() + ln_gamma(0.5 * (nu - mf)) - ln_gamma(0.5 * nu);
            Ok(ln.exp())
        }
        ModelKind::Slash => {
            if !(2.0 * nu > mf) {
                return Err(Error::domain(format!("k_{m} of Slash needs 2ν > {m}, got ν = {nu}")));
            }
            Ok(2.0 * nu / (2.0 * nu - mf))
        }
    }
}

/// Excess kurtosis `3 k_4 / k_2² − 3`.
pub fn excess_kurtosis(kind: ModelKind, nu: f64) -> Result<f64> {
    let k2 = moment_k(kind, nu, 2)?;
    let k4 = moment_k(kind, nu, 4)?;
    Ok(3.0 * k4 / (k2 * k2) - 3.0)
}

/// Log marginal density of `y` with the mixing variable integrated out.
///
/// Accepts any `nu > 0`; the finite-variance restriction is not needed for
/// the density itself.
pub fn marginal_logdensity(y: f64, params: &SmnParams, kind: ModelKind) -> f64 {
    let SmnParams { mu, sigma2, nu } = *params;
    let r = y - mu;
    match kind {
        ModelKind::Normal => -LN_SQRT_2PI - 0.5 * sigma2.ln() - 0.5 * r * r / sigma2,
        ModelKind::StudentT => {
            ln_gamma(0.5 * (nu + 1.0))
                - ln_gamma(0.5 * nu)
                - 0.5 * (nu * std::f64::consts::PI * sigma2).ln()
                - 0.5 * (nu + 1.0) * (r * r / (nu * sigma2)).ln_1p()
        }
        ModelKind::Slash => {
            let a = nu + 0.5;
            let b = 0.5 * r * r / sigma2;
            nu.ln() - LN_SQRT_2PI - 0.5 * sigma2.ln() + ln_lower_gamma_over_pow(a, b)
        }
    }
}

/// Log marginal CDF `ln P(Y <= y)`.
pub fn marginal_logcdf(y: f64, params: &SmnParams, kind: ModelKind) -> f64 {
    let SmnParams { mu, sigma2, nu } = *params;
    let z = (y - mu) / sigma2.sqrt();
    match kind {
        ModelKind::Normal => ln_norm_cdf(z),
        ModelKind::StudentT => {
            if z <= 0.0 {
                student_t_ln_lower_tail(z, nu)
            } else {
                ln_one_minus_exp(student_t_ln_lower_tail(-z, nu))
            }
        }
        ModelKind::Slash => {
            if z <= 0.0 {
                slash_ln_lower_tail(z, nu)
            } else {
                ln_one_minus_exp(slash_ln_lower_tail(-z, nu))
            }
        }
    }
}

/// `ln P(T <= z)` for a standard Student-t and `z <= 0`.
fn student_t_ln_lower_tail(z: f64, nu: f64) -> f64 {
    let x = nu / (nu + z * z);
    let ib = statrs::function::beta::beta_reg(0.5 * nu, 0.5, x);
    if ib > 0.0 {
        (0.5 * ib).ln()
    } else {
        // Far tail: density ~ c |z|^{-(ν+1)} so the tail mass is c |z|^{-ν}/ν.
        let c = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * std::f64::consts::PI).ln()
            + 0.5 * (nu + 1.0) * nu.ln();
        c - nu * (-z).ln() - nu.ln()
    }
}

/// `ln P(S <= z)` for a unit-scale Slash and `z <= 0`.
///
/// Integrating `E[Φ(z√U)]` by parts gives `F(z) = Φ(z) + |z| f(z) / (2ν)`,
/// a sum of two positive terms.
fn slash_ln_lower_tail(z: f64, nu: f64) -> f64 {
    if z == 0.0 {
        return -std::f64::consts::LN_2;
    }
    let unit = SmnParams::new(0.0, 1.0, nu);
    let ln_f = marginal_logdensity(z, &unit, ModelKind::Slash);
    let second = (-z).ln() - (2.0 * nu).ln() + ln_f;
    log_sum_exp(&[ln_norm_cdf(z), second])
}
