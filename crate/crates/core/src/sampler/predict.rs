//! Posterior predictive draws for a new design row.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::criteria::{posterior_summary, Summary};
use crate::error::{Error, Result};
use crate::sampling::{sample_mixing, MixingLaw};
use crate::smn::ModelKind;

use super::chain::{ChainOutput, Draw};

/// One predictive draw per stored draw: `u ~ h(·|ν)` for the active
/// component, then `Y ~ N(x'β, γσ²/u)`.
pub fn predict_draws<'a, R, I>(draws: I, x_new: &[f64], rng: &mut R) -> Vec<f64>
where
    R: Rng + ?Sized,
    I: IntoIterator<Item = &'a Draw>,
{
    draws
        .into_iter()
        .map(|d| {
            let law = MixingLaw::new(d.z, d.active_nu().unwrap_or(f64::NAN));
            let u = sample_mixing(&law, rng);
            let z: f64 = StandardNormal.sample(rng);
            d.linear_predictor(x_new) + (d.sigma2 * d.gamma() / u).sqrt() * z
        })
        .collect()
}

/// Predictive draws at `x_new`, model-averaged or restricted to the
/// iterations in which `conditional` was active.
pub fn predict<R: Rng + ?Sized>(
    chain: &ChainOutput,
    x_new: &[f64],
    conditional: Option<ModelKind>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if chain.is_empty() {
        return Err(Error::invalid("cannot predict from an empty chain"));
    }
    if x_new.len() != chain.columns.len() {
        return Err(Error::invalid(format!(
            "new design row has {} entries, the fit used {} ({})",
            x_new.len(),
            chain.columns.len(),
            chain.columns.join(", ")
        )));
    }
    match conditional {
        None => Ok(predict_draws(&chain.draws, x_new, rng)),
        Some(kind) => {
            let subset = chain.draws_for(kind);
            if subset.is_empty() {
                return Err(Error::invalid(format!("{kind} model never visited by the chain")));
            }
            Ok(predict_draws(subset, x_new, rng))
        }
    }
}

/// Predictive mean, SD and 95% HPD interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSummary {
    pub mean: f64,
    pub sd: f64,
    pub hpd_low: f64,
    pub hpd_high: f64,
}

impl PredictiveSummary {
    pub fn from_draws(draws: &[f64]) -> Result<Self> {
        let Summary { mean, sd, hpd_low, hpd_high, .. } = posterior_summary(draws, 0.95)?;
        Ok(PredictiveSummary { mean, sd, hpd_low, hpd_high })
    }
}
