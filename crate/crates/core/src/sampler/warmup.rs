//! Warm-up: pinned single-model chains that supply df starting values and
//! tune the Metropolis proposal scales.

use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::geweke_z;
use crate::data::Dataset;
use crate::error::Result;
use crate::smn::ModelKind;

use super::chain::Chain;
use super::{MixtureConfig, SamplerConfig};

pub const ACCEPT_TARGET: f64 = 0.44;
pub const ACCEPT_LOW: f64 = 0.34;
pub const ACCEPT_HIGH: f64 = 0.54;

const BATCH: usize = 50;
const ADAPT_FRACTION: f64 = 0.6;
const EXTRA_ROUNDS: usize = 3;
const GEWEKE_WARN: f64 = 4.0;
const GAIN: f64 = 3.0;

/// Starting values and tuned scales handed to the main chain.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WarmupReport {
    pub nu_t: f64,
    pub nu_s: f64,
    pub tau_t: f64,
    pub tau_s: f64,
    /// Acceptance rates over the final fixed-scale segment.
    pub accept_t: Option<f64>,
    pub accept_s: Option<f64>,
    pub geweke_t: Option<f64>,
    pub geweke_s: Option<f64>,
    pub rounds_t: usize,
    pub rounds_s: usize,
    pub warnings: Vec<String>,
}

struct Tuned {
    nu: f64,
    tau: f64,
    accept: f64,
    geweke: Option<f64>,
    rounds: usize,
}

/// Run the pinned Student-t and Slash chains.
///
/// Within each round the first 60% of iterations adapt `ln τ` by
/// Robbins–Monro steps toward an acceptance of 0.44 in batches of 50, and
/// the rest run with `τ` fixed to measure acceptance and the mean df. Up to
/// three extra rounds are run when the measured rate misses [0.34, 0.54].
/// With `warmup_iters = 0` the configured values are returned untouched.
pub fn warm_up(
    data: &Dataset,
    mixture: &MixtureConfig,
    config: &SamplerConfig,
    rng: &mut ChaCha20Rng,
) -> Result<WarmupReport> {
    let mut report = WarmupReport {
        nu_t: config.nu_t_init,
        nu_s: config.nu_s_init,
        tau_t: config.tau_t,
        tau_s: config.tau_s,
        ..Default::default()
    };
    if config.warmup_iters == 0 {
        return Ok(report);
    }
    for kind in [ModelKind::StudentT, ModelKind::Slash] {
        if !mixture.allows(kind) {
            continue;
        }
        let tuned = tune(data, mixture, config, kind, rng)?;
        if !(ACCEPT_LOW..=ACCEPT_HIGH).contains(&tuned.accept) {
            report.warnings.push(format!(
                "{kind} warm-up acceptance {:.3} outside [{ACCEPT_LOW}, {ACCEPT_HIGH}] after {} rounds",
                tuned.accept, tuned.rounds
            ));
        }
        match tuned.geweke {
            Some(z) if z.abs() > GEWEKE_WARN => {
                report.warnings.push(format!("{kind} warm-up df chain fails Geweke: |z| = {:.2}", z.abs()))
            }
            None => report.warnings.push(format!("{kind} warm-up df chain too short or constant for Geweke")),
            _ => {}
        }
        match kind {
            ModelKind::StudentT => {
                report.nu_t = tuned.nu;
                report.tau_t = tuned.tau;
                report.accept_t = Some(tuned.accept);
                report.geweke_t = tuned.geweke;
                report.rounds_t = tuned.rounds;
            }
            _ => {
                report.nu_s = tuned.nu;
                report.tau_s = tuned.tau;
                report.accept_s = Some(tuned.accept);
                report.geweke_s = tuned.geweke;
                report.rounds_s = tuned.rounds;
            }
        }
    }
    Ok(report)
}

fn tune(
    data: &Dataset,
    mixture: &MixtureConfig,
    config: &SamplerConfig,
    kind: ModelKind,
    rng: &mut ChaCha20Rng,
) -> Result<Tuned> {
    let pinned = mixture.clone().restricted_to(&[kind]);
    let state = Chain::initial_state(data, &pinned, config.nu_t_init, config.nu_s_init)?;
    let mut chain = Chain::new(data, &pinned, state, config.tau_t, config.tau_s, rng);
    let total = config.warmup_iters;
    let adapt_iters = ((total as f64 * ADAPT_FRACTION).round() as usize).max(BATCH.min(total));
    let fixed_iters = total.saturating_sub(adapt_iters).max(1);
    let mut ln_tau = match kind {
        ModelKind::StudentT => config.tau_t,
        _ => config.tau_s,
    }
    .ln();
    let mut result = None;
    for round in 0..=EXTRA_ROUNDS {
        // each round restarts the Robbins–Monro gain sequence
        let mut batches = 0usize;
        let mut done = 0;
        let mut tail = Vec::new();
        while done < adapt_iters {
            let len = BATCH.min(adapt_iters - done);
            let mut acc = 0;
            for _ in 0..len {
                acc += chain.step()?.df.accepted as usize;
            }
            done += len;
            batches += 1;
            let rate = acc as f64 / len as f64;
            ln_tau = (ln_tau + GAIN * (rate - ACCEPT_TARGET) / (batches as f64).sqrt()).clamp(-7.0, 5.0);
            set_tau(&mut chain, kind, ln_tau.exp());
            if 2 * done > adapt_iters {
                tail.push(ln_tau);
            }
        }
        // average the second half of the iterates to damp batch noise
        if !tail.is_empty() {
            ln_tau = tail.iter().sum::<f64>() / tail.len() as f64;
            set_tau(&mut chain, kind, ln_tau.exp());
        }
        let mut acc = 0;
        let mut nus = Vec::with_capacity(fixed_iters);
        for _ in 0..fixed_iters {
            acc += chain.step()?.df.accepted as usize;
            nus.push(chain.state().nu_of(kind));
        }
        let accept = acc as f64 / fixed_iters as f64;
        let nu = nus.iter().sum::<f64>() / nus.len() as f64;
        let geweke = if nus.len() >= 100 { geweke_z(&nus, 0.1, 0.5).ok() } else { None };
        let tuned = Tuned { nu, tau: ln_tau.exp(), accept, geweke, rounds: round + 1 };
        let ok = (ACCEPT_LOW..=ACCEPT_HIGH).contains(&accept);
        result = Some(tuned);
        if ok {
            break;
        }
    }
    Ok(result.expect("at least one round"))
}

fn set_tau(chain: &mut Chain<'_>, kind: ModelKind, tau: f64) {
    let (t, s) = chain.tau();
    match kind {
        ModelKind::StudentT => chain.set_tau(tau, s),
        _ => chain.set_tau(t, tau),
    }
}
