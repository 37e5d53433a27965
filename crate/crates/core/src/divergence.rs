//! Kullback–Leibler divergences between unit-variance SMN members.
//!
//! Every density here is variance-standardized: the component with tail
//! parameter `ν` is taken with scale `γ(ν)` so that its variance is one.
//! Against the standard normal this gives the closed reduction
//! `KLD(f ‖ φ) = ½ ln(2πe) − ½ ln γ(ν) − H(f₁)`, with `H(f₁)` the entropy of
//! the unit-scale member, which stays finite as `ν` approaches the lower
//! support bound while `−½ ln γ` carries the divergence.

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};
use crate::smn::{marginal_logdensity, variance_correction, ModelKind, SmnParams};

const ENTROPY_TOL: Tolerance = Tolerance { abs: 1e-14, rel: 1e-14, max_intervals: 4000 };

/// Differential entropy of the unit-scale (`σ² = 1`) member.
pub fn unit_scale_entropy(kind: ModelKind, nu: f64) -> Result<f64> {
    if kind == ModelKind::Normal {
        return Ok(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln());
    }
    if !(nu > 0.0) {
        return Err(Error::domain(format!("entropy of {kind} needs ν > 0, got {nu}")));
    }
    let params = SmnParams::new(0.0, 1.0, nu);
    let est = quadrature::integrate_to_infinity(
        |y| {
            let lf = marginal_logdensity(y, &params, kind);
            let f = lf.exp();
            if f == 0.0 {
                0.0
            } else {
                -f * lf
            }
        },
        0.0,
        ENTROPY_TOL,
    )
    .map_err(|e| Error::numerical(format!("entropy of {kind} at ν = {nu}: {e}")))?;
    Ok(2.0 * est.value)
}

/// `KLD(f_ν ‖ φ)` for the variance-standardized member.
pub fn kld_to_normal(kind: ModelKind, nu: f64) -> Result<f64> {
    if kind == ModelKind::Normal {
        return Ok(0.0);
    }
    let gamma = variance_correction(kind, nu)?;
    let h = unit_scale_entropy(kind, nu)?;
    let kld = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() - 0.5 * gamma.ln() - h;
    Ok(kld.max(0.0))
}

/// Order of the arguments of the Student-t / Slash divergence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KlDirection {
    /// `KLD(Student-t ‖ Slash)`, the moment projection onto the Slash family.
    StudentFirst,
    /// `KLD(Slash ‖ Student-t)`, the information projection onto the Slash family.
    #[default]
    SlashFirst,
}

/// Divergence between the unit-variance Student-t(`nu_t`) and Slash(`nu_s`).
pub fn kl_student_slash(nu_t: f64, nu_s: f64, direction: KlDirection) -> Result<f64> {
    let t = SmnParams::new(0.0, variance_correction(ModelKind::StudentT, nu_t)?, nu_t);
    let s = SmnParams::new(0.0, variance_correction(ModelKind::Slash, nu_s)?, nu_s);
    let (p, pk, q, qk) = match direction {
        KlDirection::StudentFirst => (t, ModelKind::StudentT, s, ModelKind::Slash),
        KlDirection::SlashFirst => (s, ModelKind::Slash, t, ModelKind::StudentT),
    };
    let est = quadrature::integrate_to_infinity(
        |y| {
            let lp = marginal_logdensity(y, &p, pk);
            let lq = marginal_logdensity(y, &q, qk);
            let f = lp.exp();
            if f == 0.0 {
                0.0
            } else {
                f * (lp - lq)
            }
        },
        0.0,
        ENTROPY_TOL,
    )
    .map_err(|e| Error::numerical(format!("KLD(t ν={nu_t}, slash ν={nu_s}): {e}")))?;
    Ok((2.0 * est.value).max(0.0))
}

/// Golden-section minimisation of `f` on `[lo, hi]`.
pub(crate) fn golden_section<F: FnMut(f64) -> Result<f64>>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (hi - lo).abs() < tol {
            return Ok(0.5 * (lo + hi));
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d)?;
        }
    }
    Err(Error::numerical(format!("golden-section search did not converge on [{lo}, {hi}]")))
}
