//! Prior distributions: conjugate regression priors, the Dirichlet prior on
//! the mixture weights and penalised-complexity (PC) priors on the degrees
//! of freedom.
//!
//! The PC prior puts an exponential law with rate `λ` on the distance
//! `d(ν) = √(2·KLD(f_ν ‖ φ))` between the unit-variance heavy-tailed member
//! and the standard normal, giving `π(ν) = λ e^{-λ d(ν)} |d'(ν)|`. Since `d`
//! is needed at every MH proposal it is tabulated once on a grid that is
//! log-spaced in `ν − ν_min` and interpolated with cubic Hermite pieces.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::divergence;
use crate::error::{Error, Result};
use crate::smn::{variance_correction, ModelKind, DF_CAP};

/// Conjugate priors `β ~ N_q(μ₀, τ₀² I)` and `σ² ~ IG(a₀, b₀)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionPrior {
    pub mu0: Vec<f64>,
    pub tau0_sq: f64,
    pub a0: f64,
    pub b0: f64,
}

impl RegressionPrior {
    pub fn new(mu0: Vec<f64>, tau0_sq: f64, a0: f64, b0: f64) -> Result<Self> {
        if !(tau0_sq > 0.0 && a0 > 0.0 && b0 > 0.0) {
            return Err(Error::invalid(format!(
                "regression prior needs τ₀² > 0, a₀ > 0, b₀ > 0 (got {tau0_sq}, {a0}, {b0})"
            )));
        }
        if mu0.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("prior mean μ₀ must be finite"));
        }
        Ok(RegressionPrior { mu0, tau0_sq, a0, b0 })
    }

    /// Vague default: `μ₀ = 0`, `τ₀² = 10⁴`, `a₀ = b₀ = 0.01`.
    pub fn vague(q: usize) -> Self {
        RegressionPrior { mu0: vec![0.0; q], tau0_sq: 1e4, a0: 0.01, b0: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletPrior {
    pub alpha: Vec<f64>,
}

impl DirichletPrior {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::invalid(format!("Dirichlet concentrations must be positive, got {alpha:?}")));
        }
        Ok(DirichletPrior { alpha })
    }

    /// Sparse symmetric prior with `α_j = 0.01`.
    pub fn sparse(k: usize) -> Self {
        DirichletPrior { alpha: vec![0.01; k] }
    }
}

/// Interval that must contain the posterior mean of each `p_j`, whatever the data.
pub fn posterior_mean_bounds(prior: &DirichletPrior) -> Vec<(f64, f64)> {
    let denom = 1.0 + prior.alpha.iter().sum::<f64>();
    prior.alpha.iter().map(|a| (a / denom, (a + 1.0) / denom)).collect()
}

/// `d(ν) = √(2·KLD)` from the variance-standardized member to the standard normal.
pub fn kld_distance(kind: ModelKind, nu: f64) -> Result<f64> {
    if kind == ModelKind::Normal {
        return Err(Error::domain("the normal model has no flexibility parameter"));
    }
    Ok((2.0 * divergence::kld_to_normal(kind, nu)?).sqrt())
}

/// Rate `λ = −ln ξ / d(ν*)` giving `P(ν < ν*) = ξ`.
pub fn calibrate_lambda(kind: ModelKind, nu_star: f64, xi: f64) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::invalid(format!("ξ must lie in (0, 1), got {xi}")));
    }
    kind.check_df(nu_star)?;
    let d = kld_distance(kind, nu_star)?;
    if d < 1e-8 {
        return Err(Error::invalid(format!(
            "cannot calibrate: d(ν* = {nu_star}) = {d:e} is numerically zero; choose a smaller ν*"
        )));
    }
    Ok(-xi.ln() / d)
}

pub const DEFAULT_GRID_POINTS: usize = 400;
/// Smallest tabulated offset `ν − ν_min`.
pub const GRID_MIN_OFFSET: f64 = 1e-6;

/// Tabulated `d(ν)` with Hermite interpolation in `t = ln(ν − ν_min)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceTable {
    kind: ModelKind,
    lower: f64,
    nu: Vec<f64>,
    t: Vec<f64>,
    d: Vec<f64>,
    /// `dd/dt` at the nodes, centered finite differences.
    slope: Vec<f64>,
}

impl DistanceTable {
    pub fn build(kind: ModelKind, points: usize) -> Result<Self> {
        let lower = kind
            .df_lower_bound()
            .ok_or_else(|| Error::domain("the normal model has no flexibility parameter"))?;
        if points < 4 {
            return Err(Error::invalid("distance table needs at least 4 points"));
        }
        let t0 = GRID_MIN_OFFSET.ln();
        let t1 = (DF_CAP - lower).ln();
        let t: Vec<f64> = (0..points).map(|k| t0 + (t1 - t0) * k as f64 / (points - 1) as f64).collect();
        let mut nu: Vec<f64> = t.iter().map(|tk| lower + tk.exp()).collect();
        nu[points - 1] = DF_CAP;
        let d = nu.iter().map(|&v| kld_distance(kind, v)).collect::<Result<Vec<_>>>()?;
        let table = Self::from_nodes(kind, nu, d)?;
        Ok(table)
    }

    fn from_nodes(kind: ModelKind, nu: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        let lower = kind.df_lower_bound().expect("heavy-tailed kind");
        let t: Vec<f64> = nu.iter().map(|v| (v - lower).ln()).collect();
        let n = nu.len();
        let mut slope = vec![0.0; n];
        for k in 1..n - 1 {
            slope[k] = (d[k + 1] - d[k - 1]) / (t[k + 1] - t[k - 1]);
        }
        let h0 = t[1] - t[0];
        slope[0] = (-3.0 * d[0] + 4.0 * d[1] - d[2]) / (2.0 * h0);
        let hn = t[n - 1] - t[n - 2];
        slope[n - 1] = (3.0 * d[n - 1] - 4.0 * d[n - 2] + d[n - 3]) / (2.0 * hn);
        let table = DistanceTable { kind, lower, nu, t, d, slope };
        table.check_monotone()?;
        Ok(table)
    }

    fn check_monotone(&self) -> Result<()> {
        for k in 1..self.d.len() {
            if !(self.d[k] < self.d[k - 1]) {
                return Err(Error::numerical(format!(
                    "d(ν) not strictly decreasing at ν = {} ({} >= {})",
                    self.nu[k], self.d[k], self.d[k - 1]
                )));
            }
        }
        Ok(())
    }

    /// Process-wide table on the default grid, built on first use.
    pub fn shared(kind: ModelKind) -> Result<Arc<DistanceTable>> {
        static TABLES: [OnceLock<Arc<DistanceTable>>; 2] = [OnceLock::new(), OnceLock::new()];
        let slot = match kind {
            ModelKind::StudentT => &TABLES[0],
            ModelKind::Slash => &TABLES[1],
            ModelKind::Normal => return Err(Error::domain("the normal model has no flexibility parameter")),
        };
        if let Some(t) = slot.get() {
            return Ok(t.clone());
        }
        let built = Arc::new(DistanceTable::build(kind, DEFAULT_GRID_POINTS)?);
        Ok(slot.get_or_init(|| built).clone())
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// Grid rows `(ν, d, d')` with `d'` the derivative in `ν`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.len()).map(move |k| (self.nu[k], self.d[k], self.slope[k] / (self.nu[k] - self.lower)))
    }

    /// `(d(ν), d'(ν))` for `ν` in `(ν_min, 200]`, `None` outside.
    pub fn eval(&self, nu: f64) -> Option<(f64, f64)> {
        if !(nu > self.lower && nu <= DF_CAP) {
            return None;
        }
        let offset = nu - self.lower;
        let t = offset.ln();
        if t < self.t[0] {
            return Some(self.below_grid(nu));
        }
        let n = self.len();
        let step = (self.t[n - 1] - self.t[0]) / (n - 1) as f64;
        let k = (((t - self.t[0]) / step).floor() as usize).min(n - 2);
        let h = self.t[k + 1] - self.t[k];
        let s = (t - self.t[k]) / h;
        let (d0, d1, m0, m1) = (self.d[k], self.d[k + 1], self.slope[k], self.slope[k + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let d = (2.0 * s3 - 3.0 * s2 + 1.0) * d0
            + (s3 - 2.0 * s2 + s) * h * m0
            + (-2.0 * s3 + 3.0 * s2) * d1
            + (s3 - s2) * h * m1;
        let dd_dt = ((6.0 * s2 - 6.0 * s) * d0
            + (3.0 * s2 - 4.0 * s + 1.0) * h * m0
            + (-6.0 * s2 + 6.0 * s) * d1
            + (3.0 * s2 - 2.0 * s) * h * m1)
            / h;
        Some((d, dd_dt / offset))
    }

    /// Analytic extension below the first node, where `d²` grows like `−ln γ(ν)`
    /// and the unit-scale entropy is effectively constant.
    fn below_grid(&self, nu: f64) -> (f64, f64) {
        let gamma = |v: f64| variance_correction(self.kind, v).expect("inside support");
        let d2 = self.d[0] * self.d[0] + (gamma(self.nu[0]) / gamma(nu)).ln();
        let d = d2.sqrt();
        let dln_gamma = match self.kind {
            ModelKind::StudentT => 2.0 / (nu * (nu - 2.0)),
            _ => 1.0 / (nu * (nu - 1.0)),
        };
        (d, -dln_gamma / (2.0 * d))
    }

    /// Smallest tabulated distance, attained at the cap `ν = 200`.
    pub fn min_distance(&self) -> f64 {
        self.d[self.len() - 1]
    }

    /// Inverse of `d`: the `ν` with `d(ν) = dist`, or `+∞` when `dist` is
    /// below the distance reached at the cap.
    pub fn nu_for_distance(&self, dist: f64) -> f64 {
        if dist <= self.min_distance() {
            return f64::INFINITY;
        }
        // bisection on t; d is decreasing in t
        let mut lo = GRID_MIN_OFFSET.ln() - 60.0;
        let mut hi = (DF_CAP - self.lower).ln();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let nu = (self.lower + mid.exp()).min(DF_CAP);
            let (d, _) = self.eval(nu).expect("inside support");
            if d > dist {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.lower + (0.5 * (lo + hi)).exp()
    }

    /// Persist as CSV rows `nu,d,d_prime` with shortest round-trip formatting.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "# kind={} points={} min_offset={:?} cap={:?}", self.kind, self.len(), GRID_MIN_OFFSET, DF_CAP)?;
        writeln!(f, "nu,d,d_prime")?;
        for (nu, d, dp) in self.rows() {
            writeln!(f, "{nu:?},{d:?},{dp:?}")?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut kind = None;
        let mut nu = Vec::new();
        let mut d = Vec::new();
        let mut d_prime = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    if let Some(v) = kv.strip_prefix("kind=") {
                        kind = Some(v.parse::<ModelKind>()?);
                    }
                }
                continue;
            }
            if line.is_empty() || line.starts_with("nu,") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::data(format!("{}:{}: expected 3 columns", path.display(), lineno + 1)));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::data(format!("{}:{}: bad number '{s}'", path.display(), lineno + 1)))
            };
            nu.push(parse(cols[0])?);
            d.push(parse(cols[1])?);
            d_prime.push(parse(cols[2])?);
        }
        let kind = kind.ok_or_else(|| Error::data(format!("{}: missing kind header", path.display())))?;
        let lower = kind
            .df_lower_bound()
            .ok_or_else(|| Error::data("distance table for the normal model"))?;
        if nu.len() < 4 {
            return Err(Error::data(format!("{}: too few rows", path.display())));
        }
        let t: Vec<f64> = nu.iter().map(|v| (v - lower).ln()).collect();
        let slope: Vec<f64> = d_prime.iter().zip(&nu).map(|(dp, v)| dp * (v - lower)).collect();
        let table = DistanceTable { kind, lower, nu, t, d, slope };
        table.check_monotone()?;
        Ok(table)
    }
}

/// Penalised-complexity prior on one degrees-of-freedom parameter.
#[derive(Clone, Debug)]
pub struct PcPrior {
    kind: ModelKind,
    lambda: f64,
    nu_star: Option<f64>,
    xi: Option<f64>,
    table: Arc<DistanceTable>,
}

impl PcPrior {
    /// Calibrated so that `P(ν < ν*) = ξ`.
    pub fn calibrated(kind: ModelKind, nu_star: f64, xi: f64) -> Result<Self> {
        let lambda = calibrate_lambda(kind, nu_star, xi)?;
        Ok(PcPrior { kind, lambda, nu_star: Some(nu_star), xi: Some(xi), table: DistanceTable::shared(kind)? })
    }

    pub fn with_lambda(kind: ModelKind, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("PC prior rate must be positive, got {lambda}")));
        }
        Ok(PcPrior { kind, lambda, nu_star: None, xi: None, table: DistanceTable::shared(kind)? })
    }

    pub fn with_table(kind: ModelKind, lambda: f64, table: Arc<DistanceTable>) -> Result<Self> {
        if table.kind() != kind {
            return Err(Error::invalid("distance table kind does not match the prior"));
        }
        let mut p = PcPrior::with_lambda(kind, lambda)?;
        p.table = table;
        Ok(p)
    }

    /// `(ν* = 10, ξ = 0.8)` for Student-t; for Slash the same `ξ` at the
    /// Slash df that best approximates a Student-t with 10 df.
    pub fn default_for(kind: ModelKind) -> Result<Self> {
        match kind {
            ModelKind::StudentT => PcPrior::calibrated(kind, 10.0, 0.8),
            ModelKind::Slash => PcPrior::calibrated(kind, default_slash_nu_star()?, 0.8),
            ModelKind::Normal => Err(Error::domain("the normal model has no flexibility parameter")),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn nu_star(&self) -> Option<f64> {
        self.nu_star
    }
    pub fn xi(&self) -> Option<f64> {
        self.xi
    }
    pub fn table(&self) -> &DistanceTable {
        &self.table
    }

    /// Log density on `(ν_min, 200]`, renormalised for the truncation at the cap.
    pub fn log_density(&self, nu: f64) -> f64 {
        match self.table.eval(nu) {
            None => f64::NEG_INFINITY,
            Some((d, dp)) => {
                self.lambda.ln() - self.lambda * d + dp.abs().ln() + self.lambda * self.table.min_distance()
            }
        }
    }
}

pub fn pc_log_prior(prior: &PcPrior, nu: f64) -> f64 {
    prior.log_density(nu)
}

fn default_slash_nu_star() -> Result<f64> {
    static NU_STAR: OnceLock<f64> = OnceLock::new();
    if let Some(v) = NU_STAR.get() {
        return Ok(*v);
    }
    let v = crate::simstudies::kl_match_slash_df(10.0)?;
    Ok(*NU_STAR.get_or_init(|| v))
}
