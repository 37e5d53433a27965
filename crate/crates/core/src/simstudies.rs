//! Simulation studies: data generators, Student-t/Slash df matching, and a
//! replication harness with MSE and selection scores.
//!
//! Seeding rule: replication `r` of a study with seed `s` generates its data
//! from ChaCha20 stream `2r` and runs its chain on stream `2r + 1`, both
//! keyed by `s`, so no two random sequences overlap.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Bernoulli, Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::divergence::{golden_section, kl_student_slash, KlDirection};
use crate::error::{Error, Result};
use crate::sampler::{run_chain, MixtureConfig, SamplerConfig};
use crate::sampling::{sample_mixing, MixingLaw};
use crate::smn::{variance_correction, ModelKind};

pub const STUDY1_BETA: [f64; 3] = [1.0, 2.0, -2.0];
pub const STUDY2_BETA: [f64; 4] = [1.0, 2.0, -2.0, 1.0];
pub const STUDY2_NU: f64 = 3.0;
/// Component weights and df of the Study III error mixture.
pub const STUDY3_WEIGHTS: [f64; 3] = [0.1, 0.6, 0.3];
pub const STUDY3_NU_T: f64 = 4.0;
pub const STUDY3_NU_S: f64 = 1.15;
/// Slash df used in Study I, matched to Student-t with 15 and 3 df.
pub const STUDY1_SLASH_NU: [f64; 2] = [3.36, 1.25];
/// Standard deviation of the noise added to the Bernoulli covariate in Study II.
pub const STUDY2_NOISE_SD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Study {
    I,
    II,
    III,
}

impl std::str::FromStr for Study {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Study::I),
            "II" | "2" => Ok(Study::II),
            "III" | "3" => Ok(Study::III),
            other => Err(Error::invalid(format!("unknown study '{other}' (expected I, II or III)"))),
        }
    }
}

/// Generating values of a simulated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub study: Study,
    /// Generating error law; `None` when the errors come from a mixture.
    pub kind: Option<ModelKind>,
    pub nu: Option<f64>,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub n: usize,
    pub seed: u64,
    pub stream: u64,
    pub single_true_model: bool,
    pub mixture_weights: Option<[f64; 3]>,
    pub component_counts: Option<[usize; 3]>,
}

/// One experiment of the simulation grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub study: Study,
    pub kind: ModelKind,
    pub nu: f64,
    pub n: usize,
    pub seed: u64,
    pub replications: usize,
}

impl StudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("sample size must be positive"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("at least one replication is required"));
        }
        if self.study == Study::I {
            self.kind.check_df(self.nu)?;
        }
        Ok(())
    }

    /// Data of replication `r`, drawn from stream `2r`.
    pub fn generate(&self, r: usize) -> Result<(Dataset, TruthRecord)> {
        let stream = 2 * r as u64;
        let mut rng = rng_for(self.seed, stream);
        let (data, mut truth) = match self.study {
            Study::I => study1_with(self.kind, self.nu, self.n, &mut rng)?,
            Study::II => study2_with(self.n, &mut rng)?,
            Study::III => study3_with(self.n, &mut rng)?,
        };
        truth.seed = self.seed;
        truth.stream = stream;
        Ok((data, truth))
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Unit-variance error from `kind` (scale `γ` so that the variance is `sigma2`).
fn draw_error<R: Rng + ?Sized>(kind: ModelKind, nu: f64, sigma2: f64, rng: &mut R) -> f64 {
    let gamma = variance_correction(kind, nu).expect("validated df");
    let u = sample_mixing(&MixingLaw::new(kind, nu), rng);
    let z: f64 = StandardNormal.sample(rng);
    (gamma * sigma2 / u).sqrt() * z
}

fn study1_design<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let bern = Bernoulli::new(0.5).expect("valid probability");
    let mut x = DMatrix::zeros(n, 3);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = StandardNormal.sample(rng);
        x[(i, 2)] = if bern.sample(rng) { 1.0 } else { 0.0 };
    }
    x
}

fn names(q: usize) -> Vec<String> {
    std::iter::once("intercept".to_string()).chain((1..q).map(|j| format!("x{j}"))).collect()
}

fn assemble(x: DMatrix<f64>, beta: &[f64], errors: Vec<f64>) -> Result<Dataset> {
    let fitted = &x * nalgebra::DVector::from_column_slice(beta);
    let y: Vec<f64> = fitted.iter().zip(&errors).map(|(f, e)| f + e).collect();
    let q = x.ncols();
    Dataset::new(y, x, names(q))
}

fn study1_with<R: Rng + ?Sized>(kind: ModelKind, nu: f64, n: usize, rng: &mut R) -> Result<(Dataset, TruthRecord)> {
    kind.check_df(nu)?;
    let x = study1_design(n, rng);
    let errors = (0..n).map(|_| draw_error(kind, nu, 1.0, rng)).collect();
    let data = assemble(x, &STUDY1_BETA, errors)?;
    Ok((
        data,
        TruthRecord {
            study: Study::I,
            kind: Some(kind),
            nu: (kind != ModelKind::Normal).then_some(nu),
            beta: STUDY1_BETA.to_vec(),
            sigma2: 1.0,
            n,
            seed: 0,
            stream: 0,
            single_true_model: true,
            mixture_weights: None,
            component_counts: None,
        },
    ))
}

fn study2_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(Dataset, TruthRecord)> {
    if n < 2 {
        return Err(Error::invalid("Study II needs n > 1"));
    }
    let base = study1_design(n, rng);
    let noise = Normal::new(0.0, STUDY2_NOISE_SD).expect("valid sd");
    let mut x = DMatrix::zeros(n, 4);
    for i in 0..n {
        for j in 0..3 {
            x[(i, j)] = base[(i, j)];
        }
        x[(i, 3)] = 2.0 * base[(i, 2)] + noise.sample(rng);
    }
    let errors = (0..n).map(|_| draw_error(ModelKind::StudentT, STUDY2_NU, 1.0, rng)).collect();
    let data = assemble(x, &STUDY2_BETA, errors)?;
    Ok((
        data,
        TruthRecord {
            study: Study::II,
            kind: Some(ModelKind::StudentT),
            nu: Some(STUDY2_NU),
            beta: STUDY2_BETA.to_vec(),
            sigma2: 1.0,
            n,
            seed: 0,
            stream: 0,
            single_true_model: true,
            mixture_weights: None,
            component_counts: None,
        },
    ))
}

fn study3_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(Dataset, TruthRecord)> {
    let x = study1_design(n, rng);
    let mut counts = [0usize; 3];
    let mut errors = Vec::with_capacity(n);
    for _ in 0..n {
        let v: f64 = rng.random();
        let kind = if v < STUDY3_WEIGHTS[0] {
            ModelKind::Normal
        } else if v < STUDY3_WEIGHTS[0] + STUDY3_WEIGHTS[1] {
            ModelKind::StudentT
        } else {
            ModelKind::Slash
        };
        counts[kind.index()] += 1;
        let nu = match kind {
            ModelKind::Normal => f64::INFINITY,
            ModelKind::StudentT => STUDY3_NU_T,
            ModelKind::Slash => STUDY3_NU_S,
        };
        errors.push(draw_error(kind, nu, 1.0, rng));
    }
    let data = assemble(x, &STUDY1_BETA, errors)?;
    Ok((
        data,
        TruthRecord {
            study: Study::III,
            kind: None,
            nu: None,
            beta: STUDY1_BETA.to_vec(),
            sigma2: 1.0,
            n,
            seed: 0,
            stream: 0,
            single_true_model: false,
            mixture_weights: Some(STUDY3_WEIGHTS),
            component_counts: Some(counts),
        },
    ))
}

/// Study I: intercept, a standard normal and a Bernoulli(0.5) covariate,
/// `β = (1, 2, −2)`, `σ² = 1` and errors from `kind`.
pub fn gen_study1(kind: ModelKind, nu: f64, n: usize, seed: u64) -> Result<(Dataset, TruthRecord)> {
    let mut rng = rng_for(seed, 0);
    let (d, mut t) = study1_with(kind, nu, n, &mut rng)?;
    t.seed = seed;
    Ok((d, t))
}

/// Study II: Study I design plus `x3 = 2·x2 + N(0, 0.5²)`, `β = (1, 2, −2, 1)`,
/// Student-t errors with 3 df.
pub fn gen_study2(n: usize, seed: u64) -> Result<(Dataset, TruthRecord)> {
    let mut rng = rng_for(seed, 0);
    let (d, mut t) = study2_with(n, &mut rng)?;
    t.seed = seed;
    Ok((d, t))
}

/// Study III: Study I design with each error drawn from the Normal,
/// Student-t(4) or Slash(1.15) law with probabilities (0.1, 0.6, 0.3).
pub fn gen_study3(n: usize, seed: u64) -> Result<(Dataset, TruthRecord)> {
    let mut rng = rng_for(seed, 0);
    let (d, mut t) = study3_with(n, &mut rng)?;
    t.seed = seed;
    Ok((d, t))
}

/// Shift the response down so that `fraction` of it lies at or below zero,
/// then left-censor those rows at zero. Returns the data and the shift.
pub fn left_censor_at_zero(data: &Dataset, fraction: f64) -> Result<(Dataset, f64)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid(format!("censoring fraction must lie in [0, 1), got {fraction}")));
    }
    let n = data.n();
    let mut sorted: Vec<f64> = data.y().iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let k = (fraction * n as f64).round() as usize;
    let shift = if k == 0 { sorted[0] - 1.0 } else { sorted[k - 1] };
    let mut y = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    for &v in data.y().iter() {
        let s = v - shift;
        if s <= 0.0 {
            y.push(0.0);
            flags.push(true);
        } else {
            y.push(s);
            flags.push(false);
        }
    }
    let out = Dataset::new(y, data.x().clone(), data.columns().to_vec())?.with_censoring(flags, vec![0.0; n])?;
    Ok((out, shift))
}

/// Slash df whose unit-variance law is closest in KL divergence to the
/// unit-variance Student-t with `nu_t` df.
pub fn kl_match_slash_df(nu_t: f64) -> Result<f64> {
    kl_match_slash_df_with(nu_t, KlDirection::default())
}

pub fn kl_match_slash_df_with(nu_t: f64, direction: KlDirection) -> Result<f64> {
    if !(nu_t > 2.0 && nu_t.is_finite()) {
        return Err(Error::domain(format!("Student-t df must exceed 2, got {nu_t}")));
    }
    // coarse scan over ln(ν_s − 1) brackets the minimum
    let grid: Vec<f64> = (0..=40).map(|k| -6.0 + 12.0 * k as f64 / 40.0).collect();
    let obj = |t: f64| kl_student_slash(nu_t, 1.0 + t.exp(), direction);
    let vals = grid.iter().map(|&t| obj(t)).collect::<Result<Vec<_>>>()?;
    let best = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).expect("nonempty");
    if best == 0 || best == grid.len() - 1 {
        return Err(Error::numerical(format!("KL matching for ν_t = {nu_t}: minimum not bracketed")));
    }
    let t = golden_section(obj, grid[best - 1], grid[best + 1], 1e-10)?;
    Ok(1.0 + t.exp())
}

/// Outcome of one replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub replication: usize,
    pub seed: u64,
    pub data_stream: u64,
    pub chain_stream: u64,
    pub rho_hat: Option<[f64; 3]>,
    pub beta_mean: Option<Vec<f64>>,
    pub sigma2_mean: Option<f64>,
    /// Posterior mean of the true model's df over the draws where it was active.
    pub nu_mean: Option<f64>,
    pub selected: Option<ModelKind>,
    pub error: Option<String>,
}

/// Aggregate scores over the completed replications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationScore {
    pub mse_beta: Vec<f64>,
    pub mse_sigma2: f64,
    /// Over replications that selected the true heavy-tailed model only.
    pub mse_nu: Option<f64>,
    /// Mean of `(ρ̂_true − 1)²`; `None` without a single true model.
    pub mse_rho: Option<f64>,
    pub pct_correct: Option<f64>,
    /// Fraction of replications selecting each model.
    pub selection: [f64; 3],
    pub completed: usize,
    pub failed: usize,
}

/// Score completed replications against the truth.
pub fn score_replications(truth: &TruthRecord, rows: &[ReplicationRow]) -> Result<ReplicationScore> {
    let done: Vec<&ReplicationRow> = rows.iter().filter(|r| r.error.is_none() && r.rho_hat.is_some()).collect();
    if done.is_empty() {
        return Err(Error::numerical(format!("all {} replications failed", rows.len())));
    }
    let m = done.len() as f64;
    let q = truth.beta.len();
    let mut mse_beta = vec![0.0; q];
    let mut mse_sigma2 = 0.0;
    let mut selection = [0.0; 3];
    for r in &done {
        let b = r.beta_mean.as_ref().expect("completed row");
        for j in 0..q {
            mse_beta[j] += (b[j] - truth.beta[j]).powi(2) / m;
        }
        mse_sigma2 += (r.sigma2_mean.expect("completed row") - truth.sigma2).powi(2) / m;
        selection[r.selected.expect("completed row").index()] += 1.0 / m;
    }
    let true_kind = truth.kind.filter(|_| truth.single_true_model);
    let (mse_rho, pct_correct, mse_nu) = match true_kind {
        None => (None, None, None),
        Some(kind) => {
            let mse_rho = done.iter().map(|r| (r.rho_hat.expect("completed")[kind.index()] - 1.0).powi(2)).sum::<f64>() / m;
            let hits: Vec<&&ReplicationRow> = done.iter().filter(|r| r.selected == Some(kind)).collect();
            let pct = hits.len() as f64 / m;
            let mse_nu = match truth.nu {
                Some(nu) if kind != ModelKind::Normal => {
                    let v: Vec<f64> = hits.iter().filter_map(|r| r.nu_mean).map(|e| (e - nu).powi(2)).collect();
                    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
                }
                _ => None,
            };
            (Some(mse_rho), Some(pct), mse_nu)
        }
    };
    Ok(ReplicationScore {
        mse_beta,
        mse_sigma2,
        mse_nu,
        mse_rho,
        pct_correct,
        selection,
        completed: done.len(),
        failed: rows.len() - done.len(),
    })
}

fn run_replication(spec: &StudySpec, mixture: &MixtureConfig, config: &SamplerConfig, r: usize) -> ReplicationRow {
    let mut row = ReplicationRow {
        replication: r,
        seed: spec.seed,
        data_stream: 2 * r as u64,
        chain_stream: 2 * r as u64 + 1,
        rho_hat: None,
        beta_mean: None,
        sigma2_mean: None,
        nu_mean: None,
        selected: None,
        error: None,
    };
    let result = spec.generate(r).and_then(|(data, truth)| {
        let mut cfg = config.clone();
        cfg.seed = spec.seed;
        cfg.stream = row.chain_stream;
        let mut mix = mixture.clone();
        if mix.regression.mu0.len() != data.q() {
            mix.regression.mu0 = vec![0.0; data.q()];
        }
        run_chain(&data, &mix, &cfg).map(|out| (out, truth))
    });
    match result {
        Ok((out, truth)) => {
            row.rho_hat = Some(out.rho_hat);
            row.beta_mean = Some(out.beta_mean());
            row.sigma2_mean = Some(out.sigma2_mean());
            row.selected = Some(out.selected_model());
            row.nu_mean = match truth.kind {
                Some(ModelKind::StudentT) => mean(&out.nu_t_draws_given_z2()),
                Some(ModelKind::Slash) => mean(&out.nu_s_draws_given_z3()),
                _ => None,
            };
        }
        Err(e) => {
            log::error!("replication {r} (seed {}, data stream {}) failed: {e}", spec.seed, row.data_stream);
            row.error = Some(e.to_string());
        }
    }
    row
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Run `spec.replications` independent fits on `parallel` worker threads and
/// score them. Results do not depend on `parallel`.
pub fn replicate_and_score(
    spec: &StudySpec,
    mixture: &MixtureConfig,
    config: &SamplerConfig,
    parallel: usize,
) -> Result<(ReplicationScore, Vec<ReplicationRow>)> {
    spec.validate()?;
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<ReplicationRow> =
        pool.install(|| (0..spec.replications).into_par_iter().map(|r| run_replication(spec, mixture, config, r)).collect());
    let (_, truth) = spec.generate(0)?;
    let score = score_replications(&truth, &rows)?;
    Ok((score, rows))
}

/// Per-replication CSV: seed, streams, `ρ̂`, posterior means and selection.
pub fn write_replications_csv(path: &Path, rows: &[ReplicationRow], q: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> =
        ["replication", "seed", "data_stream", "chain_stream", "rho_1", "rho_2", "rho_3"].iter().map(|s| s.to_string()).collect();
    header.extend((0..q).map(|j| format!("beta_{j}")));
    header.extend(["sigma2", "nu_true_model", "selected", "error"].iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for r in rows {
        let mut rec = vec![r.replication.to_string(), r.seed.to_string(), r.data_stream.to_string(), r.chain_stream.to_string()];
        for j in 0..3 {
            rec.push(opt(r.rho_hat.map(|v| v[j])));
        }
        for j in 0..q {
            rec.push(opt(r.beta_mean.as_ref().map(|b| b[j])));
        }
        rec.push(opt(r.sigma2_mean));
        rec.push(opt(r.nu_mean));
        rec.push(r.selected.map(|k| k.name().to_string()).unwrap_or_default());
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text summary laid out like the simulation tables.
pub fn summary_table(spec: &StudySpec, score: &ReplicationScore) -> String {
    let mut s = String::new();
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    s.push_str(&format!(
        "study {:?}  kind {}  nu {}  n {}  replications {} (completed {}, failed {})\n",
        spec.study,
        if spec.study == Study::I { spec.kind.name() } else { "-" },
        if spec.study == Study::I && spec.kind != ModelKind::Normal { format!("{}", spec.nu) } else { "-".into() },
        spec.n,
        spec.replications,
        score.completed,
        score.failed
    ));
    s.push_str("MSE(x10^3)  ");
    for (j, v) in score.mse_beta.iter().enumerate() {
        s.push_str(&format!("beta_{j} {:.3}  ", v * 1e3));
    }
    s.push_str(&format!("sigma2 {:.3}  ", score.mse_sigma2 * 1e3));
    s.push_str(&format!("nu {}  rho {}\n", fmt(score.mse_nu.map(|v| v * 1e3)), fmt(score.mse_rho.map(|v| v * 1e3))));
    s.push_str(&format!(
        "selected  normal {:.1}%  student-t {:.1}%  slash {:.1}%  correct {}\n",
        100.0 * score.selection[0],
        100.0 * score.selection[1],
        100.0 * score.selection[2],
        score.pct_correct.map(|v| format!("{:.1}%", 100.0 * v)).unwrap_or_else(|| "-".into())
    ));
    s
}
