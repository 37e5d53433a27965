//! Command-line front end: `fit`, `simulate`, `replicate` and `predict`.
//!
//! Every option can also be given in a plain-text `key = value` file passed
//! with `--config`; keys are the long flag names (`burn-in` or `burn_in`).
//! Flags given on the command line win over the file.

mod config;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::criteria::{criteria_report, posterior_summary, Summary, DEFAULT_CRITERIA_DRAWS};
use crate::data::{CsvSpec, Dataset};
use crate::error::{Error, Result};
use crate::priors::{DirichletPrior, PcPrior, RegressionPrior};
use crate::sampler::{
    predict, read_draws_csv, run_chain, select_model, write_draws_csv, ChainOutput, DfTarget, MixtureConfig,
    PredictiveSummary, SamplerConfig,
};
use crate::simstudies::{
    left_censor_at_zero, replicate_and_score, summary_table, write_replications_csv, Study, StudySpec,
};
use crate::smn::ModelKind;

pub use config::ConfigFile;

#[derive(Debug, Parser)]
#[command(name = "smnmix", version, about = "Bayesian linear regression with Normal/Student-t/Slash error selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the mixture model to a CSV dataset.
    Fit(FitArgs),
    /// Generate a dataset from one of the simulation studies.
    Simulate(SimulateArgs),
    /// Run replicated fits of a simulation study and score them.
    Replicate(ReplicateArgs),
    /// Posterior predictive draws for new design rows.
    Predict(PredictArgs),
}

#[derive(Debug, Args, Default)]
pub struct SamplerArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub warmup_iters: Option<usize>,
    #[arg(long)]
    pub tau_t: Option<f64>,
    #[arg(long)]
    pub tau_s: Option<f64>,
    #[arg(long)]
    pub nu_t_init: Option<f64>,
    #[arg(long)]
    pub nu_s_init: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct PriorArgs {
    /// Prior mean of every regression coefficient.
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub tau0_sq: Option<f64>,
    #[arg(long)]
    pub a0: Option<f64>,
    #[arg(long)]
    pub b0: Option<f64>,
    /// Dirichlet concentration, shared by the three components.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub nu_star_t: Option<f64>,
    #[arg(long)]
    pub xi_t: Option<f64>,
    #[arg(long)]
    pub nu_star_s: Option<f64>,
    #[arg(long)]
    pub xi_s: Option<f64>,
    /// Comma-separated subset of normal, student-t, slash.
    #[arg(long)]
    pub models: Option<String>,
    /// `full` or `mixing-only`.
    #[arg(long)]
    pub df_target: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub response: Option<String>,
    /// Comma-separated covariate columns (default: all other columns).
    #[arg(long)]
    pub covariates: Option<String>,
    #[arg(long)]
    pub censor_column: Option<String>,
    #[arg(long)]
    pub limit_column: Option<String>,
    /// Prepend a column of ones named `intercept`.
    #[arg(long)]
    pub add_intercept: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Upper bound on the draws used for the criteria.
    #[arg(long)]
    pub criteria_draws: Option<usize>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// I, II or III.
    #[arg(long)]
    pub study: Option<String>,
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Left-censor this fraction of the responses at zero.
    #[arg(long)]
    pub censor_fraction: Option<f64>,
    /// Output CSV; the truth record goes next to it as `<stem>.truth.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub study: Option<String>,
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    pub parallel: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Draws CSV written by `fit`.
    #[arg(long)]
    pub draws: Option<PathBuf>,
    /// CSV whose header names the fitted covariates.
    #[arg(long)]
    pub new_design: Option<PathBuf>,
    /// best, normal, student-t or slash; model-averaged when absent.
    #[arg(long)]
    pub conditional: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `args`, run the command and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Replicate(a) => cmd_replicate(&a),
        Command::Predict(a) => cmd_predict(&a),
    }
}

fn load(path: &Option<PathBuf>) -> Result<ConfigFile> {
    match path {
        Some(p) => ConfigFile::read(p),
        None => Ok(ConfigFile::default()),
    }
}

fn required<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::invalid(format!("--{key} is required (flag or config file)")))
}

fn parse_kind(s: &str) -> Result<ModelKind> {
    s.parse::<ModelKind>()
}

fn sampler_config(a: &SamplerArgs, file: &ConfigFile) -> Result<SamplerConfig> {
    let seed = required(file.pick(a.seed, "seed")?, "seed")?;
    let mut c = SamplerConfig::new(seed);
    c.iterations = file.pick(a.iterations, "iterations")?.unwrap_or(c.iterations);
    c.burn_in = file.pick(a.burn_in, "burn-in")?.unwrap_or(c.burn_in);
    c.thin = file.pick(a.thin, "thin")?.unwrap_or(c.thin);
    c.warmup_iters = file.pick(a.warmup_iters, "warmup-iters")?.unwrap_or(c.warmup_iters);
    c.tau_t = file.pick(a.tau_t, "tau-t")?.unwrap_or(c.tau_t);
    c.tau_s = file.pick(a.tau_s, "tau-s")?.unwrap_or(c.tau_s);
    c.nu_t_init = file.pick(a.nu_t_init, "nu-t-init")?.unwrap_or(c.nu_t_init);
    c.nu_s_init = file.pick(a.nu_s_init, "nu-s-init")?.unwrap_or(c.nu_s_init);
    c.validate()?;
    Ok(c)
}

fn mixture_config(a: &PriorArgs, file: &ConfigFile, q: usize) -> Result<MixtureConfig> {
    let mut m = MixtureConfig::default_for(q)?;
    let vague = RegressionPrior::vague(q);
    let mu0 = file.pick(a.mu0, "mu0")?;
    m.regression = RegressionPrior::new(
        mu0.map(|v| vec![v; q]).unwrap_or(vague.mu0),
        file.pick(a.tau0_sq, "tau0-sq")?.unwrap_or(vague.tau0_sq),
        file.pick(a.a0, "a0")?.unwrap_or(vague.a0),
        file.pick(a.b0, "b0")?.unwrap_or(vague.b0),
    )?;
    if let Some(alpha) = file.pick(a.alpha, "alpha")? {
        m.dirichlet = DirichletPrior::new(vec![alpha; 3])?;
    }
    for (kind, star, xi, star_key, xi_key) in [
        (ModelKind::StudentT, a.nu_star_t, a.xi_t, "nu-star-t", "xi-t"),
        (ModelKind::Slash, a.nu_star_s, a.xi_s, "nu-star-s", "xi-s"),
    ] {
        let star = file.pick(star, star_key)?;
        let xi = file.pick(xi, xi_key)?;
        if star.is_some() || xi.is_some() {
            let current = m.pc_prior(kind).expect("heavy-tailed kind");
            let star = required(star.or(current.nu_star()), star_key)?;
            let xi = required(xi.or(current.xi()), xi_key)?;
            let prior = PcPrior::calibrated(kind, star, xi)?;
            match kind {
                ModelKind::StudentT => m.pc_t = prior,
                _ => m.pc_s = prior,
            }
        }
    }
    if let Some(list) = file.pick(a.models.clone(), "models")? {
        let kinds = list.split(',').filter(|s| !s.trim().is_empty()).map(parse_kind).collect::<Result<Vec<_>>>()?;
        m = m.restricted_to(&kinds);
    }
    if let Some(t) = file.pick(a.df_target.clone(), "df-target")? {
        m.df_target = t.parse::<DfTarget>()?;
    }
    m.validate(q)?;
    Ok(m)
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect()
}

/// Reported posterior summaries: model-averaged and per visited model.
#[derive(Debug, Serialize)]
pub struct FitSummary {
    pub rho_hat: [f64; 3],
    pub selected_model: ModelKind,
    pub draws: usize,
    pub model_averaged: BTreeMap<String, Summary>,
    pub conditional: BTreeMap<String, BTreeMap<String, Summary>>,
    pub accept_rate_t: Option<f64>,
    pub accept_rate_s: Option<f64>,
    pub warmup: crate::sampler::WarmupReport,
    pub imputation: Option<crate::sampler::ImputationSummary>,
    pub sampler: SamplerConfig,
}

fn summarize(series: &[f64]) -> Option<Summary> {
    posterior_summary(series, 0.95).ok()
}

pub fn fit_summary(chain: &ChainOutput, sampler: &SamplerConfig) -> FitSummary {
    let by_params = |draws: &[&crate::sampler::Draw], kind: Option<ModelKind>| {
        let mut out = BTreeMap::new();
        for (j, name) in chain.columns.iter().enumerate() {
            let v: Vec<f64> = draws.iter().map(|d| d.beta[j]).collect();
            if let Some(s) = summarize(&v) {
                out.insert(format!("beta.{name}"), s);
            }
        }
        let v: Vec<f64> = draws.iter().map(|d| d.sigma2).collect();
        if let Some(s) = summarize(&v) {
            out.insert("sigma2".into(), s);
        }
        let nu = match kind {
            Some(ModelKind::StudentT) => Some(("nu_t", draws.iter().map(|d| d.nu_t).collect::<Vec<_>>())),
            Some(ModelKind::Slash) => Some(("nu_s", draws.iter().map(|d| d.nu_s).collect())),
            _ => None,
        };
        if let Some((key, v)) = nu {
            if v.len() >= crate::sampler::MIN_DF_SUMMARY_DRAWS {
                if let Some(s) = summarize(&v) {
                    out.insert(key.into(), s);
                }
            }
        }
        out
    };
    let all: Vec<&crate::sampler::Draw> = chain.draws.iter().collect();
    let mut conditional = BTreeMap::new();
    for kind in [ModelKind::Normal, ModelKind::StudentT, ModelKind::Slash] {
        let subset = chain.draws_for(kind);
        if subset.len() >= 2 {
            conditional.insert(kind.name().to_string(), by_params(&subset, Some(kind)));
        }
    }
    FitSummary {
        rho_hat: chain.rho_hat,
        selected_model: chain.selected_model(),
        draws: chain.len(),
        model_averaged: by_params(&all, None),
        conditional,
        accept_rate_t: chain.accept_rate_t,
        accept_rate_s: chain.accept_rate_s,
        warmup: chain.warmup.clone(),
        imputation: chain.imputation.clone(),
        sampler: sampler.clone(),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn text_report(summary: &FitSummary, criteria: Option<&crate::criteria::CriteriaReport>, data: &Dataset) -> String {
    let mut s = String::new();
    s.push_str(&format!("observations: {} (censored: {})\n", data.n(), data.n_censored()));
    s.push_str(&format!("kept draws: {}\n", summary.draws));
    s.push_str(&format!(
        "posterior model probabilities: normal {:.3}, student-t {:.3}, slash {:.3}\n",
        summary.rho_hat[0], summary.rho_hat[1], summary.rho_hat[2]
    ));
    s.push_str(&format!("selected model: {}\n\n", summary.selected_model));
    s.push_str(&format!("{:<20} {:>12} {:>12} {:>12} {:>12} {:>12}\n", "parameter", "mean", "median", "sd", "hpd_low", "hpd_high"));
    let mut table = |title: &str, rows: &BTreeMap<String, Summary>| {
        s.push_str(&format!("[{title}]\n"));
        for (k, v) in rows {
            s.push_str(&format!(
                "{:<20} {:>12.4} {:>12.4} {:>12.4} {:>12.4} {:>12.4}\n",
                k, v.mean, v.median, v.sd, v.hpd_low, v.hpd_high
            ));
        }
    };
    table("model averaged", &summary.model_averaged);
    for (k, rows) in &summary.conditional {
        table(k, rows);
    }
    if let Some(c) = criteria {
        s.push_str(&format!(
            "\ncriteria ({}): LPML {:.3}  DIC {:.3}  EAIC {:.3}  EBIC {:.3}  WAIC {:.3}\n",
            c.selected_model, c.lpml, c.dic, c.eaic, c.ebic, c.waic
        ));
    }
    for w in &summary.warmup.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s
}

pub fn cmd_fit(a: &FitArgs) -> Result<()> {
    let file = load(&a.config)?;
    let input: PathBuf = required(file.pick(a.input.clone(), "input")?, "input")?;
    let response: String = required(file.pick(a.response.clone(), "response")?, "response")?;
    let out: PathBuf = required(file.pick(a.out.clone(), "out")?, "out")?;
    let add_intercept = a.add_intercept || file.pick::<bool>(None, "add-intercept")?.unwrap_or(false);
    let spec = CsvSpec {
        response,
        covariates: file.pick(a.covariates.clone(), "covariates")?.map(|s| split_list(&s)),
        censor_column: file.pick(a.censor_column.clone(), "censor-column")?,
        limit_column: file.pick(a.limit_column.clone(), "limit-column")?,
        add_intercept,
    };
    let sampler = sampler_config(&a.sampler, &file)?;
    let data = Dataset::read_csv(&input, &spec)?;
    let mixture = mixture_config(&a.prior, &file, data.q())?;
    let max_draws = file.pick(a.criteria_draws, "criteria-draws")?.unwrap_or(DEFAULT_CRITERIA_DRAWS);

    let chain = run_chain(&data, &mixture, &sampler)?;
    std::fs::create_dir_all(&out)?;
    write_draws_csv(&out.join("draws.csv"), &chain)?;
    let summary = fit_summary(&chain, &sampler);
    write_json(&out.join("summary.json"), &summary)?;
    let criteria = match criteria_report(&chain, &data, max_draws) {
        Ok(c) => Some(c),
        Err(e) => {
            log::warn!("criteria not computed: {e}");
            None
        }
    };
    write_json(&out.join("criteria.json"), &criteria)?;
    let report = text_report(&summary, criteria.as_ref(), &data);
    std::fs::write(out.join("report.txt"), &report)?;
    print!("{report}");
    Ok(())
}

fn truth_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into());
    csv.with_file_name(format!("{stem}.truth.json"))
}

fn study_spec(
    file: &ConfigFile,
    study: &Option<String>,
    kind: &Option<String>,
    nu: Option<f64>,
    n: Option<usize>,
    seed: Option<u64>,
    replications: usize,
) -> Result<StudySpec> {
    let study: Study = required(file.pick(study.clone(), "study")?, "study")?.parse()?;
    let kind_s = file.pick(kind.clone(), "kind")?;
    let nu = file.pick(nu, "nu")?;
    let n = required(file.pick(n, "n")?, "n")?;
    let seed = required(file.pick(seed, "seed")?, "seed")?;
    let (kind, nu) = match study {
        Study::I => {
            let kind = parse_kind(&required(kind_s, "kind")?)?;
            let nu = match kind {
                ModelKind::Normal => nu.unwrap_or(f64::INFINITY),
                _ => required(nu, "nu")?,
            };
            kind.check_df(nu).map_err(|e| match e {
                Error::Domain(m) => Error::invalid(m),
                other => other,
            })?;
            (kind, nu)
        }
        other => {
            if kind_s.is_some() || nu.is_some() {
                log::warn!("study {other:?} has a fixed error law; --kind and --nu are ignored");
                eprintln!("warning: study {other:?} has a fixed error law; --kind and --nu are ignored");
            }
            match other {
                Study::II => (ModelKind::StudentT, crate::simstudies::STUDY2_NU),
                _ => (ModelKind::StudentT, crate::simstudies::STUDY3_NU_T),
            }
        }
    };
    Ok(StudySpec { study, kind, nu, n, seed, replications })
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let file = load(&a.config)?;
    let spec = study_spec(&file, &a.study, &a.kind, a.nu, a.n, a.seed, 1)?;
    if spec.n == 0 {
        return Err(Error::invalid("--n must be positive"));
    }
    let out: PathBuf = required(file.pick(a.out.clone(), "out")?, "out")?;
    let (mut data, truth) = spec.generate(0)?;
    let mut sidecar = serde_json::to_value(&truth)?;
    if let Some(f) = file.pick(a.censor_fraction, "censor-fraction")? {
        let (censored, shift) = left_censor_at_zero(&data, f)?;
        data = censored;
        sidecar["censor_fraction"] = f.into();
        sidecar["response_shift"] = shift.into();
    }
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    data.write_csv(&out)?;
    write_json(&truth_path(&out), &sidecar)?;
    Ok(())
}

pub fn cmd_replicate(a: &ReplicateArgs) -> Result<()> {
    let file = load(&a.config)?;
    let r = required(file.pick(a.replications, "replications")?, "replications")?;
    if r == 0 {
        return Err(Error::invalid("--replications must be at least 1"));
    }
    let sampler = sampler_config(&a.sampler, &file)?;
    let spec = study_spec(&file, &a.study, &a.kind, a.nu, a.n, Some(sampler.seed), r)?;
    let parallel = file.pick(a.parallel, "parallel")?.unwrap_or(1);
    let out: PathBuf = required(file.pick(a.out.clone(), "out")?, "out")?;
    let q = match spec.study {
        Study::II => 4,
        _ => 3,
    };
    let mixture = mixture_config(&a.prior, &file, q)?;
    let (score, rows) = replicate_and_score(&spec, &mixture, &sampler, parallel)?;
    std::fs::create_dir_all(&out)?;
    write_replications_csv(&out.join("replications.csv"), &rows, q)?;
    write_json(&out.join("score.json"), &score)?;
    let table = summary_table(&spec, &score);
    std::fs::write(out.join("summary.txt"), &table)?;
    print!("{table}");
    Ok(())
}

/// New-design rows matched to the fitted columns by header name; a missing
/// `intercept` column is filled with ones.
fn read_new_design(path: &Path, columns: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut index = Vec::with_capacity(columns.len());
    for c in columns {
        match header.iter().position(|h| h == c) {
            Some(j) => index.push(Some(j)),
            None if c == "intercept" => index.push(None),
            None => {
                return Err(Error::invalid(format!(
                    "new design lacks column '{c}'; expected columns: {}",
                    columns.join(", ")
                )))
            }
        }
    }
    let mut rows = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = index
            .iter()
            .map(|j| match j {
                None => Ok(1.0),
                Some(j) => {
                    let raw = rec.get(*j).unwrap_or("");
                    raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                        Error::data(format!("row {}, column '{}': cannot parse '{raw}' as a number", r + 1, header[*j]))
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let file = load(&a.config)?;
    let draws: PathBuf = required(file.pick(a.draws.clone(), "draws")?, "draws")?;
    let design: PathBuf = required(file.pick(a.new_design.clone(), "new-design")?, "new-design")?;
    let seed = required(file.pick(a.seed, "seed")?, "seed")?;
    let out: PathBuf = required(file.pick(a.out.clone(), "out")?, "out")?;
    let chain = read_draws_csv(&draws)?.into_chain();
    let conditional = match file.pick(a.conditional.clone(), "conditional")? {
        None => None,
        Some(s) if s.trim().eq_ignore_ascii_case("best") => Some(select_model(&chain.rho_hat)),
        Some(s) => Some(parse_kind(&s)?),
    };
    let rows = read_new_design(&design, &chain.columns)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut preds = Vec::with_capacity(rows.len());
    for row in &rows {
        preds.push(predict(&chain, row, conditional, &mut rng)?);
    }
    std::fs::create_dir_all(&out)?;

    let mut w = csv::Writer::from_path(out.join("predictive_summary.csv"))?;
    w.write_record(["row", "mean", "sd", "hpd_low", "hpd_high"])?;
    for (i, p) in preds.iter().enumerate() {
        let s = PredictiveSummary::from_draws(p)?;
        w.write_record([(i + 1).to_string(), format!("{:?}", s.mean), format!("{:?}", s.sd), format!("{:?}", s.hpd_low), format!("{:?}", s.hpd_high)])?;
    }
    w.flush()?;

    let mut w = std::io::BufWriter::new(std::fs::File::create(out.join("predictive_draws.csv"))?);
    let header: Vec<String> = (1..=rows.len()).map(|i| format!("row_{i}")).collect();
    writeln!(w, "{}", header.join(","))?;
    let m = preds.first().map_or(0, Vec::len);
    for k in 0..m {
        let line: Vec<String> = preds.iter().map(|p| format!("{:.16e}", p[k])).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}
