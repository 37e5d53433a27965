//! C interface to the smnmix sampler.
//!
//! Objects are opaque handles created by `*_new`/`smn_fit` and released by
//! the matching `*_free`. Every fallible call returns an [`SmnStatus`]; the
//! message of the most recent failure on the calling thread is available
//! from [`smn_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use smnmix::criteria::{criteria_report, DEFAULT_CRITERIA_DRAWS};
use smnmix::sampler::{run_chain, write_draws_csv};
use smnmix::{ChainOutput, Dataset, Error, MixtureConfig, SamplerConfig};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmnStatus {
    Ok = 0,
    InvalidInput = 1,
    DataError = 2,
    NumericalFailure = 3,
    NullPointer = 4,
    Panic = 5,
}

/// Dataset handle.
pub struct SmnDataset {
    inner: Dataset,
}

/// Fitted chain handle.
pub struct SmnFit {
    chain: ChainOutput,
}

/// Run settings of [`smn_fit`]; obtain defaults from [`smn_sampler_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SmnSamplerOptions {
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub warmup_iters: usize,
    pub tau_t: f64,
    pub tau_s: f64,
    /// Dirichlet concentration shared by the three components.
    pub alpha: f64,
}

/// Model comparison criteria of the selected model.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SmnCriteria {
    pub lpml: f64,
    pub dic: f64,
    pub eaic: f64,
    pub ebic: f64,
    pub waic: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SmnStatus {
    match e.exit_code() {
        1 => SmnStatus::InvalidInput,
        2 => SmnStatus::DataError,
        _ => SmnStatus::NumericalFailure,
    }
}

fn guard<F: FnOnce() -> Result<(), (SmnStatus, String)>>(f: F) -> SmnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmnStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SmnStatus::Panic
        }
    }
}

fn lib<T>(r: smnmix::Result<T>) -> Result<T, (SmnStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SmnStatus, String) {
    (SmnStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn smn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Build a dataset from `n` responses and a row-major `n × q` design.
///
/// # Safety
/// `y` must point to `n` doubles, `x` to `n * q` doubles and `out` to a
/// writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn smn_dataset_new(
    y: *const f64,
    x: *const f64,
    n: usize,
    q: usize,
    out: *mut *mut SmnDataset,
) -> SmnStatus {
    guard(|| {
        if y.is_null() || x.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let len = n.checked_mul(q).ok_or_else(|| (SmnStatus::InvalidInput, "n * q overflows".to_string()))?;
        let y = std::slice::from_raw_parts(y, n).to_vec();
        let x = std::slice::from_raw_parts(x, len);
        let rows: Vec<Vec<f64>> = x.chunks(q.max(1)).take(n).map(<[f64]>::to_vec).collect();
        let columns = (0..q).map(|j| format!("x{j}")).collect();
        let data = lib(Dataset::from_rows(y, &rows, columns))?;
        *out = Box::into_raw(Box::new(SmnDataset { inner: data }));
        Ok(())
    })
}

/// Mark rows left-censored: `flags[i] != 0` means `y_i` is only known to be
/// at most `kappa[i]` (and must equal it).
///
/// # Safety
/// `data` must be a live handle; `flags` and `kappa` must hold `n` entries.
#[no_mangle]
pub unsafe extern "C" fn smn_dataset_set_censoring(
    data: *mut SmnDataset,
    flags: *const u8,
    kappa: *const f64,
) -> SmnStatus {
    guard(|| {
        let d = data.as_mut().ok_or_else(|| null("dataset"))?;
        if flags.is_null() || kappa.is_null() {
            return Err(null("argument"));
        }
        let n = d.inner.n();
        let flags = std::slice::from_raw_parts(flags, n).iter().map(|&f| f != 0).collect();
        let kappa = std::slice::from_raw_parts(kappa, n).to_vec();
        d.inner = lib(d.inner.clone().with_censoring(flags, kappa))?;
        Ok(())
    })
}

/// # Safety
/// `data` must be null or a handle from [`smn_dataset_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn smn_dataset_free(data: *mut SmnDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

#[no_mangle]
pub extern "C" fn smn_sampler_options_default(seed: u64) -> SmnSamplerOptions {
    let c = SamplerConfig::new(seed);
    SmnSamplerOptions {
        seed,
        iterations: c.iterations,
        burn_in: c.burn_in,
        thin: c.thin,
        warmup_iters: c.warmup_iters,
        tau_t: c.tau_t,
        tau_s: c.tau_s,
        alpha: smnmix::DirichletPrior::sparse(3).alpha[0],
    }
}

/// Fit the three-component mixture with default priors.
///
/// # Safety
/// `data` must be a live dataset handle, `options` valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn smn_fit(
    data: *const SmnDataset,
    options: *const SmnSamplerOptions,
    out: *mut *mut SmnFit,
) -> SmnStatus {
    guard(|| {
        let d = data.as_ref().ok_or_else(|| null("dataset"))?;
        let o = options.as_ref().ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("output slot"));
        }
        let mut config = SamplerConfig::new(o.seed);
        config.iterations = o.iterations;
        config.burn_in = o.burn_in;
        config.thin = o.thin;
        config.warmup_iters = o.warmup_iters;
        config.tau_t = o.tau_t;
        config.tau_s = o.tau_s;
        let mut mixture = lib(MixtureConfig::default_for(d.inner.q()))?;
        mixture.dirichlet = lib(smnmix::DirichletPrior::new(vec![o.alpha; 3]))?;
        let chain = lib(run_chain(&d.inner, &mixture, &config))?;
        *out = Box::into_raw(Box::new(SmnFit { chain }));
        Ok(())
    })
}

/// # Safety
/// `fit` must be null or a handle from [`smn_fit`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn smn_fit_free(fit: *mut SmnFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Posterior model probabilities (Normal, Student-t, Slash) into `out[0..3]`.
///
/// # Safety
/// `fit` must be a live handle and `out` must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn smn_fit_rho_hat(fit: *const SmnFit, out: *mut f64) -> SmnStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        if out.is_null() {
            return Err(null("output"));
        }
        ptr::copy_nonoverlapping(f.chain.rho_hat.as_ptr(), out, 3);
        Ok(())
    })
}

/// Selected model number: 1 Normal, 2 Student-t, 3 Slash; 0 for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smn_fit_selected_model(fit: *const SmnFit) -> i32 {
    fit.as_ref().map_or(0, |f| f.chain.selected_model().number() as i32)
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smn_fit_num_draws(fit: *const SmnFit) -> usize {
    fit.as_ref().map_or(0, |f| f.chain.len())
}

/// Model-averaged posterior means of `β` (`len` must equal `q`) and `σ²`.
///
/// # Safety
/// `fit` must be a live handle, `beta` must hold `len` doubles and `sigma2`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn smn_fit_posterior_means(
    fit: *const SmnFit,
    beta: *mut f64,
    len: usize,
    sigma2: *mut f64,
) -> SmnStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        if beta.is_null() || sigma2.is_null() {
            return Err(null("output"));
        }
        let b = f.chain.beta_mean();
        if b.len() != len {
            return Err((SmnStatus::InvalidInput, format!("beta buffer has {len} slots, the model has {}", b.len())));
        }
        ptr::copy_nonoverlapping(b.as_ptr(), beta, len);
        *sigma2 = f.chain.sigma2_mean();
        Ok(())
    })
}

/// Criteria of the selected model evaluated on `data`.
///
/// # Safety
/// `fit` and `data` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn smn_fit_criteria(
    fit: *const SmnFit,
    data: *const SmnDataset,
    out: *mut SmnCriteria,
) -> SmnStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        let d = data.as_ref().ok_or_else(|| null("dataset"))?;
        let out = out.as_mut().ok_or_else(|| null("output"))?;
        let r = lib(criteria_report(&f.chain, &d.inner, DEFAULT_CRITERIA_DRAWS))?;
        *out = SmnCriteria { lpml: r.lpml, dic: r.dic, eaic: r.eaic, ebic: r.ebic, waic: r.waic };
        Ok(())
    })
}

/// Write the kept draws as CSV to the UTF-8 path `path`.
///
/// # Safety
/// `fit` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn smn_fit_write_draws(fit: *const SmnFit, path: *const c_char) -> SmnStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        if path.is_null() {
            return Err(null("path"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (SmnStatus::InvalidInput, "path is not valid UTF-8".to_string()))?;
        lib(write_draws_csv(Path::new(p), &f.chain))
    })
}

/// Slash df closest in KL divergence to the unit-variance Student-t with `nu_t` df.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smn_kl_match_slash_df(nu_t: f64, out: *mut f64) -> SmnStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("output"))?;
        *out = lib(smnmix::simstudies::kl_match_slash_df(nu_t))?;
        Ok(())
    })
}
