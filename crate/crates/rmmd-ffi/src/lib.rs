//! C ABI for the rmmd library: opaque sample handles, a plain-old-data test
//! configuration, and status codes. Binding generators consume the cbindgen
//! header in `include/rmmd.h`.
//!
//! Memory contract: every pointer returned by an `rmmd_*_new` function must
//! be released with the matching `rmmd_*_free`. Input buffers are copied;
//! the caller keeps ownership of its own memory.

use rmmd::kernel::{Bandwidth, KernelSpec};
use rmmd::testing::{run_test, Method, NullMode, TestConfig};
use rmmd::{Error, Sample};
use std::os::raw::{c_char, c_double, c_ulonglong};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmmdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SampleTooSmall = 3,
    DegenerateVariance = 4,
    IllConditioned = 5,
    InternalError = 6,
}

fn status_of(err: &Error) -> RmmdStatus {
    match err {
        Error::SampleTooSmall { .. } | Error::EmptySample => RmmdStatus::SampleTooSmall,
        Error::DegenerateVariance(_) => RmmdStatus::DegenerateVariance,
        Error::IllConditioned => RmmdStatus::IllConditioned,
        Error::Io(_) => RmmdStatus::InternalError,
        _ => RmmdStatus::InvalidArgument,
    }
}

/// Opaque handle over an n×dim sample.
pub struct RmmdSample {
    inner: Sample,
}

/// Test statistic selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmmdMethod {
    Rmmd = 0,
    Mmd = 1,
    Kfda = 2,
    Ks = 3,
}

/// Kernel selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmmdKernel {
    /// Gaussian with the bandwidth field; pass 0 or a negative bandwidth
    /// for the median heuristic.
    Gaussian = 0,
    PeriodicCosh = 1,
    PeriodicLog = 2,
    ProductPeriodic = 3,
}

/// Null model selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmmdNull {
    Normal = 0,
    Permutation = 1,
}

/// Plain-old-data test configuration.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RmmdTestOptions {
    pub method: RmmdMethod,
    pub kernel: RmmdKernel,
    /// Gaussian bandwidth; <= 0 selects the median heuristic.
    pub bandwidth: c_double,
    /// Periodic-log / product-periodic parameter in (0, 1).
    pub theta: c_double,
    pub kappa_p: c_double,
    pub kappa_q: c_double,
    /// KFDA regularization, > 0.
    pub gamma: c_double,
    pub alpha: c_double,
    pub null_mode: RmmdNull,
    pub n_permutations: c_ulonglong,
    pub seed: c_ulonglong,
    /// Nonzero: fall back to the permutation null on degenerate variance.
    pub fallback_on_degenerate: u8,
}

/// Test result, mirrors the library's outcome fields.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RmmdTestResult {
    pub statistic: c_double,
    pub p_value: c_double,
    /// 1 when H0 is rejected at alpha.
    pub reject: u8,
    pub null_center: c_double,
    pub null_scale: c_double,
    pub n_used: c_ulonglong,
    /// The null mode that produced the p-value.
    pub null_mode_used: RmmdNull,
}

/// Sensible defaults: rmmd, gaussian:median, kappa 1, alpha 0.05, normal
/// null with permutation fallback, 1000 permutations.
#[no_mangle]
pub extern "C" fn rmmd_test_options_default() -> RmmdTestOptions {
    RmmdTestOptions {
        method: RmmdMethod::Rmmd,
        kernel: RmmdKernel::Gaussian,
        bandwidth: 0.0,
        theta: 0.9,
        kappa_p: 1.0,
        kappa_q: 1.0,
        gamma: 0.1,
        alpha: 0.05,
        null_mode: RmmdNull::Normal,
        n_permutations: 1000,
        seed: 0,
        fallback_on_degenerate: 1,
    }
}

/// Create a sample from a row-major buffer of `len` points in `dim`
/// dimensions. Returns NULL on invalid input (non-finite values, zero
/// sizes, or a null buffer).
///
/// # Safety
/// `data` must point to at least `len * dim` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn rmmd_sample_new(
    data: *const c_double,
    len: c_ulonglong,
    dim: c_ulonglong,
) -> *mut RmmdSample {
    if data.is_null() || len == 0 || dim == 0 {
        return std::ptr::null_mut();
    }
    let slice = std::slice::from_raw_parts(data, (len * dim) as usize);
    match Sample::new(slice.to_vec(), dim as usize) {
        Ok(inner) => Box::into_raw(Box::new(RmmdSample { inner })),
        Err(_) => std::ptr::null_mut(),
    }
}

/// Release a sample handle. NULL is ignored.
///
/// # Safety
/// `sample` must come from [`rmmd_sample_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rmmd_sample_free(sample: *mut RmmdSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Number of points in the sample; 0 for NULL.
///
/// # Safety
/// `sample` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rmmd_sample_len(sample: *const RmmdSample) -> c_ulonglong {
    if sample.is_null() {
        return 0;
    }
    (*sample).inner.len() as c_ulonglong
}

fn build_config(opts: &RmmdTestOptions) -> Result<TestConfig, Error> {
    let method = match opts.method {
        RmmdMethod::Rmmd => Method::Rmmd,
        RmmdMethod::Mmd => Method::Mmd,
        RmmdMethod::Kfda => Method::Kfda,
        RmmdMethod::Ks => Method::Ks,
    };
    let kernel = match opts.kernel {
        RmmdKernel::Gaussian => KernelSpec::Gaussian {
            bandwidth: if opts.bandwidth > 0.0 {
                Bandwidth::Fixed(opts.bandwidth)
            } else {
                Bandwidth::Median
            },
        },
        RmmdKernel::PeriodicCosh => KernelSpec::PeriodicCosh,
        RmmdKernel::PeriodicLog => KernelSpec::PeriodicLog { theta: opts.theta },
        RmmdKernel::ProductPeriodic => KernelSpec::ProductPeriodic { theta: opts.theta },
    };
    let mut cfg = TestConfig::new(method).with_seed(opts.seed);
    if method != Method::Ks {
        cfg.kernel = Some(kernel);
    }
    cfg.kappa_p = opts.kappa_p;
    cfg.kappa_q = opts.kappa_q;
    cfg.gamma = opts.gamma;
    cfg.alpha = opts.alpha;
    cfg.null_mode = match opts.null_mode {
        RmmdNull::Normal => NullMode::Normal,
        RmmdNull::Permutation => NullMode::Permutation,
    };
    cfg.n_permutations = opts.n_permutations as usize;
    cfg.fallback_on_degenerate = opts.fallback_on_degenerate != 0;
    cfg.validate()?;
    Ok(cfg)
}

/// Run a two-sample test. On success fills `out` and returns `Ok`.
///
/// # Safety
/// `x` and `y` must be live sample handles, `opts` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rmmd_test_run(
    x: *const RmmdSample,
    y: *const RmmdSample,
    opts: *const RmmdTestOptions,
    out: *mut RmmdTestResult,
) -> RmmdStatus {
    if x.is_null() || y.is_null() || opts.is_null() || out.is_null() {
        return RmmdStatus::NullPointer;
    }
    let cfg = match build_config(&*opts) {
        Ok(cfg) => cfg,
        Err(e) => return status_of(&e),
    };
    match run_test(&(*x).inner, &(*y).inner, &cfg) {
        Ok(res) => {
            *out = RmmdTestResult {
                statistic: res.statistic,
                p_value: res.p_value,
                reject: res.reject as u8,
                null_center: res.null_center,
                null_scale: res.null_scale,
                n_used: res.n_used as c_ulonglong,
                null_mode_used: match res.null_mode_used {
                    NullMode::Normal => RmmdNull::Normal,
                    NullMode::Permutation => RmmdNull::Permutation,
                },
            };
            RmmdStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Šidák-corrected per-comparison level 1 − (1 − alpha)^(1/n).
#[no_mangle]
pub extern "C" fn rmmd_sidak(
    alpha_family: c_double,
    n_comparisons: c_ulonglong,
    out: *mut c_double,
) -> RmmdStatus {
    if out.is_null() {
        return RmmdStatus::NullPointer;
    }
    match rmmd::multcomp::sidak(alpha_family, n_comparisons as usize) {
        Ok(v) => {
            // SAFETY: out checked non-null above
            unsafe { *out = v };
            RmmdStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Median pairwise distance of a sample (the gaussian:median base value).
///
/// # Safety
/// `sample` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rmmd_median_heuristic(
    sample: *const RmmdSample,
    out: *mut c_double,
) -> RmmdStatus {
    if sample.is_null() || out.is_null() {
        return RmmdStatus::NullPointer;
    }
    match rmmd::kernel::median_heuristic(&(*sample).inner) {
        Ok(v) => {
            *out = v;
            RmmdStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rmmd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
