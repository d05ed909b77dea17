//! C interface to `htc-core`.
//!
//! Models and spectra are opaque heap handles created and released by this
//! library. Every fallible call returns an [`HtcStatus`]; on failure the
//! message is available from [`htc_last_error_message`] on the same thread.
//! Panics never cross the boundary and surface as `HTC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use htc_core::config::parse_config;
use htc_core::error::Error;
use htc_core::fluorescence::fluorescence_spectrum;
use htc_core::model::{KernelPolicy, ModelParams};
use htc_core::moments::population_spectrum;
use htc_core::oracle::{oracle_transmission_sweep, OracleSettings};
use htc_core::spectrum::{Order, PointFlag, SpectrumSeries, Values};
use htc_core::steady::{estimate_n, polariton_modes, transmission_with_order};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtcStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or an unknown key.
    InvalidArgument = 1,
    /// A physical parameter failed validation.
    InvalidParameter = 2,
    /// Singular solve, pole or non-convergence.
    Numerical = 3,
    /// Oracle Hilbert space too large.
    DimensionCap = 4,
    Panic = 5,
}

/// Per-point quality flag, matching the `flag` column of CLI output.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtcFlag {
    Ok = 0,
    Pole = 1,
    Truncation = 2,
    Singular = 3,
    Unphysical = 4,
}

impl From<PointFlag> for HtcFlag {
    fn from(f: PointFlag) -> Self {
        match f {
            PointFlag::Ok => HtcFlag::Ok,
            PointFlag::Pole => HtcFlag::Pole,
            PointFlag::Truncation => HtcFlag::Truncation,
            PointFlag::Singular => HtcFlag::Singular,
            PointFlag::Unphysical => HtcFlag::Unphysical,
        }
    }
}

/// Hybridized cavity-molecule modes at resonance, in units of Γ.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HtcPolaritons {
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

/// Parameters, truncation policy and perturbative order.
pub struct HtcModel {
    params: ModelParams,
    policy: KernelPolicy,
    order: Order,
    include_intermolecular: bool,
    oracle: OracleSettings,
}

/// A sampled spectrum: grid, values (real or complex) and flags.
pub struct HtcSpectrum {
    series: SpectrumSeries,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HtcStatus {
    match e {
        Error::InvalidParameter { .. } => HtcStatus::InvalidParameter,
        Error::DimensionCap { .. } => HtcStatus::DimensionCap,
        Error::Config(_) | Error::InvalidInput(_) | Error::Io(_) => HtcStatus::InvalidArgument,
        Error::PoleProximity { .. }
        | Error::CapTooSmall { .. }
        | Error::SingularMatrix { .. }
        | Error::NonConvergence { .. } => HtcStatus::Numerical,
    }
}

struct Fail(HtcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(HtcStatus::InvalidArgument, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HtcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HtcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            HtcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not valid UTF-8")))
}

unsafe fn model_ref<'a>(m: *const HtcModel) -> Result<&'a HtcModel, Fail> {
    m.as_ref().ok_or_else(|| invalid("model is null"))
}

unsafe fn grid_arg<'a>(grid: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if grid.is_null() || len == 0 {
        return Err(invalid("grid is null or empty"));
    }
    Ok(std::slice::from_raw_parts(grid, len))
}

unsafe fn emit(out: *mut *mut HtcSpectrum, series: SpectrumSeries) {
    *out = Box::into_raw(Box::new(HtcSpectrum { series }));
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn htc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn htc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New model with the Figure 2 defaults. Release with [`htc_model_free`].
#[no_mangle]
pub extern "C" fn htc_model_new() -> *mut HtcModel {
    Box::into_raw(Box::new(HtcModel {
        params: ModelParams::figure2_defaults(),
        policy: KernelPolicy::default(),
        order: Order::First,
        include_intermolecular: true,
        oracle: OracleSettings::default(),
    }))
}

/// Model from a TOML document in the CLI configuration format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn htc_model_from_toml(text: *const c_char, out: *mut *mut HtcModel) -> HtcStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let c = parse_config(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(HtcModel {
            params: c.physics,
            policy: c.policy,
            order: c.order,
            include_intermolecular: c.include_intermolecular,
            oracle: c.oracle,
        }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards. Null is
/// accepted.
#[no_mangle]
pub unsafe extern "C" fn htc_model_free(model: *mut HtcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Sets a physics field (`lambda`, `g`, `n_molecules`, ...), a policy field
/// (`tail_tol`, `k_max_hard`, `total_order_cap`), `order` (1 or 2),
/// `include_intermolecular` (0 or 1) or an oracle cutoff
/// (`photon_cutoff`, `vib_cutoff`). The model is left unchanged when the
/// result fails validation.
///
/// # Safety
/// `model` must be a live handle and `key` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn htc_model_set(model: *mut HtcModel, key: *const c_char, value: f64) -> HtcStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| invalid("model is null"))?;
        let key = str_arg(key, "key")?;
        let count = |v: f64| -> Result<usize, Fail> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(invalid(&format!("`{key}` needs a non-negative integer, got {v}")))
            }
        };
        let mut next = (m.params, m.policy, m.order, m.include_intermolecular, m.oracle);
        match key {
            "tail_tol" => next.1.tail_tol = value,
            "k_max_hard" => next.1.k_max_hard = count(value)?,
            "total_order_cap" => next.1.total_order_cap = count(value)?,
            "order" => {
                next.2 = match value {
                    1.0 => Order::First,
                    2.0 => Order::Second,
                    _ => return Err(invalid(&format!("order must be 1 or 2, got {value}"))),
                }
            }
            "include_intermolecular" => next.3 = value != 0.0,
            "photon_cutoff" => next.4.photon_cutoff = count(value)?,
            "vib_cutoff" => next.4.vib_cutoff = count(value)?,
            _ => next.0.set_field(key, value)?,
        }
        next.0.validate()?;
        next.1.validate()?;
        (m.params, m.policy, m.order, m.include_intermolecular, m.oracle) = next;
        Ok(())
    })
}

/// Reads a physics field by name.
///
/// # Safety
/// `model` must be a live handle, `key` a NUL-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn htc_model_get(model: *const HtcModel, key: *const c_char, out: *mut f64) -> HtcStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = m.params.get_field(str_arg(key, "key")?)?;
        Ok(())
    })
}

/// Complex transmission over `len` cavity detunings (units of Γ).
///
/// # Safety
/// `grid` must point to `len` doubles and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn htc_transmission(
    model: *const HtcModel,
    grid: *const f64,
    len: usize,
    out: *mut *mut HtcSpectrum,
) -> HtcStatus {
    guard(|| {
        let m = model_ref(model)?;
        let g = grid_arg(grid, len)?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        emit(out, transmission_with_order(&m.params, &m.policy, g, m.order)?);
        Ok(())
    })
}

/// Total excited population over `len` cavity detunings.
///
/// # Safety
/// As [`htc_transmission`].
#[no_mangle]
pub unsafe extern "C" fn htc_population(
    model: *const HtcModel,
    grid: *const f64,
    len: usize,
    out: *mut *mut HtcSpectrum,
) -> HtcStatus {
    guard(|| {
        let m = model_ref(model)?;
        let g = grid_arg(grid, len)?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let s = population_spectrum(&m.params, &m.policy, g, m.order, m.include_intermolecular)?;
        emit(out, s);
        Ok(())
    })
}

/// Fluorescence spectrum over `len` emission frequencies.
///
/// # Safety
/// As [`htc_transmission`].
#[no_mangle]
pub unsafe extern "C" fn htc_fluorescence(
    model: *const HtcModel,
    grid: *const f64,
    len: usize,
    out: *mut *mut HtcSpectrum,
) -> HtcStatus {
    guard(|| {
        let m = model_ref(model)?;
        let g = grid_arg(grid, len)?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        emit(out, fluorescence_spectrum(&m.params, &m.policy, g)?);
        Ok(())
    })
}

/// Master-equation transmission for at most two molecules.
///
/// # Safety
/// As [`htc_transmission`].
#[no_mangle]
pub unsafe extern "C" fn htc_oracle_transmission(
    model: *const HtcModel,
    grid: *const f64,
    len: usize,
    out: *mut *mut HtcSpectrum,
) -> HtcStatus {
    guard(|| {
        let m = model_ref(model)?;
        let g = grid_arg(grid, len)?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        emit(out, oracle_transmission_sweep(&m.params, &m.oracle, g)?);
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn htc_polaritons(model: *const HtcModel, out: *mut HtcPolaritons) -> HtcStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let p = polariton_modes(&m.params, &m.policy)?;
        *out = HtcPolaritons {
            omega_plus: p.omega_plus,
            omega_minus: p.omega_minus,
            gamma_plus: p.gamma_plus,
            gamma_minus: p.gamma_minus,
        };
        Ok(())
    })
}

/// N ≈ ω₋²/g².
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn htc_estimate_n(omega_minus: f64, g: f64, out: *mut f64) -> HtcStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = estimate_n(omega_minus, g)?;
        Ok(())
    })
}

/// # Safety
/// `spectrum` must come from this library and not be used afterwards. Null
/// is accepted.
#[no_mangle]
pub unsafe extern "C" fn htc_spectrum_free(spectrum: *mut HtcSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `spectrum` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn htc_spectrum_len(spectrum: *const HtcSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.series.len())
}

/// 1 when values are complex (transmission), 0 when real.
///
/// # Safety
/// `spectrum` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn htc_spectrum_is_complex(spectrum: *const HtcSpectrum) -> i32 {
    spectrum
        .as_ref()
        .map_or(0, |s| matches!(s.series.values, Values::Complex(_)) as i32)
}

/// Copies up to `cap` samples into the non-null buffers among `grid`, `re`,
/// `im` and `flags`. `im` receives zeros for real spectra. Returns the
/// number of samples copied.
///
/// # Safety
/// Each non-null buffer must hold `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn htc_spectrum_copy(
    spectrum: *const HtcSpectrum,
    grid: *mut f64,
    re: *mut f64,
    im: *mut f64,
    flags: *mut HtcFlag,
    cap: usize,
) -> usize {
    let Some(s) = spectrum.as_ref() else {
        return 0;
    };
    let s = &s.series;
    let n = s.len().min(cap);
    for i in 0..n {
        let (r, j) = match &s.values {
            Values::Complex(v) => (v[i].re, v[i].im),
            Values::Real(v) => (v[i], 0.0),
        };
        if !grid.is_null() {
            *grid.add(i) = s.grid[i];
        }
        if !re.is_null() {
            *re.add(i) = r;
        }
        if !im.is_null() {
            *im.add(i) = j;
        }
        if !flags.is_null() {
            *flags.add(i) = s.flags[i].into();
        }
    }
    n
}
