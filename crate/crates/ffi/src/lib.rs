//! C ABI over `slepian_qns`.
//!
//! Every fallible function returns an [`SqStatus`]; on failure the message is
//! kept per thread and read back with [`sq_last_error_message`]. Objects are
//! opaque handles created by `*_new`/`*_compute` functions and released with
//! the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use slepian_qns::dpss::{compute_dpss, DpssParams, Taper};
use slepian_qns::filter::{passband, FilterCurve};
use slepian_qns::psd::{Lorentzian, PsdModel};
use slepian_qns::scenario::{run_to_dir, ScenarioConfig};
use slepian_qns::sim::{expected_signal, ExperimentConfig, PreparedExperiment};
use slepian_qns::waveform::{dpss_waveform, modulate, normalize_power, Modulation, Waveform};
use slepian_qns::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numeric = 3,
    Config = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Carrier modulation of a shifted taper.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqModulation {
    Cos = 0,
    Sin = 1,
    Ssb = 2,
}

/// DPSS tapers of orders 0..=max_order for one (N, W).
pub struct SqTaperSet {
    params: DpssParams,
    tapers: Vec<Taper>,
}

/// A piecewise-constant control waveform.
pub struct SqWaveform {
    inner: Waveform,
    filter: FilterCurve,
}

/// A one-sided noise PSD model.
pub struct SqPsd {
    inner: PsdModel,
}

/// Outcome of one simulated experiment.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SqSignal {
    pub signal: f64,
    pub variance: f64,
    pub shots: usize,
}

/// Passband [a, b] around a shift and its area A.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SqPassband {
    pub center: f64,
    pub a: f64,
    pub b: f64,
    pub area: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(SqStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parameter(_) => SqStatus::InvalidArgument,
            Error::Numeric(_) => SqStatus::Numeric,
            Error::Config { .. } | Error::Json(_) => SqStatus::Config,
            Error::Io(_) | Error::Csv(_) => SqStatus::Io,
        };
        Fail(code, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SqStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(SqStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SqStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SqStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes (without the terminator) of the last error on this thread; 0 if none.
#[no_mangle]
pub extern "C" fn sq_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes().len()))
}

/// Copy the last error message into `buf`, NUL-terminated.
///
/// Returns the number of bytes written excluding the terminator, or -1 if
/// `buf` is null or smaller than `sq_last_error_length() + 1`.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sq_last_error_message(buf: *mut c_char, len: usize) -> isize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |c| c.as_bytes());
        if buf.is_null() || len < bytes.len() + 1 {
            return -1;
        }
        ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
        *buf.add(bytes.len()) = 0;
        bytes.len() as isize
    })
}

#[no_mangle]
pub extern "C" fn sq_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Compute DPSS tapers of orders 0..=max_order with N = n and bandwidth w.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to free with `sq_taper_set_free`.
#[no_mangle]
pub unsafe extern "C" fn sq_dpss_compute(n: usize, w: f64, max_order: usize, out: *mut *mut SqTaperSet) -> SqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = DpssParams::new(n, w)?;
        let tapers = compute_dpss(&params, max_order)?;
        out.write(Box::into_raw(Box::new(SqTaperSet { params, tapers })));
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a handle from `sq_dpss_compute` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sq_taper_set_free(set: *mut SqTaperSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `set` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sq_taper_set_count(set: *const SqTaperSet) -> usize {
    set.as_ref().map_or(0, |s| s.tapers.len())
}

/// # Safety
/// `set` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sq_taper_set_length(set: *const SqTaperSet) -> usize {
    set.as_ref().map_or(0, |s| s.params.n())
}

unsafe fn taper<'a>(set: *const SqTaperSet, order: usize) -> Result<&'a Taper, Fail> {
    let s = as_ref(set, "set")?;
    s.tapers.get(order).ok_or_else(|| invalid(format!("order {order} not in set of {}", s.tapers.len())))
}

/// Copy taper `order` into `buf`, which must hold `sq_taper_set_length(set)` values.
///
/// # Safety
/// `set` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sq_taper_set_values(set: *const SqTaperSet, order: usize, buf: *mut f64, len: usize) -> SqStatus {
    guard(|| {
        let t = taper(set, order)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < t.values.len() {
            return Err(Fail(SqStatus::BufferTooSmall, format!("buffer holds {len}, taper has {}", t.values.len())));
        }
        ptr::copy_nonoverlapping(t.values.as_ptr(), buf, t.values.len());
        Ok(())
    })
}

/// Concentration eigenvalue of taper `order`.
///
/// # Safety
/// `set` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sq_taper_set_eigenvalue(set: *const SqTaperSet, order: usize, out: *mut f64) -> SqStatus {
    guard(|| write_out(out, taper(set, order)?.eigenvalue, "out"))
}

/// DPSWF of taper `order` at angular frequency `omega` (rad/s) for sample spacing `dt` (s).
///
/// # Safety
/// `set` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sq_taper_set_dpswf(set: *const SqTaperSet, order: usize, dt: f64, omega: f64, out: *mut f64) -> SqStatus {
    guard(|| {
        if !(dt > 0.0) {
            return Err(invalid("dt must be positive"));
        }
        write_out(out, taper(set, order)?.dpswf(dt, omega), "out")
    })
}

fn wrap_waveform(inner: Waveform) -> *mut SqWaveform {
    let filter = FilterCurve::new(&inner);
    Box::into_raw(Box::new(SqWaveform { inner, filter }))
}

/// Waveform from taper `order`, shifted to `omega_s` (rad/s) and normalized to
/// power `power` (rad^2/s^2). `power <= 0` skips normalization.
///
/// # Safety
/// `set` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sq_waveform_from_taper(
    set: *const SqTaperSet,
    order: usize,
    dt: f64,
    modulation: SqModulation,
    omega_s: f64,
    power: f64,
    out: *mut *mut SqWaveform,
) -> SqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = match modulation {
            SqModulation::Cos => Modulation::Cos,
            SqModulation::Sin => Modulation::Sin,
            SqModulation::Ssb => Modulation::Ssb,
        };
        let mut w = modulate(&dpss_waveform(taper(set, order)?, 1.0, dt)?, m, omega_s)?;
        if power > 0.0 {
            w = normalize_power(&w, power)?;
        }
        out.write(wrap_waveform(w));
        Ok(())
    })
}

/// Waveform from `len` Rabi amplitudes (rad/s) with segment duration `dt` (s).
///
/// # Safety
/// `omega` must point to `len` readable doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sq_waveform_new(omega: *const f64, len: usize, dt: f64, out: *mut *mut SqWaveform) -> SqStatus {
    guard(|| {
        if omega.is_null() {
            return Err(null("omega"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let v = std::slice::from_raw_parts(omega, len).to_vec();
        out.write(wrap_waveform(Waveform::new(v, dt, "ffi")?));
        Ok(())
    })
}

/// # Safety
/// `w` must be null or a live waveform handle.
#[no_mangle]
pub unsafe extern "C" fn sq_waveform_free(w: *mut SqWaveform) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// # Safety
/// `w` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sq_waveform_length(w: *const SqWaveform) -> usize {
    w.as_ref().map_or(0, |w| w.inner.len())
}

/// Copy the Rabi amplitudes into `buf`.
///
/// # Safety
/// `w` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sq_waveform_values(w: *const SqWaveform, buf: *mut f64, len: usize) -> SqStatus {
    guard(|| {
        let w = as_ref(w, "waveform")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let n = w.inner.len();
        if len < n {
            return Err(Fail(SqStatus::BufferTooSmall, format!("buffer holds {len}, waveform has {n}")));
        }
        ptr::copy_nonoverlapping(w.inner.omega.as_ptr(), buf, n);
        Ok(())
    })
}

/// Filter function F(omega) in rad^2.
///
/// # Safety
/// `w` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sq_waveform_filter(w: *const SqWaveform, omega: f64, out: *mut f64) -> SqStatus {
    guard(|| write_out(out, as_ref(w, "waveform")?.filter.eval(omega), "out"))
}

/// Passband of half-width 2 pi W / dt around `omega_s` and its area.
///
/// # Safety
/// `w` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sq_waveform_passband(w: *const SqWaveform, omega_s: f64, bandwidth: f64, out: *mut SqPassband) -> SqStatus {
    guard(|| {
        let w = as_ref(w, "waveform")?;
        let p = passband(&w.filter, omega_s, bandwidth, w.inner.dt)?;
        write_out(out, SqPassband { center: p.center, a: p.a, b: p.b, area: p.area }, "out")
    })
}

/// Lorentzian PSD: amplitude / (1 + ((|omega| - center) / width)^2), with center and width in rad/s.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sq_psd_lorentzian(amplitude: f64, center: f64, width: f64, out: *mut *mut SqPsd) -> SqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = PsdModel::Lorentzian(Lorentzian { amplitude, center, width });
        inner.validate()?;
        out.write(Box::into_raw(Box::new(SqPsd { inner })));
        Ok(())
    })
}

/// PSD from its JSON form, e.g. `{"kind":"gaussian_mix","peaks":[...]}` (rad/s units).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sq_psd_from_json(json: *const c_char, out: *mut *mut SqPsd) -> SqStatus {
    guard(|| {
        let s = str_arg(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner: PsdModel = serde_json::from_str(s).map_err(Error::from)?;
        inner.validate()?;
        out.write(Box::into_raw(Box::new(SqPsd { inner })));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a live PSD handle.
#[no_mangle]
pub unsafe extern "C" fn sq_psd_free(p: *mut SqPsd) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sq_psd_eval(p: *const SqPsd, omega: f64, out: *mut f64) -> SqStatus {
    guard(|| write_out(out, as_ref(p, "psd")?.inner.eval(omega), "out"))
}

/// Noise-free signal S(T) = (1/pi) integral F S over [0, inf).
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sq_expected_signal(psd: *const SqPsd, w: *const SqWaveform, out: *mut f64) -> SqStatus {
    guard(|| write_out(out, expected_signal(&as_ref(psd, "psd")?.inner, &as_ref(w, "waveform")?.inner), "out"))
}

/// Simulate `shots` single-shot measurements of the waveform under the PSD.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sq_simulate(
    psd: *const SqPsd,
    w: *const SqWaveform,
    shots: usize,
    seed: u64,
    out: *mut SqSignal,
) -> SqStatus {
    guard(|| {
        let cfg = ExperimentConfig::new(as_ref(w, "waveform")?.inner.clone(), as_ref(psd, "psd")?.inner.clone(), shots, seed);
        let r = PreparedExperiment::new(cfg)?.run();
        write_out(out, SqSignal { signal: r.signal, variance: r.signal_variance(), shots: r.shots }, "out")
    })
}

/// Run a scenario from its JSON config and write the bundle into `out_dir`.
///
/// # Safety
/// `config_json` and `out_dir` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn sq_scenario_run(config_json: *const c_char, out_dir: *const c_char, oracle_only: bool) -> SqStatus {
    guard(|| {
        let cfg = ScenarioConfig::from_json(str_arg(config_json, "config_json")?, "config_json")?;
        run_to_dir(&cfg, Path::new(str_arg(out_dir, "out_dir")?), oracle_only)?;
        Ok(())
    })
}
