//! C ABI over `snakelp`.
//!
//! Objects are opaque heap handles released with their `_free` function.
//! Every fallible call returns a [`SnakelpStatus`]; on failure the message is
//! available from [`snakelp_last_error`] on the same thread. Panics never
//! cross the boundary and are reported as `SNAKELP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use snakelp::edgemap::DEFAULT_BUDGET;
use snakelp::evaluate::dice;
use snakelp::imagecore::{add_gaussian_noise, generate_shape, load_pgm, save_pgm, GrayImage, ImageError, ShapeKind};
use snakelp::ipsolve::{auto_backend, phase_one, solve_with, SolveError, SolveOptions};
use snakelp::lp::LpDump;
use snakelp::segment::{run, SegmentConfig, SegmentError, SegmentationResult};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnakelpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Segmentation = 5,
    Solver = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnakelpShape {
    Arrow = 0,
    Heart = 1,
    Rectangle = 2,
    Star = 3,
    Multi = 4,
}

impl From<SnakelpShape> for ShapeKind {
    fn from(s: SnakelpShape) -> Self {
        match s {
            SnakelpShape::Arrow => ShapeKind::Arrow,
            SnakelpShape::Heart => ShapeKind::Heart,
            SnakelpShape::Rectangle => ShapeKind::Rectangle,
            SnakelpShape::Star => ShapeKind::Star,
            SnakelpShape::Multi => ShapeKind::Multi,
        }
    }
}

/// Segmentation parameters. Zero `k` and `tile` and non-positive `theta` and
/// negative `tau` select the library defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnakelpSegmentConfig {
    pub k: usize,
    pub t_budget: usize,
    /// Tile size; 0 segments the whole image as one region.
    pub tile: usize,
    pub seed: u64,
    pub theta: f64,
    pub tau: f64,
}

impl From<&SnakelpSegmentConfig> for SegmentConfig {
    fn from(c: &SnakelpSegmentConfig) -> Self {
        SegmentConfig {
            k: (c.k > 0).then_some(c.k),
            t_budget: c.t_budget,
            tile: (c.tile > 0).then_some(c.tile),
            seed: c.seed,
            theta: (c.theta > 0.0).then_some(c.theta),
            tau_match: (c.tau >= 0.0).then_some(c.tau),
            ..SegmentConfig::default()
        }
    }
}

/// Opaque 8-bit grayscale image.
pub struct SnakelpImage(GrayImage);

/// Opaque segmentation result.
pub struct SnakelpResult {
    inner: SegmentationResult,
    mask: SnakelpImage,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl ToString) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(SnakelpStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(SnakelpStatus::NullPointer, format!("{what} is null"))
    }

    fn invalid(msg: impl ToString) -> Self {
        Failure(SnakelpStatus::InvalidArgument, msg.to_string())
    }
}

impl From<ImageError> for Failure {
    fn from(e: ImageError) -> Self {
        let status = match e {
            ImageError::Io(_) => SnakelpStatus::Io,
            ImageError::InvalidParameter(_) | ImageError::TooSmall { .. } => SnakelpStatus::InvalidArgument,
            _ => SnakelpStatus::Format,
        };
        Failure(status, e.to_string())
    }
}

impl From<SegmentError> for Failure {
    fn from(e: SegmentError) -> Self {
        let status = match e {
            SegmentError::InvalidConfig(_) => SnakelpStatus::InvalidArgument,
            SegmentError::Solve(_) => SnakelpStatus::Solver,
            _ => SnakelpStatus::Segmentation,
        };
        Failure(status, e.to_string())
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        Failure(SnakelpStatus::Solver, e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status plus the thread's
/// last error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SnakelpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SnakelpStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
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
            SnakelpStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn out_slot<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::invalid(format!("{what} is not UTF-8: {e}")))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Failure::invalid(e.to_string()))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into the library.
#[no_mangle]
pub extern "C" fn snakelp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn snakelp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn snakelp_segment_config_default() -> SnakelpSegmentConfig {
    SnakelpSegmentConfig {
        k: 0,
        t_budget: DEFAULT_BUDGET,
        tile: 0,
        seed: 0,
        theta: 0.0,
        tau: -1.0,
    }
}

/// Copies `len = width·height` row-major bytes into a new image.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snakelp_image_new(
    width: usize,
    height: usize,
    data: *const u8,
    len: usize,
    out: *mut *mut SnakelpImage,
) -> SnakelpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        if data.is_null() {
            return Err(Failure::null("data"));
        }
        if Some(len) != width.checked_mul(height) {
            return Err(Failure::invalid(format!("{len} bytes for a {width}x{height} image")));
        }
        let bytes = std::slice::from_raw_parts(data, len).to_vec();
        let img = GrayImage::new(width, height, bytes).map_err(Failure::invalid)?;
        *out = Box::into_raw(Box::new(SnakelpImage(img)));
        Ok(())
    })
}

/// Reads a binary PGM file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snakelp_image_load(path: *const c_char, out: *mut *mut SnakelpImage) -> SnakelpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let img = load_pgm(c_str(path, "path")?)?;
        *out = Box::into_raw(Box::new(SnakelpImage(img)));
        Ok(())
    })
}

/// Writes a binary PGM file.
///
/// # Safety
/// `img` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn snakelp_image_save(img: *const SnakelpImage, path: *const c_char) -> SnakelpStatus {
    guard(|| {
        let img = borrow(img, "img")?;
        save_pgm(&img.0, c_str(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn snakelp_image_width(img: *const SnakelpImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.width())
}

/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn snakelp_image_height(img: *const SnakelpImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.height())
}

/// Row-major pixels, valid while the handle lives.
///
/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn snakelp_image_data(img: *const SnakelpImage) -> *const u8 {
    img.as_ref().map_or(ptr::null(), |i| i.0.data().as_ptr())
}

/// # Safety
/// `img` must be null or a handle not yet freed. Result masks are owned by
/// their result and must not be passed here.
#[no_mangle]
pub unsafe extern "C" fn snakelp_image_free(img: *mut SnakelpImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snakelp_generate_shape(
    shape: SnakelpShape,
    width: usize,
    height: usize,
    out: *mut *mut SnakelpImage,
) -> SnakelpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let img = generate_shape(shape.into(), width, height)?;
        *out = Box::into_raw(Box::new(SnakelpImage(img)));
        Ok(())
    })
}

/// New image with additive Gaussian noise of standard deviation `sigma`.
///
/// # Safety
/// `img` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snakelp_add_noise(
    img: *const SnakelpImage,
    sigma: f64,
    seed: u64,
    out: *mut *mut SnakelpImage,
) -> SnakelpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let noisy = add_gaussian_noise(&borrow(img, "img")?.0, sigma, seed)?;
        *out = Box::into_raw(Box::new(SnakelpImage(noisy)));
        Ok(())
    })
}

/// Segments `img`; a null `config` uses the defaults.
///
/// # Safety
/// `img` must be a live handle, `config` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn snakelp_segment(
    img: *const SnakelpImage,
    config: *const SnakelpSegmentConfig,
    out: *mut *mut SnakelpResult,
) -> SnakelpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let img = borrow(img, "img")?;
        let cfg = config.as_ref().map_or_else(SegmentConfig::default, SegmentConfig::from);
        cfg.validate()?;
        let inner = run(&img.0, &cfg)?;
        let mask = SnakelpImage(inner.mask.clone());
        *out = Box::into_raw(Box::new(SnakelpResult { inner, mask }));
        Ok(())
    })
}

/// Filled mask, owned by the result.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn snakelp_result_mask(res: *const SnakelpResult) -> *const SnakelpImage {
    res.as_ref().map_or(ptr::null(), |r| &r.mask)
}

/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn snakelp_result_contour_len(res: *const SnakelpResult) -> usize {
    res.as_ref().map_or(0, |r| r.inner.contour.len())
}

/// Copies up to `cap` contour pixels into `rows` and `cols`; returns the
/// number copied.
///
/// # Safety
/// `res` must be null or a live handle; `rows` and `cols` must hold `cap`
/// elements each.
#[no_mangle]
pub unsafe extern "C" fn snakelp_result_contour(
    res: *const SnakelpResult,
    rows: *mut usize,
    cols: *mut usize,
    cap: usize,
) -> usize {
    let Some(r) = res.as_ref() else { return 0 };
    if rows.is_null() || cols.is_null() {
        return 0;
    }
    let n = cap.min(r.inner.contour.len());
    for (i, &(row, col)) in r.inner.contour[..n].iter().enumerate() {
        *rows.add(i) = row;
        *cols.add(i) = col;
    }
    n
}

/// Final objective summed over regions, or NaN when nothing was solved.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn snakelp_result_objective(res: *const SnakelpResult) -> f64 {
    res.as_ref()
        .and_then(|r| r.inner.objective_trace.last().copied())
        .unwrap_or(f64::NAN)
}

/// Full result as JSON; release with [`snakelp_string_free`].
///
/// # Safety
/// `res` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snakelp_result_json(res: *const SnakelpResult, out: *mut *mut c_char) -> SnakelpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let json = borrow(res, "res")?.inner.to_json(None).to_string();
        *out = into_c_string(json)?;
        Ok(())
    })
}

/// # Safety
/// `res` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn snakelp_result_free(res: *mut SnakelpResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Dice similarity of two same-size masks (nonzero is foreground).
///
/// # Safety
/// Both images must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snakelp_dice(
    pred: *const SnakelpImage,
    truth: *const SnakelpImage,
    out: *mut f64,
) -> SnakelpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        *out = dice(&borrow(pred, "pred")?.0, &borrow(truth, "truth")?.0).map_err(Failure::invalid)?;
        Ok(())
    })
}

/// Solves an LP given in the JSON dump format and writes the outcome as JSON.
/// A missing `x0` triggers a phase-one search for a start.
///
/// # Safety
/// `lp_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snakelp_solve_lp_json(lp_json: *const c_char, out: *mut *mut c_char) -> SnakelpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let dump: LpDump = serde_json::from_str(c_str(lp_json, "lp_json")?)
            .map_err(|e| Failure(SnakelpStatus::Format, format!("malformed LP JSON: {e}")))?;
        let lp = dump
            .to_lp()
            .map_err(|e| Failure(SnakelpStatus::Format, e.to_string()))?;
        let opts = SolveOptions::default();
        let x0 = match dump.x0 {
            Some(x) => x,
            None => phase_one(&lp, &opts)?,
        };
        let mut backend = auto_backend(&lp, dump.constants.as_ref().map(|c| (c.k, c.t)));
        let outcome = solve_with(&lp, &x0, &opts, backend.as_mut())?;
        let json = serde_json::to_string(&outcome).map_err(Failure::invalid)?;
        *out = into_c_string(json)?;
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn snakelp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
