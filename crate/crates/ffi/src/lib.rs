//! C ABI over the hepacrop core.
//!
//! Every function returns an [`HcStatus`]; on failure a message is kept per
//! thread and can be read with [`hc_last_error_message`]. Handles are opaque
//! and must be released with their `*_free` function. No panic crosses the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hepacrop::lesion::{preprocess_patient, window_hu, PatientCrops, PreprocessConfig};
use hepacrop::metrics::{aggregate_ci, auc_binary};
use hepacrop::volume::{parse_nifti, parse_nifti_mask};
use hepacrop::{AnnotationMask, Volume};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Geometry = 4,
    Extract = 5,
    /// The result is mathematically undefined, e.g. AUC with one class.
    Undefined = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// A parsed CT volume.
pub struct HcVolume(Volume);

/// A parsed binary annotation mask.
pub struct HcMask(AnnotationMask);

/// Crops extracted from one patient.
pub struct HcCropList(PatientCrops);

/// Extraction parameters; see [`hc_preprocess_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HcPreprocessConfig {
    pub epsilon: f64,
    pub border_mm: f64,
    pub resolution: usize,
    pub window_center: f64,
    pub window_width: f64,
    pub mean_pre_opening: bool,
}

impl From<HcPreprocessConfig> for PreprocessConfig {
    fn from(c: HcPreprocessConfig) -> Self {
        PreprocessConfig {
            epsilon: c.epsilon,
            border_mm: c.border_mm,
            resolution: c.resolution,
            window_center: c.window_center,
            window_width: c.window_width,
            mean_pre_opening: c.mean_pre_opening,
        }
    }
}

/// Borrowed view of one crop. Pointers stay valid until the list is freed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HcCropInfo {
    pub lesion_id: u32,
    pub slice_index: usize,
    pub resolution: usize,
    /// `resolution * resolution` grayscale bytes, row-major.
    pub pixels: *const u8,
    pub pixel_count: usize,
    /// Half-open source rectangle `x0, y0, x1, y1` in slice pixels.
    pub bbox: [i64; 4],
    pub pad_fraction: f64,
    pub slice_area: usize,
    pub mean_area: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn guard(f: impl FnOnce() -> Result<(), (HcStatus, String)>) -> HcStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_owned());
            set_error(format!("internal panic: {msg}"));
            HcStatus::Panic
        }
    }
}

fn null(what: &str) -> (HcStatus, String) {
    (HcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn bytes<'a>(data: *const u8, len: usize) -> Result<&'a [u8], (HcStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null("data"));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (HcStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn hc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hc_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"",
    };
    VERSION.as_ptr()
}

/// Parse a NIfTI-1 stream (optionally gzip-compressed) as HU intensities.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_volume_parse_nifti(data: *const u8, len: usize, out: *mut *mut HcVolume) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let v = parse_nifti(bytes(data, len)?, "ffi").map_err(|e| (HcStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(HcVolume(v)));
        Ok(())
    })
}

/// # Safety
/// `volume` must come from [`hc_volume_parse_nifti`]; `dims` must hold 3 values.
#[no_mangle]
pub unsafe extern "C" fn hc_volume_dims(volume: *const HcVolume, dims: *mut usize) -> HcStatus {
    guard(|| {
        let v = handle(volume, "volume")?;
        if dims.is_null() {
            return Err(null("dims"));
        }
        ptr::copy_nonoverlapping(v.0.dims().as_ptr(), dims, 3);
        Ok(())
    })
}

/// Spacing in mm along x, y, z.
///
/// # Safety
/// `volume` must be a live handle; `spacing` must hold 3 values.
#[no_mangle]
pub unsafe extern "C" fn hc_volume_spacing(volume: *const HcVolume, spacing: *mut f64) -> HcStatus {
    guard(|| {
        let v = handle(volume, "volume")?;
        if spacing.is_null() {
            return Err(null("spacing"));
        }
        ptr::copy_nonoverlapping(v.0.spacing().as_ptr(), spacing, 3);
        Ok(())
    })
}

/// Borrow the x-fastest HU data. Valid until the volume is freed.
///
/// # Safety
/// `volume` must be a live handle; `data` and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_volume_data(volume: *const HcVolume, data: *mut *const f32, len: *mut usize) -> HcStatus {
    guard(|| {
        let v = handle(volume, "volume")?;
        if data.is_null() || len.is_null() {
            return Err(null("output pointer"));
        }
        *data = v.0.data().as_ptr();
        *len = v.0.data().len();
        Ok(())
    })
}

/// # Safety
/// `volume` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_volume_free(volume: *mut HcVolume) {
    if !volume.is_null() {
        drop(Box::from_raw(volume));
    }
}

/// Parse a NIfTI-1 mask; any nonzero voxel is foreground.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_mask_parse_nifti(data: *const u8, len: usize, out: *mut *mut HcMask) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let m = parse_nifti_mask(bytes(data, len)?, "ffi").map_err(|e| (HcStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(HcMask(m)));
        Ok(())
    })
}

/// # Safety
/// `mask` must be a live handle; `dims` must hold 3 values.
#[no_mangle]
pub unsafe extern "C" fn hc_mask_dims(mask: *const HcMask, dims: *mut usize) -> HcStatus {
    guard(|| {
        let m = handle(mask, "mask")?;
        if dims.is_null() {
            return Err(null("dims"));
        }
        ptr::copy_nonoverlapping(m.0.dims().as_ptr(), dims, 3);
        Ok(())
    })
}

/// # Safety
/// `mask` must be a live handle; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_mask_positive_count(mask: *const HcMask, count: *mut usize) -> HcStatus {
    guard(|| {
        let m = handle(mask, "mask")?;
        if count.is_null() {
            return Err(null("count"));
        }
        *count = m.0.positive_count();
        Ok(())
    })
}

/// # Safety
/// `mask` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_mask_free(mask: *mut HcMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// Map one HU value to 8-bit gray under the window `center`/`width`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_window_hu(hu: f64, center: f64, width: f64, out: *mut u8) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(width > 0.0 && width.is_finite() && center.is_finite() && !hu.is_nan()) {
            return Err((HcStatus::InvalidArgument, format!("window {center}/{width} for {hu}")));
        }
        *out = window_hu(hu, center, width);
        Ok(())
    })
}

/// Default extraction parameters.
#[no_mangle]
pub extern "C" fn hc_preprocess_config_default() -> HcPreprocessConfig {
    let d = PreprocessConfig::default();
    HcPreprocessConfig {
        epsilon: d.epsilon,
        border_mm: d.border_mm,
        resolution: d.resolution,
        window_center: d.window_center,
        window_width: d.window_width,
        mean_pre_opening: d.mean_pre_opening,
    }
}

/// Extract the lesion crops of one patient.
///
/// # Safety
/// Handles must be live, `config` readable, `patient_id` NUL-terminated
/// UTF-8, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hc_preprocess_patient(
    volume: *const HcVolume,
    mask: *const HcMask,
    config: *const HcPreprocessConfig,
    patient_id: *const c_char,
    out: *mut *mut HcCropList,
) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let v = handle(volume, "volume")?;
        let m = handle(mask, "mask")?;
        let cfg: PreprocessConfig = (*handle(config, "config")?).into();
        if patient_id.is_null() {
            return Err(null("patient_id"));
        }
        let pid = CStr::from_ptr(patient_id)
            .to_str()
            .map_err(|e| (HcStatus::InvalidArgument, format!("patient_id: {e}")))?;
        let crops = preprocess_patient(&v.0, &m.0, &cfg, pid).map_err(|e| match e {
            hepacrop::lesion::ExtractError::Geometry(g) => (HcStatus::Geometry, g.to_string()),
            hepacrop::lesion::ExtractError::InvalidConfig(s) => (HcStatus::InvalidArgument, s),
            other => (HcStatus::Extract, other.to_string()),
        })?;
        *out = Box::into_raw(Box::new(HcCropList(crops)));
        Ok(())
    })
}

/// Number of crops in the list; 0 for a null list.
///
/// # Safety
/// `list` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hc_crop_list_len(list: *const HcCropList) -> usize {
    list.as_ref().map_or(0, |l| l.0.crops.len())
}

/// Number of lesions dropped because nothing survived the opening.
///
/// # Safety
/// `list` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hc_crop_list_skipped(list: *const HcCropList) -> usize {
    list.as_ref().map_or(0, |l| l.0.skipped.len())
}

/// # Safety
/// `list` must be a live handle; `info` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_crop_list_get(list: *const HcCropList, index: usize, info: *mut HcCropInfo) -> HcStatus {
    guard(|| {
        let l = handle(list, "list")?;
        if info.is_null() {
            return Err(null("info"));
        }
        let c = l.0.crops.get(index).ok_or_else(|| {
            (HcStatus::OutOfRange, format!("index {index} of {} crops", l.0.crops.len()))
        })?;
        *info = HcCropInfo {
            lesion_id: c.lesion_id,
            slice_index: c.slice_index,
            resolution: c.resolution,
            pixels: c.pixels.as_ptr(),
            pixel_count: c.pixels.len(),
            bbox: [c.bbox_source.x0, c.bbox_source.y0, c.bbox_source.x1, c.bbox_source.y1],
            pad_fraction: c.pad_fraction,
            slice_area: c.slice_area,
            mean_area: c.mean_area,
        };
        Ok(())
    })
}

/// # Safety
/// `list` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_crop_list_free(list: *mut HcCropList) {
    if !list.is_null() {
        drop(Box::from_raw(list));
    }
}

/// Area under the ROC curve with mid-rank ties. `labels` holds 0/1 bytes.
/// Returns `Undefined` when only one class is present.
///
/// # Safety
/// `scores` and `labels` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_auc_binary(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> HcStatus {
    guard(|| {
        if out.is_null() || (n > 0 && (scores.is_null() || labels.is_null())) {
            return Err(null("input"));
        }
        let (s, l) = if n == 0 {
            (&[][..], &[][..])
        } else {
            (std::slice::from_raw_parts(scores, n), std::slice::from_raw_parts(labels, n))
        };
        if s.iter().any(|v| v.is_nan()) {
            return Err((HcStatus::InvalidArgument, "NaN score".to_owned()));
        }
        let l: Vec<bool> = l.iter().map(|&b| b != 0).collect();
        *out = auc_binary(s, &l).ok_or((HcStatus::Undefined, "labels contain a single class".to_owned()))?;
        Ok(())
    })
}

/// Mean and Student-t 95% half-width of `n >= 2` values.
///
/// # Safety
/// `values` must hold `n` values; `mean` and `half_width` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_aggregate_ci(values: *const f64, n: usize, mean: *mut f64, half_width: *mut f64) -> HcStatus {
    guard(|| {
        if mean.is_null() || half_width.is_null() || (n > 0 && values.is_null()) {
            return Err(null("input"));
        }
        let v = if n == 0 { &[][..] } else { std::slice::from_raw_parts(values, n) };
        let ci = aggregate_ci(v).map_err(|e| (HcStatus::InvalidArgument, e.to_string()))?;
        *mean = ci.mean;
        *half_width = ci.half_width;
        Ok(())
    })
}
