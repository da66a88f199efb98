//! C ABI over the `eventloc` library.
//!
//! Conventions:
//! * every function returns an [`EventlocStatus`]; outputs go through
//!   pointer arguments and are only written on `EVENTLOC_STATUS_OK`;
//! * on failure a message is available from [`eventloc_last_error`] until
//!   the next call on the same thread;
//! * handles are opaque and released with their `_free` function; strings
//!   returned by the library are released with [`eventloc_string_free`];
//! * panics never cross the boundary, they surface as
//!   `EVENTLOC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eventloc::centroid::{weighted_centroid, CentroidError};
use eventloc::config::RunConfig;
use eventloc::extraction::{parse_article, Gazetteer};
use eventloc::geo::{ecef_to_geodetic, geodetic_to_ecef, EcefPoint, GeoCoordinate};
use eventloc::gipsy::{gipsy_locate, GipsyError};
use eventloc::manifest::{compute_dataset_stats, import_manifests};
use eventloc::pipeline::{compute_metrics, run_article, Backends, Method, PipelineConfig};

pub const EVENTLOC_METHOD_CENTROID: u32 = 0;
pub const EVENTLOC_METHOD_GIPSY: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventlocStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    NoCandidates = 4,
    Degenerate = 5,
    Panic = 6,
}

/// Place-name dictionary loaded from a gazetteer TSV file.
pub struct EventlocGazetteer {
    inner: Gazetteer,
}

/// Configured backends and pipeline settings loaded from a JSON config.
pub struct EventlocPipeline {
    backends: Backends,
    config: PipelineConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    let c = CString::new(text).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: EventlocStatus, message: impl Into<String>) -> EventlocStatus {
    set_error(message);
    status
}

fn guard(f: impl FnOnce() -> EventlocStatus) -> EventlocStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(EventlocStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, EventlocStatus> {
    if p.is_null() {
        return Err(fail(EventlocStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(EventlocStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("nul bytes removed")
        .into_raw()
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn eventloc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn eventloc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// WGS84 geodetic (degrees) to ECEF (metres).
///
/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eventloc_geodetic_to_ecef(
    lat: f64,
    lon: f64,
    x: *mut f64,
    y: *mut f64,
    z: *mut f64,
) -> EventlocStatus {
    guard(|| {
        if x.is_null() || y.is_null() || z.is_null() {
            return fail(EventlocStatus::NullPointer, "output pointer is null");
        }
        let c = match GeoCoordinate::new(lat, lon) {
            Ok(c) => c,
            Err(e) => return fail(EventlocStatus::InvalidArgument, e.to_string()),
        };
        let p = geodetic_to_ecef(c);
        *x = p.x;
        *y = p.y;
        *z = p.z;
        EventlocStatus::Ok
    })
}

/// ECEF (metres) to WGS84 geodetic (degrees).
///
/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eventloc_ecef_to_geodetic(
    x: f64,
    y: f64,
    z: f64,
    lat: *mut f64,
    lon: *mut f64,
) -> EventlocStatus {
    guard(|| {
        if lat.is_null() || lon.is_null() {
            return fail(EventlocStatus::NullPointer, "output pointer is null");
        }
        match ecef_to_geodetic(EcefPoint { x, y, z }) {
            Ok(c) => {
                *lat = c.lat();
                *lon = c.lon();
                EventlocStatus::Ok
            }
            Err(e) => fail(EventlocStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Loads a gazetteer TSV file into `*out`.
///
/// # Safety
/// `path` must be a valid string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eventloc_gazetteer_load(
    path: *const c_char,
    out: *mut *mut EventlocGazetteer,
) -> EventlocStatus {
    guard(|| {
        if out.is_null() {
            return fail(EventlocStatus::NullPointer, "out is null");
        }
        let path = match read_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match Gazetteer::load(path) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(EventlocGazetteer { inner: g }));
                EventlocStatus::Ok
            }
            Err(eventloc::extraction::GazetteerError::Io(e)) => {
                fail(EventlocStatus::Io, format!("{path}: {e}"))
            }
            Err(e) => fail(EventlocStatus::InvalidArgument, format!("{path}: {e}")),
        }
    })
}

/// Number of entries, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eventloc_gazetteer_len(g: *const EventlocGazetteer) -> usize {
    g.as_ref().map_or(0, |g| g.inner.len())
}

/// # Safety
/// `g` must be null or a handle from `eventloc_gazetteer_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eventloc_gazetteer_free(g: *mut EventlocGazetteer) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Extracts places from `text` and locates them with
/// `EVENTLOC_METHOD_CENTROID` or `EVENTLOC_METHOD_GIPSY`.
///
/// # Safety
/// `g` must be a live handle, `text` a valid string, outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eventloc_locate(
    g: *const EventlocGazetteer,
    text: *const c_char,
    method: u32,
    lat: *mut f64,
    lon: *mut f64,
) -> EventlocStatus {
    guard(|| {
        let Some(g) = g.as_ref() else {
            return fail(EventlocStatus::NullPointer, "gazetteer is null");
        };
        if lat.is_null() || lon.is_null() {
            return fail(EventlocStatus::NullPointer, "output pointer is null");
        }
        let text = match read_str(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let places = g.inner.extract(text);
        let located = match method {
            EVENTLOC_METHOD_CENTROID => weighted_centroid(&places).map_err(|e| match e {
                CentroidError::NoCandidates => (EventlocStatus::NoCandidates, e.to_string()),
                CentroidError::DegenerateCentroid => (EventlocStatus::Degenerate, e.to_string()),
            }),
            EVENTLOC_METHOD_GIPSY => gipsy_locate(&places).map_err(|e| match e {
                GipsyError::NoCandidates => (EventlocStatus::NoCandidates, e.to_string()),
                other => (EventlocStatus::InvalidArgument, other.to_string()),
            }),
            other => Err((
                EventlocStatus::InvalidArgument,
                format!("unknown method {other}"),
            )),
        };
        match located {
            Ok(c) => {
                *lat = c.lat();
                *lon = c.lon();
                EventlocStatus::Ok
            }
            Err((status, message)) => fail(status, message),
        }
    })
}

/// Yield in percent and, when `baseline` is non-null, the improvement over
/// `*baseline` detections (NaN otherwise).
///
/// # Safety
/// `baseline` must be null or readable; outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eventloc_compute_metrics(
    detections: u64,
    total: u64,
    baseline: *const u64,
    yield_pct: *mut f64,
    improvement: *mut f64,
) -> EventlocStatus {
    guard(|| {
        if yield_pct.is_null() || improvement.is_null() {
            return fail(EventlocStatus::NullPointer, "output pointer is null");
        }
        match compute_metrics(detections, total, baseline.as_ref().copied()) {
            Ok(row) => {
                *yield_pct = row.yield_pct;
                *improvement = row.improvement_over_baseline.unwrap_or(f64::NAN);
                EventlocStatus::Ok
            }
            Err(e) => fail(EventlocStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Builds backends from a JSON run configuration file.
///
/// # Safety
/// `config_path` must be a valid string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eventloc_pipeline_open(
    config_path: *const c_char,
    out: *mut *mut EventlocPipeline,
) -> EventlocStatus {
    guard(|| {
        if out.is_null() {
            return fail(EventlocStatus::NullPointer, "out is null");
        }
        let path = match read_str(config_path, "config_path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let config = match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => return fail(EventlocStatus::InvalidArgument, e.to_string()),
        };
        match config.build_backends() {
            Ok(backends) => {
                *out = Box::into_raw(Box::new(EventlocPipeline {
                    backends,
                    config: config.pipeline(),
                }));
                EventlocStatus::Ok
            }
            Err(e) => fail(EventlocStatus::Io, e.to_string()),
        }
    })
}

/// # Safety
/// `p` must be null or a handle from `eventloc_pipeline_open` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eventloc_pipeline_free(p: *mut EventlocPipeline) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Runs one article (a JSON object) with `method` ("centroid", "gipsy" or
/// "agentic") and stores the result JSON in `*result_json`. The run's own
/// outcome, including infrastructure errors, is reported in that JSON.
/// The handle may be shared across threads.
///
/// # Safety
/// `p` must be a live handle, strings valid, `result_json` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eventloc_pipeline_run_article(
    p: *const EventlocPipeline,
    article_json: *const c_char,
    method: *const c_char,
    result_json: *mut *mut c_char,
) -> EventlocStatus {
    guard(|| {
        let Some(p) = p.as_ref() else {
            return fail(EventlocStatus::NullPointer, "pipeline is null");
        };
        if result_json.is_null() {
            return fail(EventlocStatus::NullPointer, "result_json is null");
        }
        let (article, method) = match (
            read_str(article_json, "article_json"),
            read_str(method, "method"),
        ) {
            (Ok(a), Ok(m)) => (a, m),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let article = match parse_article(article) {
            Ok(a) => a,
            Err(e) => return fail(EventlocStatus::InvalidArgument, e),
        };
        let method: Method = match method.parse() {
            Ok(m) => m,
            Err(e) => return fail(EventlocStatus::InvalidArgument, e),
        };
        let result = run_article(&article, method, &p.backends, &p.config);
        let json = serde_json::to_string(&result).expect("results serialize");
        *result_json = to_c_string(json);
        EventlocStatus::Ok
    })
}

/// Reads a manifest file and stores its statistics as JSON in `*stats_json`.
///
/// # Safety
/// `path` must be a valid string and `stats_json` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eventloc_dataset_stats(
    path: *const c_char,
    stats_json: *mut *mut c_char,
) -> EventlocStatus {
    guard(|| {
        if stats_json.is_null() {
            return fail(EventlocStatus::NullPointer, "stats_json is null");
        }
        let path = match read_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match import_manifests(path) {
            Ok(ms) => {
                let stats = compute_dataset_stats(&ms);
                *stats_json = to_c_string(serde_json::to_string(&stats).expect("serializes"));
                EventlocStatus::Ok
            }
            Err(eventloc::manifest::ManifestError::Io(e)) => {
                fail(EventlocStatus::Io, format!("{path}: {e}"))
            }
            Err(e) => fail(EventlocStatus::InvalidArgument, format!("{path}: {e}")),
        }
    })
}
