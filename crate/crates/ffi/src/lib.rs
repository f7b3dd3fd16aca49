//! C ABI for scenseed.
//!
//! Objects cross the boundary as opaque handles that the caller frees with the
//! matching `*_free` function. Every fallible call returns a [`ScenseedStatus`];
//! on failure the message is available from [`scenseed_last_error`] on the
//! same thread until the next failing call.

use scenseed::campaign::{self, CampaignConfig};
use scenseed::hazard::INPUT_DIM;
use scenseed::map::{load_map, BuiltinMap};
use scenseed::{Error, HazardModel, RoadNetwork};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenseedStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    IsolatedStart = 5,
    MapTooSmall = 6,
    OffRoad = 7,
    NonFiniteLoss = 8,
    Integrity = 9,
    Config = 10,
    Checkpoint = 11,
    Io = 12,
    BufferTooSmall = 13,
    Panic = 14,
}

/// Road network handle.
pub struct ScenseedNetwork(RoadNetwork);

/// Hazard model handle.
pub struct ScenseedModel(HazardModel);

/// Headline metrics of a campaign, averaged over repetitions. Optional
/// metrics are NaN when undefined.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ScenseedSummary {
    pub violation_rate: f64,
    pub top10_rounds: f64,
    pub parameter_distance: f64,
    pub map_coverage: f64,
    pub trajectory_coverage: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ScenseedStatus {
    match e {
        Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => ScenseedStatus::Parse,
        Error::Validation(_) => ScenseedStatus::Validation,
        Error::IsolatedStart { .. } => ScenseedStatus::IsolatedStart,
        Error::MapTooSmall { .. } => ScenseedStatus::MapTooSmall,
        Error::OffRoad { .. } => ScenseedStatus::OffRoad,
        Error::NonFiniteLoss => ScenseedStatus::NonFiniteLoss,
        Error::Integrity(_) => ScenseedStatus::Integrity,
        Error::Config(_) => ScenseedStatus::Config,
        Error::Checkpoint(_) => ScenseedStatus::Checkpoint,
        Error::Io(_) => ScenseedStatus::Io,
    }
}

struct Fail(ScenseedStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ScenseedStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScenseedStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("panic inside scenseed".into());
            ScenseedStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(ScenseedStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(ScenseedStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn scenseed_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a map document (JSON text).
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scenseed_network_from_json(
    json: *const c_char,
    out: *mut *mut ScenseedNetwork,
) -> ScenseedStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let net = load_map(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(ScenseedNetwork(net)));
        Ok(())
    })
}

/// Builds one of the generated maps: `straight`, `grid4`, `ring` or `rural`.
///
/// # Safety
/// `name` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scenseed_network_builtin(
    name: *const c_char,
    out: *mut *mut ScenseedNetwork,
) -> ScenseedStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let kind: BuiltinMap = str_arg(name, "name")?
            .parse()
            .map_err(|e: String| Fail(ScenseedStatus::Config, e))?;
        *out = Box::into_raw(Box::new(ScenseedNetwork(kind.build())));
        Ok(())
    })
}

/// # Safety
/// `network` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn scenseed_network_free(network: *mut ScenseedNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// Counts of lanes, spawn points and waypoints.
///
/// # Safety
/// `network` must be a live handle; the out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn scenseed_network_counts(
    network: *const ScenseedNetwork,
    lanes: *mut usize,
    spawn_points: *mut usize,
    waypoints: *mut usize,
) -> ScenseedStatus {
    guard(|| {
        let n = &ref_arg(network, "network")?.0;
        if let Some(p) = lanes.as_mut() {
            *p = n.lanes.len();
        }
        if let Some(p) = spawn_points.as_mut() {
            *p = n.spawn_points.len();
        }
        if let Some(p) = waypoints.as_mut() {
            *p = n.waypoints.len();
        }
        Ok(())
    })
}

/// Freshly initialized hazard model, deterministic in `seed`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scenseed_model_new(seed: u64, out: *mut *mut ScenseedModel) -> ScenseedStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let model = HazardModel::new(&mut ChaCha8Rng::seed_from_u64(seed));
        *out = Box::into_raw(Box::new(ScenseedModel(model)));
        Ok(())
    })
}

/// Loads a model from checkpoint bytes.
///
/// # Safety
/// `bytes` must point to `len` readable bytes and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scenseed_model_from_checkpoint(
    bytes: *const u8,
    len: usize,
    out: *mut *mut ScenseedModel,
) -> ScenseedStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if bytes.is_null() {
            return Err(null("bytes"));
        }
        let model = HazardModel::from_bytes(std::slice::from_raw_parts(bytes, len))?;
        *out = Box::into_raw(Box::new(ScenseedModel(model)));
        Ok(())
    })
}

/// Writes the checkpoint into `buf`. `written` always receives the required
/// size; `SCENSEED_STATUS_BUFFER_TOO_SMALL` is returned when `cap` is short.
///
/// # Safety
/// `model` must be a live handle, `buf` writable for `cap` bytes (may be null
/// when `cap` is 0) and `written` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scenseed_model_checkpoint(
    model: *const ScenseedModel,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> ScenseedStatus {
    guard(|| {
        let model = &ref_arg(model, "model")?.0;
        let written = out_arg(written, "written")?;
        let bytes = model.to_bytes();
        *written = bytes.len();
        if cap < bytes.len() {
            return Err(Fail(
                ScenseedStatus::BufferTooSmall,
                format!("checkpoint needs {} bytes, buffer has {cap}", bytes.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn scenseed_model_free(model: *mut ScenseedModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Hazard probability of a 5-element feature vector.
///
/// # Safety
/// `features` must point to 5 doubles and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scenseed_model_forward(
    model: *const ScenseedModel,
    features: *const f64,
    out: *mut f64,
) -> ScenseedStatus {
    guard(|| {
        let model = &ref_arg(model, "model")?.0;
        let z = ref_arg(features as *const [f64; INPUT_DIM], "features")?;
        *out_arg(out, "out")? = model.forward(z);
        Ok(())
    })
}

/// Gradient of the hazard with respect to the 5 features.
///
/// # Safety
/// `features` must point to 5 doubles and `grad` to 5 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn scenseed_model_input_grad(
    model: *const ScenseedModel,
    features: *const f64,
    grad: *mut f64,
) -> ScenseedStatus {
    guard(|| {
        let model = &ref_arg(model, "model")?.0;
        let z = ref_arg(features as *const [f64; INPUT_DIM], "features")?;
        *out_arg(grad as *mut [f64; INPUT_DIM], "grad")? = model.input_grad(z);
        Ok(())
    })
}

/// Runs a campaign described by TOML text and writes its artifacts to `out_dir`.
/// A relative map path in the config resolves against `out_dir`'s parent.
///
/// # Safety
/// `config_toml` and `out_dir` must be valid NUL-terminated strings; `summary`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn scenseed_run_campaign(
    config_toml: *const c_char,
    out_dir: *const c_char,
    summary: *mut ScenseedSummary,
) -> ScenseedStatus {
    guard(|| {
        let cfg = CampaignConfig::from_toml(str_arg(config_toml, "config_toml")?)?;
        let out = Path::new(str_arg(out_dir, "out_dir")?);
        let network = cfg.load_network(out.parent())?;
        let report = campaign::run_to_dir(&cfg, &network, out)?;
        if let Some(s) = summary.as_mut() {
            let m = report.mean();
            *s = ScenseedSummary {
                violation_rate: m.violation_rate,
                top10_rounds: m.top10_rounds.unwrap_or(f64::NAN),
                parameter_distance: m.parameter_distance.unwrap_or(f64::NAN),
                map_coverage: m.map_coverage,
                trajectory_coverage: m.trajectory_coverage,
            };
        }
        Ok(())
    })
}

/// Re-checks every record of an episode log against `network`. `records`
/// receives the number of records checked.
///
/// # Safety
/// `jsonl_path` must be a valid NUL-terminated string, `network` a live handle;
/// `records` may be null.
#[no_mangle]
pub unsafe extern "C" fn scenseed_replay_log(
    jsonl_path: *const c_char,
    network: *const ScenseedNetwork,
    motionless_seconds: f64,
    records: *mut usize,
) -> ScenseedStatus {
    guard(|| {
        let path = Path::new(str_arg(jsonl_path, "jsonl_path")?);
        let net = &ref_arg(network, "network")?.0;
        let s = campaign::replay_file(path, net, motionless_seconds)?;
        if let Some(r) = records.as_mut() {
            *r = s.records;
        }
        Ok(())
    })
}
