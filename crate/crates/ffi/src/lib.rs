//! C ABI for the aerial-nav engine.
//!
//! Every fallible call returns an [`AnStatus`]; on failure a message for the
//! calling thread is available from [`an_last_error`]. Handles are opaque and
//! must be released with their matching `_free` function. Strings returned
//! by the library are released with [`an_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::path::Path;
use std::ptr;

use aerial_nav::control::{self, ControlPrimitives, Deadband, SpeedConfig};
use aerial_nav::geometry::{self, CameraModel, Displacement3, NormalizedWaypoint, PixelWaypoint};
use aerial_nav::harness::{self, EpisodeConfig, HarnessError, Termination, TrajectoryRecord};
use aerial_nav::scaler::{self, DepthLabel, ScalerConfig};
use aerial_nav::simworld;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    BehindCamera = 4,
    Io = 5,
    Parse = 6,
    BufferTooSmall = 7,
    Internal = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnTermination {
    Success = 0,
    Collision = 1,
    Timeout = 2,
    PlannerFailure = 3,
    ReplanLimit = 4,
}

/// Body-frame displacement: right, forward, up, meters.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnDisplacement {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnPrimitives {
    /// Radians, positive turns right.
    pub delta_yaw: f64,
    pub delta_pitch: f64,
    pub delta_throttle: f64,
}

/// One rc command held for `duration` seconds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnCommand {
    pub roll: f64,
    pub pitch: f64,
    pub throttle: f64,
    pub yaw_rate: f64,
    pub duration: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnMetrics {
    pub success: bool,
    pub completion_time: f64,
    pub path_length: f64,
    pub replans: u32,
    pub ticks: u64,
    pub termination: AnTermination,
}

/// Opaque pinhole camera.
pub struct AnCamera {
    inner: CameraModel,
}

/// Opaque finished episode with its trajectory log.
pub struct AnEpisode {
    record: TrajectoryRecord,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: AnStatus, msg: impl Into<String>) -> AnStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting a panic into `Internal`.
fn guard(f: impl FnOnce() -> AnStatus + UnwindSafe) -> AnStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(f).unwrap_or_else(|_| fail(AnStatus::Internal, "panic inside aerial-nav"))
}

fn geometry_status(e: geometry::GeometryError) -> AnStatus {
    let status = match e {
        geometry::GeometryError::PixelOutOfBounds { .. } => AnStatus::OutOfRange,
        geometry::GeometryError::BehindCamera(..) => AnStatus::BehindCamera,
        _ => AnStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn harness_status(e: HarnessError) -> AnStatus {
    let status = match &e {
        HarnessError::Io { .. } => AnStatus::Io,
        HarnessError::Scene(simworld::SceneError::Io { .. }) => AnStatus::Io,
        HarnessError::Scene(_) | HarnessError::Record(_) | HarnessError::Truncated { .. } => {
            AnStatus::Parse
        }
        HarnessError::Config(_) => AnStatus::InvalidArgument,
        _ => AnStatus::Internal,
    };
    fail(status, e.to_string())
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, AnStatus> {
    if p.is_null() {
        return Err(fail(AnStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| fail(AnStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message for the last failed call on this thread, or null. Free with
/// [`an_string_free`].
#[no_mangle]
pub extern "C" fn an_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .clone()
            .map_or(ptr::null_mut(), CString::into_raw)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn an_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a camera from its size and half fields of view in degrees.
/// Returns null on invalid input.
#[no_mangle]
pub extern "C" fn an_camera_new(
    width: u32,
    height: u32,
    half_fov_h_deg: f64,
    half_fov_v_deg: f64,
) -> *mut AnCamera {
    match CameraModel::from_degrees(width, height, half_fov_h_deg, half_fov_v_deg) {
        Ok(inner) => Box::into_raw(Box::new(AnCamera { inner })),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// 960x720 camera with 41.3 and 31.0 degree half fields of view.
#[no_mangle]
pub extern "C" fn an_camera_default() -> *mut AnCamera {
    Box::into_raw(Box::new(AnCamera {
        inner: CameraModel::default(),
    }))
}

/// # Safety
/// `cam` must be null or a handle from `an_camera_*`, freed once.
#[no_mangle]
pub unsafe extern "C" fn an_camera_free(cam: *mut AnCamera) {
    if !cam.is_null() {
        drop(Box::from_raw(cam));
    }
}

/// Pixel coordinates to normalized image coordinates in [-1, 1].
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn an_normalize_pixel(
    cam: *const AnCamera,
    u: f64,
    v: f64,
    out_u: *mut f64,
    out_v: *mut f64,
) -> AnStatus {
    if cam.is_null() || out_u.is_null() || out_v.is_null() {
        return fail(AnStatus::NullPointer, "null argument");
    }
    let cam = &(*cam).inner;
    guard(
        || match geometry::normalize_pixel(cam, PixelWaypoint::new(u, v)) {
            Ok(n) => {
                *out_u = n.u;
                *out_v = n.v;
                AnStatus::Ok
            }
            Err(e) => geometry_status(e),
        },
    )
}

/// Lifts a normalized image point at forward distance `depth` into the
/// body frame.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn an_unproject(
    cam: *const AnCamera,
    u_norm: f64,
    v_norm: f64,
    depth: f64,
    out: *mut AnDisplacement,
) -> AnStatus {
    if cam.is_null() || out.is_null() {
        return fail(AnStatus::NullPointer, "null argument");
    }
    let cam = &(*cam).inner;
    guard(
        || match geometry::unproject(cam, NormalizedWaypoint::new(u_norm, v_norm), depth) {
            Ok(d) => {
                *out = AnDisplacement {
                    sx: d.sx,
                    sy: d.sy,
                    sz: d.sz,
                };
                AnStatus::Ok
            }
            Err(e) => geometry_status(e),
        },
    )
}

/// Body-frame point to normalized image coordinates; `out_in_fov` reports
/// whether both lie in [-1, 1].
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn an_project(
    cam: *const AnCamera,
    d: AnDisplacement,
    out_u: *mut f64,
    out_v: *mut f64,
    out_in_fov: *mut bool,
) -> AnStatus {
    if cam.is_null() || out_u.is_null() || out_v.is_null() || out_in_fov.is_null() {
        return fail(AnStatus::NullPointer, "null argument");
    }
    let cam = &(*cam).inner;
    guard(
        || match geometry::project(cam, Displacement3::new(d.sx, d.sy, d.sz)) {
            Ok(p) => {
                *out_u = p.point.u;
                *out_v = p.point.v;
                *out_in_fov = p.in_fov;
                AnStatus::Ok
            }
            Err(e) => geometry_status(e),
        },
    )
}

/// Step length in meters for a distance label under the default curve.
///
/// # Safety
/// `out` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn an_scale_depth(label: u32, out: *mut f64) -> AnStatus {
    an_scale_depth_with(10.0, 10, 1.8, 0.1, label, out)
}

/// Step length for a distance label under an explicit curve.
///
/// # Safety
/// `out` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn an_scale_depth_with(
    scale: f64,
    levels: u32,
    exponent: f64,
    min_step: f64,
    label: u32,
    out: *mut f64,
) -> AnStatus {
    if out.is_null() {
        return fail(AnStatus::NullPointer, "null argument");
    }
    guard(|| {
        let cfg = ScalerConfig {
            scale,
            levels,
            exponent,
            min_step,
            ..ScalerConfig::default()
        };
        let result = cfg
            .validate()
            .and_then(|()| DepthLabel::new(label, levels))
            .and_then(|l| scaler::scale_depth(&cfg, l));
        match result {
            Ok(d) => {
                *out = d;
                AnStatus::Ok
            }
            Err(e @ scaler::ScalerError::LabelOutOfRange { .. }) => {
                fail(AnStatus::OutOfRange, e.to_string())
            }
            Err(e) => fail(AnStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `out` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn an_decompose(d: AnDisplacement, out: *mut AnPrimitives) -> AnStatus {
    if out.is_null() {
        return fail(AnStatus::NullPointer, "null argument");
    }
    guard(
        || match control::decompose(Displacement3::new(d.sx, d.sy, d.sz)) {
            Ok(p) => {
                *out = AnPrimitives {
                    delta_yaw: p.delta_yaw,
                    delta_pitch: p.delta_pitch,
                    delta_throttle: p.delta_throttle,
                };
                AnStatus::Ok
            }
            Err(e @ control::ControlError::BehindCamera(_)) => {
                fail(AnStatus::BehindCamera, e.to_string())
            }
            Err(e) => fail(AnStatus::InvalidArgument, e.to_string()),
        },
    )
}

/// Builds the rc schedule for `prim` with default speeds and deadbands.
/// Writes up to `capacity` commands into `buf` and the full count into
/// `out_len`; returns `BufferTooSmall` if they did not all fit. Pass a null
/// `buf` with zero capacity to query the length.
///
/// # Safety
/// `buf` must hold `capacity` commands; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn an_schedule(
    prim: AnPrimitives,
    buf: *mut AnCommand,
    capacity: usize,
    out_len: *mut usize,
) -> AnStatus {
    if out_len.is_null() || (buf.is_null() && capacity > 0) {
        return fail(AnStatus::NullPointer, "null argument");
    }
    guard(|| {
        let prim = ControlPrimitives {
            delta_yaw: prim.delta_yaw,
            delta_pitch: prim.delta_pitch,
            delta_throttle: prim.delta_throttle,
        };
        let sched = match control::schedule(&prim, &SpeedConfig::default(), &Deadband::default()) {
            Ok(s) => s,
            Err(e) => return fail(AnStatus::InvalidArgument, e.to_string()),
        };
        *out_len = sched.len();
        for (i, c) in sched.commands.iter().take(capacity).enumerate() {
            *buf.add(i) = AnCommand {
                roll: c.rc.roll,
                pitch: c.rc.pitch,
                throttle: c.rc.throttle,
                yaw_rate: c.rc.yaw_rate,
                duration: c.duration,
            };
        }
        if sched.len() > capacity {
            fail(
                AnStatus::BufferTooSmall,
                format!("need {} commands", sched.len()),
            )
        } else {
            AnStatus::Ok
        }
    })
}

/// Flies a scenario file with the oracle planner. `config_path` may be null
/// for defaults. On success `*out` receives a handle to free with
/// [`an_episode_free`].
///
/// # Safety
/// Paths must be null or NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn an_episode_run(
    scenario_path: *const c_char,
    config_path: *const c_char,
    rep: u32,
    out: *mut *mut AnEpisode,
) -> AnStatus {
    if out.is_null() {
        return fail(AnStatus::NullPointer, "out is null");
    }
    *out = ptr::null_mut();
    let scenario = match path_arg(scenario_path, "scenario path") {
        Ok(p) => p,
        Err(s) => return s,
    };
    let config = if config_path.is_null() {
        None
    } else {
        match path_arg(config_path, "config path") {
            Ok(p) => Some(p),
            Err(s) => return s,
        }
    };
    guard(|| {
        let run = || -> Result<TrajectoryRecord, HarnessError> {
            let cfg = match config {
                Some(p) => EpisodeConfig::load(p)?,
                None => EpisodeConfig::default(),
            };
            let sc = simworld::load_scenario(scenario)?;
            let planner = harness::make_planner(&cfg, None)?;
            harness::run_episode(&cfg, &sc, planner, rep)
        };
        match run() {
            Ok(record) => {
                *out = Box::into_raw(Box::new(AnEpisode { record }));
                AnStatus::Ok
            }
            Err(e) => harness_status(e),
        }
    })
}

/// # Safety
/// `ep` must be a live episode handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn an_episode_metrics(ep: *const AnEpisode, out: *mut AnMetrics) -> AnStatus {
    if ep.is_null() || out.is_null() {
        return fail(AnStatus::NullPointer, "null argument");
    }
    let Some(m) = (*ep).record.metrics() else {
        return fail(AnStatus::Internal, "episode has no metrics");
    };
    *out = AnMetrics {
        success: m.success,
        completion_time: m.completion_time,
        path_length: m.path_length,
        replans: m.replans,
        ticks: m.ticks,
        termination: match m.termination {
            Termination::Success => AnTermination::Success,
            Termination::Collision { .. } => AnTermination::Collision,
            Termination::Timeout => AnTermination::Timeout,
            Termination::PlannerFailure { .. } => AnTermination::PlannerFailure,
            Termination::ReplanLimit => AnTermination::ReplanLimit,
        },
    };
    AnStatus::Ok
}

/// Metrics as a JSON object, or null. Free with [`an_string_free`].
///
/// # Safety
/// `ep` must be null or a live episode handle.
#[no_mangle]
pub unsafe extern "C" fn an_episode_metrics_json(ep: *const AnEpisode) -> *mut c_char {
    if ep.is_null() {
        set_error("episode is null");
        return ptr::null_mut();
    }
    (*ep)
        .record
        .metrics()
        .and_then(|m| serde_json::to_string(m).ok())
        .and_then(|s| CString::new(s).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}

/// Writes the episode's trajectory log as JSONL.
///
/// # Safety
/// `ep` must be a live episode handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn an_episode_write_record(
    ep: *const AnEpisode,
    path: *const c_char,
) -> AnStatus {
    if ep.is_null() {
        return fail(AnStatus::NullPointer, "episode is null");
    }
    let path = match path_arg(path, "record path") {
        Ok(p) => p,
        Err(s) => return s,
    };
    let record = &(*ep).record;
    guard(|| match harness::write_record(path, record) {
        Ok(()) => AnStatus::Ok,
        Err(e) => harness_status(e),
    })
}

/// # Safety
/// `ep` must be null or a handle from [`an_episode_run`], freed once.
#[no_mangle]
pub unsafe extern "C" fn an_episode_free(ep: *mut AnEpisode) {
    if !ep.is_null() {
        drop(Box::from_raw(ep));
    }
}
