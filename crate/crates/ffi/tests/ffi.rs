use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use aerial_nav_ffi::*;

fn last_error() -> Option<String> {
    let p = an_last_error();
    if p.is_null() {
        return None;
    }
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { an_string_free(p) };
    Some(s)
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn scene(name: &str) -> CString {
    let p = manifest_dir().join("../../scenes").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn camera_round_trip() {
    let cam = an_camera_default();
    assert!(!cam.is_null());
    let (mut un, mut vn) = (0.0, 0.0);
    assert_eq!(
        unsafe { an_normalize_pixel(cam, 720.0, 180.0, &mut un, &mut vn) },
        AnStatus::Ok
    );
    assert_eq!((un, vn), (0.5, 0.5));

    let mut d = AnDisplacement {
        sx: 0.0,
        sy: 0.0,
        sz: 0.0,
    };
    assert_eq!(
        unsafe { an_unproject(cam, un, vn, 6.0, &mut d) },
        AnStatus::Ok
    );
    assert_eq!(d.sy, 6.0);

    let (mut u, mut v, mut in_fov) = (0.0, 0.0, false);
    assert_eq!(
        unsafe { an_project(cam, d, &mut u, &mut v, &mut in_fov) },
        AnStatus::Ok
    );
    assert!((u - 0.5).abs() < 1e-12 && (v - 0.5).abs() < 1e-12);
    assert!(in_fov);
    unsafe { an_camera_free(cam) };
}

#[test]
fn errors_map_to_status_codes() {
    let cam = an_camera_default();
    let (mut u, mut v) = (0.0, 0.0);
    assert_eq!(
        unsafe { an_normalize_pixel(cam, 2000.0, 10.0, &mut u, &mut v) },
        AnStatus::OutOfRange
    );
    assert!(last_error().is_some());

    let mut d = AnDisplacement {
        sx: 0.0,
        sy: 0.0,
        sz: 0.0,
    };
    assert_eq!(
        unsafe { an_unproject(cam, 0.0, 0.0, -1.0, &mut d) },
        AnStatus::InvalidArgument
    );
    let behind = AnDisplacement {
        sx: 0.0,
        sy: -1.0,
        sz: 0.0,
    };
    assert_eq!(
        unsafe { an_project(cam, behind, &mut u, &mut v, &mut false) },
        AnStatus::BehindCamera
    );
    assert_eq!(
        unsafe { an_normalize_pixel(ptr::null(), 1.0, 1.0, &mut u, &mut v) },
        AnStatus::NullPointer
    );
    unsafe { an_camera_free(cam) };

    assert!(an_camera_new(0, 720, 40.0, 30.0).is_null());
    assert!(last_error().is_some());
}

#[test]
fn successful_call_clears_last_error() {
    let mut out = 0.0;
    assert_eq!(
        unsafe { an_scale_depth(11, &mut out) },
        AnStatus::OutOfRange
    );
    assert!(last_error().unwrap().contains("11"));
    assert_eq!(unsafe { an_scale_depth(10, &mut out) }, AnStatus::Ok);
    assert_eq!(out, 10.0);
    assert!(last_error().is_none());
}

#[test]
fn depth_curve_variants() {
    let mut out = 0.0;
    assert_eq!(unsafe { an_scale_depth(5, &mut out) }, AnStatus::Ok);
    assert!((out - 10.0 * 0.5f64.powf(1.8)).abs() < 1e-12);
    assert_eq!(
        unsafe { an_scale_depth_with(20.0, 4, 1.0, 0.5, 1, &mut out) },
        AnStatus::Ok
    );
    assert_eq!(out, 5.0);
    assert_eq!(
        unsafe { an_scale_depth_with(-1.0, 10, 1.8, 0.1, 3, &mut out) },
        AnStatus::InvalidArgument
    );
}

#[test]
fn schedule_length_query_and_fill() {
    let mut prim = AnPrimitives {
        delta_yaw: 0.0,
        delta_pitch: 0.0,
        delta_throttle: 0.0,
    };
    let d = AnDisplacement {
        sx: 3.0,
        sy: 4.0,
        sz: 1.0,
    };
    assert_eq!(unsafe { an_decompose(d, &mut prim) }, AnStatus::Ok);
    assert_eq!(prim.delta_pitch, 5.0);

    let mut len = 0usize;
    assert_eq!(
        unsafe { an_schedule(prim, ptr::null_mut(), 0, &mut len) },
        AnStatus::BufferTooSmall
    );
    // each motion is followed by a zero-length stop
    assert_eq!(len, 6);

    let blank = AnCommand {
        roll: 0.0,
        pitch: 0.0,
        throttle: 0.0,
        yaw_rate: 0.0,
        duration: 0.0,
    };
    let mut buf = vec![blank; len];
    assert_eq!(
        unsafe { an_schedule(prim, buf.as_mut_ptr(), buf.len(), &mut len) },
        AnStatus::Ok
    );
    assert!(buf[0].yaw_rate > 0.0 && buf[0].pitch == 0.0);
    assert!(buf[2].pitch > 0.0 && buf[2].yaw_rate == 0.0);
    assert!(buf[4].throttle > 0.0);
    assert!(buf.iter().step_by(2).all(|c| c.duration > 0.0));
    assert!(buf
        .iter()
        .skip(1)
        .step_by(2)
        .all(|c| c.duration == 0.0 && c.pitch == 0.0));
}

#[test]
fn episode_run_metrics_and_record() {
    let mut ep = ptr::null_mut();
    let path = scene("navigation/nav_marker_5m.json");
    assert_eq!(
        unsafe { an_episode_run(path.as_ptr(), ptr::null(), 0, &mut ep) },
        AnStatus::Ok,
        "{:?}",
        last_error()
    );
    let mut m = AnMetrics {
        success: false,
        completion_time: 0.0,
        path_length: 0.0,
        replans: 0,
        ticks: 0,
        termination: AnTermination::Timeout,
    };
    assert_eq!(unsafe { an_episode_metrics(ep, &mut m) }, AnStatus::Ok);
    assert!(m.success);
    assert_eq!(m.termination, AnTermination::Success);
    assert!(m.replans >= 1 && m.ticks > 0);

    let json = unsafe { an_episode_metrics_json(ep) };
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { an_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["replans"], m.replans);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ep.jsonl");
    let c_out = CString::new(out.to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { an_episode_write_record(ep, c_out.as_ptr()) },
        AnStatus::Ok
    );
    let rec = aerial_nav::harness::read_record(&out).unwrap();
    assert_eq!(rec.metrics().unwrap().replans, m.replans);
    unsafe { an_episode_free(ep) };
}

#[test]
fn episode_errors() {
    let mut ep = ptr::null_mut();
    let missing = CString::new("/nonexistent/scene.json").unwrap();
    assert_eq!(
        unsafe { an_episode_run(missing.as_ptr(), ptr::null(), 0, &mut ep) },
        AnStatus::Io
    );
    assert!(ep.is_null());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { an_episode_run(bad.as_ptr(), ptr::null(), 0, &mut ep) },
        AnStatus::Parse
    );

    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[sim]\ndt_s = -1.0\n").unwrap();
    let cfg = CString::new(cfg.to_str().unwrap()).unwrap();
    let path = scene("navigation/nav_marker_5m.json");
    assert_eq!(
        unsafe { an_episode_run(path.as_ptr(), cfg.as_ptr(), 0, &mut ep) },
        AnStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { an_episode_run(ptr::null(), ptr::null(), 0, &mut ep) },
        AnStatus::NullPointer
    );
}

fn header() -> String {
    std::fs::read_to_string(manifest_dir().join("include/aerial_nav.h")).unwrap()
}

#[test]
fn header_declares_every_export() {
    let h = header();
    for sym in [
        "an_last_error",
        "an_string_free",
        "an_camera_new",
        "an_camera_default",
        "an_camera_free",
        "an_normalize_pixel",
        "an_unproject",
        "an_project",
        "an_scale_depth",
        "an_scale_depth_with",
        "an_decompose",
        "an_schedule",
        "an_episode_run",
        "an_episode_metrics",
        "an_episode_metrics_json",
        "an_episode_write_record",
        "an_episode_free",
        "typedef struct AnCamera AnCamera",
        "typedef struct AnEpisode AnEpisode",
        "AN_STATUS_BUFFER_TOO_SMALL = 7",
        "AN_TERMINATION_REPLAN_LIMIT = 4",
    ] {
        assert!(h.contains(sym), "header lacks {sym}");
    }
    assert!(h.starts_with("#ifndef AERIAL_NAV_H"));
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

/// Compiles a C program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let deps = std::env::current_exe().unwrap();
    let profile_dir = deps.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libaerial_nav_ffi.a");
    if !have_cc() || !lib.exists() {
        eprintln!("skipping C smoke test: cc or {} unavailable", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "aerial_nav.h"

int main(int argc, char **argv) {
    AnCamera *cam = an_camera_default();
    double u, v;
    if (an_normalize_pixel(cam, 720.0, 180.0, &u, &v) != AN_STATUS_OK) return 10;
    if (u != 0.5 || v != 0.5) return 11;
    if (an_normalize_pixel(cam, -5.0, 0.0, &u, &v) != AN_STATUS_OUT_OF_RANGE) return 12;
    char *msg = an_last_error();
    if (msg == NULL) return 13;
    an_string_free(msg);
    an_camera_free(cam);

    AnEpisode *ep = NULL;
    if (an_episode_run(argv[1], NULL, 0, &ep) != AN_STATUS_OK) return 20;
    AnMetrics m;
    if (an_episode_metrics(ep, &m) != AN_STATUS_OK) return 21;
    if (!m.success || m.termination != AN_TERMINATION_SUCCESS) return 22;
    printf("ticks=%llu replans=%u\n", (unsigned long long)m.ticks, m.replans);
    an_episode_free(ep);
    return argc == 2 ? 0 : 30;
}
"#,
    )
    .unwrap();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let scene = manifest_dir().join("../../scenes/navigation/nav_marker_5m.json");
    let out = Command::new(&exe).arg(&scene).output().unwrap();
    assert!(
        out.status.success(),
        "smoke exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("ticks="));
}
