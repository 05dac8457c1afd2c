//! Pixel normalization and pinhole lifting between image space and the
//! body frame (x right, y forward, z up).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("pixel {axis} = {value} outside [0, {limit}]")]
    PixelOutOfBounds {
        axis: &'static str,
        value: f64,
        limit: f64,
    },
    #[error("step distance must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("point is behind the camera (forward = {0})")]
    BehindCamera(f64),
}

/// Camera with image size in pixels and half field-of-view angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    width: u32,
    height: u32,
    alpha: f64,
    beta: f64,
}

impl CameraModel {
    pub fn new(width: u32, height: u32, alpha: f64, beta: f64) -> Result<Self, GeometryError> {
        if width < 2 || height < 2 {
            return Err(GeometryError::InvalidCamera(format!(
                "image must be at least 2x2, got {width}x{height}"
            )));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        for (name, a) in [("alpha", alpha), ("beta", beta)] {
            if !(a.is_finite() && a > 0.0 && a < half_pi) {
                return Err(GeometryError::InvalidCamera(format!(
                    "{name} = {a} rad must lie in (0, pi/2)"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            alpha,
            beta,
        })
    }

    pub fn from_degrees(
        width: u32,
        height: u32,
        alpha_deg: f64,
        beta_deg: f64,
    ) -> Result<Self, GeometryError> {
        Self::new(width, height, alpha_deg.to_radians(), beta_deg.to_radians())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Horizontal half field of view (radians).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Vertical half field of view (radians).
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Default for CameraModel {
    fn default() -> Self {
        Self::from_degrees(960, 720, 41.3, 31.0).expect("default camera is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelWaypoint {
    pub u: f64,
    pub v: f64,
}

impl PixelWaypoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Image coordinates scaled to [-1, 1]; `u` grows rightward, `v` upward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedWaypoint {
    pub u: f64,
    pub v: f64,
}

impl NormalizedWaypoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn in_fov(&self) -> bool {
        (-1.0..=1.0).contains(&self.u) && (-1.0..=1.0).contains(&self.v)
    }
}

/// Body-frame displacement in meters: `sx` right, `sy` forward, `sz` up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Displacement3 {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl Displacement3 {
    pub fn new(sx: f64, sy: f64, sz: f64) -> Self {
        Self { sx, sy, sz }
    }

    pub fn norm(&self) -> f64 {
        (self.sx * self.sx + self.sy * self.sy + self.sz * self.sz).sqrt()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.sx * k, self.sy * k, self.sz * k)
    }
}

/// Result of projecting a body-frame point: the normalized coordinates may
/// lie outside [-1, 1], in which case `in_fov` is false.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: NormalizedWaypoint,
    pub in_fov: bool,
}

pub fn normalize_pixel(
    cam: &CameraModel,
    wp: PixelWaypoint,
) -> Result<NormalizedWaypoint, GeometryError> {
    let (w, h) = (cam.width as f64, cam.height as f64);
    if !(wp.u.is_finite() && (0.0..=w).contains(&wp.u)) {
        return Err(GeometryError::PixelOutOfBounds {
            axis: "u",
            value: wp.u,
            limit: w,
        });
    }
    if !(wp.v.is_finite() && (0.0..=h).contains(&wp.v)) {
        return Err(GeometryError::PixelOutOfBounds {
            axis: "v",
            value: wp.v,
            limit: h,
        });
    }
    let u = (2.0 * wp.u / w - 1.0).clamp(-1.0, 1.0);
    let v = (1.0 - 2.0 * wp.v / h).clamp(-1.0, 1.0);
    Ok(NormalizedWaypoint { u, v })
}

pub fn denormalize(cam: &CameraModel, nwp: NormalizedWaypoint) -> PixelWaypoint {
    PixelWaypoint {
        u: (nwp.u + 1.0) * cam.width as f64 / 2.0,
        v: (1.0 - nwp.v) * cam.height as f64 / 2.0,
    }
}

/// Lifts a normalized waypoint to a body-frame displacement whose forward
/// component equals `d_adj`.
pub fn unproject(
    cam: &CameraModel,
    nwp: NormalizedWaypoint,
    d_adj: f64,
) -> Result<Displacement3, GeometryError> {
    if !(d_adj.is_finite() && d_adj > 0.0) {
        return Err(GeometryError::NonPositiveDepth(d_adj));
    }
    Ok(Displacement3 {
        sx: nwp.u * d_adj * cam.alpha.tan(),
        sy: d_adj,
        sz: nwp.v * d_adj * cam.beta.tan(),
    })
}

pub fn project(cam: &CameraModel, d: Displacement3) -> Result<Projection, GeometryError> {
    if !(d.sy > 0.0) {
        return Err(GeometryError::BehindCamera(d.sy));
    }
    let point = NormalizedWaypoint {
        u: (d.sx / d.sy) / cam.alpha.tan(),
        v: (d.sz / d.sy) / cam.beta.tan(),
    };
    Ok(Projection {
        point,
        in_fov: point.in_fov(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cam960() -> CameraModel {
        CameraModel::from_degrees(960, 720, 41.3, 31.0).unwrap()
    }

    fn cam45_30() -> CameraModel {
        CameraModel::from_degrees(960, 720, 45.0, 30.0).unwrap()
    }

    #[test]
    fn normalize_center_and_corners() {
        let cam = cam960();
        let c = normalize_pixel(&cam, PixelWaypoint::new(480.0, 360.0)).unwrap();
        assert_eq!((c.u, c.v), (0.0, 0.0));
        let tr = normalize_pixel(&cam, PixelWaypoint::new(960.0, 0.0)).unwrap();
        assert_eq!((tr.u, tr.v), (1.0, 1.0));
        let bl = normalize_pixel(&cam, PixelWaypoint::new(0.0, 720.0)).unwrap();
        assert_eq!((bl.u, bl.v), (-1.0, -1.0));
    }

    #[test]
    fn normalize_rejects_out_of_bounds() {
        let cam = cam960();
        let err = normalize_pixel(&cam, PixelWaypoint::new(961.0, 10.0)).unwrap_err();
        assert!(matches!(
            err,
            GeometryError::PixelOutOfBounds { axis: "u", .. }
        ));
        let err = normalize_pixel(&cam, PixelWaypoint::new(10.0, -0.5)).unwrap_err();
        assert!(matches!(
            err,
            GeometryError::PixelOutOfBounds { axis: "v", .. }
        ));
        assert!(normalize_pixel(&cam, PixelWaypoint::new(f64::NAN, 1.0)).is_err());
    }

    #[test]
    fn camera_validation() {
        assert!(CameraModel::new(1, 720, 0.5, 0.5).is_err());
        assert!(CameraModel::new(960, 720, 0.0, 0.5).is_err());
        assert!(CameraModel::new(960, 720, 0.5, std::f64::consts::FRAC_PI_2).is_err());
        assert!(CameraModel::new(2, 2, 0.1, 0.1).is_ok());
    }

    #[test]
    fn unproject_examples() {
        let d = unproject(&cam960(), NormalizedWaypoint::new(0.0, 0.0), 5.0).unwrap();
        assert_eq!(d, Displacement3::new(0.0, 5.0, 0.0));

        let d = unproject(&cam45_30(), NormalizedWaypoint::new(0.5, 0.0), 2.0).unwrap();
        assert_relative_eq!(d.sx, 1.0, epsilon = 1e-15);
        assert_eq!(d.sy, 2.0);
        assert_eq!(d.sz, 0.0);

        // 3 * tan(30 deg) = sqrt(3)
        let d = unproject(&cam45_30(), NormalizedWaypoint::new(-1.0, 1.0), 3.0).unwrap();
        assert_relative_eq!(d.sx, -3.0, epsilon = 1e-14);
        assert_eq!(d.sy, 3.0);
        assert_relative_eq!(d.sz, 1.7320508075688772, epsilon = 1e-14);
    }

    #[test]
    fn unproject_rejects_non_positive_depth() {
        let cam = cam960();
        let n = NormalizedWaypoint::new(0.0, 0.0);
        assert!(matches!(
            unproject(&cam, n, 0.0),
            Err(GeometryError::NonPositiveDepth(_))
        ));
        assert!(unproject(&cam, n, -1.0).is_err());
    }

    #[test]
    fn project_examples() {
        let p = project(&cam960(), Displacement3::new(0.0, 5.0, 0.0)).unwrap();
        assert_eq!((p.point.u, p.point.v), (0.0, 0.0));
        assert!(p.in_fov);

        let p = project(&cam45_30(), Displacement3::new(1.0, 1.0, 0.0)).unwrap();
        assert_relative_eq!(p.point.u, 1.0, epsilon = 1e-15);
        assert_eq!(p.point.v, 0.0);

        let p = project(
            &cam45_30(),
            Displacement3::new(-3.0, 3.0, 1.7320508075688772),
        )
        .unwrap();
        assert_relative_eq!(p.point.u, -1.0, epsilon = 1e-12);
        assert_relative_eq!(p.point.v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn project_behind_camera() {
        let cam = cam960();
        assert!(matches!(
            project(&cam, Displacement3::new(0.0, 0.0, 0.0)),
            Err(GeometryError::BehindCamera(_))
        ));
        assert!(project(&cam, Displacement3::new(1.0, -2.0, 0.0)).is_err());
        let p = project(&cam, Displacement3::new(10.0, 1.0, 0.0)).unwrap();
        assert!(!p.in_fov);
    }

    #[test]
    fn denormalize_examples() {
        let cam = cam960();
        assert_eq!(
            denormalize(&cam, NormalizedWaypoint::new(0.0, 0.0)),
            PixelWaypoint::new(480.0, 360.0)
        );
        assert_eq!(
            denormalize(&cam, NormalizedWaypoint::new(1.0, 1.0)),
            PixelWaypoint::new(960.0, 0.0)
        );
        assert_eq!(
            denormalize(&cam, NormalizedWaypoint::new(0.5, 0.0)),
            PixelWaypoint::new(720.0, 360.0)
        );
    }

    fn unit() -> impl Strategy<Value = f64> {
        -1.0f64..=1.0
    }

    proptest! {
        #[test]
        fn round_trip_unproject_project(u in unit(), v in unit(), d in 1e-3f64..=100.0) {
            let cam = cam960();
            let n = NormalizedWaypoint::new(u, v);
            let disp = unproject(&cam, n, d).unwrap();
            prop_assert_eq!(disp.sy, d);
            let back = project(&cam, disp).unwrap().point;
            prop_assert!((back.u - u).abs() <= 1e-9 * u.abs());
            prop_assert!((back.v - v).abs() <= 1e-9 * v.abs());
        }

        #[test]
        fn pixel_round_trip(u in 0.0f64..=960.0, v in 0.0f64..=720.0) {
            let cam = cam960();
            let p = denormalize(&cam, normalize_pixel(&cam, PixelWaypoint::new(u, v)).unwrap());
            prop_assert!((p.u - u).abs() < 1e-9);
            prop_assert!((p.v - v).abs() < 1e-9);
        }

        #[test]
        fn norm_increases_with_depth(u in unit(), v in unit(), d in 0.01f64..50.0, extra in 0.01f64..50.0) {
            let cam = cam960();
            let n = NormalizedWaypoint::new(u, v);
            let a = unproject(&cam, n, d).unwrap().norm();
            let b = unproject(&cam, n, d + extra).unwrap().norm();
            prop_assert!(b > a);
        }

        #[test]
        fn mirror_symmetry(u in unit(), v in unit(), d in 0.01f64..100.0) {
            let cam = cam960();
            let a = unproject(&cam, NormalizedWaypoint::new(u, v), d).unwrap();
            let b = unproject(&cam, NormalizedWaypoint::new(-u, v), d).unwrap();
            let c = unproject(&cam, NormalizedWaypoint::new(u, -v), d).unwrap();
            prop_assert_eq!(b.sx, -a.sx);
            prop_assert_eq!(c.sz, -a.sz);
        }
    }
}
