use serde::{Deserialize, Serialize};

use super::scene::{Aabb, Scene};
use super::{UavState, Vec3};
use crate::geometry::{self, CameraModel, Displacement3};

/// Corners closer than this along the forward axis are clipped away
/// before projection.
const NEAR_PLANE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl PixelBox {
    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Target,
    Obstacle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityView {
    pub id: String,
    pub kind: EntityKind,
    pub label: String,
    /// Image-space extent clipped to the frame; `None` when no part of the
    /// entity is in front of the camera and inside the image.
    pub bbox: Option<PixelBox>,
    /// Center in front of the camera and inside the field of view.
    pub visible: bool,
    /// Distance to the entity center, meters.
    pub range: f64,
    /// Distance to the nearest point of the entity, meters.
    pub clearance: f64,
}

/// What the planner gets to see at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub timestamp: f64,
    /// Encoded image, only rendered for remote planners.
    pub frame: Option<Vec<u8>>,
    pub entity_views: Vec<EntityView>,
    pub camera: CameraModel,
}

impl Observation {
    pub fn view(&self, id: &str) -> Option<&EntityView> {
        self.entity_views.iter().find(|v| v.id == id)
    }
}

/// World offset expressed in the UAV body frame.
pub fn world_to_body(state: &UavState, world_point: &Vec3) -> Displacement3 {
    let o = *world_point - state.position;
    let (s, c) = state.yaw.sin_cos();
    Displacement3::new(o.x * c - o.y * s, o.x * s + o.y * c, o.z)
}

fn project_box(cam: &CameraModel, state: &UavState, aabb: &Aabb) -> Option<PixelBox> {
    let body: Vec<Displacement3> = aabb
        .corners()
        .iter()
        .map(|c| world_to_body(state, c))
        .collect();
    let mut pts: Vec<Displacement3> = body
        .iter()
        .copied()
        .filter(|p| p.sy >= NEAR_PLANE)
        .collect();
    // corners index bits: 1 = x, 2 = y, 4 = z; edges join indices one bit apart
    for i in 0..8usize {
        for bit in [1usize, 2, 4] {
            let j = i | bit;
            if j == i {
                continue;
            }
            let (a, b) = (body[i], body[j]);
            if (a.sy < NEAR_PLANE) != (b.sy < NEAR_PLANE) {
                let t = (NEAR_PLANE - a.sy) / (b.sy - a.sy);
                pts.push(Displacement3::new(
                    a.sx + t * (b.sx - a.sx),
                    NEAR_PLANE,
                    a.sz + t * (b.sz - a.sz),
                ));
            }
        }
    }
    if pts.is_empty() {
        return None;
    }
    let (w, h) = (cam.width() as f64, cam.height() as f64);
    let (mut x1, mut y1, mut x2, mut y2) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for p in pts {
        let n = geometry::project(cam, p).ok()?.point;
        let px = geometry::denormalize(cam, n);
        x1 = x1.min(px.u);
        x2 = x2.max(px.u);
        y1 = y1.min(px.v);
        y2 = y2.max(px.v);
    }
    let bx = PixelBox {
        x1: x1.clamp(0.0, w),
        y1: y1.clamp(0.0, h),
        x2: x2.clamp(0.0, w),
        y2: y2.clamp(0.0, h),
    };
    (bx.x1 < bx.x2 && bx.y1 < bx.y2).then_some(bx)
}

fn center_visible(cam: &CameraModel, body: Displacement3) -> bool {
    body.sy > 0.0
        && geometry::project(cam, body)
            .map(|p| p.in_fov)
            .unwrap_or(false)
}

pub fn observe(scene: &Scene, state: &UavState, cam: &CameraModel, t: f64) -> Observation {
    let mut views = Vec::with_capacity(scene.targets.len() + scene.obstacles.len());
    for tg in &scene.targets {
        let body = world_to_body(state, &tg.position);
        let range = body.norm();
        views.push(EntityView {
            id: tg.id.clone(),
            kind: EntityKind::Target,
            label: tg.id.clone(),
            bbox: project_box(cam, state, &tg.bounding_box()),
            visible: center_visible(cam, body),
            range,
            clearance: (range - tg.radius).max(0.0),
        });
    }
    for ob in &scene.obstacles {
        let body = world_to_body(state, &ob.bounds.center());
        views.push(EntityView {
            id: ob.id.clone(),
            kind: EntityKind::Obstacle,
            label: if ob.label.is_empty() {
                ob.id.clone()
            } else {
                ob.label.clone()
            },
            bbox: project_box(cam, state, &ob.bounds),
            visible: center_visible(cam, body),
            range: body.norm(),
            clearance: ob.bounds.distance(&state.position),
        });
    }
    Observation {
        timestamp: t,
        frame: None,
        entity_views: views,
        camera: *cam,
    }
}
