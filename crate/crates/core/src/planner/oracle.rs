use serde::{Deserialize, Serialize};

use super::{
    quantize_depth, FailureReason, GroundTruth, ObstacleBox, PlanRequest, Planner, PlannerOutcome,
    SearchDirection, WaypointPlan,
};
use crate::geometry::{self, PixelWaypoint};
use crate::simworld::{world_to_body, Category, EntityKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Number of depth labels.
    pub levels: u32,
    /// Range mapped to the top label, meters.
    pub depth_ref: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            levels: 10,
            depth_ref: 10.0,
        }
    }
}

/// Stands in for a perfect vision-language model by reading the simulator's
/// ground truth: it points at the goal's projection and labels its range.
#[derive(Debug, Clone, Default)]
pub struct OraclePlanner {
    cfg: OracleConfig,
}

impl OraclePlanner {
    pub fn new(cfg: OracleConfig) -> Self {
        Self { cfg }
    }

    pub fn plan_from_truth(&self, req: &PlanRequest, truth: &GroundTruth) -> PlannerOutcome {
        let cam = &req.observation.camera;
        let Some(goal) = truth.scene.target(&truth.goal) else {
            return PlannerOutcome::failure(FailureReason::MissingGroundTruth);
        };
        let body = world_to_body(&truth.state, &goal.position);
        let range = body.norm();
        let projection = geometry::project(cam, body).ok().filter(|p| p.in_fov);

        let Some(projection) = projection else {
            return PlannerOutcome::Search {
                direction: search_direction(body.sx, body.sy, body.sz, cam.alpha()),
            };
        };
        // follow tasks keep tracking inside the threshold
        if range <= truth.success_threshold && truth.category != Category::Follow {
            return PlannerOutcome::Done;
        }

        let waypoint = geometry::denormalize(cam, projection.point);
        let waypoint = PixelWaypoint::new(
            waypoint.u.clamp(0.0, cam.width() as f64),
            waypoint.v.clamp(0.0, cam.height() as f64),
        );
        // only obstacles nearer than the goal can block the line of sight
        let obstacles = req
            .observation
            .entity_views
            .iter()
            .filter(|v| v.kind == EntityKind::Obstacle && v.clearance < range)
            .filter_map(|v| {
                v.bbox.map(|b| ObstacleBox {
                    x1: b.x1,
                    y1: b.y1,
                    x2: b.x2,
                    y2: b.y2,
                    label: v.label.clone(),
                })
            })
            .collect();

        PlannerOutcome::Plan(WaypointPlan {
            waypoint,
            depth: quantize_depth(range, self.cfg.levels, self.cfg.depth_ref),
            obstacles,
            done: false,
            rationale: None,
        })
    }
}

/// Picks the sweep that brings an unseen goal into view with the smaller
/// correction: yaw toward its bearing, or tilt when only elevation is off.
fn search_direction(sx: f64, sy: f64, sz: f64, alpha: f64) -> SearchDirection {
    let bearing = sx.atan2(sy);
    if bearing.abs() <= alpha && sy > 0.0 {
        if sz >= 0.0 {
            SearchDirection::Up
        } else {
            SearchDirection::Down
        }
    } else if bearing >= 0.0 {
        SearchDirection::Right
    } else {
        SearchDirection::Left
    }
}

impl Planner for OraclePlanner {
    fn plan(&mut self, req: &PlanRequest) -> PlannerOutcome {
        match &req.truth {
            Some(truth) => self.plan_from_truth(req, truth),
            None => PlannerOutcome::failure(FailureReason::MissingGroundTruth),
        }
    }

    fn name(&self) -> &'static str {
        "oracle"
    }
}
