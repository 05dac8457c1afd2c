use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Vec3;
use crate::planner::Instruction;

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("unsupported scenario schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

mod arr3 {
    use super::Vec3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vec3, s: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec3, D::Error> {
        let a = <[f64; 3]>::deserialize(d)?;
        Ok(Vec3::from(a))
    }
}

fn zero() -> Vec3 {
    Vec3::ZERO
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    #[serde(rename = "min_m", with = "arr3")]
    pub min: Vec3,
    #[serde(rename = "max_m", with = "arr3")]
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (self.min.x..=self.max.x).contains(&p.x)
            && (self.min.y..=self.max.y).contains(&p.y)
            && (self.min.z..=self.max.z).contains(&p.z)
    }

    /// Euclidean distance from `p` to the box; zero inside.
    pub fn distance(&self, p: &Vec3) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        let dz = (self.min.z - p.z).max(0.0).max(p.z - self.max.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }

    fn is_degenerate(&self) -> bool {
        !(self.min.x < self.max.x && self.min.y < self.max.y && self.min.z < self.max.z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub id: String,
    #[serde(rename = "position_m", with = "arr3")]
    pub position: Vec3,
    #[serde(rename = "velocity_mps", with = "arr3", default = "zero")]
    pub velocity: Vec3,
    #[serde(rename = "radius_m")]
    pub radius: f64,
}

impl Target {
    pub fn bounding_box(&self) -> Aabb {
        let r = Vec3::new(self.radius, self.radius, self.radius);
        Aabb::new(self.position - r, self.position + r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: String,
    #[serde(default)]
    pub label: String,
    #[serde(flatten)]
    pub bounds: Aabb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub targets: Vec<Target>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub bounds: Aabb,
}

impl Scene {
    pub fn target(&self, id: &str) -> Option<&Target> {
        self.targets.iter().find(|t| t.id == id)
    }

    pub fn has_dynamic_targets(&self) -> bool {
        self.targets.iter().any(|t| t.velocity != Vec3::ZERO)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Navigation,
    ObstacleAvoidance,
    LongHorizon,
    Reasoning,
    Search,
    Follow,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Navigation,
        Category::ObstacleAvoidance,
        Category::LongHorizon,
        Category::Reasoning,
        Category::Search,
        Category::Follow,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Navigation => "navigation",
            Category::ObstacleAvoidance => "obstacle_avoidance",
            Category::LongHorizon => "long_horizon",
            Category::Reasoning => "reasoning",
            Category::Search => "search",
            Category::Follow => "follow",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub instruction: Instruction,
    pub category: Category,
    pub goal_sequence: Vec<String>,
    #[serde(rename = "success_threshold_m")]
    pub success_threshold: f64,
    #[serde(rename = "follow_hold_s", default)]
    pub follow_hold: f64,
    #[serde(rename = "timeout_s")]
    pub timeout: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartPose {
    #[serde(rename = "position_m", with = "arr3")]
    pub position: Vec3,
    #[serde(rename = "yaw_deg", default)]
    pub yaw_deg: f64,
}

/// Per-scenario adjustments to the episode configuration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avoid_margin_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_replans: Option<u32>,
}

/// A scene plus the task flown in it, as stored in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub task: Task,
    pub start: StartPose,
    pub scene: Scene,
    #[serde(default)]
    pub overrides: ScenarioOverrides,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let sc: Scenario = serde_json::from_str(text).map_err(|source| SceneError::Parse {
            path: PathBuf::from("<inline>"),
            source,
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(SceneError::SchemaVersion {
                found: self.schema_version,
                expected: SCENARIO_SCHEMA_VERSION,
            });
        }
        let bad = |m: String| Err(SceneError::Invalid(m));
        let scene = &self.scene;
        if scene.bounds.is_degenerate() {
            return bad("scene bounds are degenerate".into());
        }
        let mut ids = HashSet::new();
        for t in &scene.targets {
            if !ids.insert(t.id.as_str()) {
                return bad(format!("duplicate entity id {:?}", t.id));
            }
            if !(t.radius > 0.0) {
                return bad(format!("target {:?} radius must be > 0", t.id));
            }
            if !scene.bounds.contains(&t.position) {
                return bad(format!("target {:?} starts outside the scene bounds", t.id));
            }
        }
        for o in &scene.obstacles {
            if !ids.insert(o.id.as_str()) {
                return bad(format!("duplicate entity id {:?}", o.id));
            }
            if o.bounds.is_degenerate() {
                return bad(format!("obstacle {:?} is degenerate", o.id));
            }
        }
        let task = &self.task;
        if task.goal_sequence.is_empty() {
            return bad("goal_sequence is empty".into());
        }
        for g in &task.goal_sequence {
            if scene.target(g).is_none() {
                return bad(format!("goal {g:?} is not a target in the scene"));
            }
        }
        if !(task.success_threshold > 0.0) {
            return bad("success_threshold_m must be > 0".into());
        }
        if !(task.timeout > 0.0) {
            return bad("timeout_s must be > 0".into());
        }
        if task.category == Category::Follow && !(task.follow_hold > 0.0) {
            return bad("follow tasks need follow_hold_s > 0".into());
        }
        if !(task.follow_hold >= 0.0) {
            return bad("follow_hold_s must be >= 0".into());
        }
        Ok(())
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let sc: Scenario = serde_json::from_str(&text).map_err(|source| SceneError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    sc.validate()?;
    Ok(sc)
}
