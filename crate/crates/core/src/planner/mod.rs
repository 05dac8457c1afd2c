//! Planners turn an instruction and an observation into the next image-space
//! waypoint, a search directive, or a completion signal.

mod avoid;
pub mod mock_vlm;
mod oracle;
mod scripted;
mod vlm;

pub use avoid::{avoid_adjust, AvoidResult};
pub use oracle::{OracleConfig, OraclePlanner};
pub use scripted::ScriptedPlanner;
pub use vlm::{
    extract_json_object, parse_reply, ParsedReply, ReplyError, VlmConfig, VlmPlanner,
    PROMPT_TEMPLATE,
};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PixelWaypoint;
use crate::scaler::DepthLabel;
use crate::simworld::{Category, Observation, Scene, UavState};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("instruction must not be empty")]
pub struct EmptyInstruction;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Instruction(String);

impl Instruction {
    pub fn new(text: impl Into<String>) -> Result<Self, EmptyInstruction> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(EmptyInstruction);
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Instruction {
    type Error = EmptyInstruction;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Instruction::new(s)
    }
}

impl From<Instruction> for String {
    fn from(i: Instruction) -> String {
        i.0
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Obstacle extent in pixels, as reported by a planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub label: String,
}

impl ObstacleBox {
    pub fn inflated(&self, margin: f64) -> ObstacleBox {
        ObstacleBox {
            x1: self.x1 - margin,
            y1: self.y1 - margin,
            x2: self.x2 + margin,
            y2: self.y2 + margin,
            label: self.label.clone(),
        }
    }

    pub fn strictly_contains(&self, p: &PixelWaypoint) -> bool {
        self.x1 < p.u && p.u < self.x2 && self.y1 < p.v && p.v < self.y2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointPlan {
    pub waypoint: PixelWaypoint,
    pub depth: DepthLabel,
    #[serde(default)]
    pub obstacles: Vec<ObstacleBox>,
    #[serde(default)]
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchDirection {
    Left,
    Right,
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code", content = "detail", rename_all = "snake_case")]
pub enum FailureReason {
    Transport(String),
    MalformedResponse(String),
    MissingFrame,
    MissingGroundTruth,
    ScriptExhausted,
    WorkerGone,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::Transport(m) => write!(f, "transport: {m}"),
            FailureReason::MalformedResponse(m) => write!(f, "malformed response: {m}"),
            FailureReason::MissingFrame => f.write_str("observation has no frame"),
            FailureReason::MissingGroundTruth => f.write_str("oracle needs ground truth"),
            FailureReason::ScriptExhausted => f.write_str("scripted plan exhausted"),
            FailureReason::WorkerGone => f.write_str("planner worker stopped"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlannerOutcome {
    Plan(WaypointPlan),
    Search { direction: SearchDirection },
    Done,
    Failure { reason: FailureReason },
}

impl PlannerOutcome {
    pub fn failure(reason: FailureReason) -> Self {
        PlannerOutcome::Failure { reason }
    }
}

/// Simulator ground truth handed to the oracle planner.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub scene: Scene,
    pub state: UavState,
    pub goal: String,
    pub category: Category,
    pub success_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct PlanRequest {
    pub instruction: Instruction,
    pub observation: Observation,
    pub truth: Option<GroundTruth>,
}

/// Every planner implements this. Calls may block (remote round trips), so
/// drivers run planners on their own worker thread.
pub trait Planner: Send {
    fn plan(&mut self, req: &PlanRequest) -> PlannerOutcome;

    fn name(&self) -> &'static str;
}

/// Maps a metric range onto the label scale: `clamp(round(L * min(r, D) / D), 1, L)`.
pub fn quantize_depth(range: f64, levels: u32, d_ref: f64) -> DepthLabel {
    let r = if range.is_finite() {
        range.max(0.0)
    } else {
        d_ref
    };
    let raw = (levels as f64 * r.min(d_ref) / d_ref).round();
    DepthLabel::saturating(raw as i64, levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_depth(10.0, 10, 10.0).get(), 10);
        assert_eq!(quantize_depth(0.05, 10, 10.0).get(), 1);
        assert_eq!(quantize_depth(4.9, 10, 10.0).get(), 5);
        assert_eq!(quantize_depth(2.236, 10, 10.0).get(), 2);
        assert_eq!(quantize_depth(57.0, 10, 10.0).get(), 10);
    }

    #[test]
    fn instruction_must_have_text() {
        assert!(Instruction::new("").is_err());
        assert!(Instruction::new(" \n").is_err());
        assert_eq!(
            Instruction::new("find the chair").unwrap().as_str(),
            "find the chair"
        );
        assert!(serde_json::from_str::<Instruction>("\"\"").is_err());
    }

    #[test]
    fn outcome_wire_tags() {
        let o = PlannerOutcome::Search {
            direction: SearchDirection::Left,
        };
        assert_eq!(
            serde_json::to_string(&o).unwrap(),
            r#"{"kind":"search","direction":"left"}"#
        );
        let f = PlannerOutcome::failure(FailureReason::ScriptExhausted);
        assert_eq!(
            serde_json::to_string(&f).unwrap(),
            r#"{"kind":"failure","reason":{"code":"script_exhausted"}}"#
        );
    }

    proptest! {
        #[test]
        fn quantizer_is_monotone(a in 0.0f64..40.0, b in 0.0f64..40.0, levels in 1u32..30, d_ref in 0.5f64..30.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let ql = quantize_depth(lo, levels, d_ref).get();
            let qh = quantize_depth(hi, levels, d_ref).get();
            prop_assert!(ql <= qh);
            prop_assert!(ql >= 1);
            if hi >= d_ref {
                prop_assert_eq!(qh, levels);
            }
        }
    }
}
