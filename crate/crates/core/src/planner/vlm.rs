//! Client for a chat-completions style vision-language endpoint.
//!
//! The model is asked for one JSON object:
//! `{"target": {"u": int, "v": int, "distance": int}, "obstacles": [...], "done": bool}`.
//! Replies that do not parse are retried with the parse error appended to
//! the conversation.

use std::time::Duration;

use base64::Engine;
use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{FailureReason, ObstacleBox, PlanRequest, Planner, PlannerOutcome, WaypointPlan};
use crate::geometry::{CameraModel, PixelWaypoint};
use crate::scaler::DepthLabel;

pub const PROMPT_TEMPLATE: &str = include_str!("../../assets/prompt_v1.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VlmConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub max_attempts: u32,
    pub timeout_s: f64,
    pub temperature: f64,
}

impl Default for VlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080/v1/chat/completions".into(),
            model: "gemini-2.0-flash".into(),
            api_key_env: Some("VLM_API_KEY".into()),
            max_attempts: 3,
            timeout_s: 30.0,
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplyError {
    #[error("no JSON object in reply")]
    NoJson,
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("field {0} missing or not an integer")]
    Field(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReply {
    pub outcome: PlannerOutcome,
    /// Human-readable notes about values that were clamped or dropped.
    pub warnings: Vec<String>,
}

/// Returns the first balanced `{...}` in `text`, skipping braces inside
/// string literals.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let bytes = text.as_bytes();
    let start = text.find('{')?;
    let (mut depth, mut in_str, mut escaped) = (0usize, false, false);
    for (i, &c) in bytes.iter().enumerate().skip(start) {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            b'"' => in_str = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    None
}

fn int_field(obj: &Value, key: &str, ctx: &str) -> Result<i64, ReplyError> {
    obj.get(key)
        .and_then(Value::as_i64)
        .ok_or_else(|| ReplyError::Field(format!("{ctx}{key}")))
}

fn clamp_logged(value: i64, lo: i64, hi: i64, name: &str, warnings: &mut Vec<String>) -> i64 {
    let c = value.clamp(lo, hi);
    if c != value {
        warnings.push(format!("{name} = {value} clamped to {c}"));
    }
    c
}

/// Validates a model reply against the wire schema, clamping coordinates
/// into the image and the distance label into `1..=levels`.
pub fn parse_reply(text: &str, cam: &CameraModel, levels: u32) -> Result<ParsedReply, ReplyError> {
    let raw = extract_json_object(text).ok_or(ReplyError::NoJson)?;
    let v: Value = serde_json::from_str(raw).map_err(|e| ReplyError::Json(e.to_string()))?;
    if !v.is_object() {
        return Err(ReplyError::Json("top level is not an object".into()));
    }
    let done = match v.get("done") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(ReplyError::Field("done".into())),
    };
    if done {
        return Ok(ParsedReply {
            outcome: PlannerOutcome::Done,
            warnings: vec![],
        });
    }

    let mut warnings = Vec::new();
    let target = v
        .get("target")
        .filter(|t| t.is_object())
        .ok_or_else(|| ReplyError::Field("target".into()))?;
    let (w, h) = (cam.width() as i64, cam.height() as i64);
    let u = int_field(target, "u", "target.")?;
    let vv = int_field(target, "v", "target.")?;
    let dist = int_field(target, "distance", "target.")?;
    let u = clamp_logged(u, 0, w, "target.u", &mut warnings);
    let vv = clamp_logged(vv, 0, h, "target.v", &mut warnings);
    let dist = clamp_logged(dist, 1, levels as i64, "target.distance", &mut warnings);

    let mut obstacles = Vec::new();
    match v.get("obstacles") {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                let ctx = format!("obstacles[{i}].");
                let mut coord = |k: &str, hi: i64| -> Result<i64, ReplyError> {
                    let raw = int_field(item, k, &ctx)?;
                    Ok(clamp_logged(
                        raw,
                        0,
                        hi,
                        &format!("{ctx}{k}"),
                        &mut warnings,
                    ))
                };
                let (x1, y1, x2, y2) = (
                    coord("x1", w)?,
                    coord("y1", h)?,
                    coord("x2", w)?,
                    coord("y2", h)?,
                );
                let label = item
                    .get("label")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string();
                if x1 >= x2 || y1 >= y2 {
                    warnings.push(format!("{ctx} dropped: empty box after clamping"));
                    continue;
                }
                obstacles.push(ObstacleBox {
                    x1: x1 as f64,
                    y1: y1 as f64,
                    x2: x2 as f64,
                    y2: y2 as f64,
                    label,
                });
            }
        }
        Some(_) => return Err(ReplyError::Field("obstacles".into())),
    }

    let rationale = v
        .get("rationale")
        .and_then(Value::as_str)
        .map(str::to_owned);
    Ok(ParsedReply {
        outcome: PlannerOutcome::Plan(WaypointPlan {
            waypoint: PixelWaypoint::new(u as f64, vv as f64),
            depth: DepthLabel::saturating(dist, levels),
            obstacles,
            done: false,
            rationale,
        }),
        warnings,
    })
}

pub struct VlmPlanner {
    cfg: VlmConfig,
    levels: u32,
    avoid_mode: bool,
    agent: ureq::Agent,
    api_key: Option<String>,
    last_warnings: Vec<String>,
    attempts_made: u32,
}

impl VlmPlanner {
    pub fn new(cfg: VlmConfig, levels: u32, avoid_mode: bool) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs_f64(cfg.timeout_s.max(0.001)))
            .build();
        let api_key = cfg
            .api_key_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok())
            .filter(|k| !k.is_empty());
        Self {
            cfg,
            levels,
            avoid_mode,
            agent,
            api_key,
            last_warnings: Vec::new(),
            attempts_made: 0,
        }
    }

    /// Clamp warnings produced by the most recent successful parse.
    pub fn last_warnings(&self) -> &[String] {
        &self.last_warnings
    }

    /// Number of requests issued by the most recent `plan` call.
    pub fn attempts_made(&self) -> u32 {
        self.attempts_made
    }

    pub fn render_prompt(&self, req: &PlanRequest) -> String {
        let cam = &req.observation.camera;
        PROMPT_TEMPLATE
            .replace("{{instruction}}", req.instruction.as_str())
            .replace("{{width}}", &cam.width().to_string())
            .replace("{{height}}", &cam.height().to_string())
            .replace("{{levels}}", &self.levels.to_string())
            .replace("{{avoid_mode}}", if self.avoid_mode { "on" } else { "off" })
    }

    fn request_body(&self, messages: &[Value]) -> Value {
        json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": messages,
        })
    }

    fn send(&self, body: &Value) -> Result<String, String> {
        let mut req = self.agent.post(&self.cfg.endpoint);
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let resp = req.send_json(body.clone()).map_err(|e| match e {
            ureq::Error::Status(code, _) => format!("HTTP status {code}"),
            ureq::Error::Transport(t) => t.to_string(),
        })?;
        let v: Value = resp
            .into_json()
            .map_err(|e| format!("unreadable body: {e}"))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| "response has no choices[0].message.content".to_string())
    }
}

impl Planner for VlmPlanner {
    fn plan(&mut self, req: &PlanRequest) -> PlannerOutcome {
        self.last_warnings.clear();
        self.attempts_made = 0;
        let Some(frame) = &req.observation.frame else {
            return PlannerOutcome::failure(FailureReason::MissingFrame);
        };
        let image_url = format!(
            "data:image/png;base64,{}",
            base64::engine::general_purpose::STANDARD.encode(frame)
        );
        let mut messages = vec![
            json!({"role": "system", "content": self.render_prompt(req)}),
            json!({"role": "user", "content": [
                {"type": "text", "text": req.instruction.as_str()},
                {"type": "image_url", "image_url": {"url": image_url}},
            ]}),
        ];

        let mut last_failure = FailureReason::Transport("no attempt made".into());
        for attempt in 1..=self.cfg.max_attempts.max(1) {
            self.attempts_made = attempt;
            let body = self.request_body(&messages);
            match self.send(&body) {
                Err(e) => {
                    warn!("planner request {attempt} failed: {e}");
                    messages.push(json!({
                        "role": "user",
                        "content": format!("The previous request failed ({e}). Reply with only the JSON object."),
                    }));
                    last_failure = FailureReason::Transport(e);
                }
                Ok(content) => match parse_reply(&content, &req.observation.camera, self.levels) {
                    Ok(parsed) => {
                        for w in &parsed.warnings {
                            warn!("planner reply: {w}");
                        }
                        self.last_warnings = parsed.warnings;
                        return parsed.outcome;
                    }
                    Err(e) => {
                        debug!("unusable reply on attempt {attempt}: {content}");
                        messages.push(json!({"role": "assistant", "content": content}));
                        messages.push(json!({
                            "role": "user",
                            "content": format!("Your previous reply could not be used: {e}. Reply with only the JSON object described above."),
                        }));
                        last_failure = FailureReason::MalformedResponse(e.to_string());
                    }
                },
            }
        }
        PlannerOutcome::failure(last_failure)
    }

    fn name(&self) -> &'static str {
        "vlm"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraModel {
        CameraModel::default()
    }

    #[test]
    fn extracts_first_object_around_prose() {
        let t = r#"Sure! {"a": "}{", "b": {"c": 1}} trailing {"x": 2}"#;
        assert_eq!(
            extract_json_object(t),
            Some(r#"{"a": "}{", "b": {"c": 1}}"#)
        );
        assert_eq!(extract_json_object("no braces"), None);
        assert_eq!(extract_json_object("{ unterminated"), None);
    }

    #[test]
    fn parses_schema_identity() {
        let r = parse_reply(
            r#"{"target": {"u": 480, "v": 360, "distance": 7}, "obstacles": [], "done": false}"#,
            &cam(),
            10,
        )
        .unwrap();
        assert!(r.warnings.is_empty());
        let PlannerOutcome::Plan(p) = r.outcome else {
            panic!()
        };
        assert_eq!(p.waypoint, PixelWaypoint::new(480.0, 360.0));
        assert_eq!(p.depth.get(), 7);
        assert!(p.obstacles.is_empty());
        assert!(!p.done);
    }

    #[test]
    fn done_short_circuits() {
        let r = parse_reply(r#"{"done": true}"#, &cam(), 10).unwrap();
        assert_eq!(r.outcome, PlannerOutcome::Done);
    }

    #[test]
    fn clamps_with_warnings() {
        let r = parse_reply(
            r#"```json
{"target": {"u": 1200, "v": -4, "distance": 14},
 "obstacles": [{"x1": -5, "y1": 10, "x2": 100, "y2": 90, "label": "tree"},
               {"x1": 970, "y1": 10, "x2": 990, "y2": 90, "label": "offscreen"}],
 "done": false}
```"#,
            &cam(),
            10,
        )
        .unwrap();
        let PlannerOutcome::Plan(p) = r.outcome else {
            panic!()
        };
        assert_eq!(p.waypoint, PixelWaypoint::new(960.0, 0.0));
        assert_eq!(p.depth.get(), 10);
        assert_eq!(p.obstacles.len(), 1);
        assert_eq!(p.obstacles[0].x1, 0.0);
        assert!(r
            .warnings
            .iter()
            .any(|w| w.contains("target.distance = 14")));
        assert!(r.warnings.iter().any(|w| w.contains("dropped")));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(
            parse_reply("I cannot see", &cam(), 10),
            Err(ReplyError::NoJson)
        );
        assert!(matches!(
            parse_reply("{\"target\": [1,2]}", &cam(), 10),
            Err(ReplyError::Field(_))
        ));
        assert!(matches!(
            parse_reply(r#"{"target": {"u": 1.5, "v": 2, "distance": 3}}"#, &cam(), 10),
            Err(ReplyError::Field(f)) if f == "target.u"
        ));
        assert!(matches!(
            parse_reply("{\"target\": }", &cam(), 10),
            Err(ReplyError::Json(_))
        ));
    }

    #[test]
    fn prompt_fills_placeholders() {
        let p = VlmPlanner::new(VlmConfig::default(), 10, true);
        let req = PlanRequest {
            instruction: super::super::Instruction::new("find the red chair").unwrap(),
            observation: crate::simworld::Observation {
                timestamp: 0.0,
                frame: None,
                entity_views: vec![],
                camera: cam(),
            },
            truth: None,
        };
        let text = p.render_prompt(&req);
        assert!(text.contains("find the red chair"));
        assert!(text.contains("960 x 720"));
        assert!(text.contains("to 10 (the longest"));
        assert!(text.contains("mode: on"));
        assert!(!text.contains("{{"));
    }
}
