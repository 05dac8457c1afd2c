//! JSONL trajectory logs: a header row, tick and plan rows in time order,
//! and an end row with the episode metrics.

use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::config::EpisodeConfig;
use super::episode::run_episode_from;
use super::{HarnessError, Metrics};
use crate::control::{CommandSchedule, RcCommand};
use crate::geometry::{Displacement3, PixelWaypoint};
use crate::planner::{PlannerOutcome, ScriptedPlanner};
use crate::simworld::{Scenario, UavState, Vec3};

pub const RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub schema_version: u32,
    pub generator: String,
    /// Effective configuration, scenario overrides included.
    pub config: EpisodeConfig,
    pub scenario: Scenario,
    pub rep: u32,
    pub initial_state: UavState,
}

impl RecordHeader {
    pub fn new(
        config: EpisodeConfig,
        scenario: Scenario,
        rep: u32,
        initial_state: UavState,
    ) -> Self {
        Self {
            schema_version: RECORD_SCHEMA_VERSION,
            generator: concat!("aerial-nav ", env!("CARGO_PKG_VERSION")).to_string(),
            config,
            scenario,
            rep,
            initial_state,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRow {
    pub tick: u64,
    pub t: f64,
    pub state: UavState,
    pub rc: RcCommand,
    /// Seconds of this tick the command was applied.
    pub active_s: f64,
    pub plan_id: Option<u32>,
    /// Target positions, only for scenes with moving targets.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub id: u32,
    pub requested_tick: u64,
    /// Tick the outcome was applied.
    pub tick: u64,
    pub t: f64,
    pub state: UavState,
    pub outcome: PlannerOutcome,
    pub waypoint: Option<PixelWaypoint>,
    pub avoid_adjusted: bool,
    pub d_adj: Option<f64>,
    pub displacement: Option<Displacement3>,
    pub schedule: CommandSchedule,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndRow {
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "row", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum RecordRow {
    Header(RecordHeader),
    Tick(TickRow),
    Plan(PlanRow),
    End(EndRow),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub header: RecordHeader,
    /// Tick and plan rows.
    pub rows: Vec<RecordRow>,
    pub end: Option<Metrics>,
}

impl TrajectoryRecord {
    pub fn new(header: RecordHeader) -> Self {
        Self {
            header,
            rows: Vec::new(),
            end: None,
        }
    }

    pub fn ticks(&self) -> impl Iterator<Item = &TickRow> {
        self.rows.iter().filter_map(|r| match r {
            RecordRow::Tick(t) => Some(t),
            _ => None,
        })
    }

    pub fn plans(&self) -> impl Iterator<Item = &PlanRow> {
        self.rows.iter().filter_map(|r| match r {
            RecordRow::Plan(p) => Some(p),
            _ => None,
        })
    }

    pub fn metrics(&self) -> Option<&Metrics> {
        self.end.as_ref()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("json is utf-8")
    }

    fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut line = |row: &RecordRow| -> std::io::Result<()> {
            serde_json::to_writer(&mut *w, row)?;
            w.write_all(b"\n")
        };
        line(&RecordRow::Header(self.header.clone()))?;
        for r in &self.rows {
            line(r)?;
        }
        if let Some(m) = &self.end {
            line(&RecordRow::End(EndRow { metrics: m.clone() }))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let first = lines
            .next()
            .ok_or_else(|| HarnessError::Record("record is empty".into()))?;
        let head: Value = serde_json::from_str(first)
            .map_err(|e| HarnessError::Record(format!("unreadable header: {e}")))?;
        if head.get("row").and_then(Value::as_str) != Some("header") {
            return Err(HarnessError::Record("first row is not a header".into()));
        }
        let found = head
            .get("schema_version")
            .and_then(Value::as_u64)
            .unwrap_or(0) as u32;
        if found != RECORD_SCHEMA_VERSION {
            return Err(HarnessError::RecordSchema {
                found,
                expected: RECORD_SCHEMA_VERSION,
            });
        }
        let RecordRow::Header(header) = serde_json::from_value(head)
            .map_err(|e| HarnessError::Record(format!("invalid header: {e}")))?
        else {
            unreachable!("row tag checked above");
        };

        let mut rec = TrajectoryRecord::new(header);
        let mut valid = 1;
        for line in lines {
            if rec.end.is_some() {
                return Err(HarnessError::Record(format!(
                    "rows after the end row (row {})",
                    valid + 1
                )));
            }
            let row: RecordRow =
                serde_json::from_str(line).map_err(|e| HarnessError::Truncated {
                    last_valid_row: valid,
                    reason: e.to_string(),
                })?;
            match row {
                RecordRow::Header(_) => {
                    return Err(HarnessError::Record(format!(
                        "second header at row {}",
                        valid + 1
                    )))
                }
                RecordRow::End(e) => rec.end = Some(e.metrics),
                r => rec.rows.push(r),
            }
            valid += 1;
        }
        if rec.end.is_none() {
            return Err(HarnessError::Truncated {
                last_valid_row: valid,
                reason: "missing end row".into(),
            });
        }
        Ok(rec)
    }
}

pub fn write_record(path: &Path, rec: &TrajectoryRecord) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut w = BufWriter::new(std::fs::File::create(path).map_err(io)?);
    rec.write_to(&mut w).map_err(io)?;
    w.flush().map_err(io)
}

pub fn read_record(path: &Path) -> Result<TrajectoryRecord, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    TrajectoryRecord::parse(&text)
}

/// SHA-256 of the schedule's JSON form, hex encoded.
pub fn schedule_digest(s: &CommandSchedule) -> String {
    let bytes = serde_json::to_vec(s).expect("schedules serialize");
    hex::encode(Sha256::digest(bytes))
}

/// Re-runs a recorded episode with its planner outcomes replayed verbatim
/// and checks that every state matches bit for bit. `config`, when given,
/// must equal the recorded configuration.
pub fn replay(
    rec: &TrajectoryRecord,
    config: Option<&EpisodeConfig>,
) -> Result<TrajectoryRecord, HarnessError> {
    let recorded = &rec.header.config;
    if let Some(cfg) = config {
        let diff = config_diff(recorded, cfg);
        if !diff.is_empty() {
            return Err(HarnessError::ConfigMismatch(format!(
                "differs in {}",
                diff.join(", ")
            )));
        }
    }
    let script: Vec<PlannerOutcome> = rec.plans().map(|p| p.outcome.clone()).collect();
    let mut again = TrajectoryRecord::new(rec.header.clone());
    run_episode_from(
        recorded,
        &rec.header.scenario,
        Box::new(ScriptedPlanner::new(script)),
        &mut again,
    )?;

    {
        let mut old = rec.ticks();
        let mut new = again.ticks();
        loop {
            match (old.next(), new.next()) {
                (None, None) => break,
                (Some(a), Some(b)) => {
                    if !same_bits(&a.state, &b.state) {
                        return Err(HarnessError::Diverged {
                            tick: a.tick,
                            detail: format!("recorded {:?}, replayed {:?}", a.state, b.state),
                        });
                    }
                }
                (Some(a), None) => {
                    return Err(HarnessError::Diverged {
                        tick: a.tick,
                        detail: "replay ended early".into(),
                    })
                }
                (None, Some(b)) => {
                    return Err(HarnessError::Diverged {
                        tick: b.tick,
                        detail: "replay ran past the recorded end".into(),
                    })
                }
            }
        }
    }
    if again.end != rec.end {
        return Err(HarnessError::Diverged {
            tick: again.ticks().last().map_or(0, |t| t.tick),
            detail: format!(
                "metrics differ: recorded {:?}, replayed {:?}",
                rec.end, again.end
            ),
        });
    }
    Ok(again)
}

fn same_bits(a: &UavState, b: &UavState) -> bool {
    a.position.x.to_bits() == b.position.x.to_bits()
        && a.position.y.to_bits() == b.position.y.to_bits()
        && a.position.z.to_bits() == b.position.z.to_bits()
        && a.yaw.to_bits() == b.yaw.to_bits()
}

fn config_diff(a: &EpisodeConfig, b: &EpisodeConfig) -> Vec<String> {
    let (Value::Object(a), Value::Object(b)) = (
        serde_json::to_value(a).expect("config serializes"),
        serde_json::to_value(b).expect("config serializes"),
    ) else {
        unreachable!("configs serialize to objects");
    };
    a.iter()
        .filter(|(k, v)| b.get(*k) != Some(v))
        .map(|(k, _)| k.clone())
        .collect()
}
