//! Episode configuration and its TOML file form.
//!
//! The file uses explicit units in key names (degrees, meters, seconds);
//! [`EpisodeConfig`] holds the same values in SI units with radians.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::control::{Deadband, SpeedConfig};
use crate::geometry::CameraModel;
use crate::planner::{OracleConfig, VlmConfig};
use crate::scaler::{ScalerConfig, StepMode};
use crate::simworld::ScenarioOverrides;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Oracle,
    Scripted,
    Vlm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interleave {
    /// Drain the schedule, then plan.
    Sequential,
    /// Start planning while the tail of the schedule is still flying.
    Pipelined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvoidConfig {
    pub enabled: bool,
    pub margin_px: f64,
}

/// Half-widths of the uniform start-pose perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jitter {
    pub position: f64,
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub planner: PlannerKind,
    pub scaler: ScalerConfig,
    pub speeds: SpeedConfig,
    pub deadband: Deadband,
    pub camera: CameraModel,
    pub oracle: OracleConfig,
    pub vlm: VlmConfig,
    pub avoid: AvoidConfig,
    pub jitter: Jitter,
    pub interleave: Interleave,
    /// Control tick, seconds.
    pub dt: f64,
    /// Simulated inference delay, seconds.
    pub planner_latency: f64,
    pub max_replans: u32,
    pub seed: u64,
    /// Yaw swept per search directive, radians.
    pub search_yaw: f64,
    /// Climb or descent per vertical search directive, meters.
    pub search_climb: f64,
    /// Hover time after a completion signal before planning again, seconds.
    pub done_hover: f64,
    pub uav_radius: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        ConfigFile::default()
            .into_config()
            .expect("default configuration is valid")
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        self.scaler
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.speeds
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        CameraModel::new(
            self.camera.width(),
            self.camera.height(),
            self.camera.alpha(),
            self.camera.beta(),
        )
        .map_err(|e| HarnessError::Config(e.to_string()))?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.planner_latency.is_finite() && self.planner_latency >= 0.0) {
            return bad(format!(
                "planner latency must be >= 0, got {}",
                self.planner_latency
            ));
        }
        if self.oracle.levels != self.scaler.levels {
            return bad("oracle and scaler disagree on the number of depth labels".into());
        }
        if !(self.oracle.depth_ref > 0.0) {
            return bad("depth_ref must be > 0".into());
        }
        if !(self.jitter.position >= 0.0 && self.jitter.yaw >= 0.0) {
            return bad("jitter must be >= 0".into());
        }
        if !(self.done_hover >= 0.0 && self.uav_radius >= 0.0 && self.avoid.margin_px >= 0.0) {
            return bad("done_hover, uav_radius and avoid margin must be >= 0".into());
        }
        if !(self.search_yaw > 0.0 && self.search_climb > 0.0) {
            return bad("search steps must be > 0".into());
        }
        Ok(())
    }

    pub fn with_overrides(&self, o: &ScenarioOverrides) -> EpisodeConfig {
        let mut c = self.clone();
        if let Some(m) = o.avoid_margin_px {
            c.avoid.margin_px = m;
        }
        if let Some(n) = o.max_replans {
            c.max_replans = n;
        }
        c
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ConfigFile = toml::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        file.into_config()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSection {
    pub kind: PlannerKind,
    pub latency_s: f64,
    pub max_replans: u32,
    pub depth_ref_m: f64,
    pub search_step_deg: f64,
    pub search_climb_m: f64,
    pub done_hover_s: f64,
    pub interleave: Interleave,
}

impl Default for PlannerSection {
    fn default() -> Self {
        Self {
            kind: PlannerKind::Oracle,
            latency_s: 0.0,
            max_replans: 60,
            depth_ref_m: 10.0,
            search_step_deg: 30.0,
            search_climb_m: 0.5,
            done_hover_s: 1.0,
            interleave: Interleave::Sequential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalerSection {
    pub scale_m: f64,
    pub levels: u32,
    pub exponent: f64,
    pub min_step_m: f64,
    /// Present to force the fixed-step mode.
    pub fixed_step_m: Option<f64>,
}

impl Default for ScalerSection {
    fn default() -> Self {
        Self {
            scale_m: 10.0,
            levels: 10,
            exponent: 1.8,
            min_step_m: 0.1,
            fixed_step_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedSection {
    pub yaw_dps: f64,
    pub pitch_mps: f64,
    pub throttle_mps: f64,
    pub v_max_mps: f64,
    pub omega_max_dps: f64,
}

impl Default for SpeedSection {
    fn default() -> Self {
        Self {
            yaw_dps: 50.0,
            pitch_mps: 0.5,
            throttle_mps: 0.5,
            v_max_mps: 1.0,
            omega_max_dps: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeadbandSection {
    pub yaw_deg: f64,
    pub pitch_m: f64,
    pub throttle_m: f64,
}

impl Default for DeadbandSection {
    fn default() -> Self {
        Self {
            yaw_deg: 0.5,
            pitch_m: 0.02,
            throttle_m: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSection {
    pub width: u32,
    pub height: u32,
    pub half_fov_h_deg: f64,
    pub half_fov_v_deg: f64,
}

impl Default for CameraSection {
    fn default() -> Self {
        Self {
            width: 960,
            height: 720,
            half_fov_h_deg: 41.3,
            half_fov_v_deg: 31.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt_s: f64,
    pub uav_radius_m: f64,
    pub seed: u64,
    pub jitter_position_m: f64,
    pub jitter_yaw_deg: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt_s: 0.1,
            uav_radius_m: 0.15,
            seed: 0,
            jitter_position_m: 0.25,
            jitter_yaw_deg: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AvoidSection {
    pub enabled: bool,
    pub margin_px: f64,
}

impl Default for AvoidSection {
    fn default() -> Self {
        Self {
            enabled: true,
            margin_px: 10.0,
        }
    }
}

/// On-disk configuration. Every section and key is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub planner: PlannerSection,
    pub scaler: ScalerSection,
    pub speeds: SpeedSection,
    pub deadband: DeadbandSection,
    pub camera: CameraSection,
    pub sim: SimSection,
    pub avoid: AvoidSection,
    pub vlm: VlmConfig,
}

impl ConfigFile {
    pub fn into_config(self) -> Result<EpisodeConfig, HarnessError> {
        let camera = CameraModel::from_degrees(
            self.camera.width,
            self.camera.height,
            self.camera.half_fov_h_deg,
            self.camera.half_fov_v_deg,
        )
        .map_err(|e| HarnessError::Config(e.to_string()))?;
        let cfg = EpisodeConfig {
            planner: self.planner.kind,
            scaler: ScalerConfig {
                scale: self.scaler.scale_m,
                levels: self.scaler.levels,
                exponent: self.scaler.exponent,
                min_step: self.scaler.min_step_m,
                mode: match self.scaler.fixed_step_m {
                    Some(step) => StepMode::Fixed { step },
                    None => StepMode::Adaptive,
                },
            },
            speeds: SpeedConfig {
                yaw: self.speeds.yaw_dps.to_radians(),
                pitch: self.speeds.pitch_mps,
                throttle: self.speeds.throttle_mps,
                v_max: self.speeds.v_max_mps,
                omega_max: self.speeds.omega_max_dps.to_radians(),
            },
            deadband: Deadband {
                yaw: self.deadband.yaw_deg.to_radians(),
                pitch: self.deadband.pitch_m,
                throttle: self.deadband.throttle_m,
            },
            camera,
            oracle: OracleConfig {
                levels: self.scaler.levels,
                depth_ref: self.planner.depth_ref_m,
            },
            vlm: self.vlm,
            avoid: AvoidConfig {
                enabled: self.avoid.enabled,
                margin_px: self.avoid.margin_px,
            },
            jitter: Jitter {
                position: self.sim.jitter_position_m,
                yaw: self.sim.jitter_yaw_deg.to_radians(),
            },
            interleave: self.planner.interleave,
            dt: self.sim.dt_s,
            planner_latency: self.planner.latency_s,
            max_replans: self.planner.max_replans,
            seed: self.sim.seed,
            search_yaw: self.planner.search_step_deg.to_radians(),
            search_climb: self.planner.search_climb_m,
            done_hover: self.planner.done_hover_s,
            uav_radius: self.sim.uav_radius_m,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
