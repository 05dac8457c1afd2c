//! Turning a body-frame displacement into single-axis rc velocity commands.
//!
//! A displacement is split into a heading change, a horizontal translation
//! along the new heading, and a vertical translation. Each part becomes one
//! velocity-duration command followed by an explicit all-zero stop, executed
//! in the order yaw, pitch, throttle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Displacement3;

pub const RC_LIMIT: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("displacement has non-positive forward component {0}")]
    BehindCamera(f64),
    #[error("non-finite control primitive: {0}")]
    NonFinite(&'static str),
    #[error("invalid speed config: {0}")]
    InvalidSpeeds(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPrimitives {
    /// Heading change in radians, positive turns right.
    pub delta_yaw: f64,
    /// Horizontal distance along the new heading, meters.
    pub delta_pitch: f64,
    /// Vertical distance, meters, positive up.
    pub delta_throttle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedConfig {
    /// Predefined yaw rate, rad/s.
    pub yaw: f64,
    /// Predefined forward speed, m/s.
    pub pitch: f64,
    /// Predefined vertical speed, m/s.
    pub throttle: f64,
    /// Linear speed at rc magnitude 100, m/s.
    pub v_max: f64,
    /// Yaw rate at rc magnitude 100, rad/s.
    pub omega_max: f64,
}

impl Default for SpeedConfig {
    fn default() -> Self {
        Self {
            yaw: 50f64.to_radians(),
            pitch: 0.5,
            throttle: 0.5,
            v_max: 1.0,
            omega_max: 100f64.to_radians(),
        }
    }
}

impl SpeedConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        let fields = [
            ("yaw", self.yaw),
            ("pitch", self.pitch),
            ("throttle", self.throttle),
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(ControlError::InvalidSpeeds(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        if self.pitch > self.v_max || self.throttle > self.v_max {
            return Err(ControlError::InvalidSpeeds(
                "pitch and throttle speeds must not exceed v_max".into(),
            ));
        }
        if self.yaw > self.omega_max {
            return Err(ControlError::InvalidSpeeds(
                "yaw speed must not exceed omega_max".into(),
            ));
        }
        Ok(())
    }
}

/// Per-axis thresholds below which a primitive is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deadband {
    pub yaw: f64,
    pub pitch: f64,
    pub throttle: f64,
}

impl Default for Deadband {
    fn default() -> Self {
        Self {
            yaw: 0.5f64.to_radians(),
            pitch: 0.02,
            throttle: 0.02,
        }
    }
}

impl Deadband {
    pub fn none() -> Self {
        Self {
            yaw: 0.0,
            pitch: 0.0,
            throttle: 0.0,
        }
    }
}

/// Four-axis velocity command in rc units, each in [-100, 100].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RcCommand {
    pub roll: f64,
    pub pitch: f64,
    pub throttle: f64,
    pub yaw_rate: f64,
}

impl RcCommand {
    pub const STOP: RcCommand = RcCommand {
        roll: 0.0,
        pitch: 0.0,
        throttle: 0.0,
        yaw_rate: 0.0,
    };

    pub fn is_stop(&self) -> bool {
        self.active_axes() == 0
    }

    pub fn active_axes(&self) -> usize {
        [self.roll, self.pitch, self.throttle, self.yaw_rate]
            .iter()
            .filter(|v| **v != 0.0)
            .count()
    }

    pub fn in_range(&self) -> bool {
        [self.roll, self.pitch, self.throttle, self.yaw_rate]
            .iter()
            .all(|v| v.abs() <= RC_LIMIT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedCommand {
    pub rc: RcCommand,
    /// Seconds.
    pub duration: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommandSchedule {
    pub commands: Vec<TimedCommand>,
}

impl CommandSchedule {
    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn motion_commands(&self) -> impl Iterator<Item = &TimedCommand> {
        self.commands.iter().filter(|c| !c.rc.is_stop())
    }

    pub fn total_duration(&self) -> f64 {
        self.commands.iter().map(|c| c.duration).sum()
    }
}

pub fn decompose(d: Displacement3) -> Result<ControlPrimitives, ControlError> {
    if !(d.sy > 0.0) {
        return Err(ControlError::BehindCamera(d.sy));
    }
    Ok(ControlPrimitives {
        delta_yaw: (d.sx / d.sy).atan(),
        delta_pitch: d.sx.hypot(d.sy),
        delta_throttle: d.sz,
    })
}

pub fn schedule(
    prim: &ControlPrimitives,
    speeds: &SpeedConfig,
    deadband: &Deadband,
) -> Result<CommandSchedule, ControlError> {
    for (name, v) in [
        ("delta_yaw", prim.delta_yaw),
        ("delta_pitch", prim.delta_pitch),
        ("delta_throttle", prim.delta_throttle),
    ] {
        if !v.is_finite() {
            return Err(ControlError::NonFinite(name));
        }
    }
    speeds.validate()?;

    let mut commands = Vec::with_capacity(6);
    let mut push =
        |delta: f64, band: f64, speed: f64, axis_max: f64, set: fn(&mut RcCommand, f64)| {
            if delta.abs() <= band || delta == 0.0 {
                return;
            }
            let mut rc = RcCommand::STOP;
            set(&mut rc, delta.signum() * RC_LIMIT * (speed / axis_max));
            commands.push(TimedCommand {
                rc,
                duration: delta.abs() / speed,
            });
            commands.push(TimedCommand {
                rc: RcCommand::STOP,
                duration: 0.0,
            });
        };

    push(
        prim.delta_yaw,
        deadband.yaw,
        speeds.yaw,
        speeds.omega_max,
        |rc, v| rc.yaw_rate = v,
    );
    push(
        prim.delta_pitch,
        deadband.pitch,
        speeds.pitch,
        speeds.v_max,
        |rc, v| rc.pitch = v,
    );
    push(
        prim.delta_throttle,
        deadband.throttle,
        speeds.throttle,
        speeds.v_max,
        |rc, v| rc.throttle = v,
    );

    Ok(CommandSchedule { commands })
}
