//! Deterministic first-order kinematic world.
//!
//! One tick runs, in this order: advance targets, step the UAV, observe,
//! adjudicate. Logs and replays depend on that order.

mod adjudicate;
mod observe;
mod render;
mod scene;

pub use adjudicate::{Adjudicator, Progress, Status};
pub use observe::{observe, world_to_body, EntityKind, EntityView, Observation, PixelBox};
pub use render::render_frame;
pub use scene::{
    load_scenario, Aabb, Category, Obstacle, Scenario, ScenarioOverrides, Scene, SceneError,
    StartPose, Target, Task, SCENARIO_SCHEMA_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::control::{RcCommand, SpeedConfig, RC_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dist(&self, other: &Vec3) -> f64 {
        (*self - *other).norm()
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

/// UAV pose. World frame is z-up; `yaw` is 0 along world +y and grows
/// clockwise seen from above, so body-right at yaw 0 is world +x.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UavState {
    pub position: Vec3,
    pub yaw: f64,
}

impl UavState {
    pub fn new(position: Vec3, yaw: f64) -> Self {
        Self { position, yaw }
    }

    pub fn is_finite(&self) -> bool {
        self.position.x.is_finite()
            && self.position.y.is_finite()
            && self.position.z.is_finite()
            && self.yaw.is_finite()
    }

    /// Rotates a body-frame vector (right, forward, up) into the world frame.
    pub fn body_to_world(&self, right: f64, forward: f64, up: f64) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(right * c + forward * s, -right * s + forward * c, up)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Integrates one rc command for `dt` seconds.
pub fn step(state: &UavState, rc: &RcCommand, mapping: &SpeedConfig, dt: f64) -> UavState {
    if rc.is_stop() || dt <= 0.0 {
        return *state;
    }
    let k = mapping.v_max / RC_LIMIT;
    let world_vel = state.body_to_world(rc.roll * k, rc.pitch * k, rc.throttle * k);
    let yaw_rate = rc.yaw_rate * mapping.omega_max / RC_LIMIT;
    UavState {
        position: state.position + world_vel * dt,
        yaw: if yaw_rate == 0.0 {
            state.yaw
        } else {
            wrap_angle(state.yaw + yaw_rate * dt)
        },
    }
}

/// Moves every target by its velocity, reflecting off the scene bounds.
pub fn advance_targets(scene: &mut Scene, dt: f64) {
    let b = scene.bounds;
    for t in &mut scene.targets {
        if t.velocity == Vec3::ZERO {
            continue;
        }
        let mut p = t.position + t.velocity * dt;
        let mut v = t.velocity;
        reflect(&mut p.x, &mut v.x, b.min.x, b.max.x);
        reflect(&mut p.y, &mut v.y, b.min.y, b.max.y);
        reflect(&mut p.z, &mut v.z, b.min.z, b.max.z);
        t.position = p;
        t.velocity = v;
    }
}

fn reflect(p: &mut f64, v: &mut f64, lo: f64, hi: f64) {
    if *p > hi {
        *p = hi - (*p - hi);
        *v = -v.abs();
    } else if *p < lo {
        *p = lo + (lo - *p);
        *v = v.abs();
    }
    *p = p.clamp(lo, hi);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn speeds() -> SpeedConfig {
        SpeedConfig::default()
    }

    fn rc(pitch: f64, yaw_rate: f64) -> RcCommand {
        RcCommand {
            pitch,
            yaw_rate,
            ..RcCommand::STOP
        }
    }

    #[test]
    fn forward_at_half_speed() {
        let mut s = UavState::default();
        for _ in 0..10 {
            s = step(&s, &rc(50.0, 0.0), &speeds(), 0.1);
        }
        assert_relative_eq!(s.position.x, 0.0);
        assert_relative_eq!(s.position.y, 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.position.z, 0.0);
    }

    #[test]
    fn yaw_rate_integrates() {
        let mut s = UavState::default();
        for _ in 0..10 {
            s = step(&s, &rc(0.0, 50.0), &speeds(), 0.1);
        }
        assert_relative_eq!(s.yaw.to_degrees(), 50.0, epsilon = 1e-9);
        assert_eq!(s.position, Vec3::ZERO);
    }

    #[test]
    fn forward_after_quarter_turn_is_world_x() {
        let s = UavState::new(Vec3::ZERO, 90f64.to_radians());
        let s = step(&s, &rc(100.0, 0.0), &speeds(), 1.0);
        assert_relative_eq!(s.position.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.position.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn stop_is_identity() {
        let s = UavState::new(Vec3::new(1.0, -2.0, 3.0), 0.7);
        assert_eq!(step(&s, &RcCommand::STOP, &speeds(), 123.0), s);
    }

    fn scene_with(target: Target) -> Scene {
        Scene {
            targets: vec![target],
            obstacles: vec![],
            bounds: Aabb::new(Vec3::new(-10.0, -10.0, 0.0), Vec3::new(10.0, 10.0, 5.0)),
        }
    }

    fn target(p: Vec3, v: Vec3) -> Target {
        Target {
            id: "t".into(),
            position: p,
            velocity: v,
            radius: 0.3,
        }
    }

    #[test]
    fn static_target_does_not_move() {
        let mut sc = scene_with(target(Vec3::new(1.0, 2.0, 1.0), Vec3::ZERO));
        advance_targets(&mut sc, 5.0);
        assert_eq!(sc.targets[0].position, Vec3::new(1.0, 2.0, 1.0));
    }

    #[test]
    fn moving_target_translates() {
        let mut sc = scene_with(target(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.3, 0.0, 0.0)));
        advance_targets(&mut sc, 1.0);
        assert_relative_eq!(sc.targets[0].position.x, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn target_reflects_at_bound() {
        let mut sc = scene_with(target(Vec3::new(10.0, 0.0, 1.0), Vec3::new(0.5, 0.0, 0.0)));
        advance_targets(&mut sc, 1.0);
        let t = &sc.targets[0];
        assert_eq!(t.velocity.x, -0.5);
        assert_relative_eq!(t.position.x, 9.5, epsilon = 1e-12);
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(-PI), PI, epsilon = 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }
}
