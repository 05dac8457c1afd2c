use serde::{Deserialize, Serialize};

use super::observe::Observation;
use super::scene::{Category, Scene, Task};
use super::UavState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Running,
    Success,
    Collision { entity: String },
    Timeout,
}

impl Status {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Status::Running)
    }
}

/// Mission progress: which goal is active and, for follow tasks, since
/// which tick the goal has been held within range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub goal_index: usize,
    pub hold_since_tick: Option<u64>,
    pub status: Status,
}

impl Default for Progress {
    fn default() -> Self {
        Self {
            goal_index: 0,
            hold_since_tick: None,
            status: Status::Running,
        }
    }
}

/// Success, collision and timeout rules for one episode.
#[derive(Debug, Clone)]
pub struct Adjudicator {
    pub task: Task,
    pub uav_radius: f64,
    pub dt: f64,
    pub progress: Progress,
}

impl Adjudicator {
    pub fn new(task: Task, uav_radius: f64, dt: f64) -> Self {
        Self {
            task,
            uav_radius,
            dt,
            progress: Progress::default(),
        }
    }

    pub fn active_goal(&self) -> Option<&str> {
        self.task
            .goal_sequence
            .get(self.progress.goal_index)
            .map(String::as_str)
    }

    pub fn status(&self) -> &Status {
        &self.progress.status
    }

    /// Evaluates the state reached at `tick`. Terminal statuses stick.
    pub fn check(
        &mut self,
        scene: &Scene,
        state: &UavState,
        obs: &Observation,
        tick: u64,
    ) -> Status {
        if self.progress.status.is_terminal() {
            return self.progress.status.clone();
        }
        let t = tick as f64 * self.dt;

        if let Some(ob) = scene
            .obstacles
            .iter()
            .find(|o| o.bounds.distance(&state.position) <= self.uav_radius)
        {
            return self.finish(Status::Collision {
                entity: ob.id.clone(),
            });
        }

        while let Some(goal) = self.active_goal().map(str::to_owned) {
            let Some(target) = scene.target(&goal) else {
                break;
            };
            let range = target.position.dist(&state.position);
            let within = range <= self.task.success_threshold;
            let reached = if self.task.category == Category::Follow {
                if within {
                    let since = *self.progress.hold_since_tick.get_or_insert(tick);
                    (tick - since) as f64 * self.dt >= self.task.follow_hold - 1e-9
                } else {
                    self.progress.hold_since_tick = None;
                    false
                }
            } else {
                let visible = obs.view(&goal).map(|v| v.visible).unwrap_or(false);
                within && visible
            };
            if !reached {
                break;
            }
            self.progress.goal_index += 1;
            self.progress.hold_since_tick = None;
            if self.progress.goal_index >= self.task.goal_sequence.len() {
                return self.finish(Status::Success);
            }
        }

        if t >= self.task.timeout - 1e-9 {
            return self.finish(Status::Timeout);
        }
        Status::Running
    }

    fn finish(&mut self, s: Status) -> Status {
        self.progress.status = s.clone();
        s
    }
}
