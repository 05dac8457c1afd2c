use std::collections::VecDeque;
use std::sync::mpsc;
use std::thread::JoinHandle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{EpisodeConfig, Interleave, PlannerKind};
use super::record::{schedule_digest, PlanRow, RecordHeader, RecordRow, TickRow, TrajectoryRecord};
use super::{HarnessError, Metrics, Termination};
use crate::control::{self, CommandSchedule, ControlPrimitives, RcCommand, TimedCommand};
use crate::geometry::{self, Displacement3, PixelWaypoint};
use crate::planner::{
    avoid_adjust, FailureReason, GroundTruth, OraclePlanner, PlanRequest, Planner, PlannerOutcome,
    ScriptedPlanner, SearchDirection, VlmPlanner,
};
use crate::scaler::scale_depth;
use crate::simworld::{
    self, advance_targets, observe, render_frame, wrap_angle, Adjudicator, Scenario, Status,
    UavState, Vec3,
};

/// Whole ticks needed to cover `duration` seconds.
fn ticks_for(duration: f64, dt: f64) -> u64 {
    if duration <= 0.0 {
        0
    } else {
        (duration / dt - 1e-9).ceil().max(1.0) as u64
    }
}

#[derive(Debug, Clone, Copy)]
struct Active {
    rc: RcCommand,
    duration: f64,
    ticks: u64,
    done: u64,
}

/// Plays a command schedule out one tick at a time. A command of duration
/// `d` occupies `ceil(d / dt)` ticks; its last tick integrates only the
/// remainder, so the commanded distance is flown exactly.
#[derive(Debug, Clone)]
pub struct Executor {
    dt: f64,
    queue: VecDeque<TimedCommand>,
    current: Option<Active>,
}

impl Executor {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            queue: VecDeque::new(),
            current: None,
        }
    }

    /// Replaces whatever is still queued.
    pub fn load(&mut self, schedule: &CommandSchedule) {
        self.queue = schedule.commands.iter().copied().collect();
        self.current = None;
    }

    pub fn is_idle(&self) -> bool {
        self.remaining_ticks() == 0
    }

    pub fn remaining_ticks(&self) -> u64 {
        let current = self.current.map_or(0, |a| a.ticks - a.done);
        current
            + self
                .queue
                .iter()
                .map(|c| ticks_for(c.duration, self.dt))
                .sum::<u64>()
    }

    /// Command for the next tick and the seconds of it that are active.
    pub fn next_tick(&mut self) -> (RcCommand, f64) {
        loop {
            if let Some(a) = self.current.as_mut() {
                let active = if a.done + 1 < a.ticks {
                    self.dt
                } else {
                    (a.duration - (a.ticks - 1) as f64 * self.dt).max(0.0)
                };
                a.done += 1;
                let rc = a.rc;
                if a.done >= a.ticks {
                    self.current = None;
                }
                return (rc, active);
            }
            match self.queue.pop_front() {
                Some(c) if c.duration > 0.0 => {
                    self.current = Some(Active {
                        rc: c.rc,
                        duration: c.duration,
                        ticks: ticks_for(c.duration, self.dt),
                        done: 0,
                    })
                }
                Some(_) => continue,
                None => return (RcCommand::STOP, 0.0),
            }
        }
    }
}

/// A planner outcome turned into something flyable.
#[derive(Debug, Clone, PartialEq)]
pub struct Realized {
    pub schedule: CommandSchedule,
    /// Waypoint after obstacle adjustment.
    pub waypoint: Option<PixelWaypoint>,
    pub avoid_adjusted: bool,
    pub d_adj: Option<f64>,
    pub displacement: Option<Displacement3>,
    pub failure: Option<FailureReason>,
}

impl Realized {
    fn schedule_only(schedule: CommandSchedule) -> Self {
        Self {
            schedule,
            waypoint: None,
            avoid_adjusted: false,
            d_adj: None,
            displacement: None,
            failure: None,
        }
    }

    fn failed(reason: FailureReason) -> Self {
        Self {
            failure: Some(reason),
            ..Self::schedule_only(CommandSchedule::default())
        }
    }
}

pub fn realize(outcome: &PlannerOutcome, cfg: &EpisodeConfig) -> Result<Realized, HarnessError> {
    let pipeline = |e: control::ControlError| HarnessError::Pipeline(e.to_string());
    let hover = || {
        Realized::schedule_only(CommandSchedule {
            commands: vec![TimedCommand {
                rc: RcCommand::STOP,
                duration: cfg.done_hover,
            }],
        })
    };
    match outcome {
        PlannerOutcome::Failure { reason } => Ok(Realized::failed(reason.clone())),
        PlannerOutcome::Done => Ok(hover()),
        PlannerOutcome::Plan(p) if p.done => Ok(hover()),
        PlannerOutcome::Search { direction } => {
            let mut prim = ControlPrimitives {
                delta_yaw: 0.0,
                delta_pitch: 0.0,
                delta_throttle: 0.0,
            };
            match direction {
                SearchDirection::Left => prim.delta_yaw = -cfg.search_yaw,
                SearchDirection::Right => prim.delta_yaw = cfg.search_yaw,
                SearchDirection::Up => prim.delta_throttle = cfg.search_climb,
                SearchDirection::Down => prim.delta_throttle = -cfg.search_climb,
            }
            let schedule =
                control::schedule(&prim, &cfg.speeds, &cfg.deadband).map_err(pipeline)?;
            Ok(Realized::schedule_only(schedule))
        }
        PlannerOutcome::Plan(p) => {
            let cam = &cfg.camera;
            let (waypoint, avoid_adjusted) = if cfg.avoid.enabled {
                let r = avoid_adjust(
                    p.waypoint,
                    &p.obstacles,
                    cfg.avoid.margin_px,
                    cam.width() as f64,
                );
                (r.waypoint, r.adjusted)
            } else {
                (p.waypoint, false)
            };
            let n = match geometry::normalize_pixel(cam, waypoint) {
                Ok(n) => n,
                Err(e) => {
                    return Ok(Realized::failed(FailureReason::MalformedResponse(
                        e.to_string(),
                    )))
                }
            };
            let d_adj = match scale_depth(&cfg.scaler, p.depth) {
                Ok(d) => d,
                Err(e) => {
                    return Ok(Realized::failed(FailureReason::MalformedResponse(
                        e.to_string(),
                    )))
                }
            };
            let disp = geometry::unproject(cam, n, d_adj)
                .map_err(|e| HarnessError::Pipeline(e.to_string()))?;
            let prim = control::decompose(disp).map_err(pipeline)?;
            let schedule =
                control::schedule(&prim, &cfg.speeds, &cfg.deadband).map_err(pipeline)?;
            Ok(Realized {
                schedule,
                waypoint: Some(waypoint),
                avoid_adjusted,
                d_adj: Some(d_adj),
                displacement: Some(disp),
                failure: None,
            })
        }
    }
}

/// Builds the configured planner. Scripted planners need their outcomes.
pub fn make_planner(
    cfg: &EpisodeConfig,
    script: Option<Vec<PlannerOutcome>>,
) -> Result<Box<dyn Planner>, HarnessError> {
    Ok(match cfg.planner {
        PlannerKind::Oracle => Box::new(OraclePlanner::new(cfg.oracle)),
        PlannerKind::Vlm => Box::new(VlmPlanner::new(
            cfg.vlm.clone(),
            cfg.scaler.levels,
            cfg.avoid.enabled,
        )),
        PlannerKind::Scripted => match script {
            Some(s) => Box::new(ScriptedPlanner::new(s)),
            None => {
                return Err(HarnessError::Config(
                    "scripted planner needs a script".into(),
                ))
            }
        },
    })
}

/// Start pose with the seeded per-repetition perturbation applied.
pub fn initial_state(cfg: &EpisodeConfig, scenario: &Scenario, rep: u32) -> UavState {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(rep as u64));
    let mut draw = |half: f64| {
        if half > 0.0 {
            rng.gen_range(-half..=half)
        } else {
            0.0
        }
    };
    let dx = draw(cfg.jitter.position);
    let dy = draw(cfg.jitter.position);
    let dyaw = draw(cfg.jitter.yaw);
    let p = scenario.start.position;
    UavState::new(
        Vec3::new(p.x + dx, p.y + dy, p.z),
        wrap_angle(scenario.start.yaw_deg.to_radians() + dyaw),
    )
}

/// Runs the planner on its own thread, one request in flight at a time.
struct Worker {
    tx: Option<mpsc::Sender<PlanRequest>>,
    rx: mpsc::Receiver<PlannerOutcome>,
    handle: Option<JoinHandle<()>>,
}

impl Worker {
    fn spawn(mut planner: Box<dyn Planner>) -> Result<Self, HarnessError> {
        let (req_tx, req_rx) = mpsc::channel::<PlanRequest>();
        let (out_tx, out_rx) = mpsc::channel();
        let handle = std::thread::Builder::new()
            .name(format!("planner-{}", planner.name()))
            .spawn(move || {
                while let Ok(req) = req_rx.recv() {
                    if out_tx.send(planner.plan(&req)).is_err() {
                        break;
                    }
                }
            })
            .map_err(|e| HarnessError::Pipeline(format!("cannot start planner thread: {e}")))?;
        Ok(Self {
            tx: Some(req_tx),
            rx: out_rx,
            handle: Some(handle),
        })
    }

    fn submit(&self, req: PlanRequest) {
        // a dead worker surfaces on recv
        if let Some(tx) = &self.tx {
            let _ = tx.send(req);
        }
    }

    fn recv(&self) -> PlannerOutcome {
        self.rx
            .recv()
            .unwrap_or_else(|_| PlannerOutcome::failure(FailureReason::WorkerGone))
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        self.tx.take();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

struct Pending {
    id: u32,
    requested_tick: u64,
    ready_tick: u64,
}

/// Runs one episode from the jittered start pose for `rep`.
pub fn run_episode(
    cfg: &EpisodeConfig,
    scenario: &Scenario,
    planner: Box<dyn Planner>,
    rep: u32,
) -> Result<TrajectoryRecord, HarnessError> {
    let cfg = cfg.with_overrides(&scenario.overrides);
    let start = initial_state(&cfg, scenario, rep);
    let mut rec =
        TrajectoryRecord::new(RecordHeader::new(cfg.clone(), scenario.clone(), rep, start));
    run_episode_from(&cfg, scenario, planner, &mut rec)?;
    Ok(rec)
}

/// Runs one episode from `rec.header.initial_state`, appending rows to `rec`
/// as they happen so a partial log survives a panic.
pub fn run_episode_from(
    cfg: &EpisodeConfig,
    scenario: &Scenario,
    planner: Box<dyn Planner>,
    rec: &mut TrajectoryRecord,
) -> Result<Metrics, HarnessError> {
    cfg.validate()?;
    scenario.validate()?;
    let dt = cfg.dt;
    let dynamic = scenario.scene.has_dynamic_targets();
    let latency_ticks = ticks_for(cfg.planner_latency, dt);
    let want_frame = cfg.planner == PlannerKind::Vlm;

    let mut scene = scenario.scene.clone();
    let mut state = rec.header.initial_state;
    let mut judge = Adjudicator::new(scenario.task.clone(), cfg.uav_radius, dt);
    let mut exec = Executor::new(dt);
    let worker = Worker::spawn(planner)?;

    let mut tick: u64 = 0;
    let mut replans: u32 = 0;
    let mut plan_id: Option<u32> = None;
    let mut pending: Option<Pending> = None;
    let mut first_motion: Option<u64> = None;
    let mut path_length = 0.0;

    let targets_of = |scene: &simworld::Scene| {
        if dynamic {
            scene.targets.iter().map(|t| t.position).collect()
        } else {
            Vec::new()
        }
    };

    let mut obs = observe(&scene, &state, &cfg.camera, 0.0);
    let mut status = judge.check(&scene, &state, &obs, 0);
    rec.rows.push(RecordRow::Tick(TickRow {
        tick: 0,
        t: 0.0,
        state,
        rc: RcCommand::STOP,
        active_s: 0.0,
        plan_id: None,
        targets: targets_of(&scene),
    }));

    let termination = loop {
        if let Some(term) = status_termination(&status) {
            break term;
        }

        if pending.as_ref().is_some_and(|p| tick >= p.ready_tick) {
            let p = pending.take().expect("checked above");
            let outcome = worker.recv();
            let realized = realize(&outcome, cfg)?;
            plan_id = Some(p.id);
            rec.rows.push(RecordRow::Plan(PlanRow {
                id: p.id,
                requested_tick: p.requested_tick,
                tick,
                t: tick as f64 * dt,
                state,
                digest: schedule_digest(&realized.schedule),
                outcome,
                waypoint: realized.waypoint,
                avoid_adjusted: realized.avoid_adjusted,
                d_adj: realized.d_adj,
                displacement: realized.displacement,
                schedule: realized.schedule.clone(),
            }));
            if let Some(reason) = realized.failure {
                break Termination::PlannerFailure { reason };
            }
            exec.load(&realized.schedule);
        }

        if pending.is_none() {
            let due = match cfg.interleave {
                Interleave::Sequential => exec.is_idle(),
                Interleave::Pipelined => exec.remaining_ticks() <= latency_ticks,
            };
            if due {
                if replans >= cfg.max_replans {
                    break Termination::ReplanLimit;
                }
                replans += 1;
                let Some(goal) = judge.active_goal().map(str::to_owned) else {
                    return Err(HarnessError::Pipeline(
                        "no active goal while running".into(),
                    ));
                };
                let mut observation = obs.clone();
                if want_frame {
                    observation.frame = Some(render_frame(&observation));
                }
                worker.submit(PlanRequest {
                    instruction: scenario.task.instruction.clone(),
                    observation,
                    truth: Some(GroundTruth {
                        scene: scene.clone(),
                        state,
                        goal,
                        category: scenario.task.category,
                        success_threshold: scenario.task.success_threshold,
                    }),
                });
                pending = Some(Pending {
                    id: replans,
                    requested_tick: tick,
                    ready_tick: tick + latency_ticks,
                });
                if latency_ticks == 0 {
                    continue;
                }
            }
        }

        let (rc, active) = exec.next_tick();
        if first_motion.is_none() && !rc.is_stop() && active > 0.0 {
            first_motion = Some(tick);
        }
        advance_targets(&mut scene, dt);
        let next = simworld::step(&state, &rc, &cfg.speeds, active);
        path_length += next.position.dist(&state.position);
        state = next;
        tick += 1;
        let t = tick as f64 * dt;
        obs = observe(&scene, &state, &cfg.camera, t);
        status = judge.check(&scene, &state, &obs, tick);
        rec.rows.push(RecordRow::Tick(TickRow {
            tick,
            t,
            state,
            rc,
            active_s: active,
            plan_id,
            targets: targets_of(&scene),
        }));
    };

    let metrics = Metrics {
        success: termination == Termination::Success,
        completion_time: first_motion.map_or(0.0, |k| (tick - k) as f64 * dt),
        path_length,
        replans,
        ticks: tick,
        termination,
    };
    rec.end = Some(metrics.clone());
    Ok(metrics)
}

fn status_termination(s: &Status) -> Option<Termination> {
    match s {
        Status::Running => None,
        Status::Success => Some(Termination::Success),
        Status::Timeout => Some(Termination::Timeout),
        Status::Collision { entity } => Some(Termination::Collision {
            entity: entity.clone(),
        }),
    }
}
