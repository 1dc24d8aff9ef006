//! Deterministic 2-D social navigation: social-force humans, the four robot
//! action primitives, a door that opens for waiting agents, and per-tick
//! force and blame metrics.

pub mod gen;
mod ring;
mod scenario;
mod suite;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::demo::{DemoSource, Demonstration};
use crate::eval::{eval_policy, Disc, Obstacles, Segment, WorldState, FREE_PATH_MAX};
use crate::lang::{Action, Policy, Value};

pub use ring::SnapshotRing;
pub use scenario::{Door, HumanSpec, Map, RobotTask, Scenario, SimParams, SpawnGroup, Vec2};
pub use suite::{metrics_csv, run_suite, summarize, summary_csv, SuiteRow, Summary};

use scenario::dist;

/// Position of an absent human in the robot frame.
pub const ABSENT: Vec2 = [1e3, 0.0];

fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn scale(a: Vec2, k: f64) -> Vec2 {
    [a[0] * k, a[1] * k]
}

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

fn unit(a: Vec2) -> Vec2 {
    let n = norm(a);
    if n > 0.0 {
        scale(a, 1.0 / n)
    } else {
        [0.0, 0.0]
    }
}

fn rotate(a: Vec2, th: f64) -> Vec2 {
    let (s, c) = th.sin_cos();
    [c * a[0] - s * a[1], s * a[0] + c * a[1]]
}

fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let e = sub(b, a);
    let len2 = dot(e, e);
    if len2 == 0.0 {
        return a;
    }
    let t = (dot(sub(p, a), e) / len2).clamp(0.0, 1.0);
    add(a, scale(e, t))
}

/// Moves `v` toward `target` by at most `dv_max`.
fn approach(v: Vec2, target: Vec2, dv_max: f64) -> Vec2 {
    let d = sub(target, v);
    let n = norm(d);
    if n <= dv_max {
        target
    } else {
        add(v, scale(d, dv_max / n))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pos: Vec2,
    pub vel: Vec2,
    pub heading: f64,
    /// Index of the current local goal in `waypoints ++ [goal]`.
    pub waypoint: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HumanState {
    pub pos: Vec2,
    pub vel: Vec2,
    pub goal: Vec2,
    pub speed: f64,
    /// False once the human reached its goal and left the scene.
    pub active: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoorState {
    pub open: bool,
    /// Tick at which an agent first waited near the closed door.
    pub wait_started: Option<u64>,
}

/// Everything needed to continue a run. Accumulated metrics travel with the
/// snapshot so a rewound run resumes with consistent totals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSnapshot {
    pub tick: u64,
    pub robot: RobotState,
    pub humans: Vec<HumanState>,
    pub door: Option<DoorState>,
    pub action: Action,
    pub collided: bool,
    pub force: f64,
    pub blame: f64,
}

impl SimSnapshot {
    pub fn initial(sc: &Scenario) -> Self {
        let first = sc.robot.waypoints.first().copied().unwrap_or(sc.robot.goal);
        let d = sub(first, sc.robot.start);
        SimSnapshot {
            tick: 0,
            robot: RobotState {
                pos: sc.robot.start,
                vel: [0.0, 0.0],
                heading: sc.robot.heading.unwrap_or_else(|| d[1].atan2(d[0])),
                waypoint: 0,
            },
            humans: sc
                .humans()
                .into_iter()
                .map(|h| HumanState {
                    pos: h.start,
                    vel: [0.0, 0.0],
                    goal: h.goal,
                    speed: h.speed,
                    active: true,
                })
                .collect(),
            door: sc.map.door.as_ref().map(|d| DoorState {
                open: d.open,
                wait_started: None,
            }),
            action: Action::new("GoAlone"),
            collided: false,
            force: 0.0,
            blame: 0.0,
        }
    }

    pub fn local_goal(&self, sc: &Scenario) -> Vec2 {
        sc.robot
            .waypoints
            .get(self.robot.waypoint)
            .copied()
            .unwrap_or(sc.robot.goal)
    }

    pub fn at_goal(&self, sc: &Scenario) -> bool {
        dist(self.robot.pos, sc.robot.goal) <= sc.params.goal_radius
    }

    pub fn door_closed(&self) -> bool {
        self.door.as_ref().is_some_and(|d| !d.open)
    }

    /// Converts a robot-frame point back to the world frame.
    pub fn to_world(&self, local: Vec2) -> Vec2 {
        add(rotate(local, self.robot.heading), self.robot.pos)
    }

    /// Converts a world-frame point to the robot frame.
    pub fn to_local(&self, world: Vec2) -> Vec2 {
        rotate(sub(world, self.robot.pos), -self.robot.heading)
    }
}

/// Walls plus the door while it is closed.
fn blocking_segments(sc: &Scenario, snap: &SimSnapshot) -> Vec<(Vec2, Vec2, bool)> {
    let mut out: Vec<_> = sc
        .map
        .walls
        .iter()
        .map(|w| ([w[0], w[1]], [w[2], w[3]], false))
        .collect();
    if let (Some(d), true) = (&sc.map.door, snap.door_closed()) {
        out.push((d.a(), d.b(), true));
    }
    out
}

/// Nearest active human in front of the robot (world-frame index).
fn front_human(snap: &SimSnapshot) -> Option<usize> {
    ranked_front(snap).first().map(|&(i, _)| i)
}

/// Front humans by distance, ties broken by smaller absolute bearing.
fn ranked_front(snap: &SimSnapshot) -> Vec<(usize, Vec2)> {
    let mut v: Vec<(usize, Vec2)> = snap
        .humans
        .iter()
        .enumerate()
        .filter(|(_, h)| h.active)
        .map(|(i, h)| (i, snap.to_local(h.pos)))
        .filter(|(_, p)| p[0] > 0.0)
        .collect();
    v.sort_by(|(ia, a), (ib, b)| {
        norm(*a)
            .total_cmp(&norm(*b))
            .then(a[1].atan2(a[0]).abs().total_cmp(&b[1].atan2(b[0]).abs()))
            .then(ia.cmp(ib))
    });
    v
}

/// The robot's view of the world: goal, local goal, door, the nearest front
/// human and the nearest front humans to its left and right, its own
/// velocity, and the obstacles within ray-cast range.
pub fn extract_world(snap: &SimSnapshot, sc: &Scenario) -> WorldState {
    let local = |p: Vec2| snap.to_local(p);
    let vel = |v: Vec2| rotate(v, -snap.robot.heading);
    let mut w = WorldState::new()
        .with("p_g", Value::Vector(local(sc.robot.goal)))
        .with("p_l", Value::Vector(local(snap.local_goal(sc))))
        .with("v_r", Value::Vector(vel(snap.robot.vel)));
    match &sc.map.door {
        Some(d) => {
            w.set("p_d", Value::Vector(local(d.midpoint())));
            w.set("s_d", Value::Scalar(if snap.door_closed() { 0.0 } else { 1.0 }));
        }
        None => {
            w.set("p_d", Value::Vector(ABSENT));
            w.set("s_d", Value::Scalar(1.0));
        }
    }
    let front = ranked_front(snap);
    let center = front.first();
    let bearing = |p: &Vec2| p[1].atan2(p[0]);
    let left = center.and_then(|(_, c)| front.iter().skip(1).find(|(_, p)| bearing(p) > bearing(c)));
    let right = center.and_then(|(_, c)| front.iter().skip(1).find(|(_, p)| bearing(p) < bearing(c)));
    for (slot, (pn, vn)) in [center, left, right]
        .into_iter()
        .zip([("p_h", "v_h"), ("p_hl", "v_hl"), ("p_hr", "v_hr")])
    {
        let (p, v) = match slot {
            Some(&(i, p)) => (p, vel(snap.humans[i].vel)),
            None => (ABSENT, [0.0, 0.0]),
        };
        w.set(pn, Value::Vector(p));
        w.set(vn, Value::Vector(v));
    }
    let mut obs = Obstacles::default();
    for (a, b, _) in blocking_segments(sc, snap) {
        if dist(closest_on_segment(snap.robot.pos, a, b), snap.robot.pos) < FREE_PATH_MAX {
            obs.segments.push(Segment {
                a: local(a),
                b: local(b),
            });
        }
    }
    for h in snap.humans.iter().filter(|h| h.active) {
        if dist(h.pos, snap.robot.pos) < FREE_PATH_MAX {
            obs.discs.push(Disc {
                center: local(h.pos),
                radius: sc.params.human_radius,
            });
        }
    }
    w.obstacles = obs;
    w
}

/// Desired robot velocity under each action primitive.
fn robot_command(snap: &SimSnapshot, action: &Action, sc: &Scenario) -> Vec2 {
    let p = &sc.params;
    let r = &snap.robot;
    let u = unit(sub(snap.local_goal(sc), r.pos));
    let cruise = scale(u, p.v_max);
    match action.as_str() {
        "Halt" => [0.0, 0.0],
        "Follow" => match front_human(snap) {
            None => cruise,
            Some(i) => {
                let h = &snap.humans[i];
                let gap = dist(h.pos, r.pos) - p.robot_radius - p.human_radius;
                let speed = (dot(h.vel, u) + (gap - p.follow_gap)).clamp(0.0, p.v_max);
                scale(u, speed)
            }
        },
        "Pass" => match front_human(snap) {
            None => cruise,
            Some(i) => {
                let h = &snap.humans[i];
                let n = [-u[1], u[0]];
                // Pass on the side away from the human.
                let side = if dot(sub(h.pos, r.pos), n) > 0.0 { -1.0 } else { 1.0 };
                let target = add(add(h.pos, scale(n, side * p.pass_offset)), u);
                scale(unit(sub(target, r.pos)), p.pass_speed_factor * p.v_max)
            }
        },
        // GoAlone, and any action without a primitive of its own.
        _ => cruise,
    }
}

/// Advances the simulation by one tick with the robot executing `action`.
/// The result depends only on the arguments; noise is drawn from a stream
/// keyed by the scenario seed and the tick.
pub fn step(snap: &SimSnapshot, action: &Action, sc: &Scenario) -> SimSnapshot {
    let p = &sc.params;
    let dt = sc.dt;
    let mut next = snap.clone();
    next.tick = snap.tick + 1;
    next.action = action.clone();
    let segments = blocking_segments(sc, snap);

    // Humans: goal attraction, repulsion from agents and walls, noise.
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    rng.set_stream(snap.tick);
    let rep = |d: f64, r: f64| p.sfm_a * ((r - d) / p.sfm_b).exp();
    for (i, h) in snap.humans.iter().enumerate() {
        let noise = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        if !h.active {
            continue;
        }
        let desired = scale(unit(sub(h.goal, h.pos)), h.speed);
        let mut f = scale(sub(desired, h.vel), 1.0 / p.tau);
        let others = snap
            .humans
            .iter()
            .enumerate()
            .filter(|(j, o)| *j != i && o.active)
            .map(|(_, o)| (o.pos, 2.0 * p.human_radius))
            .chain([(snap.robot.pos, p.human_radius + p.robot_radius)]);
        for (q, r) in others {
            let d = dist(h.pos, q);
            if d < 5.0 && d > 0.0 {
                f = add(f, scale(sub(h.pos, q), rep(d, r) / d));
            }
        }
        for (a, b, _) in &segments {
            let q = closest_on_segment(h.pos, *a, *b);
            let d = dist(h.pos, q);
            if d < 2.0 && d > 0.0 {
                f = add(f, scale(sub(h.pos, q), rep(d, p.human_radius) / d));
            }
        }
        f = add(f, scale(noise, p.noise));
        let mut v = add(h.vel, scale(f, dt));
        let cap = 1.3 * h.speed;
        if norm(v) > cap {
            v = scale(unit(v), cap);
        }
        let nh = &mut next.humans[i];
        nh.vel = v;
        nh.pos = add(h.pos, scale(v, dt));
        if dist(nh.pos, h.goal) < p.goal_radius {
            nh.active = false;
            nh.vel = [0.0, 0.0];
        }
    }

    // Robot: the primitive's command under an acceleration limit; moves
    // into walls are cancelled per axis, and touching a closed door is a
    // collision.
    let cmd = robot_command(snap, action, sc);
    let mut v = approach(snap.robot.vel, cmd, p.a_max * dt);
    let pos = snap.robot.pos;
    let blocked = |q: Vec2| {
        segments
            .iter()
            .filter(|(a, b, _)| dist(closest_on_segment(q, *a, *b), q) < p.robot_radius)
            .map(|&(_, _, door)| door)
            .reduce(|x, y| x || y)
    };
    let mut new_pos = add(pos, scale(v, dt));
    if let Some(door) = blocked(new_pos) {
        next.collided |= door;
        let slide_x = [new_pos[0], pos[1]];
        let slide_y = [pos[0], new_pos[1]];
        if blocked(slide_x).is_none() {
            new_pos = slide_x;
            v[1] = 0.0;
        } else if blocked(slide_y).is_none() {
            new_pos = slide_y;
            v[0] = 0.0;
        } else {
            new_pos = pos;
            v = [0.0, 0.0];
        }
    }
    let r = &mut next.robot;
    r.pos = new_pos;
    r.vel = v;
    if norm(v) > 1e-3 {
        r.heading = v[1].atan2(v[0]);
    }
    if r.waypoint < sc.robot.waypoints.len()
        && dist(r.pos, sc.robot.waypoints[r.waypoint]) < p.waypoint_radius
    {
        r.waypoint += 1;
    }

    // Door: opens a fixed delay after an agent first waits near it.
    if let (Some(d), Some(ds)) = (&sc.map.door, next.door.as_mut()) {
        if !ds.open {
            let near = |q: Vec2, v: Vec2| {
                norm(v) < p.wait_speed && dist(closest_on_segment(q, d.a(), d.b()), q) <= d.trigger_radius
            };
            let waiting = near(next.robot.pos, next.robot.vel)
                || next.humans.iter().any(|h| h.active && near(h.pos, h.vel));
            if ds.wait_started.is_none() && waiting {
                ds.wait_started = Some(next.tick);
            }
            if let Some(t0) = ds.wait_started {
                if (next.tick - t0) as f64 * dt >= d.open_delay_s - 1e-9 {
                    ds.open = true;
                }
            }
        }
    }

    // Metrics of the new state.
    let (force, blame) = tick_metrics(&next, sc);
    next.force += force * dt;
    next.blame += blame * dt;
    next
}

/// Instantaneous force and blame: repulsion magnitude of every human within
/// the cutoff, and its share along the robot's direction of motion.
pub fn tick_metrics(snap: &SimSnapshot, sc: &Scenario) -> (f64, f64) {
    let p = &sc.params;
    let heading = unit(snap.robot.vel);
    let mut force = 0.0;
    let mut blame = 0.0;
    for h in snap.humans.iter().filter(|h| h.active) {
        let d = dist(h.pos, snap.robot.pos);
        if d > p.metric_cutoff {
            continue;
        }
        let f = p.sfm_a * ((p.robot_radius + p.human_radius - d) / p.sfm_b).exp();
        force += f;
        blame += f * dot(heading, unit(sub(h.pos, snap.robot.pos))).max(0.0);
    }
    (force, blame)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub force: f64,
    pub blame: f64,
    /// Seconds to reach the goal; `None` when the trial did not finish.
    pub time_to_goal: Option<f64>,
    pub success: bool,
    pub collided: bool,
    pub ticks: u64,
}

#[derive(Clone, Debug)]
pub struct Trial {
    pub metrics: TrialMetrics,
    /// `⟨prev, w, next⟩` for every tick, when requested.
    pub trace: Vec<Demonstration>,
    pub last: SimSnapshot,
}

/// Runs `policy` from the scenario's initial state until the robot reaches
/// the goal, touches a closed door, or runs out of ticks.
pub fn run_trial(sc: &Scenario, policy: &Policy, record: bool) -> Trial {
    let mut snap = SimSnapshot::initial(sc);
    let mut trace = Vec::new();
    while snap.tick < sc.max_ticks && !snap.at_goal(sc) && !snap.collided {
        let w = Arc::new(extract_world(&snap, sc));
        let next = eval_policy(policy, &snap.action, &w);
        if record {
            trace.push(Demonstration {
                prev: snap.action.clone(),
                state: w,
                next: next.clone(),
                tick: snap.tick,
                source: DemoSource::Simulated,
            });
        }
        snap = step(&snap, &next, sc);
    }
    let success = snap.at_goal(sc) && !snap.collided;
    Trial {
        metrics: TrialMetrics {
            force: snap.force,
            blame: snap.blame,
            time_to_goal: success.then_some(snap.tick as f64 * sc.dt),
            success,
            collided: snap.collided,
            ticks: snap.tick,
        },
        trace,
        last: snap,
    }
}
