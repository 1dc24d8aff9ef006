//! `scenario.json`: map, robot task, humans, and simulation constants.
//!
//! ```json
//! {"v": 1, "name": "hallway", "seed": 0, "dt": 0.05, "max_ticks": 1200,
//!  "map": {"walls": [[-2, -1.8, 26, -1.8]],
//!          "door": {"segment": [12, -1.8, 12, 1.8], "open": false}},
//!  "robot": {"start": [0, 0], "goal": [22, 0], "waypoints": []},
//!  "humans": [{"start": [8, 0.5], "goal": [-8, 0.5], "speed": 1.0}],
//!  "spawn": [{"count": [0, 3], "x": [3, 20], "y": [-1.2, 1.2],
//!             "speed": [0.5, 0.9], "goal_x": 32}]}
//! ```
//!
//! `spawn` groups add humans drawn from the seed, so one file describes a
//! family of trials.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;

pub type Vec2 = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Door {
    pub segment: [f64; 4],
    #[serde(default)]
    pub open: bool,
    /// Seconds between the first agent waiting nearby and the door opening.
    #[serde(default = "default_open_delay")]
    pub open_delay_s: f64,
    #[serde(default = "default_trigger_radius")]
    pub trigger_radius: f64,
}

fn default_open_delay() -> f64 {
    5.0
}

fn default_trigger_radius() -> f64 {
    1.5
}

impl Door {
    pub fn a(&self) -> Vec2 {
        [self.segment[0], self.segment[1]]
    }

    pub fn b(&self) -> Vec2 {
        [self.segment[2], self.segment[3]]
    }

    pub fn midpoint(&self) -> Vec2 {
        [
            (self.segment[0] + self.segment[2]) / 2.0,
            (self.segment[1] + self.segment[3]) / 2.0,
        ]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Map {
    #[serde(default)]
    pub walls: Vec<[f64; 4]>,
    #[serde(default)]
    pub door: Option<Door>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotTask {
    pub start: Vec2,
    /// Initial heading in radians; defaults to facing the first waypoint.
    #[serde(default)]
    pub heading: Option<f64>,
    pub goal: Vec2,
    #[serde(default)]
    pub waypoints: Vec<Vec2>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanSpec {
    pub start: Vec2,
    pub goal: Vec2,
    /// Desired walking speed, m/s.
    pub speed: f64,
}

/// Humans sampled uniformly in a box, walking along x to `goal_x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnGroup {
    pub count: [usize; 2],
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub speed: [f64; 2],
    pub goal_x: f64,
}

/// Physical and behavioural constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub v_max: f64,
    pub a_max: f64,
    pub robot_radius: f64,
    pub human_radius: f64,
    pub goal_radius: f64,
    pub waypoint_radius: f64,
    /// Social-force relaxation time, s.
    pub tau: f64,
    /// Repulsion strength A (m/s²) and range B (m).
    pub sfm_a: f64,
    pub sfm_b: f64,
    /// Humans farther than this do not contribute force or blame.
    pub metric_cutoff: f64,
    pub follow_gap: f64,
    pub pass_offset: f64,
    pub pass_speed_factor: f64,
    /// Amplitude of the uniform acceleration noise on humans, m/s².
    pub noise: f64,
    /// Below this speed an agent counts as waiting.
    pub wait_speed: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            v_max: 1.0,
            a_max: 1.0,
            robot_radius: 0.3,
            human_radius: 0.25,
            goal_radius: 0.3,
            waypoint_radius: 0.5,
            tau: 0.5,
            sfm_a: 2.0,
            sfm_b: 0.3,
            metric_cutoff: 3.0,
            follow_gap: 1.0,
            pass_offset: 0.75,
            pass_speed_factor: 1.25,
            noise: 0.1,
            wait_speed: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub v: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_max_ticks")]
    pub max_ticks: u64,
    #[serde(default)]
    pub map: Map,
    pub robot: RobotTask,
    #[serde(default)]
    pub humans: Vec<HumanSpec>,
    #[serde(default)]
    pub spawn: Vec<SpawnGroup>,
    #[serde(default)]
    pub params: SimParams,
}

fn default_dt() -> f64 {
    0.05
}

fn default_max_ticks() -> u64 {
    1200
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Scenario(m.to_string()));
        if self.v != 1 {
            return bad("expected version 1");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        let mut nums: Vec<f64> = self.map.walls.iter().flatten().copied().collect();
        if let Some(d) = &self.map.door {
            nums.extend(d.segment);
            nums.extend([d.open_delay_s, d.trigger_radius]);
        }
        nums.extend(self.robot.start);
        nums.extend(self.robot.goal);
        nums.extend(self.robot.waypoints.iter().flatten());
        for h in &self.humans {
            nums.extend(h.start);
            nums.extend(h.goal);
            nums.push(h.speed);
        }
        for g in &self.spawn {
            nums.extend(g.x);
            nums.extend(g.y);
            nums.extend(g.speed);
            nums.push(g.goal_x);
            if g.count[0] > g.count[1] {
                return bad("spawn count range is inverted");
            }
        }
        if nums.iter().any(|x| !x.is_finite()) {
            return bad("geometry must be finite");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| SimError::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Scenario {
            seed,
            ..self.clone()
        }
    }

    /// The fixed humans plus those drawn from the spawn groups. Samples that
    /// would overlap another agent are redrawn a bounded number of times.
    pub fn humans(&self) -> Vec<HumanSpec> {
        let mut out = self.humans.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        // Tick noise uses streams counting up from zero; spawning takes the last.
        rng.set_stream(u64::MAX);
        let clear = 2.0 * self.params.human_radius + 0.3;
        for g in &self.spawn {
            let n = rng.gen_range(g.count[0]..=g.count[1]);
            for _ in 0..n {
                for _ in 0..50 {
                    let p = [rng.gen_range(g.x[0]..=g.x[1]), rng.gen_range(g.y[0]..=g.y[1])];
                    let speed = rng.gen_range(g.speed[0]..=g.speed[1]);
                    let near_robot = dist(p, self.robot.start) < 1.5;
                    if near_robot || out.iter().any(|h| dist(h.start, p) < clear) {
                        continue;
                    }
                    out.push(HumanSpec {
                        start: p,
                        goal: [g.goal_x, p[1]],
                        speed,
                    });
                    break;
                }
            }
        }
        out
    }
}

pub(crate) fn dist(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
