use std::collections::BTreeMap;

use crate::lang::Value;

/// Upper bound returned by `freePathLength` when nothing is hit.
pub const FREE_PATH_MAX: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disc {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Geometry visible to `freePathLength`, in the robot frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Obstacles {
    pub segments: Vec<Segment>,
    pub discs: Vec<Disc>,
}

impl Obstacles {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty() && self.discs.is_empty()
    }

    /// Distance from the origin along `dir` to the first obstacle, capped at
    /// [`FREE_PATH_MAX`]. A zero direction has no free path.
    pub fn free_path_length(&self, dir: [f64; 2]) -> f64 {
        let n = dir[0].hypot(dir[1]);
        if n == 0.0 || !n.is_finite() {
            return 0.0;
        }
        let d = [dir[0] / n, dir[1] / n];
        let mut best = FREE_PATH_MAX;
        for s in &self.segments {
            if let Some(t) = ray_segment(d, s) {
                best = best.min(t);
            }
        }
        for c in &self.discs {
            if let Some(t) = ray_disc(d, c) {
                best = best.min(t);
            }
        }
        best
    }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn ray_segment(d: [f64; 2], s: &Segment) -> Option<f64> {
    let e = [s.b[0] - s.a[0], s.b[1] - s.a[1]];
    let denom = cross(d, e);
    if denom.abs() < 1e-12 {
        return None;
    }
    // origin + t d = a + u e
    let t = cross(s.a, e) / denom;
    let u = cross(s.a, d) / denom;
    (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
}

fn ray_disc(d: [f64; 2], c: &Disc) -> Option<f64> {
    let along = d[0] * c.center[0] + d[1] * c.center[1];
    let dist2 = c.center[0] * c.center[0] + c.center[1] * c.center[1];
    if dist2 <= c.radius * c.radius {
        return Some(0.0);
    }
    let perp2 = dist2 - along * along;
    let r2 = c.radius * c.radius;
    if along < 0.0 || perp2 > r2 {
        return None;
    }
    Some(along - (r2 - perp2).sqrt())
}

/// A snapshot of the world in the robot's reference frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WorldState {
    pub values: BTreeMap<String, Value>,
    pub obstacles: Obstacles,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: Value) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: Value) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<Value> {
        self.values.get(name).copied()
    }

    pub fn vector(&self, name: &str) -> Option<[f64; 2]> {
        self.get(name).and_then(Value::as_vector)
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(Value::as_scalar)
    }
}
