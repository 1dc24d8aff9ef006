use std::collections::VecDeque;

use super::SimSnapshot;
use crate::error::SimError;

/// The most recent snapshots of a run, oldest first.
#[derive(Clone, Debug)]
pub struct SnapshotRing {
    cap: usize,
    buf: VecDeque<SimSnapshot>,
}

impl SnapshotRing {
    /// 60 s at 20 Hz.
    pub const DEFAULT_CAPACITY: usize = 1200;

    pub fn new(cap: usize) -> Self {
        assert!(cap > 0, "ring capacity must be positive");
        SnapshotRing {
            cap,
            buf: VecDeque::with_capacity(cap),
        }
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn push(&mut self, s: SimSnapshot) {
        if self.buf.len() == self.cap {
            self.buf.pop_front();
        }
        self.buf.push_back(s);
    }

    pub fn newest(&self) -> Option<&SimSnapshot> {
        self.buf.back()
    }

    pub fn oldest_tick(&self) -> Option<u64> {
        self.buf.front().map(|s| s.tick)
    }

    /// The snapshot `n` ticks before the newest.
    pub fn back(&self, n: u64) -> Result<&SimSnapshot, SimError> {
        let available = self.buf.len().saturating_sub(1) as u64;
        if n > available {
            return Err(SimError::RewindTooFar {
                requested: n,
                available,
            });
        }
        Ok(&self.buf[self.buf.len() - 1 - n as usize])
    }

    /// Drops every snapshot newer than `tick`.
    pub fn truncate_after(&mut self, tick: u64) {
        while self.buf.back().is_some_and(|s| s.tick > tick) {
            self.buf.pop_back();
        }
    }
}
