//! The interactive demonstration loop, independent of any transport.
//!
//! A [`Session`] owns one simulation run, its snapshot history, the current
//! policy and the demonstrations labelled so far. Clients drive it with
//! [`ClientMsg`]s and receive [`ServerMsg`]s; a transport calls
//! [`Session::tick`] at the requested step rate while the session runs.

mod protocol;

use std::path::Path;
use std::sync::Arc;

use crate::demo::{demo_to_json, save_demos, DemoSource, Demonstration};
use crate::eval::trace_policy;
use crate::lang::{parse, Action, DomainDefinition, Policy};
use crate::sim::{extract_world, step, Scenario, SimSnapshot, SnapshotRing};
use crate::synth::{idips, SynthConfig};

pub use protocol::{decode, encode, ClientMsg, ErrorCode, Frame, Mode, ServerMsg};

pub struct Session {
    sc: Scenario,
    dom: DomainDefinition,
    cfg: SynthConfig,
    ring: SnapshotRing,
    policy: Policy,
    demos: Vec<Demonstration>,
    mode: Mode,
    step_rate: f64,
    /// Action to execute on the next step instead of the policy's choice.
    forced: Option<Action>,
}

impl Session {
    /// A paused session at tick 0.
    pub fn new(sc: Scenario, policy: Option<Policy>, dom: DomainDefinition) -> Self {
        Self::with_capacity(sc, policy, dom, SnapshotRing::DEFAULT_CAPACITY)
    }

    pub fn with_capacity(sc: Scenario, policy: Option<Policy>, dom: DomainDefinition, cap: usize) -> Self {
        let mut ring = SnapshotRing::new(cap);
        ring.push(SimSnapshot::initial(&sc));
        Session {
            step_rate: 1.0 / sc.dt,
            sc,
            dom,
            cfg: SynthConfig::default(),
            ring,
            policy: policy.unwrap_or_default(),
            demos: Vec::new(),
            mode: Mode::Paused,
            forced: None,
        }
    }

    pub fn with_config(mut self, cfg: SynthConfig) -> Self {
        self.cfg = cfg;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn demos(&self) -> &[Demonstration] {
        &self.demos
    }

    /// Ticks per second the transport should call [`Session::tick`] at.
    pub fn step_rate(&self) -> f64 {
        self.step_rate
    }

    /// The snapshot the client is looking at: the rewound one, else the newest.
    pub fn cursor(&self) -> &SimSnapshot {
        match self.mode {
            Mode::Rewound { tick } => self.at_tick(tick).expect("rewound tick is buffered"),
            _ => self.ring.newest().expect("ring is never empty"),
        }
    }

    fn at_tick(&self, tick: u64) -> Option<&SimSnapshot> {
        let newest = self.ring.newest()?.tick;
        self.ring.back(newest.checked_sub(tick)?).ok()
    }

    pub fn finished(&self) -> bool {
        let s = self.ring.newest().expect("ring is never empty");
        s.tick >= self.sc.max_ticks || s.collided || s.at_goal(&self.sc)
    }

    /// One simulation step if running; the new frame, if any.
    pub fn tick(&mut self) -> Option<ServerMsg> {
        if self.mode != Mode::Running || self.finished() {
            return None;
        }
        self.advance();
        Some(self.frame())
    }

    fn advance(&mut self) {
        let cur = self.ring.newest().expect("ring is never empty").clone();
        let action = match self.forced.take() {
            Some(a) => a,
            None => {
                let w = extract_world(&cur, &self.sc);
                crate::eval::eval_policy(&self.policy, &cur.action, &w)
            }
        };
        self.ring.push(step(&cur, &action, &self.sc));
    }

    /// Drops the future of a rewound run so the cursor becomes the newest state.
    fn commit_cursor(&mut self) {
        if let Mode::Rewound { tick } = self.mode {
            self.ring.truncate_after(tick);
            self.forced = None;
            self.mode = Mode::Paused;
        }
    }

    pub fn frame(&self) -> ServerMsg {
        let s = self.cursor();
        let w = extract_world(s, &self.sc);
        ServerMsg::Frame(Box::new(Frame {
            mode: self.mode,
            done: s.tick == self.ring.newest().map_or(0, |n| n.tick) && self.finished(),
            decision: trace_policy(&self.policy, &s.action, &w),
            snapshot: s.clone(),
        }))
    }

    fn demo_list(&self) -> ServerMsg {
        ServerMsg::Demos {
            count: self.demos.len(),
            demos: self.demos.iter().map(demo_to_json).collect(),
        }
    }

    fn action(&self, name: &str) -> Result<Action, ServerMsg> {
        if self.dom.actions.iter().any(|a| a.as_str() == name) {
            Ok(Action::new(name))
        } else {
            Err(ServerMsg::error(ErrorCode::UnknownAction, format!("unknown action `{name}`")))
        }
    }

    /// Handles one raw message; undecodable input yields an error response.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMsg> {
        match decode(text) {
            Ok(m) => self.handle(m),
            Err(e) => vec![e],
        }
    }

    pub fn handle(&mut self, msg: ClientMsg) -> Vec<ServerMsg> {
        match self.dispatch(msg) {
            Ok(out) => out,
            Err(e) => vec![e],
        }
    }

    fn dispatch(&mut self, msg: ClientMsg) -> Result<Vec<ServerMsg>, ServerMsg> {
        let ack = |m: &str| ServerMsg::Ack { request: m.to_string() };
        Ok(match msg {
            ClientMsg::Pause => {
                if self.mode == Mode::Running {
                    self.mode = Mode::Paused;
                }
                vec![ack("pause"), self.frame()]
            }
            ClientMsg::Resume => {
                self.commit_cursor();
                self.mode = Mode::Running;
                vec![ack("resume")]
            }
            ClientMsg::Rewind { n } => {
                if self.mode == Mode::Running {
                    return Err(ServerMsg::error(ErrorCode::NotPaused, "pause before rewinding"));
                }
                let tick = self
                    .ring
                    .back(n)
                    .map_err(|e| ServerMsg::error(ErrorCode::RewindTooFar, e.to_string()))?
                    .tick;
                self.mode = Mode::Rewound { tick };
                vec![ack("rewind"), self.frame()]
            }
            ClientMsg::Step { n } => {
                self.commit_cursor();
                let mut stepped = 0;
                while stepped < n && !self.finished() {
                    self.advance();
                    stepped += 1;
                }
                vec![ack("step"), self.frame()]
            }
            ClientMsg::SetAction { action } => {
                let a = self.action(&action)?;
                self.commit_cursor();
                self.forced = Some(a);
                vec![ack("set_action")]
            }
            ClientMsg::LabelTransition { action } => {
                let next = self.action(&action)?;
                let s = self.cursor().clone();
                self.demos.push(Demonstration {
                    prev: s.action.clone(),
                    state: Arc::new(extract_world(&s, &self.sc)),
                    next: next.clone(),
                    tick: s.tick,
                    source: DemoSource::UiLabel,
                });
                self.commit_cursor();
                self.forced = Some(next);
                self.mode = Mode::Running;
                vec![ack("label_transition"), self.demo_list()]
            }
            ClientMsg::SaveDemos { path } => {
                save_demos(&self.demos, Path::new(&path))
                    .map_err(|e| ServerMsg::error(ErrorCode::Io, e.to_string()))?;
                vec![ServerMsg::Saved {
                    path,
                    count: self.demos.len(),
                }]
            }
            ClientMsg::RunIdips { min_score } => {
                let cfg = SynthConfig {
                    min_score,
                    ..self.cfg.clone()
                };
                let (p, report) = idips(&self.demos, Some(&self.policy), &self.dom, &cfg)
                    .map_err(|e| ServerMsg::error(ErrorCode::Synthesis, e.to_string()))?;
                self.policy = p;
                vec![
                    ServerMsg::Report { report },
                    ServerMsg::Policy {
                        text: self.policy.to_string(),
                    },
                ]
            }
            ClientMsg::LoadPolicy { text } => {
                self.policy = parse(&text, &self.dom)
                    .map_err(|e| ServerMsg::error(ErrorCode::InvalidPolicy, e.to_string()))?;
                vec![ServerMsg::Policy {
                    text: self.policy.to_string(),
                }]
            }
            ClientMsg::StepRate { hz } => {
                if !(hz > 0.0 && hz <= 1000.0) {
                    return Err(ServerMsg::error(ErrorCode::BadRate, "step rate must be in (0, 1000] Hz"));
                }
                self.step_rate = hz;
                vec![ack("step_rate")]
            }
            ClientMsg::GetDemos => vec![self.demo_list()],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::gen;

    fn session() -> Session {
        let dom = DomainDefinition::social();
        let p = gen::demonstrator(&[gen::NICE_DEMONSTRATOR]);
        Session::new(gen::hallway().with_seed(3), Some(p), dom)
    }

    fn run(s: &mut Session, n: usize) {
        s.handle(ClientMsg::Resume);
        for _ in 0..n {
            s.tick();
        }
        s.handle(ClientMsg::Pause);
    }

    #[test]
    fn starts_paused_and_ticks_only_when_running() {
        let mut s = session();
        assert!(s.tick().is_none());
        run(&mut s, 5);
        assert_eq!(s.cursor().tick, 5);
    }

    #[test]
    fn label_at_a_rewound_tick_records_that_state() {
        let mut s = session();
        run(&mut s, 40);
        s.handle(ClientMsg::Rewind { n: 10 });
        let at = s.cursor().clone();
        assert_eq!(at.tick, 30);
        let out = s.handle(ClientMsg::LabelTransition { action: "Halt".into() });
        assert!(matches!(out[1], ServerMsg::Demos { count: 1, .. }));
        let d = &s.demos()[0];
        assert_eq!((d.prev.as_str(), d.next.as_str(), d.tick), ("GoAlone", "Halt", 30));
        assert_eq!(*d.state, extract_world(&at, &s.sc));
        // Resumed with the label: the future was dropped and Halt executed.
        assert_eq!(s.mode(), Mode::Running);
        s.tick();
        assert_eq!(s.cursor().tick, 31);
        assert_eq!(s.cursor().action.as_str(), "Halt");
    }

    #[test]
    fn resume_after_rewind_replays_identically() {
        let mut a = session();
        run(&mut a, 60);
        let reference = a.cursor().clone();
        a.handle(ClientMsg::Rewind { n: 25 });
        run(&mut a, 25);
        assert_eq!(*a.cursor(), reference);
    }

    #[test]
    fn rewind_is_bounded_by_the_buffer() {
        let dom = DomainDefinition::social();
        let mut s = Session::with_capacity(gen::hallway(), None, dom, 8);
        run(&mut s, 20);
        let out = s.handle(ClientMsg::Rewind { n: 8 });
        assert!(matches!(&out[0], ServerMsg::Error { code: ErrorCode::RewindTooFar, .. }));
        assert!(matches!(&s.handle(ClientMsg::Rewind { n: 7 })[0], ServerMsg::Ack { .. }));
    }

    #[test]
    fn rewinding_while_running_is_refused() {
        let mut s = session();
        s.handle(ClientMsg::Resume);
        let out = s.handle(ClientMsg::Rewind { n: 0 });
        assert!(matches!(&out[0], ServerMsg::Error { code: ErrorCode::NotPaused, .. }));
    }

    #[test]
    fn idips_without_demos_keeps_the_policy() {
        let mut s = session();
        let before = s.policy().clone();
        let out = s.handle(ClientMsg::RunIdips { min_score: 0.95 });
        match &out[0] {
            ServerMsg::Report { report } => assert_eq!(report.summary, "no faults"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(*s.policy(), before);
    }

    #[test]
    fn invalid_policy_text_is_forwarded() {
        let mut s = session();
        let bad = "if start == GoAlone && norm(p_h) < t [0,1,0] = 1.0: return Halt";
        let want = parse(bad, &DomainDefinition::social()).unwrap_err().to_string();
        match &s.handle(ClientMsg::LoadPolicy { text: bad.into() })[0] {
            ServerMsg::Error { code, message } => {
                assert_eq!(*code, ErrorCode::InvalidPolicy);
                assert_eq!(*message, want);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sessions_are_isolated() {
        let mut a = session();
        let b = session();
        run(&mut a, 10);
        a.handle(ClientMsg::LabelTransition { action: "Halt".into() });
        assert_eq!(b.cursor().tick, 0);
        assert!(b.demos().is_empty());
    }
}
