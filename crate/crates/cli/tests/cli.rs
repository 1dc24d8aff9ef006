//! Drives the `idips` binary end to end.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use serde_json::{json, Value as Json};
use tungstenite::Message;

fn idips(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idips")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = idips(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// A scratch dir with a hallway scenario, the nice demonstrator and a trace of it.
fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["export", "hallway", "-o", "hallway.json"]);
    ok(d, &["export", "door", "-o", "door.json"]);
    ok(d, &["export", "nice", "-o", "nice.asp"]);
    ok(d, &["sim", "--scenario", "hallway.json", "--policy", "nice.asp", "--trials", "2", "--seed", "1000", "--trace", "demos.json"]);
    dir
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn usage_errors_exit_2_and_domain_errors_exit_1() {
    let dir = fixture();
    let d = dir.path();
    assert_eq!(idips(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(idips(d, &["eval", "--policy", "nice.asp"]).status.code(), Some(2));
    assert_eq!(idips(d, &["eval", "--policy", "missing.asp", "--demos", "demos.json"]).status.code(), Some(1));
    std::fs::write(d.join("bad.asp"), "if norm(p_h) < t [0,0,0] = 1.0: return Halt\n").unwrap();
    let out = idips(d, &["eval", "--policy", "bad.asp", "--demos", "demos.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert_eq!(idips(d, &["export", "nowhere", "-o", "x"]).status.code(), Some(1));
}

#[test]
fn a_demonstrator_explains_its_own_trace() {
    let dir = fixture();
    let out = ok(dir.path(), &["eval", "--policy", "nice.asp", "--demos", "demos.json"]);
    assert!(out.contains("agreement 100.0%"), "{out}");
    assert!(out.contains("lowest predicate score 100.0%"), "{out}");
}

#[test]
fn synthesized_policy_evaluates_cleanly() {
    let dir = fixture();
    let d = dir.path();
    ok(d, &["synth", "--demos", "demos.json", "-o", "learned.asp"]);
    let out = ok(d, &["eval", "--policy", "learned.asp", "--demos", "demos.json"]);
    assert!(out.contains("agreement 100.0%"), "{out}");
    // An impossible bar is reported through the exit code, after writing the policy.
    std::fs::remove_file(d.join("learned.asp")).unwrap();
    let strict = idips(d, &["synth", "--demos", "demos.json", "--min-score", "1.5", "-o", "learned.asp"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn repair_writes_a_valid_report() {
    let dir = fixture();
    let d = dir.path();
    std::fs::write(
        d.join("halt_only.asp"),
        "if start == GoAlone && norm(p_h) < t0 [1,0,0] = 0.5: return Halt\n",
    )
    .unwrap();
    let out = ok(d, &["repair", "--policy", "halt_only.asp", "--demos", "demos.json", "-o", "fixed.asp", "--report", "report.json"]);
    assert!(!out.trim().is_empty());
    let report: Json = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    let schema: Json =
        serde_json::from_str(&std::fs::read_to_string(root().join("schemas/report.schema.json")).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    let errs: Vec<String> = v.iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errs.is_empty(), "{errs:?}");
    let out = ok(d, &["eval", "--policy", "fixed.asp", "--demos", "demos.json"]);
    assert!(out.contains("agreement 100.0%"), "{out}");
}

#[test]
fn sim_metrics_are_reproducible() {
    let dir = fixture();
    let d = dir.path();
    let args = ["sim", "--scenario", "hallway.json", "--policy", "nice.asp", "--trials", "3", "--metrics"];
    let a = ok(d, &[&args[..], &["a.csv"]].concat());
    let b = ok(d, &[&args[..], &["b.csv"]].concat());
    assert_eq!(a, b);
    assert_eq!(std::fs::read(d.join("a.csv")).unwrap(), std::fs::read(d.join("b.csv")).unwrap());
}

struct Server(Child, u16);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn server(dir: &Path, extra: &[&str]) -> Server {
    let mut child = Command::new(env!("CARGO_BIN_EXE_idips"))
        .current_dir(dir)
        .args(["serve", "--port", "0", "--scenario", "door.json", "--policy", "nice.asp"])
        .args(extra)
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let port = line.trim().rsplit(':').next().unwrap().parse().unwrap();
    Server(child, port)
}

type Ws = tungstenite::WebSocket<tungstenite::stream::MaybeTlsStream<TcpStream>>;

fn send(ws: &mut Ws, msg: Json) {
    ws.send(Message::text(msg.to_string())).unwrap();
}

/// Reads until a message of type `ty` arrives, skipping frames and acks.
fn expect(ws: &mut Ws, ty: &str) -> Json {
    for _ in 0..10_000 {
        let Message::Text(t) = ws.read().unwrap() else { continue };
        let m: Json = serde_json::from_str(&t).unwrap();
        assert_eq!(m["v"], 1);
        if m["type"] == ty {
            return m;
        }
        assert_ne!(m["type"], "error", "waiting for {ty}: {m}");
    }
    panic!("no {ty} message");
}

#[test]
fn headless_labelling_session() {
    let dir = fixture();
    let d = dir.path();
    let srv = server(d, &[]);
    let (mut ws, _) = tungstenite::connect(format!("ws://127.0.0.1:{}", srv.1)).unwrap();

    send(&mut ws, json!({"v": 1, "type": "pause"}));
    let f = expect(&mut ws, "frame");
    assert_eq!(f["mode"]["state"], "paused");
    send(&mut ws, json!({"v": 1, "type": "step", "n": 40}));
    let f = expect(&mut ws, "frame");
    assert_eq!(f["snapshot"]["tick"], 40);
    send(&mut ws, json!({"v": 1, "type": "rewind", "n": 10}));
    let f = expect(&mut ws, "frame");
    assert_eq!(f["mode"], json!({"state": "rewound", "tick": 30}));
    send(&mut ws, json!({"v": 1, "type": "label_transition", "action": "Halt"}));
    let m = expect(&mut ws, "demos");
    assert_eq!(m["count"], 1);
    assert_eq!(m["demos"][0]["next"], "Halt");
    send(&mut ws, json!({"v": 1, "type": "pause"}));
    send(&mut ws, json!({"v": 1, "type": "save_demos", "path": "labels.json"}));
    let m = expect(&mut ws, "saved");
    assert_eq!(m["count"], 1);
    assert!(d.join("labels.json").exists());
    send(&mut ws, json!({"v": 1, "type": "run_idips", "min_score": 0.95}));
    expect(&mut ws, "report");
    let p = expect(&mut ws, "policy");
    assert!(p["text"].as_str().unwrap().contains("return"));

    // Bad input gets a structured error and the connection stays usable.
    send(&mut ws, json!({"v": 2, "type": "pause"}));
    let e = expect(&mut ws, "error");
    assert_eq!(e["code"], "unsupported_version");
    send(&mut ws, json!({"v": 1, "type": "get_demos"}));
    expect(&mut ws, "demos");
    ws.close(None).unwrap();
}

#[test]
fn running_sessions_stream_frames_in_order() {
    let dir = fixture();
    let srv = server(dir.path(), &[]);
    let (mut ws, _) = tungstenite::connect(format!("ws://127.0.0.1:{}", srv.1)).unwrap();
    send(&mut ws, json!({"v": 1, "type": "step_rate", "hz": 500.0}));
    send(&mut ws, json!({"v": 1, "type": "resume"}));
    let ticks: Vec<u64> = (0..20).map(|_| expect(&mut ws, "frame")["snapshot"]["tick"].as_u64().unwrap()).collect();
    assert!(ticks.windows(2).all(|w| w[1] == w[0] + 1), "{ticks:?}");
}

fn http_get(port: u16, path: &str) -> String {
    let mut s = TcpStream::connect(("127.0.0.1", port)).unwrap();
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\n\r\n").unwrap();
    let mut out = String::new();
    s.read_to_string(&mut out).unwrap();
    out
}

#[test]
fn static_files_share_the_port() {
    let dir = fixture();
    let d = dir.path();
    std::fs::create_dir(d.join("ui")).unwrap();
    std::fs::write(d.join("ui/index.html"), "<p>hi</p>").unwrap();
    let srv = server(d, &["--static", "ui"]);
    let page = http_get(srv.1, "/");
    assert!(page.starts_with("HTTP/1.1 200") && page.ends_with("<p>hi</p>"), "{page}");
    assert!(http_get(srv.1, "/../nice.asp").starts_with("HTTP/1.1 404"));
    assert!(http_get(srv.1, "/missing.js").starts_with("HTTP/1.1 404"));
}
