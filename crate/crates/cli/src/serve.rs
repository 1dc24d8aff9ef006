//! Websocket transport for [`Session`], one session per connection, plus
//! plain HTTP for the UI bundle on the same port.

use std::fs;
use std::io::{ErrorKind, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use anyhow::Result;
use idips::session::{encode, Session};
use idips::sim::Scenario;
use idips::{DomainDefinition, Policy};
use tungstenite::{Error as WsError, Message};

pub fn serve(
    port: u16,
    sc: Scenario,
    policy: Option<Policy>,
    dom: DomainDefinition,
    static_dir: Option<PathBuf>,
) -> Result<()> {
    let listener = TcpListener::bind(("127.0.0.1", port))?;
    // Scripts read the bound port from this line when started with port 0.
    println!("listening on {}", listener.local_addr()?);
    std::io::stdout().flush()?;
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                eprintln!("accept failed: {e}");
                continue;
            }
        };
        let session = Session::new(sc.clone(), policy.clone(), dom.clone());
        let dir = static_dir.clone();
        thread::spawn(move || {
            if let Err(e) = connection(stream, session, dir.as_deref()) {
                eprintln!("connection closed: {e}");
            }
        });
    }
    Ok(())
}

fn connection(stream: TcpStream, session: Session, static_dir: Option<&Path>) -> Result<()> {
    let mut head = [0u8; 4096];
    let n = stream.peek(&mut head)?;
    let text = String::from_utf8_lossy(&head[..n]).to_ascii_lowercase();
    if text.contains("upgrade: websocket") {
        websocket(stream, session)
    } else {
        http(stream, &text, static_dir)
    }
}

fn websocket(stream: TcpStream, mut session: Session) -> Result<()> {
    let mut ws = tungstenite::accept(stream).map_err(|e| anyhow::anyhow!("handshake: {e}"))?;
    let mut next_tick = Instant::now();
    loop {
        let period = Duration::from_secs_f64(1.0 / session.step_rate());
        let wait = next_tick.saturating_duration_since(Instant::now()).max(Duration::from_millis(1));
        ws.get_mut().set_read_timeout(Some(wait))?;
        match ws.read() {
            Ok(Message::Text(t)) => {
                for m in session.handle_text(&t) {
                    ws.send(Message::text(encode(&m)))?;
                }
            }
            Ok(Message::Close(_)) | Err(WsError::ConnectionClosed) | Err(WsError::AlreadyClosed) => {
                return Ok(())
            }
            Ok(_) => {}
            Err(WsError::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(e) => return Err(e.into()),
        }
        if Instant::now() >= next_tick {
            next_tick = Instant::now() + period;
            if let Some(frame) = session.tick() {
                ws.send(Message::text(encode(&frame)))?;
            }
        }
    }
}

fn http(mut stream: TcpStream, head: &str, static_dir: Option<&Path>) -> Result<()> {
    // Consume the request head we peeked at.
    let mut buf = vec![0u8; head.len()];
    std::io::Read::read_exact(&mut stream, &mut buf)?;
    let target = head.split_whitespace().nth(1).unwrap_or("/");
    let target = target.split('?').next().unwrap_or("/");
    let rel = if target == "/" { "index.html" } else { target.trim_start_matches('/') };
    let safe = Path::new(rel).components().all(|c| matches!(c, Component::Normal(_)));
    let file = static_dir.filter(|_| safe).map(|d| d.join(rel));
    match file.and_then(|f| fs::read(&f).ok().map(|b| (f, b))) {
        Some((f, body)) => {
            let ty = match f.extension().and_then(|e| e.to_str()) {
                Some("html") => "text/html",
                Some("js") => "text/javascript",
                Some("css") => "text/css",
                Some("json") => "application/json",
                Some("svg") => "image/svg+xml",
                _ => "application/octet-stream",
            };
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: {ty}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                body.len()
            )?;
            stream.write_all(&body)?;
        }
        None => {
            let body = "not found\n";
            write!(
                stream,
                "HTTP/1.1 404 Not Found\r\nContent-Type: text/plain\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )?;
        }
    }
    Ok(())
}
