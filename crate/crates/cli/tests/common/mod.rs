//! Helpers for driving the `tactic-reward` binary and standing in for
//! remote model endpoints.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tactic-reward"));
    for var in [
        "TACTIC_REWARD_TAGGER_URL",
        "TACTIC_REWARD_QUALITY_URL",
        "TACTIC_REWARD_PRESET",
        "TACTIC_REWARD_LISTEN",
    ] {
        c.env_remove(var);
    }
    c
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn run_stdin(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(stdin).unwrap();
    child.wait_with_output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

type Handler = dyn Fn(&str) -> (u16, String) + Send + Sync;

/// Bare HTTP/1.1 server answering every POST body with `handler(body)`.
/// Runs until the test process exits.
pub fn stub_server(handler: impl Fn(&str) -> (u16, String) + Send + Sync + 'static) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handler: Arc<Handler> = Arc::new(handler);
    thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let handler = handler.clone();
            thread::spawn(move || {
                let _ = serve_one(stream, &*handler);
            });
        }
    });
    format!("http://{addr}")
}

fn serve_one(stream: TcpStream, handler: &Handler) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        // Reachability probes connect and hang up without a request.
        return Ok(());
    }
    let mut len = 0usize;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h)?;
        if h.trim().is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body)?;
    let (status, reply) = handler(&String::from_utf8_lossy(&body));
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{reply}",
        reply.len()
    )?;
    stream.flush()
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(10)))
        .build()
        .into()
}

pub fn post(url: &str, body: &str) -> (u16, String) {
    let mut r = agent()
        .post(url)
        .header("content-type", "application/json")
        .send(body.as_bytes())
        .unwrap();
    (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
}

pub fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}

/// A `serve` child process; SIGTERM on drop if still running.
pub struct Server {
    pub child: Child,
    pub base: String,
}

impl Server {
    pub fn start(extra: &[&str]) -> Server {
        let port = free_port();
        let listen = format!("127.0.0.1:{port}");
        let child = bin()
            .args(["serve", "--listen", &listen])
            .args(extra)
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .expect("serve starts");
        let base = format!("http://{listen}");
        let deadline = Instant::now() + Duration::from_secs(10);
        while agent().get(&format!("{base}/healthz")).call().is_err() {
            assert!(Instant::now() < deadline, "server did not come up");
            thread::sleep(Duration::from_millis(25));
        }
        Server { child, base }
    }

    /// Send SIGTERM and wait for the exit status.
    pub fn terminate(mut self) -> std::process::ExitStatus {
        let pid = self.child.id().to_string();
        Command::new("kill").args(["-TERM", &pid]).status().unwrap();
        self.child.wait().unwrap()
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
    }
}

/// Tagger reply a keyword-rule oracle would give for one tagging prompt.
pub fn keyword_reply(prompt: &str) -> String {
    use tactic_reward::tactic::TacticId;
    use tactic_reward::tagging::keyword_tag_sentence;

    let sentence = prompt
        .split("- Sentence to Evaluate: ")
        .nth(1)
        .and_then(|s| s.split('\n').next())
        .expect("prompt names a sentence");
    let tactic = TacticId::ALL
        .into_iter()
        .find(|t| prompt.contains(&format!("contains \"{}\".", t.display_name())))
        .expect("prompt names a tactic");
    let present = keyword_tag_sentence(sentence).contains(tactic);
    format!("<score>{}</score>", present as u8)
}

/// Completion-endpoint handler built on [`keyword_reply`].
pub fn keyword_endpoint(body: &str) -> (u16, String) {
    let req: serde_json::Value = serde_json::from_str(body).unwrap();
    let text = keyword_reply(req["prompt"].as_str().unwrap());
    (200, serde_json::json!({ "text": text }).to_string())
}
