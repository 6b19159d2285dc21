//! Shared helpers for integration tests: a minimal single-threaded mock
//! LLM endpoint speaking just enough HTTP/1.1 for the oracle client.

#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

pub type Handler = dyn Fn(&str) -> (u16, String) + Send + Sync + 'static;

/// A mock endpoint bound to an ephemeral localhost port. The handler
/// receives the request body and returns (status, response body). Requests
/// are counted so tests can assert warm-cache runs issue none.
pub struct MockLlm {
    pub url: String,
    addr: std::net::SocketAddr,
    hits: Arc<AtomicUsize>,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockLlm {
    pub fn start<F>(handler: F) -> Self
    where
        F: Fn(&str) -> (u16, String) + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
        let addr = listener.local_addr().expect("local addr");
        let hits = Arc::new(AtomicUsize::new(0));
        let shutdown = Arc::new(AtomicBool::new(false));
        let handler: Arc<Handler> = Arc::new(handler);
        let thread_hits = Arc::clone(&hits);
        let thread_shutdown = Arc::clone(&shutdown);
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if thread_shutdown.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                serve_one(stream, &thread_hits, handler.as_ref());
            }
        });
        MockLlm {
            url: format!("http://{addr}/induce"),
            addr,
            hits,
            shutdown,
            handle: Some(handle),
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for MockLlm {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // Unblock the accept loop with a throwaway connection.
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn serve_one(mut stream: TcpStream, hits: &AtomicUsize, handler: &Handler) {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    let header_end = loop {
        match stream.read(&mut chunk) {
            Ok(0) => break None,
            Ok(n) => {
                buf.extend_from_slice(&chunk[..n]);
                if let Some(pos) = find_header_end(&buf) {
                    break Some(pos);
                }
            }
            Err(_) => break None,
        }
    };
    // The shutdown wake-up connects and sends nothing; don't count it.
    let Some(header_end) = header_end else { return };

    let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
    let content_length: usize = headers
        .lines()
        .find_map(|line| {
            let (name, value) = line.split_once(':')?;
            name.eq_ignore_ascii_case("content-length")
                .then(|| value.trim().parse().ok())?
        })
        .unwrap_or(0);
    let body_start = header_end + 4;
    while buf.len() < body_start + content_length {
        match stream.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => buf.extend_from_slice(&chunk[..n]),
            Err(_) => break,
        }
    }
    let body = String::from_utf8_lossy(&buf[body_start..]).to_string();

    hits.fetch_add(1, Ordering::SeqCst);
    let (status, response_body) = handler(&body);
    let reason = if status == 200 { "OK" } else { "Error" };
    let response = format!(
        "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{response_body}",
        response_body.len()
    );
    let _ = stream.write_all(response.as_bytes());
    let _ = stream.flush();
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}

/// Path of the compiled CLI binary.
pub fn bin() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_prompt-games"))
}

/// A deterministic handler that answers any induce request with a valid
/// per-prompt distribution over the request's action labels.
pub fn valid_handler() -> impl Fn(&str) -> (u16, String) + Send + Sync + 'static {
    |body: &str| {
        let request: serde_json::Value = serde_json::from_str(body).expect("request is JSON");
        let prompt = request["prompt"].as_str().unwrap_or_default();
        let actions: Vec<String> = request["actions"]
            .as_array()
            .expect("actions array")
            .iter()
            .map(|v| v.as_str().expect("action label").to_string())
            .collect();
        // Weight labels by a stable function of prompt and position so
        // different prompts induce different policies.
        let seed: usize = prompt.bytes().map(|b| b as usize).sum();
        let weights: serde_json::Map<String, serde_json::Value> = actions
            .iter()
            .enumerate()
            .map(|(i, label)| {
                let w = 1.0 + ((seed + i * 7) % 11) as f64;
                (label.clone(), serde_json::json!(w))
            })
            .collect();
        (200, serde_json::json!({ "weights": weights }).to_string())
    }
}
