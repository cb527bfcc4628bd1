//! Shared test support: a scripted HTTP server for exercising the remote
//! provider paths without any real network dependency.
//!
//! The server answers exactly one request per scripted response, in order,
//! records what it received, and closes each connection so the client never
//! pools. `finish()` joins the server thread and hands back the captured
//! requests for assertions.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::thread::JoinHandle;

pub struct ScriptedResponse {
    pub status: u16,
    pub body: String,
}

/// A 200 response with the given JSON body.
pub fn ok(body: &str) -> ScriptedResponse {
    ScriptedResponse {
        status: 200,
        body: body.to_string(),
    }
}

pub fn status(status: u16, body: &str) -> ScriptedResponse {
    ScriptedResponse {
        status,
        body: body.to_string(),
    }
}

/// One captured request.
pub struct CapturedRequest {
    pub path: String,
    pub headers: Vec<String>,
    pub body: String,
}

impl CapturedRequest {
    /// Case-insensitive header lookup, returning the value verbatim.
    pub fn header(&self, name: &str) -> Option<String> {
        let prefix = format!("{}:", name.to_ascii_lowercase());
        self.headers.iter().find_map(|h| {
            h.to_ascii_lowercase()
                .starts_with(&prefix)
                .then(|| h[prefix.len()..].trim().to_string())
        })
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.body).expect("request body is JSON")
    }
}

pub struct TestServer {
    pub url: String,
    handle: Option<JoinHandle<Vec<CapturedRequest>>>,
}

impl TestServer {
    /// Start a server that will serve the scripted responses in order.
    pub fn start(script: Vec<ScriptedResponse>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind test server");
        let addr = listener.local_addr().expect("local addr");
        let handle = std::thread::spawn(move || {
            let mut seen = Vec::new();
            for response in script {
                let (mut stream, _) = listener.accept().expect("accept");
                seen.push(read_request(&mut stream));
                write_response(&mut stream, &response);
            }
            seen
        });
        TestServer {
            url: format!("http://{addr}"),
            handle: Some(handle),
        }
    }

    /// Wait for the script to be fully consumed and return what was seen.
    pub fn finish(mut self) -> Vec<CapturedRequest> {
        self.handle
            .take()
            .expect("finish called once")
            .join()
            .expect("server thread")
    }
}

fn read_request(stream: &mut TcpStream) -> CapturedRequest {
    let mut reader = BufReader::new(stream);
    let mut request_line = String::new();
    reader.read_line(&mut request_line).expect("request line");
    let path = request_line
        .split_whitespace()
        .nth(1)
        .unwrap_or("")
        .to_string();

    let mut headers = Vec::new();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).expect("header line");
        let line = line.trim_end().to_string();
        if line.is_empty() {
            break;
        }
        if let Some(value) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            content_length = value.trim().parse().unwrap_or(0);
        }
        headers.push(line);
    }

    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).expect("body");
    CapturedRequest {
        path,
        headers,
        body: String::from_utf8_lossy(&body).into_owned(),
    }
}

fn write_response(stream: &mut TcpStream, response: &ScriptedResponse) {
    let reason = match response.status {
        200 => "OK",
        400 => "Bad Request",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    };
    let head = format!(
        "HTTP/1.1 {} {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        response.status,
        reason,
        response.body.len()
    );
    stream.write_all(head.as_bytes()).expect("write head");
    stream.write_all(response.body.as_bytes()).expect("write body");
    let _ = stream.flush();
}
