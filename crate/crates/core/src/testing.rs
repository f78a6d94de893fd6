//! Test-only helpers.

use std::path::PathBuf;
use std::sync::Arc;
use std::thread;

use serde_json::Value;

pub fn wordnet_fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wordnet-mini")
}

pub fn worked_example_oracle() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/worked_example_oracle.json")
}

/// Loopback JSON server answering every request through `handler`.
pub struct MockServer {
    pub url: String,
    server: Arc<tiny_http::Server>,
}

impl MockServer {
    pub fn start<F>(handler: F) -> Self
    where
        F: Fn(&str, Value) -> (u16, Value) + Send + Sync + 'static,
    {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind loopback"));
        let url = format!("http://{}", server.server_addr().to_ip().expect("ip listener"));
        let worker = Arc::clone(&server);
        thread::spawn(move || {
            for mut request in worker.incoming_requests() {
                let mut body = String::new();
                let _ = std::io::Read::read_to_string(request.as_reader(), &mut body);
                let parsed = serde_json::from_str(&body).unwrap_or(Value::Null);
                let (status, reply) = handler(request.url(), parsed);
                let response = tiny_http::Response::from_string(reply.to_string())
                    .with_status_code(status)
                    .with_header(
                        tiny_http::Header::from_bytes("Content-Type", "application/json").expect("static header"),
                    );
                let _ = request.respond(response);
            }
        });
        Self { url, server }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
    }
}
