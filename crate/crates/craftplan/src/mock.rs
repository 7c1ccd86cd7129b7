//! Local stand-in for a chat completions server that replays recorded replies.
//!
//! The reply for a request is picked by how many replanning turns the prompt
//! holds beyond the fixed demonstrations, so one server can serve many
//! episodes at once: the first plan request gets reply 0, the first revision
//! reply 1 and so on.

use std::sync::Arc;
use std::thread::JoinHandle;

use craftplan_core::planner::{ChatMessage, PromptTranscript};
use serde::Deserialize;
use serde_json::json;
use tiny_http::{Header, Method, Response, Server};

const REPLAN_MARK: &str = "Replanner:";

#[derive(Deserialize)]
struct Request {
    messages: Vec<ChatMessage>,
}

fn replans(messages: &[ChatMessage]) -> usize {
    messages.iter().filter(|m| m.role == "user").map(|m| m.content.matches(REPLAN_MARK).count()).sum()
}

/// Replanning turns present in a prompt with no live rounds.
pub fn baseline_replans() -> usize {
    replans(&PromptTranscript::new(usize::MAX).messages())
}

pub fn reply_index(messages: &[ChatMessage], baseline: usize) -> usize {
    replans(messages).saturating_sub(baseline)
}

fn json_response(status: u16, body: serde_json::Value) -> Response<std::io::Cursor<Vec<u8>>> {
    let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
    Response::from_string(body.to_string()).with_status_code(status).with_header(header)
}

fn handle(mut req: tiny_http::Request, replies: &[String], baseline: usize) {
    let resp = if req.method() != &Method::Post || !req.url().ends_with("/chat/completions") {
        json_response(404, json!({"error": {"message": "not found"}}))
    } else {
        let mut body = String::new();
        match req.as_reader().read_to_string(&mut body).ok().and_then(|_| serde_json::from_str::<Request>(&body).ok()) {
            None => json_response(400, json!({"error": {"message": "expected a JSON body with messages"}})),
            Some(r) => {
                let i = reply_index(&r.messages, baseline);
                match replies.get(i) {
                    Some(text) => json_response(
                        200,
                        json!({
                            "id": format!("mock-{i}"),
                            "object": "chat.completion",
                            "model": "mock",
                            "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
                        }),
                    ),
                    None => json_response(410, json!({"error": {"message": format!("transcript has no reply {i}")}})),
                }
            }
        }
    };
    let _ = req.respond(resp);
}

pub struct MockServer {
    server: Arc<Server>,
    worker: Option<JoinHandle<()>>,
    port: u16,
}

impl MockServer {
    /// Binds `addr` (port 0 picks a free one) and serves on a background thread.
    pub fn start(addr: &str, replies: Vec<String>) -> anyhow::Result<Self> {
        let server = Arc::new(Server::http(addr).map_err(|e| anyhow::anyhow!("cannot bind {addr}: {e}"))?);
        let port = server.server_addr().to_ip().map(|a| a.port()).unwrap_or(0);
        let s = Arc::clone(&server);
        let worker = std::thread::spawn(move || {
            let baseline = baseline_replans();
            for req in s.incoming_requests() {
                handle(req, &replies, baseline);
            }
        });
        Ok(Self {
            server,
            worker: Some(worker),
            port,
        })
    }

    pub fn base_url(&self) -> String {
        format!("http://127.0.0.1:{}/v1", self.port)
    }

    /// Blocks until the server stops.
    pub fn wait(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}
