//! Scriptable SLSP client: connection plumbing with a background reader,
//! session scripts, and the conformance suite. Every frame in either
//! direction is recorded on a transcript (`{"dir": "c2s"|"s2c", "msg": …}`)
//! suitable for golden comparisons after normalization.

pub mod conformance;
pub mod report;
pub mod script;

pub use conformance::conformance_suite;
pub use report::{Check, Outcome, Report};
pub use script::{normalize_transcript, parse_script, run_script, Matcher, Step};

use crate::base_protocol::{
    decode_message, write_message, IdCounter, ProtocolError, RequestId, RpcError, RpcMessage,
};
use crate::slsp_types::methods;
use serde_json::{json, Value};
use std::io::{BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

/// Default patience per expected message.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("failed to start server: {0}")]
    Spawn(String),
    #[error("connection closed by the server")]
    Closed,
    #[error("timed out after {0:?} waiting for a message")]
    Timeout(Duration),
    #[error("malformed message from the server: {0}")]
    Protocol(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("server answered {}: {}", .0.code, .0.message)]
    Server(RpcError),
}

enum ReadEvent {
    Message(RpcMessage),
    Malformed(String),
}

pub struct Connection {
    child: Option<Child>,
    writer: Box<dyn Write + Send>,
    inbox: Receiver<ReadEvent>,
    transcript: Arc<Mutex<Vec<Value>>>,
    ids: IdCounter,
    pub timeout: Duration,
}

impl Connection {
    /// Spawn `command` (whitespace-split; no shell quoting) and talk SLSP
    /// over its standard streams. Stderr is passed through.
    pub fn spawn(command: &str) -> Result<Connection, ClientError> {
        let parts: Vec<&str> = command.split_whitespace().collect();
        let (program, args) = parts
            .split_first()
            .ok_or_else(|| ClientError::Spawn("empty server command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| ClientError::Spawn(format!("{command}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Ok(Self::build(Some(child), Box::new(stdin), Box::new(stdout)))
    }

    /// Connect to a server already listening on `addr` (`host:port`).
    pub fn connect(addr: &str) -> Result<Connection, ClientError> {
        let stream = TcpStream::connect(addr)
            .map_err(|e| ClientError::Spawn(format!("connect {addr}: {e}")))?;
        let writer = stream.try_clone()?;
        Ok(Self::build(None, Box::new(writer), Box::new(stream)))
    }

    fn build(
        child: Option<Child>,
        writer: Box<dyn Write + Send>,
        reader: Box<dyn Read + Send>,
    ) -> Connection {
        let transcript: Arc<Mutex<Vec<Value>>> = Default::default();
        let (tx, inbox) = mpsc::channel();
        let log = transcript.clone();
        std::thread::Builder::new()
            .name("slsp-client-reader".into())
            .spawn(move || {
                let mut reader = BufReader::new(reader);
                loop {
                    let event = match decode_message(&mut reader) {
                        Ok(Some(msg)) => {
                            log.lock().unwrap().push(json!({"dir": "s2c", "msg": msg.to_json()}));
                            ReadEvent::Message(msg)
                        }
                        Ok(None) => break,
                        Err(ProtocolError::MalformedJson(err)) => ReadEvent::Malformed(err),
                        Err(_) => break,
                    };
                    if tx.send(event).is_err() {
                        break;
                    }
                }
            })
            .expect("reader flow spawns");
        Connection {
            child,
            writer,
            inbox,
            transcript,
            ids: IdCounter::new(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn next_id(&mut self) -> RequestId {
        self.ids.next_id()
    }

    pub fn send(&mut self, msg: &RpcMessage) -> Result<(), ClientError> {
        self.transcript
            .lock()
            .unwrap()
            .push(json!({"dir": "c2s", "msg": msg.to_json()}));
        write_message(&mut self.writer, msg)?;
        Ok(())
    }

    pub fn notify(&mut self, method: &str, params: Value) -> Result<(), ClientError> {
        self.send(&RpcMessage::notification(method, Some(params)))
    }

    /// Next inbound message, waiting up to `timeout`.
    pub fn recv(&mut self) -> Result<RpcMessage, ClientError> {
        match self.inbox.recv_timeout(self.timeout) {
            Ok(ReadEvent::Message(msg)) => Ok(msg),
            Ok(ReadEvent::Malformed(err)) => Err(ClientError::Protocol(err)),
            Err(RecvTimeoutError::Timeout) => Err(ClientError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(ClientError::Closed),
        }
    }

    /// Wait for the response to `id`, consuming (but keeping on the
    /// transcript) any other traffic that arrives first.
    pub fn wait_response(&mut self, id: &RequestId) -> Result<Result<Value, RpcError>, ClientError> {
        loop {
            if let RpcMessage::Response { id: got, outcome } = self.recv()? {
                if &got == id {
                    return Ok(outcome);
                }
            }
        }
    }

    /// Send a request and wait for its response.
    pub fn request(
        &mut self,
        method: &str,
        params: Value,
    ) -> Result<Result<Value, RpcError>, ClientError> {
        let id = self.next_id();
        self.send(&RpcMessage::request(id.clone(), method, Some(params)))?;
        self.wait_response(&id)
    }

    /// Like `request`, but a server-side error becomes `ClientError::Server`.
    pub fn request_ok(&mut self, method: &str, params: Value) -> Result<Value, ClientError> {
        self.request(method, params)?.map_err(ClientError::Server)
    }

    /// The initialize/initialized handshake; returns the server's
    /// capabilities result.
    pub fn initialize(&mut self, root_uri: Option<&str>) -> Result<Value, ClientError> {
        let params = match root_uri {
            Some(root) => json!({"rootUri": root, "capabilities": {}}),
            None => json!({"capabilities": {}}),
        };
        let caps = self.request_ok(methods::INITIALIZE, params)?;
        self.notify(methods::INITIALIZED, json!({}))?;
        Ok(caps)
    }

    /// Orderly teardown: shutdown request, exit notification, then wait for
    /// a spawned server to terminate (killing it after 5 s).
    pub fn shutdown_exit(&mut self) -> Result<(), ClientError> {
        self.request_ok(methods::SHUTDOWN, Value::Null)?;
        self.send(&RpcMessage::notification(methods::EXIT, None))?;
        if let Some(child) = &mut self.child {
            let deadline = Instant::now() + Duration::from_secs(5);
            loop {
                match child.try_wait()? {
                    Some(_) => break,
                    None if Instant::now() >= deadline => {
                        let _ = child.kill();
                        let _ = child.wait();
                        break;
                    }
                    None => std::thread::sleep(Duration::from_millis(10)),
                }
            }
            self.child = None;
        }
        Ok(())
    }

    /// Snapshot of every message sent and received so far, in order.
    pub fn transcript(&self) -> Vec<Value> {
        self.transcript.lock().unwrap().clone()
    }

    /// Write the transcript as JSONL.
    pub fn write_transcript(&self, path: &std::path::Path) -> std::io::Result<()> {
        let entries = self.transcript();
        let mut text = String::new();
        for entry in &entries {
            text.push_str(&entry.to_string());
            text.push('\n');
        }
        std::fs::write(path, text)
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::server::{serve, ServerConfig};
    use std::net::TcpListener;

    /// An in-process reference server on a loopback socket.
    fn local_server() -> (std::thread::JoinHandle<i32>, String) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        let handle = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let writer = stream.try_clone().unwrap();
            serve(stream, writer, &ServerConfig::default()).unwrap()
        });
        (handle, addr)
    }

    #[test]
    fn connect_handshake_and_teardown() {
        let (server, addr) = local_server();
        let mut conn = Connection::connect(&addr).unwrap();
        let caps = conn.initialize(None).unwrap();
        assert_eq!(caps["capabilities"]["textDocumentSync"], json!(1));
        conn.shutdown_exit().unwrap();
        assert_eq!(server.join().unwrap(), 0);

        let transcript = conn.transcript();
        assert_eq!(transcript.len(), 6);
        assert_eq!(transcript[0]["dir"], json!("c2s"));
        assert_eq!(transcript[0]["msg"]["method"], json!("initialize"));
        assert_eq!(transcript[1]["dir"], json!("s2c"));
    }

    #[test]
    fn server_errors_surface_through_request_ok() {
        let (server, addr) = local_server();
        let mut conn = Connection::connect(&addr).unwrap();
        conn.initialize(None).unwrap();
        let err = conn.request_ok("slsp/nonexistent", json!({})).unwrap_err();
        match err {
            ClientError::Server(e) => {
                assert_eq!(e.code, crate::base_protocol::codes::METHOD_NOT_FOUND)
            }
            other => panic!("expected a server error, got {other}"),
        }
        conn.shutdown_exit().unwrap();
        server.join().unwrap();
    }

    #[test]
    fn scripted_session_end_to_end() {
        let (server, addr) = local_server();
        let mut conn = Connection::connect(&addr).unwrap();
        conn.timeout = Duration::from_secs(5);
        let steps = parse_script(
            r#"[
                {"send": {"id": "$id1", "method": "slsp/TP/getCommands"}},
                {"expect": {"id": "$id1", "result": "$any"}},
                {"send": {"id": "$id2", "method": "slsp/CT/generate", "params": {}}},
                {"expect": {"id": "$id2", "error": {"code": -32602, "message": "$any"}}}
            ]"#,
        )
        .unwrap();
        let report = run_script(&mut conn, &steps, None);
        assert!(report.is_success(), "{:?}", report.checks);
        assert_eq!(report.passed(), 4); // handshake + 2 expectations + teardown
        server.join().unwrap();
    }

    #[test]
    fn expectation_mismatches_fail_but_do_not_abort() {
        let (server, addr) = local_server();
        let mut conn = Connection::connect(&addr).unwrap();
        let steps = parse_script(
            r#"[
                {"send": {"id": "$id1", "method": "slsp/TP/getCommands"}},
                {"expect": {"id": "$id1", "error": "$any"}},
                {"send": {"id": "$id2", "method": "slsp/TP/getCommands"}},
                {"expect": {"id": "$id2", "result": "$any"}}
            ]"#,
        )
        .unwrap();
        let report = run_script(&mut conn, &steps, None);
        assert_eq!(report.failed(), 1, "{:?}", report.checks);
        assert!(report.checks[1].detail.as_deref().unwrap().contains("missing key"));
        // the later steps still ran
        assert_eq!(report.passed(), 3);
        server.join().unwrap();
    }
}
