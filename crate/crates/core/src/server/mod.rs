//! Server runtime: stdio and TCP transports with a reader/handler split.
//!
//! The reader flow decodes frames and immediately records `$/cancelRequest`
//! notifications in the shared cancel registry, so an engine busy inside the
//! handler flow observes the flag mid-request. The handler flow dispatches
//! messages strictly in arrival order.

pub mod handler;
pub mod workspace;

pub use handler::{CancelRegistry, Features, Handler, MessageSink, DEFAULT_BATCH_SIZE};
pub use workspace::{FileEntry, Workspace};

use crate::base_protocol::{
    decode_message, write_message, ProtocolError, RequestId, RpcError, RpcMessage,
};
use crate::slsp_types::{methods, CancelParams};
use std::io::{self, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::atomic::Ordering;
use std::sync::{mpsc, Arc, Mutex};

/// Stack for the handler flow; specification evaluation recurses.
const HANDLER_STACK_SIZE: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub features: Features,
    /// Cases per `$/progress` notification on streamed CT execution.
    pub batch_size: usize,
    /// Optional JSONL transcript of every decoded message, both directions.
    pub log: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            features: Features::default(),
            batch_size: DEFAULT_BATCH_SIZE,
            log: None,
        }
    }
}

/// Shared JSONL transcript writer; a no-op when logging is off.
#[derive(Clone)]
struct Transcript(Option<Arc<Mutex<std::fs::File>>>);

impl Transcript {
    fn open(path: Option<&Path>) -> io::Result<Self> {
        match path {
            Some(p) => Ok(Transcript(Some(Arc::new(Mutex::new(std::fs::File::create(p)?))))),
            None => Ok(Transcript(None)),
        }
    }

    fn log(&self, dir: &str, msg: &RpcMessage) {
        if let Some(file) = &self.0 {
            let line = serde_json::json!({"dir": dir, "msg": msg.to_json()});
            let mut file = file.lock().unwrap();
            let _ = writeln!(file, "{line}");
        }
    }
}

/// Best-effort diagnostics: the server must keep serving even if the host
/// process closed our stderr, so write failures are ignored (`eprintln!`
/// would panic).
fn log_stderr(line: std::fmt::Arguments<'_>) {
    let mut err = io::stderr().lock();
    let _ = err.write_fmt(line);
    let _ = err.write_all(b"\n");
}

struct WriterSink<W: Write> {
    writer: W,
    transcript: Transcript,
}

impl<W: Write> MessageSink for WriterSink<W> {
    fn send(&mut self, msg: &RpcMessage) {
        self.transcript.log("s2c", msg);
        if let Err(err) = write_message(&mut self.writer, msg) {
            log_stderr(format_args!("slsp-server: write failed: {err}"));
        }
    }
}

enum Inbound {
    Message(RpcMessage),
    /// A well-framed message whose body was not a JSON-RPC object.
    Malformed(String),
}

/// Run a session over the given byte streams until `exit` or EOF. Returns
/// the process exit code: 0 when shutdown was requested first, 1 otherwise.
pub fn serve<R, W>(reader: R, writer: W, config: &ServerConfig) -> io::Result<i32>
where
    R: Read + Send + 'static,
    W: Write + Send + 'static,
{
    let transcript = Transcript::open(config.log.as_deref())?;
    let cancels: CancelRegistry = Default::default();
    let (tx, rx) = mpsc::channel::<Inbound>();

    let reader_cancels = cancels.clone();
    let reader_transcript = transcript.clone();
    std::thread::Builder::new()
        .name("slsp-reader".into())
        .spawn(move || {
            let mut reader = BufReader::new(reader);
            loop {
                let msg = match decode_message(&mut reader) {
                    Ok(Some(msg)) => msg,
                    Ok(None) => break, // clean EOF at a frame boundary
                    Err(ProtocolError::MalformedJson(err)) => {
                        // the frame was consumed, so the stream stays usable
                        if tx.send(Inbound::Malformed(err)).is_err() {
                            break;
                        }
                        continue;
                    }
                    Err(err) => {
                        log_stderr(format_args!("slsp-server: unrecoverable read error: {err}"));
                        break;
                    }
                };
                reader_transcript.log("c2s", &msg);
                match &msg {
                    RpcMessage::Request { id, .. } => {
                        reader_cancels.lock().unwrap().entry(id.clone()).or_default();
                    }
                    RpcMessage::Notification { method, params }
                        if method == methods::CANCEL_REQUEST =>
                    {
                        let parsed = params
                            .clone()
                            .map(serde_json::from_value::<CancelParams>);
                        if let Some(Ok(p)) = parsed {
                            if let Some(flag) = reader_cancels.lock().unwrap().get(&p.id) {
                                flag.store(true, Ordering::Relaxed);
                            }
                        }
                    }
                    _ => {}
                }
                if tx.send(Inbound::Message(msg)).is_err() {
                    break;
                }
            }
        })?;

    let features = config.features;
    let batch_size = config.batch_size;
    let handler_thread = std::thread::Builder::new()
        .name("slsp-handler".into())
        .stack_size(HANDLER_STACK_SIZE)
        .spawn(move || -> i32 {
            let sink = WriterSink { writer, transcript };
            let mut handler = Handler::new(sink, features, batch_size, cancels);
            while let Ok(inbound) = rx.recv() {
                match inbound {
                    Inbound::Message(msg) => handler.handle(msg),
                    Inbound::Malformed(err) => handler.sink_mut().send(
                        &RpcMessage::response_err(
                            RequestId::Null,
                            RpcError::parse_error(format!("message body is not valid JSON-RPC: {err}")),
                        ),
                    ),
                }
                if let Some(code) = handler.exit_code() {
                    return code;
                }
            }
            handler.eof_exit_code()
        })?;

    // The reader flow is not joined: after `exit` it may still be blocked on
    // the input stream, which closes when the caller drops the connection or
    // the process terminates.
    handler_thread
        .join()
        .map_err(|_| io::Error::other("handler flow panicked"))
}

pub fn run_stdio(config: &ServerConfig) -> io::Result<i32> {
    serve(io::stdin(), io::stdout(), config)
}

/// Listen on 127.0.0.1, serve exactly one connection, then return. The bound
/// address is printed to stderr (useful with port 0).
pub fn run_tcp(port: u16, config: &ServerConfig) -> io::Result<i32> {
    let listener = TcpListener::bind(("127.0.0.1", port))?;
    log_stderr(format_args!("slsp-server: listening on {}", listener.local_addr()?));
    let (stream, peer) = listener.accept()?;
    log_stderr(format_args!("slsp-server: connection from {peer}"));
    let writer = stream.try_clone()?;
    serve(stream, writer, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_protocol::decode_message as decode;
    use serde_json::json;
    use std::net::TcpStream;

    /// One in-memory session: connect over loopback sockets, run the
    /// lifecycle, return (exit code, file transcript path contents).
    fn run_session(
        config: ServerConfig,
        script: impl FnOnce(&mut TcpStream, &mut BufReader<TcpStream>),
    ) -> i32 {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let writer = stream.try_clone().unwrap();
            serve(stream, writer, &config).unwrap()
        });
        let mut client = TcpStream::connect(addr).unwrap();
        let mut replies = BufReader::new(client.try_clone().unwrap());
        script(&mut client, &mut replies);
        server.join().unwrap()
    }

    fn send(client: &mut TcpStream, msg: &RpcMessage) {
        write_message(client, msg).unwrap();
    }

    fn recv(replies: &mut BufReader<TcpStream>) -> RpcMessage {
        decode(replies).unwrap().expect("a message")
    }

    #[test]
    fn lifecycle_over_sockets_exits_cleanly() {
        let code = run_session(ServerConfig::default(), |client, replies| {
            send(client, &RpcMessage::request(RequestId::Number(1), "initialize", Some(json!({}))));
            let reply = recv(replies);
            assert_eq!(reply.id(), Some(&RequestId::Number(1)));
            send(client, &RpcMessage::notification("initialized", Some(json!({}))));
            send(client, &RpcMessage::request(RequestId::Number(2), "shutdown", None));
            let reply = recv(replies);
            assert_eq!(reply.id(), Some(&RequestId::Number(2)));
            send(client, &RpcMessage::notification("exit", None));
        });
        assert_eq!(code, 0);
    }

    #[test]
    fn eof_without_shutdown_is_an_unclean_exit() {
        let code = run_session(ServerConfig::default(), |client, replies| {
            send(client, &RpcMessage::request(RequestId::Number(1), "initialize", Some(json!({}))));
            recv(replies);
            client.shutdown(std::net::Shutdown::Write).unwrap();
        });
        assert_eq!(code, 1);
    }

    #[test]
    fn malformed_bodies_get_a_parse_error_with_null_id() {
        let code = run_session(ServerConfig::default(), |client, replies| {
            let body = b"{ not json";
            let frame = format!("Content-Length: {}\r\n\r\n", body.len());
            client.write_all(frame.as_bytes()).unwrap();
            client.write_all(body).unwrap();
            let reply = recv(replies);
            let RpcMessage::Response { id, outcome } = reply else {
                panic!("expected a response");
            };
            assert_eq!(id, RequestId::Null);
            assert_eq!(
                outcome.unwrap_err().code,
                crate::base_protocol::codes::PARSE_ERROR
            );
            // the connection survives a malformed body
            send(client, &RpcMessage::request(RequestId::Number(1), "initialize", Some(json!({}))));
            let reply = recv(replies);
            assert_eq!(reply.id(), Some(&RequestId::Number(1)));
            client.shutdown(std::net::Shutdown::Write).unwrap();
        });
        assert_eq!(code, 1);
    }

    #[test]
    fn transcript_logs_both_directions_as_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("session.jsonl");
        let config = ServerConfig { log: Some(log.clone()), ..Default::default() };
        run_session(config, |client, replies| {
            send(client, &RpcMessage::request(RequestId::Number(1), "initialize", Some(json!({}))));
            recv(replies);
            send(client, &RpcMessage::notification("initialized", Some(json!({}))));
            send(client, &RpcMessage::request(RequestId::Number(2), "shutdown", None));
            recv(replies);
            send(client, &RpcMessage::notification("exit", None));
        });
        let text = std::fs::read_to_string(&log).unwrap();
        let entries: Vec<serde_json::Value> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(entries.len(), 6); // 4 inbound + 2 responses
        assert_eq!(entries[0]["dir"], json!("c2s"));
        assert_eq!(entries[0]["msg"]["method"], json!("initialize"));
        assert!(entries.iter().any(|e| e["dir"] == json!("s2c")));
    }
}
