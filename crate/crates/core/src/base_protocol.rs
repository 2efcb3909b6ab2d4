//! Base protocol codec: header-framed JSON-RPC 2.0 over byte streams.
//!
//! Every message is a header part and a content part:
//!
//! ```text
//! Content-Length: <n>\r\n
//! \r\n
//! <n bytes of UTF-8 JSON>
//! ```
//!
//! The content is a JSON-RPC request, response or notification. The codec is
//! stateless; [`IdCounter`] provides per-connection request id bookkeeping.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::io::{self, BufRead, Write};
use thiserror::Error;

/// The only protocol version that appears on the wire.
pub const JSONRPC_VERSION: &str = "2.0";

/// Reserved JSON-RPC / LSP error codes used by the protocol.
pub mod codes {
    pub const PARSE_ERROR: i64 = -32700;
    pub const INVALID_REQUEST: i64 = -32600;
    pub const METHOD_NOT_FOUND: i64 = -32601;
    pub const INVALID_PARAMS: i64 = -32602;
    pub const INTERNAL_ERROR: i64 = -32603;
    pub const SERVER_NOT_INITIALIZED: i64 = -32002;
    pub const REQUEST_CANCELLED: i64 = -32800;
    pub const CONTENT_MODIFIED: i64 = -32801;
}

/// Decode-side failures.
///
/// Header problems are connection-fatal; a body that fails to parse as JSON
/// can still be answered with `ParseError` when a response channel exists.
#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("malformed JSON content: {0}")]
    MalformedJson(String),
}

/// A request id. Locally generated ids are integers; peers may send strings,
/// which are accepted and echoed verbatim. `Null` only appears on error
/// responses to messages whose id could not be recovered.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RequestId {
    Number(i64),
    Text(String),
    Null,
}

impl std::fmt::Display for RequestId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RequestId::Number(n) => write!(f, "{n}"),
            RequestId::Text(s) => write!(f, "\"{s}\""),
            RequestId::Null => write!(f, "null"),
        }
    }
}

/// JSON-RPC error object carried by failed responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpcError {
    pub code: i64,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

impl RpcError {
    pub fn new(code: i64, message: impl Into<String>) -> Self {
        RpcError {
            code,
            message: message.into(),
            data: None,
        }
    }

    pub fn with_data(mut self, data: Value) -> Self {
        self.data = Some(data);
        self
    }

    pub fn parse_error(message: impl Into<String>) -> Self {
        Self::new(codes::PARSE_ERROR, message)
    }

    pub fn invalid_request(message: impl Into<String>) -> Self {
        Self::new(codes::INVALID_REQUEST, message)
    }

    pub fn method_not_found(method: &str) -> Self {
        Self::new(codes::METHOD_NOT_FOUND, format!("method not found: {method}"))
    }

    pub fn invalid_params(message: impl Into<String>) -> Self {
        Self::new(codes::INVALID_PARAMS, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(codes::INTERNAL_ERROR, message)
    }

    pub fn server_not_initialized() -> Self {
        Self::new(codes::SERVER_NOT_INITIALIZED, "server not initialized")
    }

    pub fn request_cancelled() -> Self {
        Self::new(codes::REQUEST_CANCELLED, "request cancelled")
    }

    pub fn content_modified() -> Self {
        Self::new(codes::CONTENT_MODIFIED, "content modified")
    }
}

impl std::fmt::Display for RpcError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({})", self.message, self.code)
    }
}

/// A decoded JSON-RPC message. A response carries exactly one of
/// result / error, modelled as `Result`.
#[derive(Debug, Clone, PartialEq)]
pub enum RpcMessage {
    Request {
        id: RequestId,
        method: String,
        params: Option<Value>,
    },
    Response {
        id: RequestId,
        outcome: Result<Value, RpcError>,
    },
    Notification {
        method: String,
        params: Option<Value>,
    },
}

impl RpcMessage {
    pub fn request(id: RequestId, method: impl Into<String>, params: Option<Value>) -> Self {
        RpcMessage::Request {
            id,
            method: method.into(),
            params,
        }
    }

    pub fn notification(method: impl Into<String>, params: Option<Value>) -> Self {
        RpcMessage::Notification {
            method: method.into(),
            params,
        }
    }

    pub fn response_ok(id: RequestId, result: Value) -> Self {
        RpcMessage::Response {
            id,
            outcome: Ok(result),
        }
    }

    pub fn response_err(id: RequestId, error: RpcError) -> Self {
        RpcMessage::Response {
            id,
            outcome: Err(error),
        }
    }

    pub fn method(&self) -> Option<&str> {
        match self {
            RpcMessage::Request { method, .. } | RpcMessage::Notification { method, .. } => {
                Some(method)
            }
            RpcMessage::Response { .. } => None,
        }
    }

    pub fn id(&self) -> Option<&RequestId> {
        match self {
            RpcMessage::Request { id, .. } | RpcMessage::Response { id, .. } => Some(id),
            RpcMessage::Notification { .. } => None,
        }
    }

    /// Canonical JSON form: keys in schema declaration order, no extra
    /// whitespace. Byte-stable for golden transcripts.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("jsonrpc".into(), Value::String(JSONRPC_VERSION.into()));
        match self {
            RpcMessage::Request { id, method, params } => {
                map.insert("id".into(), serde_json::to_value(id).unwrap());
                map.insert("method".into(), Value::String(method.clone()));
                if let Some(p) = params {
                    map.insert("params".into(), p.clone());
                }
            }
            RpcMessage::Notification { method, params } => {
                map.insert("method".into(), Value::String(method.clone()));
                if let Some(p) = params {
                    map.insert("params".into(), p.clone());
                }
            }
            RpcMessage::Response { id, outcome } => {
                map.insert("id".into(), serde_json::to_value(id).unwrap());
                match outcome {
                    Ok(result) => {
                        map.insert("result".into(), result.clone());
                    }
                    Err(error) => {
                        map.insert("error".into(), serde_json::to_value(error).unwrap());
                    }
                }
            }
        }
        Value::Object(map)
    }

    /// Classify a JSON value as request / response / notification.
    pub fn from_json(value: Value) -> Result<Self, ProtocolError> {
        let Value::Object(mut map) = value else {
            return Err(ProtocolError::MalformedJson(
                "message content is not a JSON object".into(),
            ));
        };
        let id = match map.remove("id") {
            None => None,
            Some(v) => Some(
                serde_json::from_value::<RequestId>(v)
                    .map_err(|e| ProtocolError::MalformedJson(format!("bad id: {e}")))?,
            ),
        };
        let method = match map.remove("method") {
            None => None,
            Some(Value::String(m)) => Some(m),
            Some(_) => {
                return Err(ProtocolError::MalformedJson("method is not a string".into()));
            }
        };
        let params = map.remove("params");
        match (method, id) {
            (Some(method), Some(id)) => Ok(RpcMessage::Request { id, method, params }),
            (Some(method), None) => Ok(RpcMessage::Notification { method, params }),
            (None, Some(id)) => {
                let result = map.remove("result");
                let error = map.remove("error");
                match (result, error) {
                    (Some(result), None) => Ok(RpcMessage::Response {
                        id,
                        outcome: Ok(result),
                    }),
                    (None, Some(e)) => {
                        let error = serde_json::from_value::<RpcError>(e).map_err(|e| {
                            ProtocolError::MalformedJson(format!("bad error object: {e}"))
                        })?;
                        Ok(RpcMessage::Response {
                            id,
                            outcome: Err(error),
                        })
                    }
                    (Some(_), Some(_)) => Err(ProtocolError::MalformedJson(
                        "response carries both result and error".into(),
                    )),
                    (None, None) => Err(ProtocolError::MalformedJson(
                        "response carries neither result nor error".into(),
                    )),
                }
            }
            (None, None) => Err(ProtocolError::MalformedJson(
                "message has neither method nor id".into(),
            )),
        }
    }
}

/// A framed message: header fields plus the raw content bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct WireMessage {
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl WireMessage {
    /// Frame a body, setting Content-Length to the exact byte count.
    pub fn for_body(body: Vec<u8>) -> Self {
        WireMessage {
            headers: vec![("Content-Length".into(), body.len().to_string())],
            body,
        }
    }

    pub fn content_length(&self) -> Option<usize> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case("Content-Length"))
            .and_then(|(_, v)| v.trim().parse().ok())
    }

    /// Serialize as header block + body.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.body.len() + 40);
        for (name, value) in &self.headers {
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(b": ");
            out.extend_from_slice(value.as_bytes());
            out.extend_from_slice(b"\r\n");
        }
        out.extend_from_slice(b"\r\n");
        out.extend_from_slice(&self.body);
        out
    }
}

/// Encode a message into one framed byte sequence.
pub fn encode_message(msg: &RpcMessage) -> Vec<u8> {
    let body = serde_json::to_vec(&msg.to_json()).expect("rpc message serializes");
    WireMessage::for_body(body).to_bytes()
}

/// Read one framed message. Returns `Ok(None)` on clean EOF at a frame
/// boundary. Unknown header fields are ignored; Content-Type is accepted
/// and not validated.
pub fn read_wire_message<R: BufRead>(reader: &mut R) -> Result<Option<WireMessage>, ProtocolError> {
    let mut headers = Vec::new();
    let mut line = Vec::new();
    loop {
        line.clear();
        let n = reader.read_until(b'\n', &mut line)?;
        if n == 0 {
            if headers.is_empty() {
                return Ok(None);
            }
            return Err(ProtocolError::MalformedHeader(
                "unexpected EOF inside header section".into(),
            ));
        }
        let text = std::str::from_utf8(&line)
            .map_err(|_| ProtocolError::MalformedHeader("header is not ASCII".into()))?;
        let trimmed = text.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() {
            break;
        }
        let Some((name, value)) = trimmed.split_once(':') else {
            return Err(ProtocolError::MalformedHeader(format!(
                "header line without ':': {trimmed:?}"
            )));
        };
        headers.push((name.trim().to_string(), value.trim().to_string()));
    }

    let msg = WireMessage { headers, body: Vec::new() };
    let len = msg.content_length().ok_or_else(|| {
        ProtocolError::MalformedHeader("missing Content-Length header".into())
    })?;
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body)?;
    Ok(Some(WireMessage { body, ..msg }))
}

/// Read and decode exactly one message, leaving the stream positioned at the
/// next frame. `Ok(None)` signals clean EOF.
pub fn decode_message<R: BufRead>(reader: &mut R) -> Result<Option<RpcMessage>, ProtocolError> {
    let Some(wire) = read_wire_message(reader)? else {
        return Ok(None);
    };
    let value: Value = serde_json::from_slice(&wire.body)
        .map_err(|e| ProtocolError::MalformedJson(e.to_string()))?;
    RpcMessage::from_json(value).map(Some)
}

/// Write one framed message and flush.
pub fn write_message<W: Write>(writer: &mut W, msg: &RpcMessage) -> io::Result<()> {
    writer.write_all(&encode_message(msg))?;
    writer.flush()
}

/// Per-connection id source: strictly increasing integers starting at 1.
#[derive(Debug, Default)]
pub struct IdCounter {
    next: i64,
}

impl IdCounter {
    pub fn new() -> Self {
        IdCounter { next: 0 }
    }

    pub fn next_id(&mut self) -> RequestId {
        self.next += 1;
        RequestId::Number(self.next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use std::io::Cursor;

    fn roundtrip(msg: &RpcMessage) -> RpcMessage {
        let bytes = encode_message(msg);
        let mut cursor = Cursor::new(bytes);
        decode_message(&mut cursor).unwrap().unwrap()
    }

    #[test]
    fn exit_notification_frames_exact_bytes() {
        let msg = RpcMessage::notification("exit", None);
        let bytes = encode_message(&msg);
        let body = br#"{"jsonrpc":"2.0","method":"exit"}"#;
        let mut expected = format!("Content-Length: {}\r\n\r\n", body.len()).into_bytes();
        expected.extend_from_slice(body);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn shutdown_request_roundtrips() {
        let msg = RpcMessage::request(RequestId::Number(1), "shutdown", None);
        assert_eq!(roundtrip(&msg), msg);
    }

    #[test]
    fn null_result_has_no_error_key() {
        let msg = RpcMessage::response_ok(RequestId::Number(1), Value::Null);
        let json = serde_json::to_string(&msg.to_json()).unwrap();
        assert!(json.contains(r#""result":null"#));
        assert!(!json.contains(r#""error""#));
        assert_eq!(roundtrip(&msg), msg);
    }

    #[test]
    fn error_response_roundtrips() {
        let msg = RpcMessage::response_err(
            RequestId::Text("a7".into()),
            RpcError::invalid_params("missing uri").with_data(json!({"entry": "uri"})),
        );
        assert_eq!(roundtrip(&msg), msg);
    }

    #[test]
    fn missing_content_length_is_malformed_header() {
        let mut cursor = Cursor::new(b"Content-Type: utf8\r\n\r\n{}".to_vec());
        match decode_message(&mut cursor) {
            Err(ProtocolError::MalformedHeader(_)) => {}
            other => panic!("expected MalformedHeader, got {other:?}"),
        }
    }

    #[test]
    fn truncated_body_is_malformed_json() {
        let body = br#"{"jsonrpc":"2.0","#;
        let mut frame = format!("Content-Length: {}\r\n\r\n", body.len()).into_bytes();
        frame.extend_from_slice(body);
        let mut cursor = Cursor::new(frame);
        match decode_message(&mut cursor) {
            Err(ProtocolError::MalformedJson(_)) => {}
            other => panic!("expected MalformedJson, got {other:?}"),
        }
    }

    #[test]
    fn unknown_headers_are_ignored() {
        let body = br#"{"jsonrpc":"2.0","method":"exit"}"#;
        let frame = format!(
            "X-Custom: whatever\r\nContent-Length: {}\r\nContent-Type: application/json\r\n\r\n",
            body.len()
        );
        let mut bytes = frame.into_bytes();
        bytes.extend_from_slice(body);
        let mut cursor = Cursor::new(bytes);
        let msg = decode_message(&mut cursor).unwrap().unwrap();
        assert_eq!(msg, RpcMessage::notification("exit", None));
    }

    #[test]
    fn concatenated_frames_decode_in_order() {
        let msgs = vec![
            RpcMessage::request(RequestId::Number(1), "initialize", Some(json!({"a": 1}))),
            RpcMessage::notification("initialized", Some(json!({}))),
            RpcMessage::response_ok(RequestId::Number(1), json!({"capabilities": {}})),
        ];
        let mut bytes = Vec::new();
        for m in &msgs {
            bytes.extend_from_slice(&encode_message(m));
        }
        let mut cursor = Cursor::new(bytes);
        for expected in &msgs {
            let got = decode_message(&mut cursor).unwrap().unwrap();
            assert_eq!(&got, expected);
        }
        assert!(decode_message(&mut cursor).unwrap().is_none());
    }

    #[test]
    fn id_counter_starts_at_one_and_increases() {
        let mut counter = IdCounter::new();
        assert_eq!(counter.next_id(), RequestId::Number(1));
        assert_eq!(counter.next_id(), RequestId::Number(2));
        assert_eq!(counter.next_id(), RequestId::Number(3));
        assert_eq!(counter.next_id(), RequestId::Number(4));

        let mut other = IdCounter::new();
        assert_eq!(other.next_id(), RequestId::Number(1));
    }

    #[test]
    fn string_ids_echo_verbatim() {
        let msg = RpcMessage::request(RequestId::Text("client-7".into()), "shutdown", None);
        let RpcMessage::Request { id, .. } = roundtrip(&msg) else {
            panic!("not a request");
        };
        assert_eq!(id, RequestId::Text("client-7".into()));
    }
}
