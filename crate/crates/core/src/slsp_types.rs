//! Typed schemas for the SLSP method set, the minimal LSP subset and the
//! shared language-neutral data types, plus inbound parameter validation.
//!
//! All SLSP methods are prefixed `slsp/`. Wire shapes are serde-derived;
//! field declaration order is the canonical key order on the wire.

use crate::base_protocol::{RequestId, RpcError};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};

/// An absolute `file:` URI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocumentUri(pub String);

impl DocumentUri {
    pub fn new(s: impl Into<String>) -> Self {
        DocumentUri(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn from_path(path: &Path) -> Result<Self, String> {
        let url = url::Url::from_file_path(path)
            .map_err(|_| format!("not an absolute path: {}", path.display()))?;
        Ok(DocumentUri(url.to_string()))
    }

    /// Percent-decode back to a filesystem path. Fails for non-`file:` or
    /// relative URIs.
    pub fn to_path(&self) -> Result<PathBuf, String> {
        let url = url::Url::parse(&self.0).map_err(|e| format!("invalid uri {}: {e}", self.0))?;
        if url.scheme() != "file" {
            return Err(format!("not a file uri: {}", self.0));
        }
        url.to_file_path()
            .map_err(|_| format!("uri has no local path: {}", self.0))
    }
}

impl std::fmt::Display for DocumentUri {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Zero-based line/character position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position {
    pub line: u32,
    pub character: u32,
}

impl Position {
    pub fn new(line: u32, character: u32) -> Self {
        Position { line, character }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Range {
    pub start: Position,
    pub end: Position,
}

impl Range {
    pub fn new(start: Position, end: Position) -> Self {
        debug_assert!(start <= end, "range start after end");
        Range { start, end }
    }

    pub fn zero() -> Self {
        Range {
            start: Position::new(0, 0),
            end: Position::new(0, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub uri: DocumentUri,
    pub range: Range,
}

/// One generated proof obligation. `source` carries the pretty-printed
/// obligation expression so a client can display it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofObligation {
    pub id: u32,
    pub kind: String,
    pub name: String,
    pub location: Location,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proved: Option<bool>,
}

/// Per-test outcome, encoded as a compact integer on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Verdict {
    Passed = 1,
    Failed = 2,
    Inconclusive = 3,
    Filtered = 4,
}

impl From<Verdict> for u8 {
    fn from(v: Verdict) -> u8 {
        v as u8
    }
}

impl TryFrom<u8> for Verdict {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Verdict::Passed),
            2 => Ok(Verdict::Failed),
            3 => Ok(Verdict::Inconclusive),
            4 => Ok(Verdict::Filtered),
            other => Err(format!("invalid verdict: {other}")),
        }
    }
}

/// Trace-group outline entry: one group per module, one `CTTrace` per trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CTSymbol {
    pub name: String,
    pub traces: Vec<CTTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CTTrace {
    pub name: String,
    pub location: Location,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

/// One executed (or filtered) test case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CTTestCase {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    pub sequence: Vec<CTCallResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CTCallResult {
    pub case: String,
    pub result: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CTFilterOption {
    pub key: String,
    pub value: Value,
}

/// Filter options resolved against the recognized vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedFilter {
    pub limit: u64,
    pub seed: i64,
}

/// Resolve `random.limit` / `random.seed` filter options. Unknown keys and
/// ill-typed values are InvalidParams.
pub fn resolve_filter(options: &[CTFilterOption]) -> Result<Option<ResolvedFilter>, RpcError> {
    if options.is_empty() {
        return Ok(None);
    }
    let mut limit: Option<u64> = None;
    let mut seed: i64 = 0;
    for opt in options {
        match opt.key.as_str() {
            "random.limit" => {
                let n = opt.value.as_u64().filter(|&n| n >= 1).ok_or_else(|| {
                    RpcError::invalid_params("filter random.limit must be an integer >= 1")
                })?;
                limit = Some(n);
            }
            "random.seed" => {
                seed = opt.value.as_i64().ok_or_else(|| {
                    RpcError::invalid_params("filter random.seed must be an integer")
                })?;
            }
            other => {
                return Err(RpcError::invalid_params(format!(
                    "unknown filter option: {other}"
                )));
            }
        }
    }
    let limit = limit
        .ok_or_else(|| RpcError::invalid_params("filter requires random.limit"))?;
    Ok(Some(ResolvedFilter { limit, seed }))
}

/// 1-based inclusive test range; absent start means 1, absent end means the
/// last test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NumberRange {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<u64>,
}

impl NumberRange {
    pub fn validate(&self) -> Result<(), RpcError> {
        if let Some(start) = self.start {
            if start < 1 {
                return Err(RpcError::invalid_params("range.start must be >= 1"));
            }
        }
        if let (Some(start), Some(end)) = (self.start, self.end) {
            if end < start {
                return Err(RpcError::invalid_params("range.end must be >= range.start"));
            }
        }
        Ok(())
    }

    /// Clamp to `1..=total`, yielding an empty range when start exceeds total.
    pub fn resolve(&self, total: u64) -> (u64, u64) {
        let start = self.start.unwrap_or(1);
        let end = self.end.unwrap_or(total).min(total);
        (start, end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaStatus {
    Unproved,
    Proved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma {
    pub name: String,
    pub theory: String,
    pub location: Location,
    pub kind: String,
    pub status: LemmaStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProofStatus {
    Open,
    Proved,
}

/// Theorem-prover session snapshot: `id` equals the number of applied rules,
/// `status` is proved iff `subgoals` is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofState {
    pub id: u32,
    pub status: ProofStatus,
    pub subgoals: Vec<String>,
    pub rules: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProveStatus {
    Proved,
    Unproved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TPProveResponse {
    pub status: ProveStatus,
    #[serde(rename = "processingTime")]
    pub processing_time: u64,
    #[serde(
        rename = "suggestedCommands",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub suggested_commands: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TPCommand {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TPCommandResponse {
    pub description: String,
    pub state: ProofState,
}

/// Capabilities announced under `experimental.slsp` of the LSP handshake.
/// A server must not answer methods of a feature it did not announce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlspCapabilities {
    #[serde(rename = "proofObligationProvider")]
    pub proof_obligation_provider: bool,
    #[serde(rename = "combinatorialTestProvider")]
    pub combinatorial_test_provider: bool,
    #[serde(
        rename = "translateProvider",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub translate_provider: Option<TranslateProvider>,
    #[serde(rename = "theoremProvingProvider")]
    pub theorem_proving_provider: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateProvider {
    #[serde(rename = "languageId")]
    pub language_id: Vec<String>,
}

// ---------------------------------------------------------------------------
// Method parameter / result shapes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PogGenerateParams {
    pub uri: DocumentUri,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PogUpdatedParams {
    pub successful: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CtTracesParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri: Option<DocumentUri>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtGenerateParams {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtGenerateResult {
    #[serde(rename = "numberOfTests")]
    pub number_of_tests: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtExecuteParams {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<Vec<CTFilterOption>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<NumberRange>,
    #[serde(
        rename = "partialResultToken",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub partial_result_token: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri: Option<DocumentUri>,
    #[serde(rename = "languageId")]
    pub language_id: String,
    #[serde(rename = "saveUri")]
    pub save_uri: DocumentUri,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateResult {
    pub uri: DocumentUri,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TpLemmasParams {
    #[serde(rename = "projectUri", default, skip_serializing_if = "Option::is_none")]
    pub project_uri: Option<DocumentUri>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpBeginProofParams {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TpProveParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpCommandParams {
    pub command: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TpUndoParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u32>,
}

// ---------------------------------------------------------------------------
// Minimal LSP subset
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InitializeParams {
    #[serde(rename = "rootUri", default, skip_serializing_if = "Option::is_none")]
    pub root_uri: Option<DocumentUri>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capabilities: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitializeResult {
    pub capabilities: ServerCapabilities,
    #[serde(rename = "serverInfo", default, skip_serializing_if = "Option::is_none")]
    pub server_info: Option<ServerInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerCapabilities {
    /// 1 = full-text document sync.
    #[serde(rename = "textDocumentSync")]
    pub text_document_sync: u8,
    pub experimental: ExperimentalCapabilities,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentalCapabilities {
    pub slsp: SlspCapabilities,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerInfo {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextDocumentItem {
    pub uri: DocumentUri,
    #[serde(rename = "languageId", default, skip_serializing_if = "Option::is_none")]
    pub language_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<i64>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextDocumentIdentifier {
    pub uri: DocumentUri,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionedTextDocumentIdentifier {
    pub uri: DocumentUri,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DidOpenParams {
    #[serde(rename = "textDocument")]
    pub text_document: TextDocumentItem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentChange {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DidChangeParams {
    #[serde(rename = "textDocument")]
    pub text_document: VersionedTextDocumentIdentifier,
    #[serde(rename = "contentChanges")]
    pub content_changes: Vec<ContentChange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DidCloseParams {
    #[serde(rename = "textDocument")]
    pub text_document: TextDocumentIdentifier,
}

pub const SEVERITY_ERROR: u8 = 1;
pub const SEVERITY_WARNING: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub range: Range,
    pub severity: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub message: String,
}

impl Diagnostic {
    pub fn error(range: Range, message: impl Into<String>) -> Self {
        Diagnostic {
            range,
            severity: SEVERITY_ERROR,
            source: Some("minispec".into()),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishDiagnosticsParams {
    pub uri: DocumentUri,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancelParams {
    pub id: RequestId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressParams {
    pub token: Value,
    pub value: Value,
}

// ---------------------------------------------------------------------------
// Method table
// ---------------------------------------------------------------------------

/// Method name constants.
pub mod methods {
    pub const INITIALIZE: &str = "initialize";
    pub const INITIALIZED: &str = "initialized";
    pub const SHUTDOWN: &str = "shutdown";
    pub const EXIT: &str = "exit";
    pub const DID_OPEN: &str = "textDocument/didOpen";
    pub const DID_CHANGE: &str = "textDocument/didChange";
    pub const DID_CLOSE: &str = "textDocument/didClose";
    pub const PUBLISH_DIAGNOSTICS: &str = "textDocument/publishDiagnostics";
    pub const CANCEL_REQUEST: &str = "$/cancelRequest";
    pub const PROGRESS: &str = "$/progress";

    pub const POG_GENERATE: &str = "slsp/POG/generate";
    pub const POG_UPDATED: &str = "slsp/POG/updated";
    pub const CT_TRACES: &str = "slsp/CT/traces";
    pub const CT_GENERATE: &str = "slsp/CT/generate";
    pub const CT_EXECUTE: &str = "slsp/CT/execute";
    pub const TR_TRANSLATE: &str = "slsp/TR/translate";
    pub const TP_LEMMAS: &str = "slsp/TP/lemmas";
    pub const TP_BEGIN_PROOF: &str = "slsp/TP/beginProof";
    pub const TP_PROVE: &str = "slsp/TP/prove";
    pub const TP_GET_COMMANDS: &str = "slsp/TP/getCommands";
    pub const TP_COMMAND: &str = "slsp/TP/command";
    pub const TP_UNDO: &str = "slsp/TP/undo";

    /// The twelve SLSP extension methods.
    pub const SLSP_METHODS: [&str; 12] = [
        POG_GENERATE,
        POG_UPDATED,
        CT_TRACES,
        CT_GENERATE,
        CT_EXECUTE,
        TR_TRANSLATE,
        TP_LEMMAS,
        TP_BEGIN_PROOF,
        TP_PROVE,
        TP_GET_COMMANDS,
        TP_COMMAND,
        TP_UNDO,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ClientToServer,
    ServerToClient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Request,
    Notification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodInfo {
    pub name: &'static str,
    pub direction: Direction,
    pub kind: MessageKind,
    pub params: &'static str,
    pub result: Option<&'static str>,
}

/// The full method table: the 12 SLSP methods plus the supported LSP subset.
pub fn method_table() -> &'static [MethodInfo] {
    use Direction::*;
    use MessageKind::*;
    const TABLE: &[MethodInfo] = &[
        MethodInfo { name: methods::INITIALIZE, direction: ClientToServer, kind: Request, params: "InitializeParams", result: Some("InitializeResult") },
        MethodInfo { name: methods::INITIALIZED, direction: ClientToServer, kind: Notification, params: "null", result: None },
        MethodInfo { name: methods::SHUTDOWN, direction: ClientToServer, kind: Request, params: "null", result: Some("null") },
        MethodInfo { name: methods::EXIT, direction: ClientToServer, kind: Notification, params: "null", result: None },
        MethodInfo { name: methods::DID_OPEN, direction: ClientToServer, kind: Notification, params: "{textDocument: TextDocumentItem}", result: None },
        MethodInfo { name: methods::DID_CHANGE, direction: ClientToServer, kind: Notification, params: "{textDocument, contentChanges}", result: None },
        MethodInfo { name: methods::DID_CLOSE, direction: ClientToServer, kind: Notification, params: "{textDocument}", result: None },
        MethodInfo { name: methods::PUBLISH_DIAGNOSTICS, direction: ServerToClient, kind: Notification, params: "{uri, diagnostics: Diagnostic[]}", result: None },
        MethodInfo { name: methods::CANCEL_REQUEST, direction: ClientToServer, kind: Notification, params: "{id: number | string}", result: None },
        MethodInfo { name: methods::PROGRESS, direction: ServerToClient, kind: Notification, params: "{token, value}", result: None },
        MethodInfo { name: methods::POG_GENERATE, direction: ClientToServer, kind: Request, params: "{uri: DocumentUri}", result: Some("ProofObligation[]") },
        MethodInfo { name: methods::POG_UPDATED, direction: ServerToClient, kind: Notification, params: "{successful: boolean}", result: None },
        MethodInfo { name: methods::CT_TRACES, direction: ClientToServer, kind: Request, params: "{uri?: DocumentUri}", result: Some("CTSymbol[]") },
        MethodInfo { name: methods::CT_GENERATE, direction: ClientToServer, kind: Request, params: "{name: string}", result: Some("{numberOfTests: number}") },
        MethodInfo { name: methods::CT_EXECUTE, direction: ClientToServer, kind: Request, params: "{name, filter?: CTFilterOption[], range?: NumberRange}", result: Some("CTTestCase[]") },
        MethodInfo { name: methods::TR_TRANSLATE, direction: ClientToServer, kind: Request, params: "{uri?, languageId: string, saveUri: DocumentUri}", result: Some("{uri: DocumentUri}") },
        MethodInfo { name: methods::TP_LEMMAS, direction: ClientToServer, kind: Request, params: "{projectUri?: DocumentUri}", result: Some("Lemma[]") },
        MethodInfo { name: methods::TP_BEGIN_PROOF, direction: ClientToServer, kind: Request, params: "{name: string}", result: Some("ProofState") },
        MethodInfo { name: methods::TP_PROVE, direction: ClientToServer, kind: Request, params: "{name?: string}", result: Some("TPProveResponse") },
        MethodInfo { name: methods::TP_GET_COMMANDS, direction: ClientToServer, kind: Request, params: "null", result: Some("TPCommand[]") },
        MethodInfo { name: methods::TP_COMMAND, direction: ClientToServer, kind: Request, params: "{command: string}", result: Some("TPCommandResponse") },
        MethodInfo { name: methods::TP_UNDO, direction: ClientToServer, kind: Request, params: "{id?: number}", result: Some("ProofState") },
    ];
    TABLE
}

pub fn method_info(name: &str) -> Option<&'static MethodInfo> {
    method_table().iter().find(|m| m.name == name)
}

// ---------------------------------------------------------------------------
// Parameter validation
// ---------------------------------------------------------------------------

/// Decoded, validated parameters of an inbound message.
#[derive(Debug, Clone, PartialEq)]
pub enum TypedParams {
    Initialize(InitializeParams),
    Initialized,
    Shutdown,
    Exit,
    DidOpen(DidOpenParams),
    DidChange(DidChangeParams),
    DidClose(DidCloseParams),
    PublishDiagnostics(PublishDiagnosticsParams),
    CancelRequest(CancelParams),
    Progress(ProgressParams),
    PogGenerate(PogGenerateParams),
    PogUpdated(PogUpdatedParams),
    CtTraces(CtTracesParams),
    CtGenerate(CtGenerateParams),
    CtExecute(CtExecuteParams),
    Translate(TranslateParams),
    TpLemmas(TpLemmasParams),
    TpBeginProof(TpBeginProofParams),
    TpProve(TpProveParams),
    TpGetCommands,
    TpCommand(TpCommandParams),
    TpUndo(TpUndoParams),
}

fn decode<T: serde::de::DeserializeOwned>(
    method: &str,
    params: Option<&Value>,
) -> Result<T, RpcError> {
    let value = params.cloned().unwrap_or(Value::Object(Default::default()));
    serde_json::from_value(value)
        .map_err(|e| RpcError::invalid_params(format!("{method}: {e}")))
}

/// Decode and validate the params of a known method. Missing required
/// entries are rejected; unknown extra entries are tolerated and preserved
/// in the raw message.
pub fn validate_params(method: &str, params: Option<&Value>) -> Result<TypedParams, RpcError> {
    use methods as m;
    match method {
        m::INITIALIZE => Ok(TypedParams::Initialize(decode(method, params)?)),
        m::INITIALIZED => Ok(TypedParams::Initialized),
        m::SHUTDOWN => Ok(TypedParams::Shutdown),
        m::EXIT => Ok(TypedParams::Exit),
        m::DID_OPEN => Ok(TypedParams::DidOpen(decode(method, params)?)),
        m::DID_CHANGE => Ok(TypedParams::DidChange(decode(method, params)?)),
        m::DID_CLOSE => Ok(TypedParams::DidClose(decode(method, params)?)),
        m::PUBLISH_DIAGNOSTICS => Ok(TypedParams::PublishDiagnostics(decode(method, params)?)),
        m::CANCEL_REQUEST => Ok(TypedParams::CancelRequest(decode(method, params)?)),
        m::PROGRESS => Ok(TypedParams::Progress(decode(method, params)?)),
        m::POG_GENERATE => Ok(TypedParams::PogGenerate(decode(method, params)?)),
        m::POG_UPDATED => Ok(TypedParams::PogUpdated(decode(method, params)?)),
        m::CT_TRACES => Ok(TypedParams::CtTraces(decode(method, params)?)),
        m::CT_GENERATE => Ok(TypedParams::CtGenerate(decode(method, params)?)),
        m::CT_EXECUTE => {
            let p: CtExecuteParams = decode(method, params)?;
            if let Some(range) = &p.range {
                range.validate()?;
            }
            if let Some(filter) = &p.filter {
                resolve_filter(filter)?;
            }
            Ok(TypedParams::CtExecute(p))
        }
        m::TR_TRANSLATE => Ok(TypedParams::Translate(decode(method, params)?)),
        m::TP_LEMMAS => Ok(TypedParams::TpLemmas(decode(method, params)?)),
        m::TP_BEGIN_PROOF => Ok(TypedParams::TpBeginProof(decode(method, params)?)),
        m::TP_PROVE => Ok(TypedParams::TpProve(decode(method, params)?)),
        m::TP_GET_COMMANDS => match params {
            // takes no parameters; tolerate an empty/ignored object or null
            None => Ok(TypedParams::TpGetCommands),
            Some(v) if v.is_null() || v.is_object() => Ok(TypedParams::TpGetCommands),
            Some(_) => Err(RpcError::invalid_params(
                "slsp/TP/getCommands takes no parameters",
            )),
        },
        m::TP_COMMAND => Ok(TypedParams::TpCommand(decode(method, params)?)),
        m::TP_UNDO => Ok(TypedParams::TpUndo(decode(method, params)?)),
        other => Err(RpcError::method_not_found(other)),
    }
}
