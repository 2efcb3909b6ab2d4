//! Request dispatch: lifecycle gating, capability gating, document
//! synchronization side effects, and routing to the feature engines. The
//! handler owns the workspace and processes one message at a time; the
//! transport layer feeds it from a reader flow that also sets cancellation
//! flags so long-running engines can stop mid-request.

use crate::base_protocol::{RpcError, RpcMessage};
use crate::ct::{self, ExpandedTrace};
use crate::minispec::ast::{SpecModule, Type};
use crate::pog::{self, PogInput};
use crate::proof::{self, ProofEngine};
use crate::slsp_types::*;
use crate::translate;
use serde_json::Value;
use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

pub const DEFAULT_BATCH_SIZE: usize = 50;

/// Outbound message consumer; the transport serializes writes through it.
pub trait MessageSink {
    fn send(&mut self, msg: &RpcMessage);
}

/// Cancellation flags shared between the reader flow (which sets them) and
/// the handler (which passes them to engines). Keyed by request id.
pub type CancelRegistry = Arc<Mutex<HashMap<crate::base_protocol::RequestId, Arc<AtomicBool>>>>;

/// Feature switches; a disabled feature's methods do not exist (−32601) and
/// its capability is not announced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Features {
    pub pog: bool,
    pub ct: bool,
    pub tr: bool,
    pub tp: bool,
}

impl Default for Features {
    fn default() -> Self {
        Features { pog: true, ct: true, tr: true, tp: true }
    }
}

impl Features {
    /// Parse a comma-separated feature list, e.g. `pog,ct`.
    pub fn parse(list: &str) -> Result<Self, String> {
        let mut f = Features { pog: false, ct: false, tr: false, tp: false };
        for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match part {
                "pog" => f.pog = true,
                "ct" => f.ct = true,
                "tr" => f.tr = true,
                "tp" => f.tp = true,
                other => return Err(format!("unknown feature: {other} (expected pog,ct,tr,tp)")),
            }
        }
        Ok(f)
    }

    /// Whether the method's owning feature is enabled; non-feature methods
    /// are always allowed.
    fn allows(&self, method: &str) -> bool {
        use methods as m;
        match method {
            m::POG_GENERATE | m::POG_UPDATED => self.pog,
            m::CT_TRACES | m::CT_GENERATE | m::CT_EXECUTE => self.ct,
            m::TR_TRANSLATE => self.tr,
            m::TP_LEMMAS | m::TP_BEGIN_PROOF | m::TP_PROVE | m::TP_GET_COMMANDS
            | m::TP_COMMAND | m::TP_UNDO => self.tp,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lifecycle {
    /// No initialize request yet.
    Uninitialized,
    /// Initialize answered; waiting for the `initialized` notification.
    AwaitingInitialized,
    Ready,
    ShutdownRequested,
}

pub struct Handler<S> {
    sink: S,
    features: Features,
    batch_size: usize,
    lifecycle: Lifecycle,
    ws: super::workspace::Workspace,
    proof: ProofEngine,
    ct_cache: HashMap<String, Arc<ExpandedTrace>>,
    ct_verdicts: HashMap<String, Verdict>,
    cancels: CancelRegistry,
    exit_code: Option<i32>,
}

impl<S: MessageSink> Handler<S> {
    pub fn new(sink: S, features: Features, batch_size: usize, cancels: CancelRegistry) -> Self {
        Handler {
            sink,
            features,
            batch_size: batch_size.max(1),
            lifecycle: Lifecycle::Uninitialized,
            ws: super::workspace::Workspace::new(),
            proof: ProofEngine::new(),
            ct_cache: HashMap::new(),
            ct_verdicts: HashMap::new(),
            cancels,
            exit_code: None,
        }
    }

    /// Set once the `exit` notification arrives (0 after shutdown, else 1).
    pub fn exit_code(&self) -> Option<i32> {
        self.exit_code
    }

    /// Exit code when the input stream ends without an `exit` notification.
    pub fn eof_exit_code(&self) -> i32 {
        if self.lifecycle == Lifecycle::ShutdownRequested {
            0
        } else {
            1
        }
    }

    pub fn sink_mut(&mut self) -> &mut S {
        &mut self.sink
    }

    /// Process one inbound message. Requests always produce exactly one
    /// response; notifications produce none.
    pub fn handle(&mut self, msg: RpcMessage) {
        match msg {
            RpcMessage::Request { id, method, params } => {
                let cancel = self
                    .cancels
                    .lock()
                    .unwrap()
                    .entry(id.clone())
                    .or_default()
                    .clone();
                let version_before = self.ws.version();
                let mut outcome = self.dispatch_request(&method, params, &cancel);
                // feature responses computed against a version that changed
                // before send time are replaced by ContentModified
                if outcome.is_ok()
                    && method.starts_with("slsp/")
                    && self.ws.version() != version_before
                {
                    outcome = Err(RpcError::content_modified());
                }
                self.cancels.lock().unwrap().remove(&id);
                let response = match outcome {
                    Ok(result) => RpcMessage::response_ok(id, result),
                    Err(error) => RpcMessage::response_err(id, error),
                };
                self.sink.send(&response);
            }
            RpcMessage::Notification { method, params } => {
                self.dispatch_notification(&method, params);
            }
            // the server sends no requests, so inbound responses are stray
            RpcMessage::Response { .. } => {}
        }
    }

    fn dispatch_request(
        &mut self,
        method: &str,
        params: Option<Value>,
        cancel: &Arc<AtomicBool>,
    ) -> Result<Value, RpcError> {
        use methods as m;
        match self.lifecycle {
            Lifecycle::Uninitialized | Lifecycle::AwaitingInitialized
                if method != m::INITIALIZE =>
            {
                return Err(RpcError::server_not_initialized());
            }
            Lifecycle::ShutdownRequested => {
                return Err(RpcError::invalid_request("shutdown has been requested"));
            }
            _ => {}
        }
        if method == m::INITIALIZE && self.lifecycle != Lifecycle::Uninitialized {
            return Err(RpcError::invalid_request("initialize may only be sent once"));
        }
        if !self.features.allows(method) {
            return Err(RpcError::method_not_found(method));
        }
        match validate_params(method, params.as_ref())? {
            TypedParams::Initialize(p) => self.on_initialize(p),
            TypedParams::Shutdown => {
                self.lifecycle = Lifecycle::ShutdownRequested;
                Ok(Value::Null)
            }
            TypedParams::PogGenerate(p) => self.on_pog_generate(p, cancel),
            TypedParams::CtTraces(p) => self.on_ct_traces(p),
            TypedParams::CtGenerate(p) => self.on_ct_generate(p),
            TypedParams::CtExecute(p) => self.on_ct_execute(p, cancel),
            TypedParams::Translate(p) => self.on_translate(p),
            TypedParams::TpLemmas(p) => self.on_tp_lemmas(p),
            TypedParams::TpBeginProof(p) => self.on_tp_begin(p),
            TypedParams::TpProve(p) => self.on_tp_prove(p, cancel),
            TypedParams::TpGetCommands => Ok(to_value(proof::commands())),
            TypedParams::TpCommand(p) => self.proof.apply(&p.command).map(to_value),
            TypedParams::TpUndo(p) => self.proof.undo(p.id).map(to_value),
            _ => Err(RpcError::invalid_request(format!(
                "{method} cannot be sent as a request"
            ))),
        }
    }

    fn dispatch_notification(&mut self, method: &str, params: Option<Value>) {
        use methods as m;
        match method {
            m::EXIT => {
                let clean = self.lifecycle == Lifecycle::ShutdownRequested;
                self.exit_code = Some(if clean { 0 } else { 1 });
                return;
            }
            m::CANCEL_REQUEST => {
                if let Ok(TypedParams::CancelRequest(p)) = validate_params(method, params.as_ref())
                {
                    // ids not in flight (finished or never seen) are ignored
                    if let Some(flag) = self.cancels.lock().unwrap().get(&p.id) {
                        flag.store(true, Ordering::Relaxed);
                    }
                }
                return;
            }
            m::INITIALIZED => {
                if self.lifecycle == Lifecycle::AwaitingInitialized {
                    self.lifecycle = Lifecycle::Ready;
                }
                return;
            }
            _ => {}
        }
        if self.lifecycle != Lifecycle::Ready {
            return; // document notifications are dropped until ready
        }
        match validate_params(method, params.as_ref()) {
            Ok(TypedParams::DidOpen(p)) => {
                self.ws.open(p.text_document.uri.clone(), p.text_document.text);
                self.after_content_change(p.text_document.uri);
            }
            Ok(TypedParams::DidChange(p)) => {
                // full-text sync: the last change payload wins
                if let Some(change) = p.content_changes.into_iter().next_back() {
                    self.ws.change(p.text_document.uri.clone(), change.text);
                    self.after_content_change(p.text_document.uri);
                }
            }
            Ok(TypedParams::DidClose(p)) => {
                self.ws.close(&p.text_document.uri);
                self.after_content_change(p.text_document.uri);
            }
            _ => {} // unknown or malformed notifications are dropped
        }
    }

    /// Derived state is version-bound: any edit discards proof sessions and
    /// cached expansions, then republishes diagnostics and the POG freshness
    /// signal (in that order).
    fn after_content_change(&mut self, uri: DocumentUri) {
        self.proof.invalidate();
        self.ct_cache.clear();
        self.ct_verdicts.clear();
        let diagnostics = self.ws.diagnostics_for(&uri);
        self.notify(
            methods::PUBLISH_DIAGNOSTICS,
            PublishDiagnosticsParams { uri, diagnostics },
        );
        if self.features.pog {
            let successful = self.ws.is_clean();
            self.notify(methods::POG_UPDATED, PogUpdatedParams { successful });
        }
    }

    fn notify<T: serde::Serialize>(&mut self, method: &str, params: T) {
        self.sink.send(&RpcMessage::notification(method, Some(to_value(params))));
    }

    fn on_initialize(&mut self, p: InitializeParams) -> Result<Value, RpcError> {
        if let Some(root) = p.root_uri {
            self.ws.set_root(root)?;
        }
        self.lifecycle = Lifecycle::AwaitingInitialized;
        let f = self.features;
        let result = InitializeResult {
            capabilities: ServerCapabilities {
                text_document_sync: 1,
                experimental: ExperimentalCapabilities {
                    slsp: SlspCapabilities {
                        proof_obligation_provider: f.pog,
                        combinatorial_test_provider: f.ct,
                        translate_provider: f.tr.then(|| TranslateProvider {
                            language_id: translate::LANGUAGE_IDS
                                .iter()
                                .map(|s| s.to_string())
                                .collect(),
                        }),
                        theorem_proving_provider: f.tp,
                    },
                },
            },
            server_info: Some(ServerInfo {
                name: "slsp-server".into(),
                version: Some(env!("CARGO_PKG_VERSION").into()),
            }),
        };
        Ok(to_value(result))
    }

    fn require_clean(&self) -> Result<(), RpcError> {
        if self.ws.is_clean() {
            Ok(())
        } else {
            Err(RpcError::internal(format!(
                "project has errors: {}",
                self.ws.first_error().unwrap_or_default()
            )))
        }
    }

    fn on_pog_generate(
        &mut self,
        p: PogGenerateParams,
        cancel: &AtomicBool,
    ) -> Result<Value, RpcError> {
        let scope: Vec<DocumentUri> =
            self.ws.select_scope(&p.uri)?.into_iter().cloned().collect();
        self.require_clean()?;
        let inputs: Vec<PogInput> = scope
            .iter()
            .map(|uri| {
                let checked = &self.ws.get(uri).expect("scope uris exist").checked;
                PogInput {
                    uri,
                    module: checked.module.as_ref().expect("clean project parses"),
                    types: &checked.check.types,
                }
            })
            .collect();
        let obligations = pog::generate(&inputs, cancel)?;
        Ok(to_value(obligations))
    }

    fn on_ct_traces(&self, p: CtTracesParams) -> Result<Value, RpcError> {
        let scope: Vec<DocumentUri> = match &p.uri {
            Some(uri) => self.ws.select_scope(uri)?.into_iter().cloned().collect(),
            None => self.ws.iter().map(|(u, _)| u.clone()).collect(),
        };
        let mut symbols = Vec::new();
        for uri in &scope {
            let Some(module) = &self.ws.get(uri).expect("scope uris exist").checked.module
            else {
                continue;
            };
            if module.traces.is_empty() {
                continue;
            }
            let traces = module
                .traces
                .iter()
                .map(|t| {
                    let qualified = format!("{}.{}", module.name, t.name);
                    CTTrace {
                        verdict: self.ct_verdicts.get(&qualified).copied(),
                        name: qualified,
                        location: Location { uri: uri.clone(), range: t.location },
                    }
                })
                .collect();
            symbols.push(CTSymbol { name: module.name.clone(), traces });
        }
        Ok(to_value(symbols))
    }

    /// Resolve `Module.trace` to its bare name and a clone of the (clean)
    /// defining module.
    fn find_trace(&self, qualified: &str) -> Result<(String, SpecModule), RpcError> {
        let unknown = || RpcError::invalid_params(format!("unknown trace: {qualified}"));
        let (module_name, trace_name) = qualified.split_once('.').ok_or_else(unknown)?;
        for (uri, entry) in self.ws.iter() {
            let Some(module) = &entry.checked.module else { continue };
            if module.name == module_name && module.trace(trace_name).is_some() {
                if !entry.checked.is_clean() {
                    return Err(RpcError::internal(format!(
                        "document has errors: {}",
                        uri.as_str()
                    )));
                }
                return Ok((trace_name.to_string(), module.clone()));
            }
        }
        Err(unknown())
    }

    fn expansion_for(&mut self, qualified: &str) -> Result<(Arc<ExpandedTrace>, SpecModule), RpcError> {
        let (trace_name, module) = self.find_trace(qualified)?;
        let version = self.ws.version();
        if let Some(cached) = self.ct_cache.get(qualified) {
            if cached.generated_at_version == version {
                return Ok((Arc::clone(cached), module));
            }
        }
        let trace = module.trace(&trace_name).expect("resolved above");
        let tests = ct::expand(&trace.body).map_err(|e| RpcError::internal(e.to_string()))?;
        let expansion = Arc::new(ExpandedTrace {
            trace_name: qualified.to_string(),
            tests,
            generated_at_version: version,
        });
        self.ct_cache.insert(qualified.to_string(), Arc::clone(&expansion));
        Ok((expansion, module))
    }

    fn on_ct_generate(&mut self, p: CtGenerateParams) -> Result<Value, RpcError> {
        let (expansion, _) = self.expansion_for(&p.name)?;
        Ok(to_value(CtGenerateResult {
            number_of_tests: expansion.tests.len() as u64,
        }))
    }

    fn on_ct_execute(
        &mut self,
        p: CtExecuteParams,
        cancel: &AtomicBool,
    ) -> Result<Value, RpcError> {
        let (expansion, module) = self.expansion_for(&p.name)?;
        let total = expansion.tests.len() as u64;
        let range = p
            .range
            .unwrap_or(NumberRange { start: None, end: None })
            .resolve(total);
        let filter = match &p.filter {
            Some(options) => resolve_filter(options)?,
            None => None,
        };
        let mut verdicts: Vec<Verdict> = Vec::new();
        if let Some(token) = p.partial_result_token {
            let batch_size = self.batch_size;
            let mut batch: Vec<CTTestCase> = Vec::new();
            let sink = &mut self.sink;
            let outcome = ct::execute_range(
                &expansion.tests,
                &module,
                range,
                filter,
                cancel,
                |case| {
                    verdicts.extend(case.verdict);
                    batch.push(case);
                    if batch.len() == batch_size {
                        let value = to_value(std::mem::take(&mut batch));
                        let params = ProgressParams { token: token.clone(), value };
                        sink.send(&RpcMessage::notification(
                            methods::PROGRESS,
                            Some(to_value(params)),
                        ));
                    }
                },
            );
            outcome?; // streamed batches stand even when cancelled
            if !batch.is_empty() {
                let params = ProgressParams { token: token.clone(), value: to_value(batch) };
                self.notify(methods::PROGRESS, params);
            }
            self.record_verdict(&p.name, &verdicts);
            Ok(Value::Array(Vec::new()))
        } else {
            let mut cases = Vec::new();
            ct::execute_range(&expansion.tests, &module, range, filter, cancel, |case| {
                verdicts.extend(case.verdict);
                cases.push(case);
            })?;
            self.record_verdict(&p.name, &verdicts);
            Ok(to_value(cases))
        }
    }

    fn record_verdict(&mut self, qualified: &str, verdicts: &[Verdict]) {
        match ct::aggregate_verdicts(verdicts.iter().copied()) {
            Some(v) => {
                self.ct_verdicts.insert(qualified.to_string(), v);
            }
            None => {
                self.ct_verdicts.remove(qualified);
            }
        }
    }

    fn on_translate(&self, p: TranslateParams) -> Result<Value, RpcError> {
        if !translate::LANGUAGE_IDS.contains(&p.language_id.as_str()) {
            return Err(RpcError::invalid_params(format!(
                "unknown languageId: {}",
                p.language_id
            )));
        }
        let scope: Vec<DocumentUri> = match &p.uri {
            Some(uri) => self.ws.select_scope(uri)?.into_iter().cloned().collect(),
            None => self.ws.iter().map(|(u, _)| u.clone()).collect(),
        };
        if !self.ws.parses() {
            return Err(RpcError::internal(format!(
                "project has parse errors: {}",
                self.ws.first_error().unwrap_or_default()
            )));
        }
        let modules: Vec<&SpecModule> = scope
            .iter()
            .map(|uri| {
                self.ws
                    .get(uri)
                    .expect("scope uris exist")
                    .checked
                    .module
                    .as_ref()
                    .expect("checked above")
            })
            .collect();
        let main = translate::translate(&modules, &p.language_id, &p.save_uri)?;
        Ok(to_value(TranslateResult { uri: main }))
    }

    fn on_tp_lemmas(&self, p: TpLemmasParams) -> Result<Value, RpcError> {
        let scope: Vec<DocumentUri> = match &p.project_uri {
            Some(uri) => self.ws.select_scope(uri)?.into_iter().cloned().collect(),
            None => self.ws.iter().map(|(u, _)| u.clone()).collect(),
        };
        let mut lemmas = Vec::new();
        for uri in &scope {
            let Some(module) = &self.ws.get(uri).expect("scope uris exist").checked.module
            else {
                continue;
            };
            for l in &module.lemmas {
                let qualified = format!("{}.{}", module.name, l.name);
                let status = if self.proof.is_proved(&qualified) {
                    LemmaStatus::Proved
                } else {
                    LemmaStatus::Unproved
                };
                lemmas.push(Lemma {
                    name: l.name.clone(),
                    theory: module.name.clone(),
                    location: Location { uri: uri.clone(), range: l.location },
                    kind: "lemma".into(),
                    status,
                });
            }
        }
        Ok(to_value(lemmas))
    }

    /// Resolve a lemma by qualified (`M.L`) or unambiguous bare (`L`) name.
    /// Returns its qualified name, bare name, defining module (clean), and
    /// inferred variable types.
    fn find_lemma(
        &self,
        name: &str,
    ) -> Result<(String, String, SpecModule, Vec<(String, Type)>), RpcError> {
        let mut matches: Vec<(&DocumentUri, &super::workspace::FileEntry, &SpecModule, &str)> =
            Vec::new();
        for (uri, entry) in self.ws.iter() {
            let Some(module) = &entry.checked.module else { continue };
            match name.split_once('.') {
                Some((module_name, bare)) => {
                    if module.name == module_name && module.lemma(bare).is_some() {
                        matches.push((uri, entry, module, bare));
                    }
                }
                None => {
                    if module.lemma(name).is_some() {
                        matches.push((uri, entry, module, name));
                    }
                }
            }
        }
        match matches.as_slice() {
            [] => Err(RpcError::invalid_params(format!("unknown lemma: {name}"))),
            [(uri, entry, module, bare)] => {
                if !entry.checked.is_clean() {
                    return Err(RpcError::internal(format!(
                        "document has errors: {}",
                        uri.as_str()
                    )));
                }
                let vars = entry.checked.check.lemma_vars.get(*bare).cloned().unwrap_or_default();
                Ok((
                    format!("{}.{}", module.name, bare),
                    bare.to_string(),
                    (*module).clone(),
                    vars,
                ))
            }
            several => {
                let candidates: Vec<String> = several
                    .iter()
                    .map(|(_, _, m, bare)| format!("{}.{}", m.name, bare))
                    .collect();
                Err(RpcError::invalid_params(format!(
                    "ambiguous lemma name: {name} (candidates: {})",
                    candidates.join(", ")
                )))
            }
        }
    }

    fn on_tp_begin(&mut self, p: TpBeginProofParams) -> Result<Value, RpcError> {
        let (qualified, bare, module, vars) = self.find_lemma(&p.name)?;
        let lemma = module.lemma(&bare).expect("resolved above");
        let state = self.proof.begin(&qualified, lemma, vars, &module);
        Ok(to_value(state))
    }

    fn on_tp_prove(&mut self, p: TpProveParams, cancel: &AtomicBool) -> Result<Value, RpcError> {
        if let Some(name) = &p.name {
            let (qualified, bare, module, vars) = self.find_lemma(name)?;
            let lemma = module.lemma(&bare).expect("resolved above");
            self.proof.begin(&qualified, lemma, vars, &module);
        }
        let response = self.proof.prove_current(cancel)?;
        Ok(to_value(response))
    }
}

fn to_value<T: serde::Serialize>(value: T) -> Value {
    serde_json::to_value(value).expect("wire types serialize")
}
