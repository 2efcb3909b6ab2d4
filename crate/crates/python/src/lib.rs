//! Python bindings for the SLSP reference implementation.
//!
//! One stateless function per engine (analysis, proof obligations,
//! combinatorial test expansion and execution, translation, theorem
//! proving), a stateful [`ProofSession`] mirroring the interactive
//! TP/beginProof / TP/command / TP/undo cycle, and helpers for the
//! header-framed JSON-RPC wire format. Structured results cross the
//! boundary as plain dicts and lists in the wire schema shapes.

use std::io::Cursor;
use std::sync::atomic::AtomicBool;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyBytes, PyDict, PyList, PyString};
use serde_json::Value;

use slsp::base_protocol::{decode_message, encode_message, RpcError, RpcMessage};
use slsp::minispec::{self, CheckedFile, SpecModule};
use slsp::proof::{self, ProofEngine};
use slsp::slsp_types::{DocumentUri, ProofState};
use slsp::{ct, pog, translate};

fn rpc_err(e: RpcError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Convert a JSON value into the corresponding Python object.
fn json_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any().unbind(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any().unbind()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any().unbind()
            } else {
                n.as_f64()
                    .unwrap_or(f64::NAN)
                    .into_pyobject(py)?
                    .into_any()
                    .unbind()
            }
        }
        Value::String(s) => PyString::new(py, s).into_any().unbind(),
        Value::Array(items) => {
            let elems: Vec<Py<PyAny>> =
                items.iter().map(|i| json_to_py(py, i)).collect::<PyResult<_>>()?;
            PyList::new(py, elems)?.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, val) in map {
                dict.set_item(key, json_to_py(py, val)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

/// Serialize a wire type and hand it to Python in its wire shape.
fn pyify<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value).expect("wire types serialize");
    json_to_py(py, &v)
}

/// Analyze and require a clean module, as the POG/CT/TP handlers do.
fn clean_file(text: &str) -> PyResult<CheckedFile> {
    let file = minispec::analyze(text);
    if file.is_clean() {
        return Ok(file);
    }
    let detail = file
        .diagnostics
        .first()
        .map(|d| d.message.clone())
        .unwrap_or_else(|| "no module".into());
    Err(PyValueError::new_err(format!("source has errors: {detail}")))
}

/// Strip a `Module.` qualifier when it names this module.
fn bare<'a>(module: &SpecModule, name: &'a str) -> &'a str {
    match name.split_once('.') {
        Some((m, rest)) if m == module.name => rest,
        _ => name,
    }
}

/// Parse and type-check a module. Returns
/// `{"clean": bool, "module": str | None, "diagnostics": [Diagnostic]}`.
#[pyfunction]
fn analyze(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    let file = minispec::analyze(text);
    let out = PyDict::new(py);
    out.set_item("clean", file.is_clean())?;
    out.set_item("module", file.module.as_ref().map(|m| m.name.clone()))?;
    out.set_item("diagnostics", pyify(py, &file.diagnostics)?)?;
    Ok(out.into_any().unbind())
}

/// Generate the proof obligations of a clean module, in source order,
/// numbered from 1. Each entry is a `ProofObligation` dict.
#[pyfunction]
fn obligations(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    let file = clean_file(text)?;
    let module = file.module.as_ref().expect("clean file has a module");
    let uri = DocumentUri::new(format!("file:///{}.ms", module.name));
    let input = pog::PogInput { uri: &uri, module, types: &file.check.types };
    let obligations = pog::generate(&[input], &AtomicBool::new(false)).map_err(rpc_err)?;
    pyify(py, &obligations)
}

/// Number of test cases a trace expands to, without expanding it.
#[pyfunction]
fn count_tests(text: &str, trace: &str) -> PyResult<u128> {
    let file = clean_file(text)?;
    let module = file.module.as_ref().expect("clean file has a module");
    let def = module
        .trace(bare(module, trace))
        .ok_or_else(|| PyValueError::new_err(format!("unknown trace: {trace}")))?;
    Ok(ct::count(&def.body))
}

/// Expand a trace into its full test-case list; each test case is the
/// list of its rendered calls, e.g. `["f(1)", "g(2)"]`.
#[pyfunction]
fn expand_trace(text: &str, trace: &str) -> PyResult<Vec<Vec<String>>> {
    let file = clean_file(text)?;
    let module = file.module.as_ref().expect("clean file has a module");
    let def = module
        .trace(bare(module, trace))
        .ok_or_else(|| PyValueError::new_err(format!("unknown trace: {trace}")))?;
    let tests = ct::expand(&def.body).map_err(|_| {
        PyValueError::new_err(format!(
            "trace expands to more than {} tests",
            ct::EXPANSION_LIMIT
        ))
    })?;
    Ok(tests
        .iter()
        .map(|seq| seq.iter().map(|call| call.render()).collect())
        .collect())
}

/// Expand and execute every test case of a trace. Each entry is a
/// `CTTestCase` dict carrying the verdict and per-call results.
#[pyfunction]
fn execute_trace(py: Python<'_>, text: &str, trace: &str) -> PyResult<Py<PyAny>> {
    let file = clean_file(text)?;
    let module = file.module.as_ref().expect("clean file has a module");
    let def = module
        .trace(bare(module, trace))
        .ok_or_else(|| PyValueError::new_err(format!("unknown trace: {trace}")))?;
    let tests = ct::expand(&def.body).map_err(|_| {
        PyValueError::new_err(format!(
            "trace expands to more than {} tests",
            ct::EXPANSION_LIMIT
        ))
    })?;
    let mut cases = Vec::with_capacity(tests.len());
    if !tests.is_empty() {
        let range = (1, tests.len() as u64);
        ct::execute_range(&tests, module, range, None, &AtomicBool::new(false), |case| {
            cases.push(case)
        })
        .map_err(rpc_err)?;
    }
    pyify(py, &cases)
}

/// Render a module in one of the supported target languages
/// (see `languages()`). Requires the source to parse.
#[pyfunction]
fn render(text: &str, language: &str) -> PyResult<String> {
    let file = minispec::analyze(text);
    let Some(module) = &file.module else {
        let detail = file
            .diagnostics
            .first()
            .map(|d| d.message.clone())
            .unwrap_or_else(|| "no module".into());
        return Err(PyValueError::new_err(format!("source does not parse: {detail}")));
    };
    translate::render(module, language).ok_or_else(|| {
        PyValueError::new_err(format!(
            "unknown language: {language} (supported: {})",
            translate::LANGUAGE_IDS.join(", ")
        ))
    })
}

/// Identifiers accepted by `render`.
#[pyfunction]
fn languages() -> Vec<String> {
    translate::LANGUAGE_IDS.iter().map(|s| s.to_string()).collect()
}

/// Decide a lemma by exhaustive valuation of its boolean variables.
/// Returns a `TPProveResponse` dict (`status` is "proved" or "unproved").
#[pyfunction]
fn prove(py: Python<'_>, text: &str, lemma: &str) -> PyResult<Py<PyAny>> {
    let mut session = ProofSession::new(text, lemma)?;
    session.prove(py)
}

/// The interactive proof commands and their descriptions.
#[pyfunction]
fn commands(py: Python<'_>) -> PyResult<Py<PyAny>> {
    pyify(py, &proof::commands())
}

/// Frame one JSON-RPC message (given as its JSON text) with a
/// Content-Length header, validating its structure first.
#[pyfunction]
fn encode_frame<'py>(py: Python<'py>, body: &str) -> PyResult<Bound<'py, PyBytes>> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| PyValueError::new_err(format!("invalid JSON: {e}")))?;
    let msg = RpcMessage::from_json(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(PyBytes::new(py, &encode_message(&msg)))
}

/// Decode a byte string of consecutive Content-Length frames back into
/// the JSON texts of the messages it carries.
#[pyfunction]
fn decode_frames(data: &[u8]) -> PyResult<Vec<String>> {
    let mut reader = Cursor::new(data);
    let mut out = Vec::new();
    while let Some(msg) =
        decode_message(&mut reader).map_err(|e| PyValueError::new_err(e.to_string()))?
    {
        out.push(serde_json::to_string(&msg.to_json()).expect("wire json serializes"));
    }
    Ok(out)
}

/// An interactive proof over one lemma of one module, mirroring the
/// TP/beginProof / TP/command / TP/undo / TP/prove request cycle.
#[pyclass]
struct ProofSession {
    engine: ProofEngine,
    qualified: String,
    last: ProofState,
}

#[pymethods]
impl ProofSession {
    #[new]
    fn new(text: &str, lemma: &str) -> PyResult<Self> {
        let file = clean_file(text)?;
        let module = file.module.as_ref().expect("clean file has a module");
        let name = bare(module, lemma);
        let def = module
            .lemma(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown lemma: {lemma}")))?;
        let vars = file.check.lemma_vars.get(name).cloned().unwrap_or_default();
        let qualified = format!("{}.{}", module.name, name);
        let mut engine = ProofEngine::new();
        let last = engine.begin(&qualified, def, vars, module);
        Ok(ProofSession { engine, qualified, last })
    }

    /// Qualified name of the lemma under proof (`Module.lemma`).
    #[getter]
    fn lemma(&self) -> &str {
        &self.qualified
    }

    /// Current `ProofState` dict: step id, status, subgoals, applied rules.
    fn state(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        pyify(py, &self.last)
    }

    /// Apply one command (e.g. `"intro"`, `"cases p"`) to the first open
    /// subgoal. Returns a `TPCommandResponse` dict with the new state.
    fn apply(&mut self, py: Python<'_>, command: &str) -> PyResult<Py<PyAny>> {
        let response = self.engine.apply(command).map_err(rpc_err)?;
        self.last = response.state.clone();
        pyify(py, &response)
    }

    /// Restore the state before step `id` (the latest step when omitted)
    /// and discard all later history. Returns the restored `ProofState`.
    #[pyo3(signature = (id=None))]
    fn undo(&mut self, py: Python<'_>, id: Option<u32>) -> PyResult<Py<PyAny>> {
        let state = self.engine.undo(id).map_err(rpc_err)?;
        self.last = state.clone();
        pyify(py, &state)
    }

    /// Decide the remaining subgoals by exhaustive valuation, leaving the
    /// rule history untouched. Returns a `TPProveResponse` dict.
    fn prove(&mut self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let response = self
            .engine
            .prove_current(&AtomicBool::new(false))
            .map_err(rpc_err)?;
        pyify(py, &response)
    }
}

#[pymodule]
fn slsp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(obligations, m)?)?;
    m.add_function(wrap_pyfunction!(count_tests, m)?)?;
    m.add_function(wrap_pyfunction!(expand_trace, m)?)?;
    m.add_function(wrap_pyfunction!(execute_trace, m)?)?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(languages, m)?)?;
    m.add_function(wrap_pyfunction!(prove, m)?)?;
    m.add_function(wrap_pyfunction!(commands, m)?)?;
    m.add_function(wrap_pyfunction!(encode_frame, m)?)?;
    m.add_function(wrap_pyfunction!(decode_frames, m)?)?;
    m.add_class::<ProofSession>()?;
    m.add("EXPANSION_LIMIT", ct::EXPANSION_LIMIT)?;
    Ok(())
}
