//! Session scripts: a JSON array of `send`/`expect`/`sleep` steps driven
//! against a live server. Expectations match the next inbound message with
//! two wildcards: `"$any"` (any value) and `"$id…"` (binds a request id on
//! first use, must equal it afterwards). `$root` in any string is replaced
//! by the project root URI before matching or sending.

use super::{ClientError, Connection, Report};
use crate::base_protocol::RpcMessage;
use serde_json::{json, Map, Value};
use std::collections::HashMap;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Send(Value),
    Expect(Value),
    Sleep(u64),
}

pub fn parse_script(text: &str) -> Result<Vec<Step>, String> {
    let raw: Vec<Map<String, Value>> = serde_json::from_str(text)
        .map_err(|e| format!("script is not a JSON array of step objects: {e}"))?;
    raw.into_iter()
        .enumerate()
        .map(|(i, map)| {
            if map.len() != 1 {
                return Err(format!(
                    "step {}: expected exactly one of send/expect/sleep",
                    i + 1
                ));
            }
            let (kind, value) = map.into_iter().next().expect("len checked");
            match kind.as_str() {
                "send" => Ok(Step::Send(value)),
                "expect" => Ok(Step::Expect(value)),
                "sleep" => value
                    .as_u64()
                    .map(Step::Sleep)
                    .ok_or_else(|| format!("step {}: sleep takes milliseconds", i + 1)),
                other => Err(format!("step {}: unknown step kind: {other}", i + 1)),
            }
        })
        .collect()
}

/// Replace `$root` in every string scalar, in place.
pub fn substitute_root(value: &mut Value, root: &str) {
    match value {
        Value::String(s) => {
            if s.contains("$root") {
                *s = s.replace("$root", root);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|v| substitute_root(v, root)),
        Value::Object(map) => map.values_mut().for_each(|v| substitute_root(v, root)),
        _ => {}
    }
}

/// Wildcard matcher with id bindings shared across a whole script.
#[derive(Debug, Default)]
pub struct Matcher {
    bindings: HashMap<String, Value>,
}

impl Matcher {
    pub fn new() -> Self {
        Matcher::default()
    }

    /// Resolve symbolic ids in an outgoing message: a bound symbol is
    /// replaced by its value, an unbound one by `fresh`, which it binds.
    pub fn resolve_send_id(&mut self, message: &mut Value, fresh: Value) {
        let Some(id) = message.get_mut("id") else { return };
        let Some(symbol) = id.as_str().filter(|s| s.starts_with("$id")) else {
            return;
        };
        let symbol = symbol.to_string();
        match self.bindings.get(&symbol) {
            Some(bound) => *id = bound.clone(),
            None => {
                self.bindings.insert(symbol, fresh.clone());
                *id = fresh;
            }
        }
    }

    /// Subset match: every key in `pattern` must be present and match in
    /// `observed`; arrays must agree in length and elementwise.
    pub fn matches(&mut self, pattern: &Value, observed: &Value) -> Result<(), String> {
        self.match_at("$", pattern, observed)
    }

    fn match_at(&mut self, path: &str, pattern: &Value, observed: &Value) -> Result<(), String> {
        match pattern {
            Value::String(s) if s == "$any" => Ok(()),
            Value::String(s) if s.starts_with("$id") => match self.bindings.get(s) {
                Some(bound) if bound == observed => Ok(()),
                Some(bound) => Err(format!(
                    "{path}: {s} is bound to {bound} but the message has {observed}"
                )),
                None => {
                    self.bindings.insert(s.clone(), observed.clone());
                    Ok(())
                }
            },
            Value::Object(fields) => {
                let Some(observed) = observed.as_object() else {
                    return Err(format!("{path}: expected an object, got {observed}"));
                };
                for (key, sub) in fields {
                    match observed.get(key) {
                        Some(value) => self.match_at(&format!("{path}.{key}"), sub, value)?,
                        None => return Err(format!("{path}: missing key \"{key}\"")),
                    }
                }
                Ok(())
            }
            Value::Array(items) => {
                let Some(observed) = observed.as_array() else {
                    return Err(format!("{path}: expected an array, got {observed}"));
                };
                if items.len() != observed.len() {
                    return Err(format!(
                        "{path}: expected {} elements, got {}",
                        items.len(),
                        observed.len()
                    ));
                }
                for (i, (sub, value)) in items.iter().zip(observed).enumerate() {
                    self.match_at(&format!("{path}[{i}]"), sub, value)?;
                }
                Ok(())
            }
            literal => {
                if literal == observed {
                    Ok(())
                } else {
                    Err(format!("{path}: expected {literal}, got {observed}"))
                }
            }
        }
    }
}

/// Short label for an expectation, used in check names.
fn describe(pattern: &Value) -> String {
    if let Some(method) = pattern.get("method").and_then(Value::as_str) {
        return method.to_string();
    }
    if pattern.get("id").is_some() {
        return format!("response to {}", pattern["id"]);
    }
    "message".to_string()
}

/// Run a script: implicit initialize/initialized first, the steps in order,
/// shutdown/exit at the end. A failed expectation fails its check and the
/// run continues. Every frame is recorded on the connection's transcript.
pub fn run_script(conn: &mut Connection, steps: &[Step], root: Option<&str>) -> Report {
    let mut report = Report::default();
    let mut matcher = Matcher::new();
    match conn.initialize(root) {
        Ok(_) => report.pass("handshake: initialize"),
        Err(err) => {
            report.fail("handshake: initialize", err.to_string());
            return report;
        }
    }
    for (i, step) in steps.iter().enumerate() {
        let n = i + 1;
        match step {
            Step::Send(template) => {
                let mut message = template.clone();
                if let Some(root) = root {
                    substitute_root(&mut message, root);
                }
                matcher.resolve_send_id(&mut message, json!(conn.next_id()));
                if let Some(map) = message.as_object_mut() {
                    map.entry("jsonrpc").or_insert_with(|| json!("2.0"));
                }
                let name = format!("step {n}: send {}", describe(&message));
                match RpcMessage::from_json(message) {
                    Ok(msg) => match conn.send(&msg) {
                        Ok(()) => {}
                        Err(err) => report.fail(name, err.to_string()),
                    },
                    Err(err) => report.fail(name, format!("template is not a message: {err}")),
                }
            }
            Step::Expect(pattern) => {
                let mut pattern = pattern.clone();
                if let Some(root) = root {
                    substitute_root(&mut pattern, root);
                }
                let name = format!("step {n}: expect {}", describe(&pattern));
                match conn.recv() {
                    Ok(msg) => report.check(name, matcher.matches(&pattern, &msg.to_json())),
                    Err(err) => report.fail(name, err.to_string()),
                }
            }
            Step::Sleep(ms) => std::thread::sleep(Duration::from_millis(*ms)),
        }
    }
    match conn.shutdown_exit() {
        Ok(()) => report.pass("handshake: shutdown and exit"),
        Err(ClientError::Closed) | Err(ClientError::Timeout(_)) => {
            report.fail("handshake: shutdown and exit", "no shutdown response")
        }
        Err(err) => report.fail("handshake: shutdown and exit", err.to_string()),
    }
    report
}

/// Make a transcript comparable across runs: request ids are rewritten to
/// their order of first appearance, the project root URI becomes
/// `file:///project`, and `processingTime` values are zeroed.
pub fn normalize_transcript(entries: &mut [Value], root_uri: &str) {
    let mut ids: HashMap<String, u64> = HashMap::new();
    for entry in entries.iter_mut() {
        replace_in_strings(entry, root_uri, "file:///project");
        zero_processing_time(entry);
        let Some(id) = entry.pointer_mut("/msg/id") else { continue };
        if id.is_null() {
            continue;
        }
        let key = id.to_string();
        let next = ids.len() as u64 + 1;
        *id = json!(*ids.entry(key).or_insert(next));
    }
}

fn replace_in_strings(value: &mut Value, from: &str, to: &str) {
    match value {
        Value::String(s) => {
            if s.contains(from) {
                *s = s.replace(from, to);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|v| replace_in_strings(v, from, to)),
        Value::Object(map) => map.values_mut().for_each(|v| replace_in_strings(v, from, to)),
        _ => {}
    }
}

fn zero_processing_time(value: &mut Value) {
    match value {
        Value::Array(items) => items.iter_mut().for_each(zero_processing_time),
        Value::Object(map) => {
            for (key, sub) in map.iter_mut() {
                if key == "processingTime" && sub.is_number() {
                    *sub = json!(0);
                } else {
                    zero_processing_time(sub);
                }
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripts_parse_into_steps() {
        let steps = parse_script(
            r#"[
                {"send": {"method": "initialized", "params": {}}},
                {"expect": {"method": "slsp/POG/updated"}},
                {"sleep": 5}
            ]"#,
        )
        .unwrap();
        assert_eq!(steps.len(), 3);
        assert!(matches!(steps[2], Step::Sleep(5)));

        assert!(parse_script(r#"[{"send": {}, "expect": {}}]"#).is_err());
        assert!(parse_script(r#"[{"pause": 5}]"#).is_err());
    }

    #[test]
    fn any_wildcard_matches_everything() {
        let mut m = Matcher::new();
        m.matches(&json!({"result": "$any"}), &json!({"result": [1, 2]})).unwrap();
        m.matches(&json!("$any"), &json!(null)).unwrap();
    }

    #[test]
    fn subset_matching_tolerates_extra_keys_only_in_the_message() {
        let mut m = Matcher::new();
        m.matches(
            &json!({"method": "x"}),
            &json!({"jsonrpc": "2.0", "method": "x", "params": {}}),
        )
        .unwrap();
        let err = m
            .matches(&json!({"method": "x", "params": {}}), &json!({"method": "x"}))
            .unwrap_err();
        assert!(err.contains("missing key"), "{err}");
    }

    #[test]
    fn id_symbols_bind_once_and_stay_bound() {
        let mut m = Matcher::new();
        m.matches(&json!({"id": "$id1"}), &json!({"id": 7})).unwrap();
        m.matches(&json!({"id": "$id1"}), &json!({"id": 7})).unwrap();
        let err = m.matches(&json!({"id": "$id1"}), &json!({"id": 8})).unwrap_err();
        assert!(err.contains("bound to 7"), "{err}");
        m.matches(&json!({"id": "$id2"}), &json!({"id": 8})).unwrap();
    }

    #[test]
    fn send_ids_are_allocated_and_reused() {
        let mut m = Matcher::new();
        let mut msg = json!({"id": "$id1", "method": "shutdown"});
        m.resolve_send_id(&mut msg, json!(41));
        assert_eq!(msg["id"], json!(41));
        // the expectation side now sees the binding
        m.matches(&json!({"id": "$id1"}), &json!({"id": 41})).unwrap();
        // and a second send with the same symbol reuses it
        let mut again = json!({"id": "$id1", "method": "shutdown"});
        m.resolve_send_id(&mut again, json!(99));
        assert_eq!(again["id"], json!(41));
    }

    #[test]
    fn array_patterns_are_strict_about_length() {
        let mut m = Matcher::new();
        let err = m.matches(&json!([1]), &json!([1, 2])).unwrap_err();
        assert!(err.contains("expected 1 elements"), "{err}");
    }

    #[test]
    fn root_substitution_reaches_nested_strings() {
        let mut v = json!({"params": {"uri": "$root/main.ms", "n": 3}});
        substitute_root(&mut v, "file:///w");
        assert_eq!(v["params"]["uri"], json!("file:///w/main.ms"));
    }

    #[test]
    fn normalization_renumbers_ids_in_first_appearance_order() {
        let mut entries = vec![
            json!({"dir": "c2s", "msg": {"id": 17, "method": "initialize"}}),
            json!({"dir": "s2c", "msg": {"id": 17, "result": {"processingTime": 883}}}),
            json!({"dir": "c2s", "msg": {"id": "abc", "method": "shutdown"}}),
            json!({"dir": "s2c", "msg": {"method": "note", "params": {"uri": "file:///t/x.ms"}}}),
        ];
        normalize_transcript(&mut entries, "file:///t");
        assert_eq!(entries[0]["msg"]["id"], json!(1));
        assert_eq!(entries[1]["msg"]["id"], json!(1));
        assert_eq!(entries[1]["msg"]["result"]["processingTime"], json!(0));
        assert_eq!(entries[2]["msg"]["id"], json!(2));
        assert_eq!(entries[3]["msg"]["params"]["uri"], json!("file:///project/x.ms"));
    }
}
