//! The conformance suite. Against a self-contained fixture project it
//! exercises every SLSP method the server announced with a valid call and an
//! invalid-params call, adds cancellation scenarios for the long-running
//! requests, and verifies that unannounced methods are rejected. Checks for
//! unannounced features are reported as skipped, never failed: both sides
//! may use the protocol without supporting all of it.

use super::{ClientError, Connection, Report};
use crate::base_protocol::{codes, RpcError, RpcMessage};
use crate::slsp_types::{methods, DocumentUri};
use serde_json::{json, Value};

/// The project every suite run works against. Sized so that the wide trace
/// (2046 tests of recursive work) comfortably outlives a cancellation round
/// trip, and the 16-variable lemma does the same for TP/prove.
pub const FIXTURE: &str = r#"module Conformance
  inc(x: int): int == x + 1
  burn(n: int): int == if n <= 0 then 0 else burn(n - 1) + 1
  safeDiv(a: int, b: int): int == a / b pre b <> 0
  op(k: int): int == burn(100) + k

  trace smoke = (inc(0) | inc(1)){1,2}
  trace wide = (op(1) | op(2)){1,10}

  lemma refl : p => p
  lemma wideTaut : (a1 and a2 and a3 and a4 and a5 and a6 and a7 and a8
    and a9 and a10 and a11 and a12 and a13 and a14 and a15 and a16) => a1
end
"#;

type Wire = Result<Result<Value, RpcError>, ClientError>;

fn expect_error(outcome: Wire, code: i64) -> Result<(), String> {
    match outcome {
        Ok(Err(err)) if err.code == code => Ok(()),
        Ok(Err(err)) => Err(format!(
            "expected error {code}, got {}: {}",
            err.code, err.message
        )),
        Ok(Ok(value)) => Err(format!("expected error {code}, got a result: {value}")),
        Err(err) => Err(err.to_string()),
    }
}

fn expect_result(outcome: Wire) -> Result<Value, String> {
    match outcome {
        Ok(Ok(value)) => Ok(value),
        Ok(Err(err)) => Err(format!("server answered {}: {}", err.code, err.message)),
        Err(err) => Err(err.to_string()),
    }
}

/// Run the whole suite over an already-open connection. The caller has not
/// initialized it; teardown is included.
pub fn conformance_suite(conn: &mut Connection) -> Report {
    let mut report = Report::default();
    let project = match tempfile::tempdir() {
        Ok(dir) => dir,
        Err(err) => {
            report.fail("setup: fixture project", err.to_string());
            return report;
        }
    };
    let file = project.path().join("conformance.ms");
    if let Err(err) = std::fs::write(&file, FIXTURE) {
        report.fail("setup: fixture project", err.to_string());
        return report;
    }
    let root_uri = DocumentUri::from_path(project.path()).expect("tempdir is absolute");
    let file_uri = DocumentUri::from_path(&file).expect("tempdir is absolute");

    let caps = match conn.initialize(Some(root_uri.as_str())) {
        Ok(caps) => {
            report.pass("handshake: initialize returns capabilities");
            caps
        }
        Err(err) => {
            report.fail("handshake: initialize returns capabilities", err.to_string());
            return report;
        }
    };
    let slsp = &caps["capabilities"]["experimental"]["slsp"];
    let pog = slsp["proofObligationProvider"] == json!(true);
    let ct = slsp["combinatorialTestProvider"] == json!(true);
    let tp = slsp["theoremProvingProvider"] == json!(true);
    let tr = slsp.get("translateProvider").is_some_and(|v| v.is_object());

    pog_checks(conn, &mut report, &root_uri, &file_uri, pog);
    ct_checks(conn, &mut report, ct);
    tr_checks(conn, &mut report, tr);
    tp_checks(conn, &mut report, tp);

    match conn.shutdown_exit() {
        Ok(()) => report.pass("handshake: shutdown and exit"),
        Err(err) => report.fail("handshake: shutdown and exit", err.to_string()),
    }
    report
}

fn skip_all(report: &mut Report, names: &[&str]) {
    for name in names {
        report.skip(*name, "feature not announced");
    }
}

fn pog_checks(
    conn: &mut Connection,
    report: &mut Report,
    root_uri: &DocumentUri,
    file_uri: &DocumentUri,
    announced: bool,
) {
    const VALID: &str = "slsp/POG/generate: valid request returns obligations";
    const MISSING: &str = "slsp/POG/generate: missing uri is rejected";
    const UPDATED: &str = "slsp/POG/updated: sent after a didChange";
    const DIRECTION: &str = "slsp/POG/updated: rejected as a client request";
    if !announced {
        skip_all(report, &[VALID, MISSING, UPDATED, DIRECTION]);
        report.check(
            "slsp/POG/generate: unannounced method is rejected",
            expect_error(
                conn.request(methods::POG_GENERATE, json!({"uri": root_uri.as_str()})),
                codes::METHOD_NOT_FOUND,
            ),
        );
        return;
    }

    let outcome = expect_result(conn.request(
        methods::POG_GENERATE,
        json!({"uri": root_uri.as_str()}),
    ))
    .and_then(|value| match value.as_array() {
        Some(pos) if !pos.is_empty() => Ok(()),
        Some(_) => Err("expected at least one obligation for the fixture".into()),
        None => Err(format!("expected an array, got {value}")),
    });
    report.check(VALID, outcome);

    report.check(
        MISSING,
        expect_error(conn.request(methods::POG_GENERATE, json!({})), codes::INVALID_PARAMS),
    );

    // observational check: a didChange is followed by publishDiagnostics and
    // then the POG freshness notification
    let outcome = conn
        .notify(
            methods::DID_CHANGE,
            json!({
                "textDocument": {"uri": file_uri.as_str()},
                "contentChanges": [{"text": FIXTURE}]
            }),
        )
        .map_err(|e| e.to_string())
        .and_then(|()| {
            let first = conn.recv().map_err(|e| e.to_string())?;
            let second = conn.recv().map_err(|e| e.to_string())?;
            if first.method() != Some(methods::PUBLISH_DIAGNOSTICS) {
                return Err(format!("expected publishDiagnostics first, got {first:?}"));
            }
            match second {
                RpcMessage::Notification { ref method, params: Some(ref p) }
                    if method == methods::POG_UPDATED && p["successful"] == json!(true) =>
                {
                    Ok(())
                }
                other => Err(format!("expected POG/updated {{successful: true}}, got {other:?}")),
            }
        });
    report.check(UPDATED, outcome);

    report.check(
        DIRECTION,
        expect_error(
            conn.request(methods::POG_UPDATED, json!({"successful": true})),
            codes::INVALID_REQUEST,
        ),
    );
}

fn ct_checks(conn: &mut Connection, report: &mut Report, announced: bool) {
    const TRACES: &str = "slsp/CT/traces: valid request lists trace symbols";
    const TRACES_BAD: &str = "slsp/CT/traces: ill-typed uri is rejected";
    const GEN: &str = "slsp/CT/generate: valid request counts tests";
    const GEN_MISSING: &str = "slsp/CT/generate: missing name is rejected";
    const EXEC: &str = "slsp/CT/execute: valid request returns verdicts";
    const EXEC_FILTER: &str = "slsp/CT/execute: range and random filter are honored";
    const EXEC_BAD: &str = "slsp/CT/execute: invalid range is rejected";
    const EXEC_CANCEL: &str = "slsp/CT/execute: cancelled mid-stream answers RequestCancelled";
    if !announced {
        skip_all(
            report,
            &[TRACES, TRACES_BAD, GEN, GEN_MISSING, EXEC, EXEC_FILTER, EXEC_BAD, EXEC_CANCEL],
        );
        report.check(
            "slsp/CT/traces: unannounced method is rejected",
            expect_error(conn.request(methods::CT_TRACES, json!({})), codes::METHOD_NOT_FOUND),
        );
        return;
    }

    let outcome = expect_result(conn.request(methods::CT_TRACES, json!({}))).and_then(|value| {
        let traces = value[0]["traces"].as_array().cloned().unwrap_or_default();
        if value[0]["name"] == json!("Conformance") && traces.len() == 2 {
            Ok(())
        } else {
            Err(format!("expected the Conformance module with 2 traces, got {value}"))
        }
    });
    report.check(TRACES, outcome);

    report.check(
        TRACES_BAD,
        expect_error(conn.request(methods::CT_TRACES, json!({"uri": 42})), codes::INVALID_PARAMS),
    );

    let outcome = expect_result(
        conn.request(methods::CT_GENERATE, json!({"name": "Conformance.smoke"})),
    )
    .and_then(|value| {
        if value["numberOfTests"] == json!(6) {
            Ok(())
        } else {
            Err(format!("expected 6 tests for (inc(0)|inc(1)){{1,2}}, got {value}"))
        }
    });
    report.check(GEN, outcome);

    report.check(
        GEN_MISSING,
        expect_error(conn.request(methods::CT_GENERATE, json!({})), codes::INVALID_PARAMS),
    );

    let outcome = expect_result(
        conn.request(methods::CT_EXECUTE, json!({"name": "Conformance.smoke"})),
    )
    .and_then(|value| {
        let cases = value.as_array().cloned().unwrap_or_default();
        if cases.len() == 6 && cases.iter().all(|c| c["verdict"] == json!(1)) {
            Ok(())
        } else {
            Err(format!("expected 6 passing cases, got {value}"))
        }
    });
    report.check(EXEC, outcome);

    let outcome = expect_result(conn.request(
        methods::CT_EXECUTE,
        json!({
            "name": "Conformance.smoke",
            "range": {"start": 1, "end": 6},
            "filter": [
                {"key": "random.limit", "value": 3},
                {"key": "random.seed", "value": 42}
            ]
        }),
    ))
    .and_then(|value| {
        let cases = value.as_array().cloned().unwrap_or_default();
        let filtered = cases.iter().filter(|c| c["verdict"] == json!(4)).count();
        let executed = cases.iter().filter(|c| c["verdict"] == json!(1)).count();
        if cases.len() == 6 && filtered == 3 && executed == 3 {
            Ok(())
        } else {
            Err(format!("expected 3 executed and 3 filtered of 6, got {value}"))
        }
    });
    report.check(EXEC_FILTER, outcome);

    report.check(
        EXEC_BAD,
        expect_error(
            conn.request(
                methods::CT_EXECUTE,
                json!({"name": "Conformance.smoke", "range": {"start": 0, "end": 2}}),
            ),
            codes::INVALID_PARAMS,
        ),
    );

    ct_cancel_check(conn, report, EXEC_CANCEL);
}

/// Start a streamed execution of the wide trace, cancel as soon as the first
/// progress batch arrives, and require a RequestCancelled response.
fn ct_cancel_check(conn: &mut Connection, report: &mut Report, name: &str) {
    let id = conn.next_id();
    let request = RpcMessage::request(
        id.clone(),
        methods::CT_EXECUTE,
        Some(json!({"name": "Conformance.wide", "partialResultToken": "cancel-ct"})),
    );
    if let Err(err) = conn.send(&request) {
        report.fail(name, err.to_string());
        return;
    }
    let mut cancel_sent = false;
    loop {
        match conn.recv() {
            Ok(RpcMessage::Notification { ref method, .. }) if method == methods::PROGRESS => {
                if !cancel_sent {
                    cancel_sent = true;
                    if let Err(err) = conn.notify(methods::CANCEL_REQUEST, json!({"id": id})) {
                        report.fail(name, err.to_string());
                        return;
                    }
                }
            }
            Ok(RpcMessage::Response { id: ref got, ref outcome }) if got == &id => {
                match outcome {
                    Err(err) if err.code == codes::REQUEST_CANCELLED && cancel_sent => {
                        report.pass(name)
                    }
                    Err(err) => report.fail(
                        name,
                        format!("expected -32800, got {}: {}", err.code, err.message),
                    ),
                    Ok(_) if !cancel_sent => {
                        report.fail(name, "request finished before any progress batch")
                    }
                    Ok(_) => report.fail(name, "request completed despite cancellation"),
                }
                return;
            }
            Ok(_) => {}
            Err(err) => {
                report.fail(name, err.to_string());
                return;
            }
        }
    }
}

fn tr_checks(conn: &mut Connection, report: &mut Report, announced: bool) {
    const VALID: &str = "slsp/TR/translate: valid request writes documents";
    const MISSING: &str = "slsp/TR/translate: missing languageId is rejected";
    const UNKNOWN: &str = "slsp/TR/translate: unknown languageId is rejected";
    if !announced {
        skip_all(report, &[VALID, MISSING, UNKNOWN]);
        report.check(
            "slsp/TR/translate: unannounced method is rejected",
            expect_error(
                conn.request(
                    methods::TR_TRANSLATE,
                    json!({"languageId": "markdown", "saveUri": "file:///tmp"}),
                ),
                codes::METHOD_NOT_FOUND,
            ),
        );
        return;
    }

    let save = match tempfile::tempdir() {
        Ok(dir) => dir,
        Err(err) => {
            report.fail(VALID, err.to_string());
            return;
        }
    };
    let save_uri = DocumentUri::from_path(save.path()).expect("tempdir is absolute");
    let outcome = expect_result(conn.request(
        methods::TR_TRANSLATE,
        json!({"languageId": "markdown", "saveUri": save_uri.as_str()}),
    ))
    .and_then(|value| {
        let uri = value["uri"].as_str().unwrap_or_default();
        if !uri.ends_with("/Conformance.md") {
            return Err(format!("expected the main uri to end in /Conformance.md, got {value}"));
        }
        if !save.path().join("Conformance.md").is_file() {
            return Err("the announced document was not written".into());
        }
        Ok(())
    });
    report.check(VALID, outcome);

    report.check(
        MISSING,
        expect_error(
            conn.request(methods::TR_TRANSLATE, json!({"saveUri": save_uri.as_str()})),
            codes::INVALID_PARAMS,
        ),
    );

    report.check(
        UNKNOWN,
        expect_error(
            conn.request(
                methods::TR_TRANSLATE,
                json!({"languageId": "pdf", "saveUri": save_uri.as_str()}),
            ),
            codes::INVALID_PARAMS,
        ),
    );
}

fn tp_checks(conn: &mut Connection, report: &mut Report, announced: bool) {
    const LEMMAS: &str = "slsp/TP/lemmas: valid request lists lemmas";
    const LEMMAS_BAD: &str = "slsp/TP/lemmas: ill-typed projectUri is rejected";
    const COMMANDS: &str = "slsp/TP/getCommands: valid request lists the command set";
    const COMMANDS_BAD: &str = "slsp/TP/getCommands: non-object params are rejected";
    const PROVE_BAD: &str = "slsp/TP/prove: ill-typed name is rejected";
    const PROVE: &str = "slsp/TP/prove: valid request decides a lemma";
    const PROVE_CANCEL: &str = "slsp/TP/prove: cancelled request answers RequestCancelled";
    const BEGIN: &str = "slsp/TP/beginProof: valid request opens a session";
    const BEGIN_MISSING: &str = "slsp/TP/beginProof: missing name is rejected";
    const COMMAND: &str = "slsp/TP/command: valid commands advance the proof";
    const COMMAND_MISSING: &str = "slsp/TP/command: missing command is rejected";
    const UNDO: &str = "slsp/TP/undo: restores the previous state";
    const UNDO_BAD: &str = "slsp/TP/undo: ill-typed id is rejected";
    if !announced {
        skip_all(
            report,
            &[
                LEMMAS, LEMMAS_BAD, COMMANDS, COMMANDS_BAD, PROVE_BAD, PROVE, PROVE_CANCEL,
                BEGIN, BEGIN_MISSING, COMMAND, COMMAND_MISSING, UNDO, UNDO_BAD,
            ],
        );
        report.check(
            "slsp/TP/lemmas: unannounced method is rejected",
            expect_error(conn.request(methods::TP_LEMMAS, json!({})), codes::METHOD_NOT_FOUND),
        );
        return;
    }

    let outcome = expect_result(conn.request(methods::TP_LEMMAS, json!({}))).and_then(|value| {
        let lemmas = value.as_array().cloned().unwrap_or_default();
        let names: Vec<&str> = lemmas.iter().filter_map(|l| l["name"].as_str()).collect();
        if names == ["refl", "wideTaut"]
            && lemmas.iter().all(|l| l["status"] == json!("unproved"))
            && lemmas.iter().all(|l| l["theory"] == json!("Conformance"))
        {
            Ok(())
        } else {
            Err(format!("expected refl and wideTaut, both unproved, got {value}"))
        }
    });
    report.check(LEMMAS, outcome);

    report.check(
        LEMMAS_BAD,
        expect_error(
            conn.request(methods::TP_LEMMAS, json!({"projectUri": 17})),
            codes::INVALID_PARAMS,
        ),
    );

    let outcome =
        expect_result(conn.request(methods::TP_GET_COMMANDS, json!({}))).and_then(|value| {
            match value.as_array() {
                Some(commands) if commands.len() == 6 => Ok(()),
                _ => Err(format!("expected the six prover commands, got {value}")),
            }
        });
    report.check(COMMANDS, outcome);

    report.check(
        COMMANDS_BAD,
        expect_error(conn.request(methods::TP_GET_COMMANDS, json!([1])), codes::INVALID_PARAMS),
    );

    report.check(
        PROVE_BAD,
        expect_error(conn.request(methods::TP_PROVE, json!({"name": 42})), codes::INVALID_PARAMS),
    );

    let outcome = expect_result(
        conn.request(methods::TP_PROVE, json!({"name": "Conformance.refl"})),
    )
    .and_then(|value| {
        if value["status"] == json!("proved") {
            Ok(())
        } else {
            Err(format!("expected refl to be proved, got {value}"))
        }
    });
    report.check(PROVE, outcome);

    tp_cancel_check(conn, report, PROVE_CANCEL);

    let outcome = expect_result(
        conn.request(methods::TP_BEGIN_PROOF, json!({"name": "Conformance.refl"})),
    )
    .and_then(|value| {
        if value["id"] == json!(0) && value["subgoals"].as_array().is_some_and(|s| s.len() == 1) {
            Ok(())
        } else {
            Err(format!("expected the initial proof state, got {value}"))
        }
    });
    report.check(BEGIN, outcome);

    report.check(
        BEGIN_MISSING,
        expect_error(conn.request(methods::TP_BEGIN_PROOF, json!({})), codes::INVALID_PARAMS),
    );

    let outcome = expect_result(conn.request(methods::TP_COMMAND, json!({"command": "intro"})))
        .and_then(|value| {
            if value["state"]["id"] == json!(1) {
                Ok(())
            } else {
                Err(format!("expected state 1 after intro, got {value}"))
            }
        })
        .and_then(|()| {
            expect_result(conn.request(methods::TP_COMMAND, json!({"command": "assumption"})))
        })
        .and_then(|value| {
            if value["state"]["status"] == json!("proved") {
                Ok(())
            } else {
                Err(format!("expected a proved state after assumption, got {value}"))
            }
        });
    report.check(COMMAND, outcome);

    report.check(
        COMMAND_MISSING,
        expect_error(conn.request(methods::TP_COMMAND, json!({})), codes::INVALID_PARAMS),
    );

    let outcome = expect_result(conn.request(methods::TP_UNDO, json!({}))).and_then(|value| {
        if value["id"] == json!(1) {
            Ok(())
        } else {
            Err(format!("expected to be back at state 1, got {value}"))
        }
    });
    report.check(UNDO, outcome);

    report.check(
        UNDO_BAD,
        expect_error(conn.request(methods::TP_UNDO, json!({"id": "zero"})), codes::INVALID_PARAMS),
    );
}

/// Ask for the 16-variable lemma and cancel immediately; the exhaustive
/// decision procedure polls the flag between valuations.
fn tp_cancel_check(conn: &mut Connection, report: &mut Report, name: &str) {
    let id = conn.next_id();
    let request = RpcMessage::request(
        id.clone(),
        methods::TP_PROVE,
        Some(json!({"name": "Conformance.wideTaut"})),
    );
    let outcome = conn
        .send(&request)
        .and_then(|()| conn.notify(methods::CANCEL_REQUEST, json!({"id": id})))
        .map_err(|e| e.to_string())
        .and_then(|()| match conn.wait_response(&id) {
            Ok(Err(err)) if err.code == codes::REQUEST_CANCELLED => Ok(()),
            Ok(Err(err)) => Err(format!("expected -32800, got {}: {}", err.code, err.message)),
            Ok(Ok(value)) => Err(format!("prove finished before the cancellation: {value}")),
            Err(err) => Err(err.to_string()),
        });
    report.check(name, outcome);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::server::{serve, Features, ServerConfig};
    use std::net::TcpListener;

    fn suite_against(features: Features) -> Report {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        let server = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let writer = stream.try_clone().unwrap();
            serve(stream, writer, &ServerConfig { features, ..Default::default() }).unwrap()
        });
        let mut conn = Connection::connect(&addr).unwrap();
        let report = conformance_suite(&mut conn);
        assert_eq!(server.join().unwrap(), 0);
        report
    }

    #[test]
    fn reference_server_passes_with_no_skips() {
        let report = suite_against(Features::default());
        let failures: Vec<_> =
            report.checks.iter().filter(|c| c.outcome == super::super::Outcome::Fail).collect();
        assert!(failures.is_empty(), "failures: {failures:#?}");
        assert_eq!(report.skipped(), 0);
        assert!(report.passed() >= 29, "only {} checks passed", report.passed());
    }

    #[test]
    fn pog_only_server_skips_other_features_and_fails_nothing() {
        let features = Features { pog: true, ct: false, tr: false, tp: false };
        let report = suite_against(features);
        assert!(report.is_success(), "{:#?}", report.checks);
        assert!(report.skipped() > 0);
        // the unannounced-rejection probes all ran
        let rejected = report
            .checks
            .iter()
            .filter(|c| c.name.contains("unannounced method is rejected"))
            .count();
        assert_eq!(rejected, 3);
    }
}
