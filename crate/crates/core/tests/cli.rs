//! Process-level checks of the two binaries: TCP transport, session exit
//! codes, and the conformance JSON report.

use slsp::client::Connection;
use slsp::slsp_types::methods;
use serde_json::{json, Value};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

struct KillOnDrop(Child);

impl KillOnDrop {
    fn wait_within(&mut self, limit: Duration) -> std::process::ExitStatus {
        let deadline = Instant::now() + limit;
        loop {
            if let Some(status) = self.0.try_wait().expect("try_wait") {
                return status;
            }
            assert!(Instant::now() < deadline, "server did not exit in {limit:?}");
            std::thread::sleep(Duration::from_millis(10));
        }
    }
}

impl Drop for KillOnDrop {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn tcp_transport_serves_a_full_session() {
    let child = Command::new(env!("CARGO_BIN_EXE_slsp-server"))
        .args(["--tcp", "0"])
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn server");
    let mut child = KillOnDrop(child);

    let stderr = child.0.stderr.take().expect("piped stderr");
    let mut line = String::new();
    BufReader::new(stderr).read_line(&mut line).expect("listen banner");
    let addr = line
        .trim()
        .rsplit("listening on ")
        .next()
        .expect("address in banner")
        .to_string();

    // The stderr pipe is dropped after the banner: serving must not depend
    // on stderr staying open.
    let mut conn = Connection::connect(&addr).expect("connect");
    conn.initialize(None).expect("initialize");
    let commands = conn
        .request_ok(methods::TP_GET_COMMANDS, json!({}))
        .expect("TP/getCommands");
    assert_eq!(commands.as_array().map(Vec::len), Some(6));
    conn.shutdown_exit().expect("teardown");

    let status = child.wait_within(Duration::from_secs(5));
    assert_eq!(status.code(), Some(0), "clean shutdown must exit 0");
}

fn run_client(args: &[&str]) -> std::process::Output {
    let server = format!("{} --stdio", env!("CARGO_BIN_EXE_slsp-server"));
    Command::new(env!("CARGO_BIN_EXE_slsp-client"))
        .args(args)
        .args(["--server", &server])
        .output()
        .expect("run client")
}

#[test]
fn session_exit_code_reflects_expectation_failures() {
    let dir = tempfile::tempdir().expect("tempdir");

    let passing = dir.path().join("passing.json");
    std::fs::write(
        &passing,
        r#"[
            {"send": {"id": "$id1", "method": "slsp/TP/getCommands"}},
            {"expect": {"id": "$id1", "result": "$any"}}
        ]"#,
    )
    .expect("write script");
    let ok = run_client(&["session", passing.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "passing script must exit 0");

    let failing = dir.path().join("failing.json");
    std::fs::write(
        &failing,
        r#"[
            {"send": {"id": "$id1", "method": "slsp/TP/getCommands"}},
            {"expect": {"id": "$id1", "result": {"impossible": true}}}
        ]"#,
    )
    .expect("write script");
    let bad = run_client(&["session", failing.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1), "failed expectation must exit 1");
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert!(stdout.contains("FAIL"), "failure line missing:\n{stdout}");
}

#[test]
fn conformance_json_report_matches_summary_invariant() {
    let dir = tempfile::tempdir().expect("tempdir");
    let report_path = dir.path().join("report.json");
    let out = run_client(&["conformance", "--json", report_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "reference server must conform");

    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).expect("report written"))
            .expect("report parses");
    let summary = &report["summary"];
    assert_eq!(
        summary["total"],
        json!(summary["pass"].as_u64().unwrap() + summary["fail"].as_u64().unwrap()),
        "summary.total must count executed checks"
    );
    assert_eq!(summary["fail"], json!(0));
    assert_eq!(summary["skip"], json!(0));
    assert!(report["checks"].as_array().is_some_and(|c| c.len() >= 25));
}

#[test]
fn prove_repl_exits_zero_once_proved() {
    let server = format!("{} --stdio", env!("CARGO_BIN_EXE_slsp-server"));
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/testdata/corpus");
    let mut child = Command::new(env!("CARGO_BIN_EXE_slsp-client"))
        .args(["prove", "Logic.middle", "--root", corpus, "--server", &server])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .expect("spawn client");
    child
        .stdin
        .take()
        .expect("piped stdin")
        .write_all(b":auto\n")
        .expect("send command");
    let out = child.wait_with_output().expect("client exits");
    assert_eq!(out.status.code(), Some(0), "proved lemma must exit 0");
    assert!(String::from_utf8_lossy(&out.stdout).contains("proved"));
}
