//! Scriptable SLSP client: session scripts, the conformance suite, an
//! interactive prover REPL, and one-shot CT and translation runs. Exit code
//! 0 iff the run had zero failures.

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use slsp::base_protocol::RpcError;
use slsp::client::{conformance_suite, parse_script, run_script, ClientError, Connection, Report};
use slsp::slsp_types::{methods, DocumentUri};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

#[derive(Parser)]
#[command(
    name = "slsp-client",
    version,
    about = "Conformance and feature client for SLSP servers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON session script (send/expect/sleep steps) against a server.
    Session {
        /// Path to the script file.
        script: PathBuf,
        #[command(flatten)]
        conn: ConnArgs,
        /// Project root; `$root` in the script expands to its file URI.
        #[arg(long, value_name = "DIR")]
        root: Option<PathBuf>,
    },
    /// Exercise every announced SLSP method and report pass/fail/skip.
    Conformance {
        #[command(flatten)]
        conn: ConnArgs,
        /// Also write the report as JSON to this file.
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },
    /// Interactive proof session on one lemma.
    Prove {
        /// Lemma name, qualified (Module.lemma) or bare if unambiguous.
        lemma: String,
        #[command(flatten)]
        conn: ConnArgs,
        /// Project root to open on the server.
        #[arg(long, value_name = "DIR", default_value = ".")]
        root: PathBuf,
    },
    /// Expand and execute one trace, printing per-test verdicts.
    Ct {
        /// Trace name, qualified as Module.trace.
        trace: String,
        #[command(flatten)]
        conn: ConnArgs,
        /// Project root to open on the server.
        #[arg(long, value_name = "DIR", default_value = ".")]
        root: PathBuf,
        /// Only execute tests a through b (1-based, inclusive), as `a:b`.
        #[arg(long, value_name = "A:B")]
        range: Option<String>,
        /// Randomly select at most this many tests in the range.
        #[arg(long, value_name = "N")]
        limit: Option<u64>,
        /// Seed for the random selection.
        #[arg(long, value_name = "S")]
        seed: Option<i64>,
    },
    /// Translate the project and print the main written document.
    Translate {
        #[command(flatten)]
        conn: ConnArgs,
        /// Target language id (latex or markdown on the reference server).
        #[arg(long, value_name = "ID")]
        language: String,
        /// Directory the server should write the documents into.
        #[arg(long, value_name = "DIR")]
        save: PathBuf,
        /// Project root to open on the server.
        #[arg(long, value_name = "DIR", default_value = ".")]
        root: PathBuf,
    },
}

#[derive(Args)]
struct ConnArgs {
    /// Server command to spawn and talk to over its standard streams.
    #[arg(long, value_name = "CMD", required_unless_present = "connect")]
    server: Option<String>,
    /// Connect to a listening server at host:port instead of spawning one.
    #[arg(long, value_name = "ADDR", conflicts_with = "server")]
    connect: Option<String>,
    /// Seconds to wait for each expected message.
    #[arg(long, value_name = "SECS", default_value_t = 10)]
    timeout: u64,
    /// Write a JSONL transcript of the whole session to this file.
    #[arg(long, value_name = "FILE")]
    transcript: Option<PathBuf>,
}

impl ConnArgs {
    fn open(&self) -> Result<Connection, ClientError> {
        let mut conn = match (&self.server, &self.connect) {
            (_, Some(addr)) => Connection::connect(addr)?,
            (Some(cmd), None) => Connection::spawn(cmd)?,
            (None, None) => unreachable!("clap requires one of --server/--connect"),
        };
        conn.timeout = Duration::from_secs(self.timeout.max(1));
        Ok(conn)
    }

    fn save_transcript(&self, conn: &Connection) {
        if let Some(path) = &self.transcript {
            if let Err(err) = conn.write_transcript(path) {
                eprintln!("slsp-client: could not write transcript: {err}");
            }
        }
    }
}

fn root_uri(path: &Path) -> Result<DocumentUri, String> {
    let absolute = path
        .canonicalize()
        .map_err(|e| format!("project root {}: {e}", path.display()))?;
    DocumentUri::from_path(&absolute)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Session { script, conn, root } => cmd_session(&script, &conn, root.as_deref()),
        Command::Conformance { conn, json } => cmd_conformance(&conn, json.as_deref()),
        Command::Prove { lemma, conn, root } => cmd_prove(&lemma, &conn, &root),
        Command::Ct { trace, conn, root, range, limit, seed } => {
            cmd_ct(&trace, &conn, &root, range.as_deref(), limit, seed)
        }
        Command::Translate { conn, language, save, root } => {
            cmd_translate(&conn, &language, &save, &root)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("slsp-client: {err}");
            ExitCode::FAILURE
        }
    }
}

fn print_report(report: &Report) {
    let mut stdout = std::io::stdout().lock();
    let _ = report.write_human(&mut stdout);
}

fn cmd_session(script: &Path, conn_args: &ConnArgs, root: Option<&Path>) -> Result<bool, String> {
    let text = std::fs::read_to_string(script)
        .map_err(|e| format!("script {}: {e}", script.display()))?;
    let steps = parse_script(&text)?;
    let root_uri = root.map(root_uri).transpose()?;
    let mut conn = conn_args.open().map_err(|e| e.to_string())?;
    let report = run_script(&mut conn, &steps, root_uri.as_ref().map(|u| u.as_str()));
    conn_args.save_transcript(&conn);
    print_report(&report);
    Ok(report.is_success())
}

fn cmd_conformance(conn_args: &ConnArgs, json_path: Option<&Path>) -> Result<bool, String> {
    let mut conn = conn_args.open().map_err(|e| e.to_string())?;
    let report = conformance_suite(&mut conn);
    conn_args.save_transcript(&conn);
    print_report(&report);
    if let Some(path) = json_path {
        let pretty = serde_json::to_string_pretty(&report.to_json()).expect("report serializes");
        std::fs::write(path, pretty + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(report.is_success())
}

fn describe_state(state: &Value) -> String {
    let mut out = format!(
        "state {} ({})",
        state["id"],
        state["status"].as_str().unwrap_or("?")
    );
    if let Some(subgoals) = state["subgoals"].as_array() {
        for (i, goal) in subgoals.iter().enumerate() {
            out.push_str(&format!("\n  {}. {}", i + 1, goal.as_str().unwrap_or("?")));
        }
    }
    out
}

fn print_server_error(err: &RpcError) {
    println!("error {}: {}", err.code, err.message);
}

fn cmd_prove(lemma: &str, conn_args: &ConnArgs, root: &Path) -> Result<bool, String> {
    let root = root_uri(root)?;
    let mut conn = conn_args.open().map_err(|e| e.to_string())?;
    conn.initialize(Some(root.as_str())).map_err(|e| e.to_string())?;

    let begun = conn
        .request(methods::TP_BEGIN_PROOF, json!({"name": lemma}))
        .map_err(|e| e.to_string())?;
    let proved = match begun {
        Ok(state) => {
            println!("proving {lemma}");
            println!("{}", describe_state(&state));
            repl(&mut conn)?
        }
        Err(err) => {
            print_server_error(&err);
            false
        }
    };
    let _ = conn.shutdown_exit();
    conn_args.save_transcript(&conn);
    Ok(proved)
}

/// The interactive loop. Returns whether the proof reached a proved state.
fn repl(conn: &mut Connection) -> Result<bool, String> {
    let mut proved = false;
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    loop {
        print!("> ");
        let _ = stdout.flush();
        let mut line = String::new();
        if stdin.lock().read_line(&mut line).map_err(|e| e.to_string())? == 0 {
            return Ok(proved); // EOF ends the session
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (method, params) = match line {
            ":quit" | ":q" => return Ok(proved),
            ":auto" => (methods::TP_COMMAND, json!({"command": "auto"})),
            _ if line == ":undo" => (methods::TP_UNDO, json!({})),
            _ if line.starts_with(":undo ") => {
                let arg = line[":undo ".len()..].trim();
                match arg.parse::<u32>() {
                    Ok(id) => (methods::TP_UNDO, json!({"id": id})),
                    Err(_) => {
                        println!("usage: :undo [state-id]");
                        continue;
                    }
                }
            }
            _ if line.starts_with(':') => {
                println!("commands: :undo [id], :auto, :quit, or a prover command");
                continue;
            }
            command => (methods::TP_COMMAND, json!({"command": command})),
        };
        match conn.request(method, params).map_err(|e| e.to_string())? {
            Ok(value) => {
                // TP/command answers {description, state}; TP/undo answers
                // the bare state
                let state = if value.get("state").is_some() { &value["state"] } else { &value };
                if let Some(description) = value["description"].as_str() {
                    println!("{description}");
                }
                println!("{}", describe_state(state));
                if state["status"] == json!("proved") {
                    println!("proved");
                    proved = true;
                }
            }
            Err(err) => print_server_error(&err),
        }
    }
}

fn verdict_name(v: &Value) -> &'static str {
    match v.as_u64() {
        Some(1) => "passed",
        Some(2) => "failed",
        Some(3) => "inconclusive",
        Some(4) => "filtered",
        _ => "no verdict",
    }
}

fn cmd_ct(
    trace: &str,
    conn_args: &ConnArgs,
    root: &Path,
    range: Option<&str>,
    limit: Option<u64>,
    seed: Option<i64>,
) -> Result<bool, String> {
    let root = root_uri(root)?;
    let mut conn = conn_args.open().map_err(|e| e.to_string())?;
    conn.initialize(Some(root.as_str())).map_err(|e| e.to_string())?;

    let mut params = json!({"name": trace});
    if let Some(range) = range {
        let (a, b) = range
            .split_once(':')
            .ok_or_else(|| format!("range must be a:b, got {range}"))?;
        let a: u64 = a.parse().map_err(|_| format!("bad range start: {a}"))?;
        let b: u64 = b.parse().map_err(|_| format!("bad range end: {b}"))?;
        params["range"] = json!({"start": a, "end": b});
    }
    let mut filter = Vec::new();
    if let Some(n) = limit {
        filter.push(json!({"key": "random.limit", "value": n}));
    }
    if let Some(s) = seed {
        filter.push(json!({"key": "random.seed", "value": s}));
    }
    if !filter.is_empty() {
        params["filter"] = json!(filter);
    }

    let generated = conn
        .request(methods::CT_GENERATE, json!({"name": trace}))
        .map_err(|e| e.to_string())?;
    let success = match generated {
        Err(err) => {
            print_server_error(&err);
            false
        }
        Ok(count) => {
            println!("{} tests", count["numberOfTests"]);
            match conn.request(methods::CT_EXECUTE, params).map_err(|e| e.to_string())? {
                Err(err) => {
                    print_server_error(&err);
                    false
                }
                Ok(value) => print_cases(&value),
            }
        }
    };
    let _ = conn.shutdown_exit();
    conn_args.save_transcript(&conn);
    Ok(success)
}

/// Print every case and the verdict tally; false when any test failed.
fn print_cases(value: &Value) -> bool {
    let cases = value.as_array().cloned().unwrap_or_default();
    let mut tally = [0usize; 5];
    for case in &cases {
        let verdict = verdict_name(&case["verdict"]);
        let calls: Vec<String> = case["sequence"]
            .as_array()
            .map(|seq| {
                seq.iter()
                    .map(|call| match call["result"].as_str() {
                        Some(result) => format!("{} = {}", call["case"].as_str().unwrap_or("?"), result),
                        None => call["case"].as_str().unwrap_or("?").to_string(),
                    })
                    .collect()
            })
            .unwrap_or_default();
        println!("#{:<5} {:<13} {}", case["id"], verdict, calls.join("; "));
        let slot = case["verdict"].as_u64().filter(|v| (1..=4).contains(v)).unwrap_or(0) as usize;
        tally[slot] += 1;
    }
    println!(
        "{} passed, {} failed, {} inconclusive, {} filtered",
        tally[1], tally[2], tally[3], tally[4]
    );
    tally[2] == 0
}

fn cmd_translate(
    conn_args: &ConnArgs,
    language: &str,
    save: &Path,
    root: &Path,
) -> Result<bool, String> {
    let root = root_uri(root)?;
    std::fs::create_dir_all(save).map_err(|e| format!("{}: {e}", save.display()))?;
    let save_uri = root_uri(save)?;
    let mut conn = conn_args.open().map_err(|e| e.to_string())?;
    conn.initialize(Some(root.as_str())).map_err(|e| e.to_string())?;
    let outcome = conn
        .request(
            methods::TR_TRANSLATE,
            json!({"languageId": language, "saveUri": save_uri.as_str()}),
        )
        .map_err(|e| e.to_string())?;
    let success = match outcome {
        Ok(value) => {
            println!("{}", value["uri"].as_str().unwrap_or_default());
            true
        }
        Err(err) => {
            print_server_error(&err);
            false
        }
    };
    let _ = conn.shutdown_exit();
    conn_args.save_transcript(&conn);
    Ok(success)
}
