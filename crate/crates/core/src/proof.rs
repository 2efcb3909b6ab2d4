//! Theorem proving over MiniSpec lemmas: the rewrite-based simplifier (also
//! used by the POG engine to discharge obligations), sequents, interactive
//! proof sessions, and the bounded automatic prover.
//!
//! Lemma free variables are implicitly universally quantified. A session
//! holds a snapshot of every proof state so `undo` can restore any earlier
//! step and the recorded rules replay to the same states.

use crate::base_protocol::RpcError;
use crate::minispec::ast::*;
use crate::minispec::eval::{eval, Bindings, Value};
use crate::minispec::pretty::print_expr;
use crate::slsp_types::{
    ProofState, ProofStatus, ProveStatus, TPCommand, TPCommandResponse, TPProveResponse,
};
use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

/// Maximum number of boolean variables `prove`/`auto` will enumerate.
pub const AUTO_VAR_CAP: usize = 16;
const MAX_PASSES: usize = 1000;

// ---------------------------------------------------------------------------
// Simplifier
// ---------------------------------------------------------------------------

/// Rewrite to fixpoint (at most 1000 passes), applying rules leftmost-
/// innermost: constant folding plus the algebraic identity set.
pub fn simplify(e: &Expr) -> Expr {
    let mut current = e.clone();
    for _ in 0..MAX_PASSES {
        let (next, changed) = simplify_pass(&current);
        current = next;
        if !changed {
            return current;
        }
    }
    current
}

/// One pass: children first (left to right), then one rewrite attempt at the
/// parent node.
fn simplify_pass(e: &Expr) -> (Expr, bool) {
    let (node, child_changed) = match &e.kind {
        ExprKind::IntLit(_) | ExprKind::BoolLit(_) | ExprKind::Var(_) => (e.clone(), false),
        ExprKind::Unary(op, a) => {
            let (a2, c) = simplify_pass(a);
            (Expr::synth(ExprKind::Unary(*op, Box::new(a2))), c)
        }
        ExprKind::Binary(op, a, b) => {
            let (a2, ca) = simplify_pass(a);
            let (b2, cb) = simplify_pass(b);
            (Expr::synth(ExprKind::Binary(*op, Box::new(a2), Box::new(b2))), ca || cb)
        }
        ExprKind::If(c, t, f) => {
            let (c2, cc) = simplify_pass(c);
            let (t2, ct) = simplify_pass(t);
            let (f2, cf) = simplify_pass(f);
            (
                Expr::synth(ExprKind::If(Box::new(c2), Box::new(t2), Box::new(f2))),
                cc || ct || cf,
            )
        }
        ExprKind::Let(name, v, b) => {
            let (v2, cv) = simplify_pass(v);
            let (b2, cb) = simplify_pass(b);
            (
                Expr::synth(ExprKind::Let(name.clone(), Box::new(v2), Box::new(b2))),
                cv || cb,
            )
        }
        ExprKind::Call(name, args) => {
            let mut changed = false;
            let args2 = args
                .iter()
                .map(|a| {
                    let (a2, c) = simplify_pass(a);
                    changed |= c;
                    a2
                })
                .collect();
            (Expr::synth(ExprKind::Call(name.clone(), args2)), changed)
        }
    };
    match rewrite(&node) {
        Some(new) => (new, true),
        None => (node, child_changed),
    }
}

fn int_lit(e: &Expr) -> Option<i64> {
    match e.kind {
        ExprKind::IntLit(n) => Some(n),
        _ => None,
    }
}

fn bool_lit(e: &Expr) -> Option<bool> {
    match e.kind {
        ExprKind::BoolLit(b) => Some(b),
        _ => None,
    }
}

/// One rule application at the root of `e`, or `None` when no rule matches.
fn rewrite(e: &Expr) -> Option<Expr> {
    match &e.kind {
        ExprKind::Unary(UnOp::Neg, a) => int_lit(a).and_then(i64::checked_neg).map(Expr::int),
        ExprKind::Unary(UnOp::Not, a) => {
            if let Some(b) = bool_lit(a) {
                return Some(Expr::bool(!b));
            }
            if let ExprKind::Unary(UnOp::Not, inner) = &a.kind {
                return Some((**inner).clone());
            }
            None
        }
        ExprKind::Binary(op, a, b) => {
            // constant folding of all operators on literals
            if let (Some(x), Some(y)) = (int_lit(a), int_lit(b)) {
                let folded = match op {
                    BinOp::Add => x.checked_add(y).map(Expr::int),
                    BinOp::Sub => x.checked_sub(y).map(Expr::int),
                    BinOp::Mul => x.checked_mul(y).map(Expr::int),
                    BinOp::Div if y != 0 => x.checked_div(y).map(Expr::int),
                    BinOp::Mod if y != 0 => x.checked_rem(y).map(Expr::int),
                    BinOp::Eq => Some(Expr::bool(x == y)),
                    BinOp::Ne => Some(Expr::bool(x != y)),
                    BinOp::Lt => Some(Expr::bool(x < y)),
                    BinOp::Le => Some(Expr::bool(x <= y)),
                    BinOp::Gt => Some(Expr::bool(x > y)),
                    BinOp::Ge => Some(Expr::bool(x >= y)),
                    _ => None,
                };
                if let Some(folded) = folded {
                    return Some(folded);
                }
            }
            if let (Some(x), Some(y)) = (bool_lit(a), bool_lit(b)) {
                match op {
                    BinOp::Eq => return Some(Expr::bool(x == y)),
                    BinOp::Ne => return Some(Expr::bool(x != y)),
                    // and/or/=> fall through to the identity rules below,
                    // which decide every two-literal case
                    _ => {}
                }
            }
            match op {
                BinOp::Add => match (int_lit(a), int_lit(b)) {
                    (_, Some(0)) => Some((**a).clone()),
                    (Some(0), _) => Some((**b).clone()),
                    _ => None,
                },
                BinOp::Mul => match (int_lit(a), int_lit(b)) {
                    (_, Some(1)) => Some((**a).clone()),
                    (Some(1), _) => Some((**b).clone()),
                    (_, Some(0)) | (Some(0), _) => Some(Expr::int(0)),
                    _ => None,
                },
                BinOp::And => match (bool_lit(a), bool_lit(b)) {
                    (_, Some(true)) => Some((**a).clone()),
                    (Some(true), _) => Some((**b).clone()),
                    (_, Some(false)) | (Some(false), _) => Some(Expr::bool(false)),
                    _ => None,
                },
                BinOp::Or => match (bool_lit(a), bool_lit(b)) {
                    (_, Some(false)) => Some((**a).clone()),
                    (Some(false), _) => Some((**b).clone()),
                    (_, Some(true)) | (Some(true), _) => Some(Expr::bool(true)),
                    _ => None,
                },
                BinOp::Imp => match (bool_lit(a), bool_lit(b)) {
                    (Some(true), _) => Some((**b).clone()),
                    (_, Some(true)) => Some(Expr::bool(true)),
                    (Some(false), _) => Some(Expr::bool(true)),
                    _ if a == b => Some(Expr::bool(true)),
                    _ => None,
                },
                BinOp::Eq if a == b => Some(Expr::bool(true)),
                BinOp::Ne => Some(Expr::unary(
                    UnOp::Not,
                    Expr::binary(BinOp::Eq, (**a).clone(), (**b).clone()),
                )),
                _ => None,
            }
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Sequents and sessions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Sequent {
    pub hypotheses: Vec<Expr>,
    pub goal: Expr,
}

impl Sequent {
    pub fn render(&self) -> String {
        let goal = print_expr(&self.goal);
        if self.hypotheses.is_empty() {
            format!("|- {goal}")
        } else {
            let hyps: Vec<String> = self.hypotheses.iter().map(print_expr).collect();
            format!("{} |- {goal}", hyps.join(", "))
        }
    }

    /// The sequent as one formula: `h1 => (h2 => ... => goal)`.
    fn formula(&self) -> Expr {
        self.hypotheses
            .iter()
            .rev()
            .fold(self.goal.clone(), |acc, h| Expr::binary(BinOp::Imp, h.clone(), acc))
    }

    fn substitute(&self, var: &str, value: &Expr) -> Sequent {
        Sequent {
            hypotheses: self.hypotheses.iter().map(|h| h.substitute(var, value)).collect(),
            goal: self.goal.substitute(var, value),
        }
    }
}

#[derive(Debug, Clone)]
struct Session {
    /// Fully qualified lemma name, `<module>.<lemma>`.
    name: String,
    vars: Vec<(String, Type)>,
    module: SpecModule,
    /// `states[k]` is the subgoal list after `k` rules; index 0 is the
    /// initial state.
    states: Vec<Vec<Sequent>>,
    rules: Vec<String>,
    /// Set when the automatic prover (not a recorded step) closed the lemma.
    proved_by_prove: bool,
}

impl Session {
    fn current(&self) -> &Vec<Sequent> {
        self.states.last().expect("session always has a state")
    }

    fn state(&self) -> ProofState {
        let subgoals = self.current();
        ProofState {
            id: self.rules.len() as u32,
            status: if subgoals.is_empty() { ProofStatus::Proved } else { ProofStatus::Open },
            subgoals: subgoals.iter().map(Sequent::render).collect(),
            rules: self.rules.clone(),
        }
    }
}

/// Outcome of deciding one sequent.
enum Decision {
    Valid,
    Counterexample(String),
    EvalError(String),
    Undecidable { variable: String },
}

fn render_valuation(vars: &[(String, Type)], env: &Bindings) -> String {
    let mut parts = Vec::new();
    for (name, _) in vars {
        if let Some((_, v)) = env.iter().find(|(n, _)| n == name) {
            parts.push(format!("{name}={v}"));
        }
    }
    parts.join(", ")
}

/// Decide validity of `hyps => goal` by exhaustive valuation of its boolean
/// free variables (ground formulas have one empty valuation). Cancellation is
/// polled between valuations.
fn decide(
    sequent: &Sequent,
    vars: &[(String, Type)],
    module: &SpecModule,
    cancel: &AtomicBool,
) -> Result<Decision, RpcError> {
    let formula = sequent.formula();
    let free = formula.free_vars();
    let typed: Vec<(String, Type)> = free
        .iter()
        .map(|name| {
            let ty = vars
                .iter()
                .find(|(n, _)| n == name)
                .map(|&(_, t)| t)
                .unwrap_or(Type::Bool);
            (name.clone(), ty)
        })
        .collect();

    if typed.iter().any(|&(_, t)| t != Type::Bool) || typed.len() > AUTO_VAR_CAP {
        let variable = typed
            .iter()
            .find(|&&(_, t)| t == Type::Bool)
            .or_else(|| typed.first())
            .map(|(n, _)| n.clone())
            .unwrap_or_default();
        return Ok(Decision::Undecidable { variable });
    }

    let n = typed.len();
    for bits in 0u32..(1u32 << n) {
        if cancel.load(Ordering::Relaxed) {
            return Err(RpcError::request_cancelled());
        }
        let env: Bindings = typed
            .iter()
            .enumerate()
            .map(|(j, (name, _))| {
                let value = (bits >> (n - 1 - j)) & 1 == 1;
                (name.clone(), Value::Bool(value))
            })
            .collect();
        match eval(&formula, &env, module) {
            Ok(Value::Bool(true)) => {}
            Ok(_) => {
                return Ok(Decision::Counterexample(render_valuation(&typed, &env)));
            }
            Err(err) => {
                let at = render_valuation(&typed, &env);
                let detail = if at.is_empty() { String::new() } else { format!(" at {at}") };
                return Ok(Decision::EvalError(format!("evaluation raised {err}{detail}")));
            }
        }
    }
    Ok(Decision::Valid)
}

/// The fixed command table.
pub fn commands() -> Vec<TPCommand> {
    let entry = |name: &str, description: &str| TPCommand {
        name: name.to_string(),
        description: description.to_string(),
    };
    vec![
        entry("intro", "Move the antecedent of an implication goal into the hypotheses"),
        entry("split", "Split a conjunction goal into two subgoals"),
        entry("cases", "Case split on a boolean variable: cases <var>"),
        entry("simplify", "Rewrite the subgoal to normal form; closes it when the goal becomes true"),
        entry("assumption", "Close the subgoal when the goal matches a hypothesis after simplification"),
        entry("auto", "Decide the subgoal by exhaustive valuation of its boolean variables"),
    ]
}

#[derive(Debug, Default)]
pub struct ProofEngine {
    session: Option<Session>,
    proved: BTreeSet<String>,
}

impl ProofEngine {
    pub fn new() -> Self {
        Self::default()
    }

    /// Discard all sessions and statuses; called on every content change.
    pub fn invalidate(&mut self) {
        self.session = None;
        self.proved.clear();
    }

    pub fn is_proved(&self, qualified_name: &str) -> bool {
        self.proved.contains(qualified_name)
    }

    /// Start (or restart) a session for a lemma. A prior session, for any
    /// lemma, is discarded; so is a prior proved status for this lemma,
    /// unless the body is literally `true`.
    pub fn begin(
        &mut self,
        qualified_name: &str,
        lemma: &LemmaDef,
        vars: Vec<(String, Type)>,
        module: &SpecModule,
    ) -> ProofState {
        let initial = if lemma.body.is_true() {
            Vec::new()
        } else {
            vec![Sequent { hypotheses: Vec::new(), goal: lemma.body.clone() }]
        };
        if initial.is_empty() {
            self.proved.insert(qualified_name.to_string());
        } else {
            self.proved.remove(qualified_name);
        }
        let session = Session {
            name: qualified_name.to_string(),
            vars,
            module: module.clone(),
            states: vec![initial],
            rules: Vec::new(),
            proved_by_prove: false,
        };
        let state = session.state();
        self.session = Some(session);
        state
    }

    pub fn session_lemma(&self) -> Option<&str> {
        self.session.as_ref().map(|s| s.name.as_str())
    }

    /// Apply one command to the first open subgoal of the active session.
    pub fn apply(&mut self, command: &str) -> Result<TPCommandResponse, RpcError> {
        let Some(session) = self.session.as_mut() else {
            return Err(RpcError::invalid_request("no open proof session"));
        };
        let command = command.trim();
        let mut parts = command.split_whitespace();
        let name = parts.next().unwrap_or_default();
        let arg = parts.next();
        if parts.next().is_some() {
            return Err(RpcError::invalid_params("too many command arguments"));
        }

        let subgoals = session.current().clone();
        let Some(first) = subgoals.first().cloned() else {
            return Err(RpcError::invalid_request("proof already complete"));
        };
        let rest = &subgoals[1..];

        let reject_arg = |arg: Option<&str>| -> Result<(), RpcError> {
            match arg {
                Some(a) => Err(RpcError::invalid_params(format!(
                    "command `{name}` takes no argument, got `{a}`"
                ))),
                None => Ok(()),
            }
        };

        let (new_first, description): (Vec<Sequent>, String) = match name {
            "intro" => {
                reject_arg(arg)?;
                let ExprKind::Binary(BinOp::Imp, a, b) = &first.goal.kind else {
                    return Err(RpcError::invalid_params("intro requires an implication goal"));
                };
                let mut hyps = first.hypotheses.clone();
                hyps.push((**a).clone());
                (
                    vec![Sequent { hypotheses: hyps, goal: (**b).clone() }],
                    "moved the antecedent into the hypotheses".into(),
                )
            }
            "split" => {
                reject_arg(arg)?;
                let ExprKind::Binary(BinOp::And, a, b) = &first.goal.kind else {
                    return Err(RpcError::invalid_params("split requires a conjunction goal"));
                };
                (
                    vec![
                        Sequent { hypotheses: first.hypotheses.clone(), goal: (**a).clone() },
                        Sequent { hypotheses: first.hypotheses.clone(), goal: (**b).clone() },
                    ],
                    "split the goal into 2 subgoals".into(),
                )
            }
            "cases" => {
                let Some(var) = arg else {
                    return Err(RpcError::invalid_params("cases requires a variable: cases <var>"));
                };
                let Some(&(_, ty)) = session.vars.iter().find(|(n, _)| n == var) else {
                    return Err(RpcError::invalid_params(format!(
                        "unknown lemma variable `{var}`"
                    )));
                };
                if ty != Type::Bool {
                    return Err(RpcError::invalid_params(format!(
                        "cases requires a boolean variable, `{var}` is {ty}"
                    )));
                }
                (
                    vec![
                        first.substitute(var, &Expr::bool(true)),
                        first.substitute(var, &Expr::bool(false)),
                    ],
                    format!("case split on {var}"),
                )
            }
            "simplify" => {
                reject_arg(arg)?;
                let simplified = Sequent {
                    hypotheses: first.hypotheses.iter().map(simplify).collect(),
                    goal: simplify(&first.goal),
                };
                if simplified.goal.is_true() {
                    (Vec::new(), "goal simplified to true; subgoal closed".into())
                } else {
                    (vec![simplified], "rewrote the subgoal to normal form".into())
                }
            }
            "assumption" => {
                reject_arg(arg)?;
                let goal = simplify(&first.goal);
                if first.hypotheses.iter().any(|h| simplify(h) == goal) {
                    (Vec::new(), "goal matches a hypothesis; subgoal closed".into())
                } else {
                    return Err(RpcError::invalid_params("no hypothesis matches the goal"));
                }
            }
            "auto" => {
                reject_arg(arg)?;
                let never = AtomicBool::new(false);
                match decide(&first, &session.vars, &session.module, &never)? {
                    Decision::Valid => {
                        (Vec::new(), "decided by exhaustive valuation; subgoal closed".into())
                    }
                    Decision::Counterexample(v) => {
                        return Err(RpcError::invalid_params(format!(
                            "auto found a counterexample: {v}"
                        )));
                    }
                    Decision::EvalError(msg) => {
                        return Err(RpcError::invalid_params(format!("auto failed: {msg}")));
                    }
                    Decision::Undecidable { .. } => {
                        return Err(RpcError::invalid_params(
                            "auto cannot decide subgoals with non-boolean variables",
                        ));
                    }
                }
            }
            other => {
                return Err(RpcError::invalid_params(format!("unknown command `{other}`")));
            }
        };

        let mut next = new_first;
        next.extend(rest.iter().cloned());
        session.states.push(next);
        session.rules.push(command.to_string());
        if session.current().is_empty() {
            self.proved.insert(session.name.clone());
        }
        let state = session.state();
        Ok(TPCommandResponse { description, state })
    }

    /// Decide every open subgoal of the active session. Does not record a
    /// step: the session's states and rules are untouched, but a fully valid
    /// state marks the lemma proved.
    pub fn prove_current(&mut self, cancel: &AtomicBool) -> Result<TPProveResponse, RpcError> {
        let started = Instant::now();
        let Some(session) = self.session.as_mut() else {
            return Err(RpcError::invalid_request("no open proof session"));
        };

        let mut counterexample: Option<String> = None;
        let mut eval_error: Option<String> = None;
        let mut undecidable: Option<String> = None;
        for sequent in session.current().clone() {
            match decide(&sequent, &session.vars, &session.module, cancel)? {
                Decision::Valid => {}
                Decision::Counterexample(v) => {
                    counterexample.get_or_insert(v);
                }
                Decision::EvalError(msg) => {
                    eval_error.get_or_insert(msg);
                }
                Decision::Undecidable { variable } => {
                    undecidable.get_or_insert(variable);
                }
            }
        }

        let elapsed = started.elapsed().as_millis() as u64;
        if let Some(v) = counterexample {
            return Ok(TPProveResponse {
                status: ProveStatus::Unproved,
                processing_time: elapsed,
                suggested_commands: None,
                description: Some(format!("counterexample: {v}")),
            });
        }
        if let Some(msg) = eval_error {
            return Ok(TPProveResponse {
                status: ProveStatus::Unproved,
                processing_time: elapsed,
                suggested_commands: None,
                description: Some(msg),
            });
        }
        if let Some(variable) = undecidable {
            return Ok(TPProveResponse {
                status: ProveStatus::Unproved,
                processing_time: elapsed,
                suggested_commands: Some(vec![
                    "simplify".into(),
                    "intro".into(),
                    format!("cases {variable}"),
                ]),
                description: Some("subgoal is not a boolean tautology over boolean variables".into()),
            });
        }
        session.proved_by_prove = true;
        self.proved.insert(session.name.clone());
        Ok(TPProveResponse {
            status: ProveStatus::Proved,
            processing_time: elapsed,
            suggested_commands: None,
            description: None,
        })
    }

    /// Restore the state before step `id` (latest step when absent) and
    /// discard all later history.
    pub fn undo(&mut self, id: Option<u32>) -> Result<ProofState, RpcError> {
        let Some(session) = self.session.as_mut() else {
            return Err(RpcError::invalid_request("no open proof session"));
        };
        let current = session.rules.len() as u32;
        let id = match id {
            None => {
                if current == 0 {
                    return Err(RpcError::invalid_request("already at step 0"));
                }
                current
            }
            Some(0) => return Err(RpcError::invalid_params("id 0 is not an undoable step")),
            Some(id) if id > current => {
                return Err(RpcError::invalid_params(format!(
                    "id {id} out of range; current step is {current}"
                )));
            }
            Some(id) => id,
        };
        session.states.truncate(id as usize);
        session.rules.truncate(id as usize - 1);
        if !session.current().is_empty() && !session.proved_by_prove {
            self.proved.remove(&session.name);
        }
        Ok(self.session.as_ref().expect("session").state())
    }
}
