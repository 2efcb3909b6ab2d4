//! Combinatorial testing: expansion of trace expressions into concrete call
//! sequences, deterministic random filtering, and test execution.
//!
//! Expansion ordering is fixed so test ids are stable across runs and
//! implementations: sequencing varies the right operand fastest, alternation
//! concatenates left then right, repetition enumerates lengths `n..=m` in
//! ascending order (length 0 contributes one empty sequence), and a binder
//! concatenates the expansions for each choice in written order.

use crate::base_protocol::RpcError;
use crate::minispec::ast::{Expr, ExprKind, SpecModule, TraceExpr, TraceKind, UnOp};
use crate::minispec::eval::{call, pre_holds, Value};
use crate::slsp_types::{CTCallResult, CTTestCase, ResolvedFilter, Verdict};
use std::sync::atomic::{AtomicBool, Ordering};

/// Hard ceiling on the number of tests a single trace may expand to.
pub const EXPANSION_LIMIT: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("trace expansion exceeds the limit of {EXPANSION_LIMIT} tests")]
pub struct ExpansionLimitExceeded;

/// One concrete call in an expanded test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCall {
    pub name: String,
    pub args: Vec<Value>,
}

impl TestCall {
    /// Render as source text, e.g. `f(1, 0)`.
    pub fn render(&self) -> String {
        let args: Vec<String> = self.args.iter().map(Value::to_string).collect();
        format!("{}({})", self.name, args.join(", "))
    }
}

pub type TestSequence = Vec<TestCall>;

/// A cached expansion, tied to the workspace version it was computed at.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedTrace {
    pub trace_name: String,
    pub tests: Vec<TestSequence>,
    pub generated_at_version: u64,
}

/// Number of tests the trace expands to, without materializing them.
/// Saturates once past `EXPANSION_LIMIT`; exact below it.
pub fn count(t: &TraceExpr) -> u128 {
    const CAP: u128 = EXPANSION_LIMIT as u128 + 1;
    match &t.kind {
        TraceKind::Call { .. } => 1,
        TraceKind::Seq(a, b) => count(a).saturating_mul(count(b)).min(CAP),
        TraceKind::Alt(a, b) => count(a).saturating_add(count(b)).min(CAP),
        TraceKind::Repeat(a, n, m) => {
            let base = count(a);
            let mut total: u128 = 0;
            for k in *n..=*m {
                let mut term: u128 = 1;
                for _ in 0..k {
                    term = term.saturating_mul(base);
                    if term > CAP {
                        break;
                    }
                }
                total = total.saturating_add(term);
                if total > CAP {
                    return CAP;
                }
            }
            total
        }
        // choices are literals, so substitution cannot change the count
        TraceKind::Let { choices, body, .. } => {
            count(body).saturating_mul(choices.len() as u128).min(CAP)
        }
    }
}

/// Expand a trace into its ordered list of call sequences.
pub fn expand(t: &TraceExpr) -> Result<Vec<TestSequence>, ExpansionLimitExceeded> {
    if count(t) > EXPANSION_LIMIT as u128 {
        return Err(ExpansionLimitExceeded);
    }
    Ok(expand_unchecked(t))
}

fn expand_unchecked(t: &TraceExpr) -> Vec<TestSequence> {
    match &t.kind {
        TraceKind::Call { name, args } => {
            let call = TestCall {
                name: name.clone(),
                args: args.iter().map(literal_value).collect(),
            };
            vec![vec![call]]
        }
        TraceKind::Seq(a, b) => {
            let left = expand_unchecked(a);
            let right = expand_unchecked(b);
            let mut out = Vec::with_capacity(left.len() * right.len());
            for x in &left {
                for y in &right {
                    let mut seq = x.clone();
                    seq.extend(y.iter().cloned());
                    out.push(seq);
                }
            }
            out
        }
        TraceKind::Alt(a, b) => {
            let mut out = expand_unchecked(a);
            out.extend(expand_unchecked(b));
            out
        }
        TraceKind::Repeat(a, n, m) => {
            let base = expand_unchecked(a);
            let mut out = Vec::new();
            for k in *n..=*m {
                out.extend(k_fold(&base, k));
            }
            out
        }
        TraceKind::Let { var, choices, body } => {
            let mut out = Vec::new();
            for choice in choices {
                out.extend(expand_unchecked(&body.substitute(var, choice)));
            }
            out
        }
    }
}

/// All length-`k` concatenations of sequences drawn from `base`, rightmost
/// position varying fastest. `k == 0` yields one empty sequence.
fn k_fold(base: &[TestSequence], k: u32) -> Vec<TestSequence> {
    let mut acc: Vec<TestSequence> = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(acc.len() * base.len());
        for prefix in &acc {
            for s in base {
                let mut seq = prefix.clone();
                seq.extend(s.iter().cloned());
                next.push(seq);
            }
        }
        acc = next;
    }
    acc
}

fn literal_value(e: &Expr) -> Value {
    match &e.kind {
        ExprKind::IntLit(n) => Value::Int(*n),
        ExprKind::BoolLit(b) => Value::Bool(*b),
        ExprKind::Unary(UnOp::Neg, inner) => match &inner.kind {
            ExprKind::IntLit(n) => Value::Int(-n),
            _ => unreachable!("non-literal negation in trace argument"),
        },
        _ => unreachable!("non-literal trace argument survived type checking"),
    }
}

/// SplitMix64 generator; pinned so filtered test ids reproduce everywhere.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: i64) -> Self {
        SplitMix64 { state: seed as u64 }
    }

    pub fn next(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Pick `filter.limit` test ids from `start..=end` by a partial Fisher-Yates
/// shuffle driven by SplitMix64, returned sorted ascending. Selects the whole
/// range when the limit is not smaller.
pub fn select_ids(start: u64, end: u64, filter: ResolvedFilter) -> Vec<u64> {
    if start > end {
        return Vec::new();
    }
    let mut ids: Vec<u64> = (start..=end).collect();
    let take = (filter.limit as usize).min(ids.len());
    let mut rng = SplitMix64::new(filter.seed);
    for i in 0..take {
        let j = i + (rng.next() % (ids.len() - i) as u64) as usize;
        ids.swap(i, j);
    }
    ids.truncate(take);
    ids.sort_unstable();
    ids
}

/// Execute the tests whose id falls in `range` (1-based, inclusive, already
/// clamped), emitting one `CTTestCase` per id in ascending order. With a
/// filter, non-selected ids are emitted with verdict `Filtered` and no
/// results. Cancellation is polled between consecutive test cases.
pub fn execute_range(
    tests: &[TestSequence],
    module: &SpecModule,
    range: (u64, u64),
    filter: Option<ResolvedFilter>,
    cancel: &AtomicBool,
    mut emit: impl FnMut(CTTestCase),
) -> Result<(), RpcError> {
    let (start, end) = range;
    if start > end {
        return Ok(());
    }
    let selected = filter.map(|f| select_ids(start, end, f));
    for id in start..=end {
        if cancel.load(Ordering::Relaxed) {
            return Err(RpcError::request_cancelled());
        }
        let seq = &tests[(id - 1) as usize];
        let case = match &selected {
            Some(ids) if ids.binary_search(&id).is_err() => filtered_case(id as u32, seq),
            _ => run_case(id as u32, seq, module),
        };
        emit(case);
    }
    Ok(())
}

fn filtered_case(id: u32, seq: &[TestCall]) -> CTTestCase {
    CTTestCase {
        id,
        verdict: Some(Verdict::Filtered),
        sequence: seq
            .iter()
            .map(|c| CTCallResult { case: c.render(), result: None })
            .collect(),
    }
}

/// Run one test: calls execute in order; a call whose own pre-condition is
/// false makes the test `Inconclusive`, a runtime error makes it `Failed`,
/// and either skips the remaining calls (their results stay empty).
fn run_case(id: u32, seq: &[TestCall], module: &SpecModule) -> CTTestCase {
    let mut sequence: Vec<CTCallResult> = seq
        .iter()
        .map(|c| CTCallResult { case: c.render(), result: None })
        .collect();
    let mut verdict = Verdict::Passed;
    for (i, c) in seq.iter().enumerate() {
        let f = module
            .function(&c.name)
            .unwrap_or_else(|| unreachable!("unknown function `{}` in checked trace", c.name));
        match pre_holds(f, &c.args, module) {
            Ok(false) => {
                sequence[i].result = Some("PreconditionViolation".to_string());
                verdict = Verdict::Inconclusive;
                break;
            }
            Err(e) => {
                sequence[i].result = Some(e.to_string());
                verdict = Verdict::Failed;
                break;
            }
            Ok(true) => match call(f, &c.args, module, 0) {
                Ok(v) => sequence[i].result = Some(v.to_string()),
                Err(e) => {
                    sequence[i].result = Some(e.to_string());
                    verdict = Verdict::Failed;
                    break;
                }
            },
        }
    }
    CTTestCase { id, verdict: Some(verdict), sequence }
}

/// Trace-level verdict: `Failed` dominates, then `Inconclusive`, then
/// `Passed` if anything ran; all-`Filtered` yields no verdict.
pub fn aggregate_verdicts(verdicts: impl IntoIterator<Item = Verdict>) -> Option<Verdict> {
    let mut agg = None;
    for v in verdicts {
        match v {
            Verdict::Failed => return Some(Verdict::Failed),
            Verdict::Inconclusive => agg = Some(Verdict::Inconclusive),
            Verdict::Passed if agg.is_none() => agg = Some(Verdict::Passed),
            _ => {}
        }
    }
    agg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minispec::analyze;

    fn module_with(traces: &str) -> SpecModule {
        let text = format!(
            "module M
             a(): int == 1
             b(): int == 2
             op(x: int): int == x * 10
             safeDiv(a: int, b: int): int == a / b pre b <> 0
             div(a: int, b: int): int == a / b
             {traces}
             end"
        );
        let checked = analyze(&text);
        assert!(checked.is_clean(), "fixture: {:?}", checked.diagnostics);
        checked.module.unwrap()
    }

    fn rendered(tests: &[TestSequence]) -> Vec<Vec<String>> {
        tests
            .iter()
            .map(|seq| seq.iter().map(TestCall::render).collect())
            .collect()
    }

    /// Brute-force enumerator used as an independent ordering oracle.
    fn oracle(t: &TraceExpr) -> Vec<Vec<String>> {
        match &t.kind {
            TraceKind::Call { name, args } => {
                let rendered: Vec<String> =
                    args.iter().map(|a| literal_value(a).to_string()).collect();
                vec![vec![format!("{}({})", name, rendered.join(", "))]]
            }
            TraceKind::Seq(a, b) => {
                let mut out = Vec::new();
                for x in oracle(a) {
                    for y in oracle(b) {
                        out.push(x.iter().chain(y.iter()).cloned().collect());
                    }
                }
                out
            }
            TraceKind::Alt(a, b) => {
                let mut out = oracle(a);
                out.extend(oracle(b));
                out
            }
            TraceKind::Repeat(a, n, m) => {
                let mut out = Vec::new();
                for k in *n..=*m {
                    let mut partial: Vec<Vec<String>> = vec![Vec::new()];
                    for _ in 0..k {
                        let mut next = Vec::new();
                        for p in &partial {
                            for s in oracle(a) {
                                next.push(p.iter().chain(s.iter()).cloned().collect());
                            }
                        }
                        partial = next;
                    }
                    out.extend(partial);
                }
                out
            }
            TraceKind::Let { var, choices, body } => {
                let mut out = Vec::new();
                for c in choices {
                    out.extend(oracle(&body.substitute(var, c)));
                }
                out
            }
        }
    }

    #[test]
    fn alt_under_repeat_expands_in_documented_order() {
        let m = module_with("trace t = (a() | b()){1,2}");
        let tests = expand(&m.trace("t").unwrap().body).unwrap();
        assert_eq!(
            rendered(&tests),
            vec![
                vec!["a()".to_string()],
                vec!["b()".to_string()],
                vec!["a()".to_string(), "a()".to_string()],
                vec!["a()".to_string(), "b()".to_string()],
                vec!["b()".to_string(), "a()".to_string()],
                vec!["b()".to_string(), "b()".to_string()],
            ]
        );
    }

    #[test]
    fn binder_substitutes_each_choice_in_order() {
        let m = module_with("trace t = let x in {1, 2} . op(x)");
        let tests = expand(&m.trace("t").unwrap().body).unwrap();
        assert_eq!(rendered(&tests), vec![vec!["op(1)".to_string()], vec!["op(2)".to_string()]]);
    }

    #[test]
    fn zero_repetition_is_one_empty_sequence() {
        let m = module_with("trace t = op(3){0,0}");
        let tests = expand(&m.trace("t").unwrap().body).unwrap();
        assert_eq!(tests, vec![Vec::new()]);
        assert_eq!(count(&m.trace("t").unwrap().body), 1);
    }

    #[test]
    fn sequencing_varies_the_right_operand_fastest() {
        let m = module_with("trace t = (a() | b()) ; (op(1) | op(2))");
        let tests = expand(&m.trace("t").unwrap().body).unwrap();
        assert_eq!(
            rendered(&tests),
            vec![
                vec!["a()".to_string(), "op(1)".to_string()],
                vec!["a()".to_string(), "op(2)".to_string()],
                vec!["b()".to_string(), "op(1)".to_string()],
                vec!["b()".to_string(), "op(2)".to_string()],
            ]
        );
    }

    #[test]
    fn expansion_matches_the_brute_force_oracle() {
        let corpus = [
            "trace t = a()",
            "trace t = a() ; b() ; op(-3)",
            "trace t = (a() ; b()) | op(7)",
            "trace t = (a() | b()){0,3}",
            "trace t = let x in {1, 2, 3} . (op(x) | safeDiv(x, 1)){1,2}",
            "trace t = let x in {1, -2} . let y in {0, 5} . div(x, y)",
            "trace t = ((a() | b()) ; op(1)){2,2}",
        ];
        for fixture in corpus {
            let m = module_with(fixture);
            let body = &m.trace("t").unwrap().body;
            let tests = expand(body).unwrap();
            assert_eq!(rendered(&tests), oracle(body), "fixture: {fixture}");
            assert_eq!(count(body), tests.len() as u128, "fixture: {fixture}");
        }
    }

    #[test]
    fn expansion_limit_is_enforced() {
        // 2^17 = 131072 > 100000
        let m = module_with("trace t = (a() | b()){17,17}");
        let body = &m.trace("t").unwrap().body;
        assert!(count(body) > EXPANSION_LIMIT as u128);
        assert_eq!(expand(body), Err(ExpansionLimitExceeded));

        // 2^16 = 65536 stays under it
        let m = module_with("trace t = (a() | b()){16,16}");
        let body = &m.trace("t").unwrap().body;
        assert_eq!(count(body), 65536);
        assert_eq!(expand(body).unwrap().len(), 65536);
    }

    #[test]
    fn count_saturates_instead_of_overflowing() {
        let m = module_with("trace t = (a() | b()){0,4000000000}");
        let body = &m.trace("t").unwrap().body;
        assert!(count(body) > EXPANSION_LIMIT as u128);
    }

    fn run_all(m: &SpecModule, trace: &str) -> Vec<CTTestCase> {
        let tests = expand(&m.trace(trace).unwrap().body).unwrap();
        let mut out = Vec::new();
        let total = tests.len() as u64;
        execute_range(&tests, m, (1, total), None, &AtomicBool::new(false), |c| out.push(c))
            .unwrap();
        out
    }

    #[test]
    fn passing_test_records_printed_values() {
        let m = module_with("trace t = safeDiv(4, 2)");
        let cases = run_all(&m, "t");
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].id, 1);
        assert_eq!(cases[0].verdict, Some(Verdict::Passed));
        assert_eq!(cases[0].sequence[0].case, "safeDiv(4, 2)");
        assert_eq!(cases[0].sequence[0].result.as_deref(), Some("2"));
    }

    #[test]
    fn failed_precondition_is_inconclusive_and_skips_the_rest() {
        let m = module_with("trace t = safeDiv(1, 0) ; a()");
        let cases = run_all(&m, "t");
        assert_eq!(cases[0].verdict, Some(Verdict::Inconclusive));
        assert_eq!(cases[0].sequence[0].result.as_deref(), Some("PreconditionViolation"));
        assert_eq!(cases[0].sequence[1].case, "a()");
        assert_eq!(cases[0].sequence[1].result, None);
    }

    #[test]
    fn runtime_error_is_failed_with_the_error_name() {
        let m = module_with("trace t = div(1, 0) ; a()");
        let cases = run_all(&m, "t");
        assert_eq!(cases[0].verdict, Some(Verdict::Failed));
        assert_eq!(cases[0].sequence[0].result.as_deref(), Some("DivisionByZero"));
        assert_eq!(cases[0].sequence[1].result, None);
    }

    #[test]
    fn nested_precondition_violation_is_a_failure() {
        // the outer call has no pre; the violation surfaces during its body
        let text = "module M
            inner(x: int): int == x pre x > 0
            outer(x: int): int == inner(x)
            trace t = outer(0)
            end";
        let checked = analyze(text);
        assert!(checked.is_clean(), "{:?}", checked.diagnostics);
        let m = checked.module.unwrap();
        let cases = run_all(&m, "t");
        assert_eq!(cases[0].verdict, Some(Verdict::Failed));
        assert_eq!(cases[0].sequence[0].result.as_deref(), Some("PreconditionViolation"));
    }

    #[test]
    fn range_restricts_executed_ids() {
        let m = module_with("trace t = (a() | b()){1,2}");
        let tests = expand(&m.trace("t").unwrap().body).unwrap();
        let mut out = Vec::new();
        execute_range(&tests, &m, (2, 4), None, &AtomicBool::new(false), |c| out.push(c)).unwrap();
        assert_eq!(out.iter().map(|c| c.id).collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn filter_selection_is_deterministic_and_in_range() {
        let filter = ResolvedFilter { limit: 4, seed: 42 };
        let a = select_ids(1, 20, filter);
        let b = select_ids(1, 20, filter);
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a.iter().all(|&id| (1..=20).contains(&id)));

        let other = select_ids(1, 20, ResolvedFilter { limit: 4, seed: 43 });
        assert_ne!(a, other, "different seeds should pick different ids");

        // limit at least the range size selects everything
        let all = select_ids(3, 7, ResolvedFilter { limit: 99, seed: 0 });
        assert_eq!(all, vec![3, 4, 5, 6, 7]);
    }

    #[test]
    fn non_selected_ids_are_filtered_with_empty_results() {
        let m = module_with("trace t = (a() | b()){1,2}");
        let tests = expand(&m.trace("t").unwrap().body).unwrap();
        let filter = ResolvedFilter { limit: 2, seed: 7 };
        let mut out = Vec::new();
        execute_range(&tests, &m, (1, 6), Some(filter), &AtomicBool::new(false), |c| {
            out.push(c)
        })
        .unwrap();
        assert_eq!(out.len(), 6);
        let selected = select_ids(1, 6, filter);
        for case in &out {
            if selected.contains(&(case.id as u64)) {
                assert_ne!(case.verdict, Some(Verdict::Filtered));
                assert!(case.sequence.iter().all(|c| c.result.is_some()));
            } else {
                assert_eq!(case.verdict, Some(Verdict::Filtered));
                assert!(case.sequence.iter().all(|c| c.result.is_none()));
                assert!(!case.sequence[0].case.is_empty());
            }
        }
    }

    #[test]
    fn every_case_in_range_gets_exactly_one_verdict() {
        let m = module_with(
            "trace t = let x in {0, 1, 2} . (safeDiv(4, x) | div(4, x))",
        );
        let cases = run_all(&m, "t");
        assert_eq!(cases.len(), 6);
        assert!(cases.iter().all(|c| c.verdict.is_some()));
    }

    #[test]
    fn cancellation_stops_execution() {
        let m = module_with("trace t = a(){1,3}");
        let tests = expand(&m.trace("t").unwrap().body).unwrap();
        let mut out = Vec::new();
        let err = execute_range(&tests, &m, (1, 3), None, &AtomicBool::new(true), |c| {
            out.push(c)
        })
        .unwrap_err();
        assert_eq!(err.code, crate::base_protocol::codes::REQUEST_CANCELLED);
        assert!(out.is_empty());
    }

    #[test]
    fn verdict_aggregation_prefers_failures() {
        use Verdict::*;
        assert_eq!(aggregate_verdicts([Passed, Failed, Inconclusive]), Some(Failed));
        assert_eq!(aggregate_verdicts([Passed, Inconclusive]), Some(Inconclusive));
        assert_eq!(aggregate_verdicts([Passed, Filtered]), Some(Passed));
        assert_eq!(aggregate_verdicts([Filtered, Filtered]), None);
        assert_eq!(aggregate_verdicts([]), None);
    }

    #[test]
    fn expansion_is_stable_across_runs() {
        let m = module_with("trace t = let x in {1, 2} . (op(x) | a()){1,2}");
        let body = &m.trace("t").unwrap().body;
        assert_eq!(expand(body).unwrap(), expand(body).unwrap());
    }
}
