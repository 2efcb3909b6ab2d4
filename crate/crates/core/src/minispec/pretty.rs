//! Pretty-printer for MiniSpec. Emits the same grammar the parser accepts,
//! inserting the minimal parentheses the precedence table requires, so
//! parse-then-print is a fixpoint on printed output.

use super::ast::*;

/// Context precedence levels. `if`/`let` sit below every operator and are
/// parenthesized whenever they appear as an operand.
pub(crate) const PREC_LOWEST: u8 = 0;
pub(crate) const PREC_IMP: u8 = 1;
pub(crate) const PREC_OR: u8 = 2;
pub(crate) const PREC_AND: u8 = 3;
pub(crate) const PREC_NOT: u8 = 4;
pub(crate) const PREC_CMP: u8 = 5;
pub(crate) const PREC_ADD: u8 = 6;
pub(crate) const PREC_MUL: u8 = 7;
pub(crate) const PREC_NEG: u8 = 8;
pub(crate) const PREC_ATOM: u8 = 9;

pub(crate) fn op_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Imp => PREC_IMP,
        BinOp::Or => PREC_OR,
        BinOp::And => PREC_AND,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => PREC_CMP,
        BinOp::Add | BinOp::Sub => PREC_ADD,
        BinOp::Mul | BinOp::Div | BinOp::Mod => PREC_MUL,
    }
}

pub(crate) fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::IntLit(n) if *n < 0 => PREC_NEG,
        ExprKind::IntLit(_) | ExprKind::BoolLit(_) | ExprKind::Var(_) | ExprKind::Call(..) => {
            PREC_ATOM
        }
        ExprKind::Unary(UnOp::Neg, _) => PREC_NEG,
        ExprKind::Unary(UnOp::Not, _) => PREC_NOT,
        ExprKind::Binary(op, ..) => op_prec(*op),
        ExprKind::If(..) | ExprKind::Let(..) => PREC_LOWEST,
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, PREC_LOWEST);
    out
}

fn write_expr(out: &mut String, e: &Expr, ctx: u8) {
    let prec = expr_prec(e);
    let parens = prec < ctx;
    if parens {
        out.push('(');
    }
    match &e.kind {
        ExprKind::IntLit(n) => out.push_str(&n.to_string()),
        ExprKind::BoolLit(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Unary(UnOp::Neg, a) => {
            out.push('-');
            // `--` would lex as a comment: wrap a negative operand explicitly
            let neg_operand =
                matches!(&a.kind, ExprKind::Unary(UnOp::Neg, _)) || matches!(&a.kind, ExprKind::IntLit(n) if *n < 0);
            write_expr(out, a, if neg_operand { PREC_ATOM } else { PREC_NEG });
        }
        ExprKind::Unary(UnOp::Not, a) => {
            // `not` binds looser than comparisons, so `not a = b` would
            // re-parse fine; the parens keep negated comparisons readable
            out.push_str("not ");
            write_expr(out, a, PREC_CMP + 1);
        }
        ExprKind::Binary(op, a, b) => {
            let p = op_prec(*op);
            let (lctx, rctx) = match op {
                BinOp::Imp => (p + 1, p),                         // right-associative
                op if op.is_comparison() => (p + 1, p + 1),       // non-associative
                _ => (p, p + 1),                                  // left-associative
            };
            write_expr(out, a, lctx);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, b, rctx);
        }
        ExprKind::If(c, t, f) => {
            out.push_str("if ");
            write_expr(out, c, PREC_LOWEST);
            out.push_str(" then ");
            write_expr(out, t, PREC_LOWEST);
            out.push_str(" else ");
            write_expr(out, f, PREC_LOWEST);
        }
        ExprKind::Let(name, value, body) => {
            out.push_str("let ");
            out.push_str(name);
            out.push_str(" = ");
            write_expr(out, value, PREC_LOWEST);
            out.push_str(" in ");
            write_expr(out, body, PREC_LOWEST);
        }
        ExprKind::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, PREC_LOWEST);
            }
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

const TPREC_LOWEST: u8 = 0; // trace let
const TPREC_ALT: u8 = 1;
const TPREC_SEQ: u8 = 2;
const TPREC_REP: u8 = 3;

fn trace_prec(t: &TraceExpr) -> u8 {
    match &t.kind {
        TraceKind::Let { .. } => TPREC_LOWEST,
        TraceKind::Alt(..) => TPREC_ALT,
        TraceKind::Seq(..) => TPREC_SEQ,
        TraceKind::Repeat(..) => TPREC_REP,
        TraceKind::Call { .. } => TPREC_REP + 1,
    }
}

pub fn print_trace(t: &TraceExpr) -> String {
    let mut out = String::new();
    write_trace(&mut out, t, TPREC_LOWEST);
    out
}

fn write_trace(out: &mut String, t: &TraceExpr, ctx: u8) {
    let prec = trace_prec(t);
    let parens = prec < ctx;
    if parens {
        out.push('(');
    }
    match &t.kind {
        TraceKind::Call { name, args } => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, PREC_LOWEST);
            }
            out.push(')');
        }
        TraceKind::Seq(a, b) => {
            write_trace(out, a, TPREC_SEQ);
            out.push_str(" ; ");
            write_trace(out, b, TPREC_SEQ + 1);
        }
        TraceKind::Alt(a, b) => {
            write_trace(out, a, TPREC_ALT);
            out.push_str(" | ");
            write_trace(out, b, TPREC_ALT + 1);
        }
        TraceKind::Repeat(a, n, m) => {
            write_trace(out, a, TPREC_REP);
            out.push_str(&format!("{{{n},{m}}}"));
        }
        TraceKind::Let { var, choices, body } => {
            out.push_str("let ");
            out.push_str(var);
            out.push_str(" in {");
            for (i, c) in choices.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, c, PREC_LOWEST);
            }
            out.push_str("} . ");
            write_trace(out, body, TPREC_LOWEST);
        }
    }
    if parens {
        out.push(')');
    }
}

fn write_params(out: &mut String, params: &[Param]) {
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("{}: {}", p.name, p.ty));
    }
}

pub fn print_module(m: &SpecModule) -> String {
    let mut out = String::new();
    out.push_str(&format!("module {}\n", m.name));
    let mut first = true;
    for f in &m.functions {
        if !first {
            out.push('\n');
        }
        first = false;
        out.push_str(&format!("  {}(", f.name));
        write_params(&mut out, &f.params);
        out.push_str(&format!("): {} ==\n    {}\n", f.return_type, print_expr(&f.body)));
        if let Some(pre) = &f.pre {
            out.push_str(&format!("  pre {}\n", print_expr(pre)));
        }
        if let Some(post) = &f.post {
            out.push_str(&format!("  post {}\n", print_expr(post)));
        }
    }
    for t in &m.traces {
        if !first {
            out.push('\n');
        }
        first = false;
        out.push_str(&format!("  trace {} = {}\n", t.name, print_trace(&t.body)));
    }
    for l in &m.lemmas {
        if !first {
            out.push('\n');
        }
        first = false;
        out.push_str(&format!("  lemma {} : {}\n", l.name, print_expr(&l.body)));
    }
    out.push_str("end\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minispec::parser::parse;

    fn roundtrip(text: &str) -> String {
        let (m, diags) = parse(text);
        assert!(diags.is_empty(), "parse of input failed: {diags:?}");
        let printed = print_module(&m.unwrap());
        let (m2, diags2) = parse(&printed);
        assert!(diags2.is_empty(), "printed output failed to parse: {diags2:?}\n{printed}");
        let reprinted = print_module(&m2.unwrap());
        assert_eq!(printed, reprinted, "printing is not a fixpoint");
        printed
    }

    fn body_of(text: &str) -> String {
        let (m, diags) = parse(&format!("module M f(a: int, b: int, p: bool): bool == {text} end"));
        assert!(diags.is_empty(), "{diags:?}");
        print_expr(&m.unwrap().functions[0].body)
    }

    #[test]
    fn minimal_parens_only() {
        assert_eq!(body_of("a + b * 2 = a"), "a + b * 2 = a");
        assert_eq!(body_of("(a + b) * 2 = a"), "(a + b) * 2 = a");
        assert_eq!(body_of("not (a = b)"), "not (a = b)");
        assert_eq!(body_of("not a = b"), "not (a = b)");
        assert_eq!(body_of("not p"), "not p");
        assert_eq!(body_of("not not p"), "not (not p)");
        assert_eq!(body_of("not (p and p)"), "not (p and p)");
        assert_eq!(body_of("p and (p or p)"), "p and (p or p)");
        assert_eq!(body_of("(a - b) - a >= 0"), "a - b - a >= 0");
        assert_eq!(body_of("a - (b - a) >= 0"), "a - (b - a) >= 0");
    }

    #[test]
    fn implication_prints_right_associatively() {
        assert_eq!(body_of("p => p => p"), "p => p => p");
        assert_eq!(body_of("(p => p) => p"), "(p => p) => p");
    }

    #[test]
    fn negation_avoids_comment_lexemes() {
        assert_eq!(body_of("-(-a) > 0"), "-(-a) > 0");
        assert_eq!(body_of("-a > 0"), "-a > 0");
        let double_neg = Expr::unary(UnOp::Neg, Expr::int(-5));
        assert_eq!(print_expr(&double_neg), "-(-5)");
    }

    #[test]
    fn if_and_let_parenthesize_as_operands() {
        assert_eq!(body_of("1 + (if p then 1 else 2) = 2"), "1 + (if p then 1 else 2) = 2");
        assert_eq!(body_of("if p then 1 else 2 + 1 = 3"), "if p then 1 else 2 + 1 = 3");
        assert_eq!(body_of("(let x = 1 in x) + 1 = 2"), "(let x = 1 in x) + 1 = 2");
    }

    #[test]
    fn trace_printing_matches_structure() {
        let (m, diags) = parse(
            "module M a(): int == 1 b(): int == 2 o(x: int): int == x
             trace t1 = (a() | b()){1,2}
             trace t2 = a() ; (b() | a())
             trace t3 = let x in {1, -2} . o(x) ; a()
             trace t4 = a() ; b() ; a()
             end",
        );
        assert!(diags.is_empty(), "{diags:?}");
        let m = m.unwrap();
        assert_eq!(print_trace(&m.traces[0].body), "(a() | b()){1,2}");
        assert_eq!(print_trace(&m.traces[1].body), "a() ; (b() | a())");
        assert_eq!(print_trace(&m.traces[2].body), "let x in {1, -2} . o(x) ; a()");
        assert_eq!(print_trace(&m.traces[3].body), "a() ; b() ; a()");
    }

    #[test]
    fn module_roundtrip_is_a_fixpoint() {
        roundtrip("module M f(a:int,b:int):int == a / b pre b <> 0 post RESULT * b <= a end");
        roundtrip(
            "module Core
             abs(x: int): nat == if x < 0 then -x else x
             safeDiv(a: int, b: int): int == a / b pre b <> 0
             trace t = safeDiv(4, 2){1,3} | abs(-1)
             lemma mirror : p and q => q and p
             end",
        );
        roundtrip("module E lemma L : (p => q) => (not q => not p) end");
    }
}
