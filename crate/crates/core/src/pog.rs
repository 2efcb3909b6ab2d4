//! Proof obligation generation. Walks each definition in document order and
//! emits an obligation at every partial-operation site:
//!
//! * "division by zero": `/` or `mod` node, goal `divisor <> 0`;
//! * "precondition satisfaction": call to a function with a pre-condition,
//!   goal = callee pre with the arguments substituted simultaneously;
//! * "nat subtype": an int-typed expression flowing into a nat position
//!   (function return or call argument), goal `expr >= 0`.
//!
//! The obligation source is `A1 and ... and Ak => G` where the assumptions
//! are the enclosing function's pre-condition followed by the if-branch
//! conditions, outermost first, with let-bindings substituted away. An
//! obligation is flagged proved when the simplifier reduces it to `true`.

use crate::base_protocol::RpcError;
use crate::minispec::ast::*;
use crate::minispec::pretty::print_expr;
use crate::proof::simplify;
use crate::slsp_types::{DocumentUri, Location, ProofObligation};
use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};

pub const KIND_DIVISION_BY_ZERO: &str = "division by zero";
pub const KIND_PRECONDITION: &str = "precondition satisfaction";
pub const KIND_NAT_SUBTYPE: &str = "nat subtype";

/// One checked file, in the shape the generator consumes.
pub struct PogInput<'a> {
    pub uri: &'a DocumentUri,
    pub module: &'a SpecModule,
    pub types: &'a HashMap<NodeId, Type>,
}

/// Generate obligations for the given files (already in lexicographic uri
/// order), numbering ids 1..n across the whole scope. Cancellation is polled
/// between definitions.
pub fn generate(
    files: &[PogInput<'_>],
    cancel: &AtomicBool,
) -> Result<Vec<ProofObligation>, RpcError> {
    let mut out = Vec::new();
    for file in files {
        let mut gen = Generator {
            uri: file.uri,
            module: file.module,
            types: file.types,
            out: &mut out,
        };
        for f in &file.module.functions {
            if cancel.load(Ordering::Relaxed) {
                return Err(RpcError::request_cancelled());
            }
            gen.walk_function(f);
        }
        for l in &file.module.lemmas {
            if cancel.load(Ordering::Relaxed) {
                return Err(RpcError::request_cancelled());
            }
            let name = format!("{}.{}", file.module.name, l.name);
            let mut ctx = Context::default();
            gen.walk(&l.body, &name, &mut ctx);
        }
    }
    for (i, po) in out.iter_mut().enumerate() {
        po.id = i as u32 + 1;
    }
    Ok(out)
}

#[derive(Default, Clone)]
struct Context {
    /// Already-substituted assumption expressions, outermost first.
    assumptions: Vec<Expr>,
    /// Active let-bindings, outermost first; values are pre-substituted.
    subst: Vec<(String, Expr)>,
}

impl Context {
    /// Substitute away every active let-binding, innermost first.
    fn apply(&self, e: &Expr) -> Expr {
        let mut result = e.clone();
        for (var, value) in self.subst.iter().rev() {
            result = result.substitute(var, value);
        }
        result
    }
}

/// Simultaneous substitution (one traversal), as needed for argument lists
/// where a parameter name may also occur in another argument.
fn substitute_many(e: &Expr, bindings: &[(String, Expr)]) -> Expr {
    let kind = match &e.kind {
        ExprKind::Var(name) => {
            if let Some((_, value)) = bindings.iter().find(|(n, _)| n == name) {
                return value.clone();
            }
            e.kind.clone()
        }
        ExprKind::IntLit(_) | ExprKind::BoolLit(_) => e.kind.clone(),
        ExprKind::Unary(op, a) => {
            ExprKind::Unary(*op, Box::new(substitute_many(a, bindings)))
        }
        ExprKind::Binary(op, a, b) => ExprKind::Binary(
            *op,
            Box::new(substitute_many(a, bindings)),
            Box::new(substitute_many(b, bindings)),
        ),
        ExprKind::If(c, t, f) => ExprKind::If(
            Box::new(substitute_many(c, bindings)),
            Box::new(substitute_many(t, bindings)),
            Box::new(substitute_many(f, bindings)),
        ),
        ExprKind::Let(name, value, body) => {
            let value = Box::new(substitute_many(value, bindings));
            let remaining: Vec<_> =
                bindings.iter().filter(|(n, _)| n != name).cloned().collect();
            let body = if remaining.is_empty() {
                body.clone()
            } else {
                Box::new(substitute_many(body, &remaining))
            };
            ExprKind::Let(name.clone(), value, body)
        }
        ExprKind::Call(name, args) => ExprKind::Call(
            name.clone(),
            args.iter().map(|a| substitute_many(a, bindings)).collect(),
        ),
    };
    Expr { id: e.id, span: e.span, kind }
}

struct Generator<'a> {
    uri: &'a DocumentUri,
    module: &'a SpecModule,
    types: &'a HashMap<NodeId, Type>,
    out: &'a mut Vec<ProofObligation>,
}

impl<'a> Generator<'a> {
    fn emit(&mut self, kind: &str, name: &str, span: crate::slsp_types::Range, goal: Expr, ctx: &Context) {
        let obligation = match ctx.assumptions.split_first() {
            None => goal,
            Some((first, rest)) => {
                let conj = rest
                    .iter()
                    .fold(first.clone(), |acc, a| Expr::binary(BinOp::And, acc, a.clone()));
                Expr::binary(BinOp::Imp, conj, goal)
            }
        };
        let proved = simplify(&obligation).is_true().then_some(true);
        self.out.push(ProofObligation {
            id: 0, // renumbered by `generate`
            kind: kind.to_string(),
            name: name.to_string(),
            location: Location { uri: self.uri.clone(), range: span },
            source: print_expr(&obligation),
            proved,
        });
    }

    fn walk_function(&mut self, f: &FuncDef) {
        let name = format!("{}.{}", self.module.name, f.name);

        let mut ctx = Context::default();
        if let Some(pre) = &f.pre {
            ctx.assumptions.push(pre.clone());
        }
        self.walk(&f.body, &name, &mut ctx);
        if f.return_type == Type::Nat && self.types.get(&f.body.id) == Some(&Type::Int) {
            let goal = Expr::binary(BinOp::Ge, f.body.clone(), Expr::int(0));
            self.emit(KIND_NAT_SUBTYPE, &name, f.body.span, goal, &ctx);
        }

        if let Some(pre) = &f.pre {
            let mut ctx = Context::default();
            self.walk(pre, &name, &mut ctx);
        }
        if let Some(post) = &f.post {
            let mut ctx = Context::default();
            if let Some(pre) = &f.pre {
                ctx.assumptions.push(pre.clone());
            }
            self.walk(post, &name, &mut ctx);
        }
    }

    /// Post-order walk: operand sites precede the operator's own obligation,
    /// matching the textual order of infix operators.
    fn walk(&mut self, e: &Expr, name: &str, ctx: &mut Context) {
        match &e.kind {
            ExprKind::IntLit(_) | ExprKind::BoolLit(_) | ExprKind::Var(_) => {}
            ExprKind::Unary(_, a) => self.walk(a, name, ctx),
            ExprKind::Binary(op, a, b) => {
                self.walk(a, name, ctx);
                self.walk(b, name, ctx);
                if matches!(op, BinOp::Div | BinOp::Mod) {
                    let goal = Expr::binary(BinOp::Ne, ctx.apply(b), Expr::int(0));
                    self.emit(KIND_DIVISION_BY_ZERO, name, e.span, goal, ctx);
                }
            }
            ExprKind::If(c, t, f) => {
                self.walk(c, name, ctx);
                let cond = ctx.apply(c);
                ctx.assumptions.push(cond.clone());
                self.walk(t, name, ctx);
                ctx.assumptions.pop();
                ctx.assumptions.push(Expr::unary(UnOp::Not, cond));
                self.walk(f, name, ctx);
                ctx.assumptions.pop();
            }
            ExprKind::Let(var, value, body) => {
                self.walk(value, name, ctx);
                let bound = ctx.apply(value);
                ctx.subst.push((var.clone(), bound));
                self.walk(body, name, ctx);
                ctx.subst.pop();
            }
            ExprKind::Call(fname, args) => {
                for a in args {
                    self.walk(a, name, ctx);
                }
                let Some(callee) = self.module.function(fname) else {
                    return;
                };
                for (arg, param) in args.iter().zip(&callee.params) {
                    if param.ty == Type::Nat && self.types.get(&arg.id) == Some(&Type::Int) {
                        let goal = Expr::binary(BinOp::Ge, ctx.apply(arg), Expr::int(0));
                        self.emit(KIND_NAT_SUBTYPE, name, arg.span, goal, ctx);
                    }
                }
                if let Some(pre) = &callee.pre {
                    let bindings: Vec<(String, Expr)> = callee
                        .params
                        .iter()
                        .zip(args)
                        .map(|(p, a)| (p.name.clone(), ctx.apply(a)))
                        .collect();
                    let goal = substitute_many(pre, &bindings);
                    self.emit(KIND_PRECONDITION, name, e.span, goal, ctx);
                }
            }
        }
    }
}
