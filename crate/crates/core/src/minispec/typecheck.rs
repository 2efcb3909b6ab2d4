//! Type checker for MiniSpec. Produces diagnostics plus a side table typing
//! every expression node; nat narrowing is deliberately not an error here
//! (the POG engine turns narrowing sites into proof obligations).
//!
//! Lemma bodies may use free variables (implicitly universally quantified).
//! Their types are inferred from use, defaulting to bool when unconstrained.

use super::ast::*;
use crate::slsp_types::{Diagnostic, Range};
use std::collections::HashMap;

#[derive(Debug, Clone, Default)]
pub struct CheckResult {
    pub diagnostics: Vec<Diagnostic>,
    /// Type of every well-typed expression node, keyed by `NodeId`.
    pub types: HashMap<NodeId, Type>,
    /// Inferred types of each lemma's free variables, in first-occurrence order.
    pub lemma_vars: HashMap<String, Vec<(String, Type)>>,
}

pub fn typecheck(module: &SpecModule) -> CheckResult {
    let mut sigs = HashMap::new();
    for f in &module.functions {
        sigs.insert(f.name.as_str(), f);
    }
    let mut checker = Checker { sigs, result: CheckResult::default() };
    checker.check_module(module);
    checker.result
}

struct Checker<'a> {
    sigs: HashMap<&'a str, &'a FuncDef>,
    result: CheckResult,
}

type Env = Vec<(String, Type)>;

fn lookup(env: &Env, name: &str) -> Option<Type> {
    env.iter().rev().find(|(n, _)| n == name).map(|&(_, t)| t)
}

impl<'a> Checker<'a> {
    fn error(&mut self, span: Range, message: impl Into<String>) {
        self.result.diagnostics.push(Diagnostic::error(span, message));
    }

    fn check_module(&mut self, module: &'a SpecModule) {
        let mut seen: HashMap<&str, Range> = HashMap::new();
        let names = module
            .functions
            .iter()
            .map(|f| (f.name.as_str(), f.location))
            .chain(module.traces.iter().map(|t| (t.name.as_str(), t.location)))
            .chain(module.lemmas.iter().map(|l| (l.name.as_str(), l.location)));
        for (name, location) in names {
            if seen.insert(name, location).is_some() {
                self.error(location, format!("duplicate top-level name `{name}`"));
            }
        }

        for f in &module.functions {
            self.check_function(f);
        }
        for t in &module.traces {
            self.check_trace(t);
        }
        for l in &module.lemmas {
            self.check_lemma(l);
        }
    }

    fn check_function(&mut self, f: &FuncDef) {
        let mut env: Env = Vec::new();
        for p in &f.params {
            if p.name == "RESULT" {
                self.error(p.span, "RESULT is reserved for post-conditions");
            }
            if env.iter().any(|(n, _)| n == &p.name) {
                self.error(p.span, format!("duplicate parameter `{}`", p.name));
            }
            env.push((p.name.clone(), p.ty));
        }

        if let Some(t) = self.infer(&f.body, &mut env) {
            if !t.assignable_to(f.return_type) {
                self.error(
                    f.body.span,
                    format!("function body has type {t}, expected {}", f.return_type),
                );
            }
        }
        if let Some(pre) = &f.pre {
            self.expect_bool(pre, &mut env, "pre-condition");
        }
        if let Some(post) = &f.post {
            env.push(("RESULT".into(), f.return_type));
            self.expect_bool(post, &mut env, "post-condition");
            env.pop();
        }
    }

    fn expect_bool(&mut self, e: &Expr, env: &mut Env, what: &str) {
        if let Some(t) = self.infer(e, env) {
            if t != Type::Bool {
                self.error(e.span, format!("{what} must be boolean, found {t}"));
            }
        }
    }

    /// Infer an expression's type, recording it in the table. `None` means a
    /// diagnostic was already emitted somewhere in this subtree.
    fn infer(&mut self, e: &Expr, env: &mut Env) -> Option<Type> {
        let ty = match &e.kind {
            ExprKind::IntLit(n) => Some(if *n >= 0 { Type::Nat } else { Type::Int }),
            ExprKind::BoolLit(_) => Some(Type::Bool),
            ExprKind::Var(name) => match lookup(env, name) {
                Some(t) => Some(t),
                None => {
                    let message = if name == "RESULT" {
                        "RESULT may only appear in a post-condition".to_string()
                    } else {
                        format!("unknown variable `{name}`")
                    };
                    self.error(e.span, message);
                    None
                }
            },
            ExprKind::Unary(UnOp::Neg, a) => {
                let t = self.infer(a, env)?;
                if !t.is_numeric() {
                    self.error(a.span, format!("cannot negate a value of type {t}"));
                    return None;
                }
                Some(Type::Int)
            }
            ExprKind::Unary(UnOp::Not, a) => {
                let t = self.infer(a, env)?;
                if t != Type::Bool {
                    self.error(a.span, format!("`not` requires bool, found {t}"));
                    return None;
                }
                Some(Type::Bool)
            }
            ExprKind::Binary(op, a, b) => {
                let ta = self.infer(a, env);
                let tb = self.infer(b, env);
                let (ta, tb) = (ta?, tb?);
                match op {
                    _ if op.is_arithmetic() => {
                        if !ta.is_numeric() {
                            self.error(a.span, format!("`{}` requires numbers, found {ta}", op.symbol()));
                            return None;
                        }
                        if !tb.is_numeric() {
                            self.error(b.span, format!("`{}` requires numbers, found {tb}", op.symbol()));
                            return None;
                        }
                        Some(Type::Int)
                    }
                    BinOp::Eq | BinOp::Ne => {
                        let compatible = (ta.is_numeric() && tb.is_numeric())
                            || (ta == Type::Bool && tb == Type::Bool);
                        if !compatible {
                            self.error(e.span, format!("cannot compare {ta} with {tb}"));
                            return None;
                        }
                        Some(Type::Bool)
                    }
                    _ if op.is_comparison() => {
                        if !ta.is_numeric() || !tb.is_numeric() {
                            self.error(
                                e.span,
                                format!("`{}` requires numbers, found {ta} and {tb}", op.symbol()),
                            );
                            return None;
                        }
                        Some(Type::Bool)
                    }
                    _ => {
                        // and / or / =>
                        if ta != Type::Bool {
                            self.error(a.span, format!("`{}` requires bool, found {ta}", op.symbol()));
                            return None;
                        }
                        if tb != Type::Bool {
                            self.error(b.span, format!("`{}` requires bool, found {tb}", op.symbol()));
                            return None;
                        }
                        Some(Type::Bool)
                    }
                }
            }
            ExprKind::If(c, t, f) => {
                if let Some(tc) = self.infer(c, env) {
                    if tc != Type::Bool {
                        self.error(c.span, format!("if-condition must be boolean, found {tc}"));
                    }
                }
                let tt = self.infer(t, env);
                let tf = self.infer(f, env);
                let (tt, tf) = (tt?, tf?);
                if tt == Type::Bool && tf == Type::Bool {
                    Some(Type::Bool)
                } else if tt.is_numeric() && tf.is_numeric() {
                    Some(if tt == Type::Nat && tf == Type::Nat { Type::Nat } else { Type::Int })
                } else {
                    self.error(e.span, format!("if-branches have different types: {tt} and {tf}"));
                    None
                }
            }
            ExprKind::Let(name, value, body) => {
                if name == "RESULT" {
                    self.error(e.span, "RESULT is reserved for post-conditions");
                }
                let tv = self.infer(value, env)?;
                env.push((name.clone(), tv));
                let tb = self.infer(body, env);
                env.pop();
                tb
            }
            ExprKind::Call(name, args) => {
                let Some(&f) = self.sigs.get(name.as_str()) else {
                    self.error(e.span, format!("unknown function `{name}`"));
                    return None;
                };
                if args.len() != f.params.len() {
                    self.error(
                        e.span,
                        format!(
                            "`{name}` expects {} argument(s), found {}",
                            f.params.len(),
                            args.len()
                        ),
                    );
                    return None;
                }
                let mut ok = true;
                for (arg, param) in args.iter().zip(&f.params) {
                    if let Some(ta) = self.infer(arg, env) {
                        if !ta.assignable_to(param.ty) {
                            self.error(
                                arg.span,
                                format!(
                                    "argument for `{}` has type {ta}, expected {}",
                                    param.name, param.ty
                                ),
                            );
                            ok = false;
                        }
                    } else {
                        ok = false;
                    }
                }
                if ok {
                    Some(f.return_type)
                } else {
                    None
                }
            }
        };
        if let Some(t) = ty {
            self.result.types.insert(e.id, t);
        }
        ty
    }

    // ----- traces -----------------------------------------------------------

    fn check_trace(&mut self, t: &TraceDef) {
        let mut env: Env = Vec::new();
        self.check_trace_expr(&t.body, &mut env);
    }

    /// Type of a literal trace argument, with nat refined by sign.
    fn literal_type(&mut self, e: &Expr, env: &Env) -> Option<Type> {
        let ty = match &e.kind {
            ExprKind::IntLit(_) => Some(Type::Nat),
            ExprKind::Unary(UnOp::Neg, inner) => match inner.kind {
                ExprKind::IntLit(0) => Some(Type::Nat),
                ExprKind::IntLit(_) => Some(Type::Int),
                _ => None,
            },
            ExprKind::BoolLit(_) => Some(Type::Bool),
            ExprKind::Var(name) => match lookup(env, name) {
                Some(t) => Some(t),
                None => {
                    self.error(e.span, format!("unknown trace variable `{name}`"));
                    None
                }
            },
            _ => None,
        };
        if let Some(t) = ty {
            self.result.types.insert(e.id, t);
        }
        ty
    }

    fn check_trace_expr(&mut self, t: &TraceExpr, env: &mut Env) {
        match &t.kind {
            TraceKind::Call { name, args } => {
                let Some(&f) = self.sigs.get(name.as_str()) else {
                    self.error(t.span, format!("unknown function `{name}` in trace"));
                    return;
                };
                if args.len() != f.params.len() {
                    self.error(
                        t.span,
                        format!(
                            "`{name}` expects {} argument(s), found {}",
                            f.params.len(),
                            args.len()
                        ),
                    );
                    return;
                }
                let params: Vec<_> = f.params.iter().map(|p| (p.name.clone(), p.ty)).collect();
                for (arg, (pname, pty)) in args.iter().zip(params) {
                    let Some(ta) = self.literal_type(arg, env) else {
                        continue;
                    };
                    let ok = match pty {
                        Type::Bool => ta == Type::Bool,
                        Type::Int => ta.is_numeric(),
                        // trace arguments are literal, so narrowing is decided
                        // statically: a possibly-negative value is an error
                        Type::Nat => ta == Type::Nat,
                    };
                    if !ok {
                        self.error(
                            arg.span,
                            format!("argument for `{pname}` has type {ta}, expected {pty}"),
                        );
                    }
                }
            }
            TraceKind::Seq(a, b) | TraceKind::Alt(a, b) => {
                self.check_trace_expr(a, env);
                self.check_trace_expr(b, env);
            }
            TraceKind::Repeat(a, _, _) => self.check_trace_expr(a, env),
            TraceKind::Let { var, choices, body } => {
                if var == "RESULT" {
                    self.error(t.span, "RESULT is reserved for post-conditions");
                }
                let mut var_ty: Option<Type> = None;
                for c in choices {
                    let Some(tc) = self.literal_type(c, env) else {
                        continue;
                    };
                    var_ty = Some(match (var_ty, tc) {
                        (None, t) => t,
                        (Some(Type::Bool), Type::Bool) => Type::Bool,
                        (Some(a), b) if a.is_numeric() && b.is_numeric() => {
                            if a == Type::Nat && b == Type::Nat { Type::Nat } else { Type::Int }
                        }
                        (Some(a), b) => {
                            self.error(c.span, format!("mixed types in binding set: {a} and {b}"));
                            a
                        }
                    });
                }
                env.push((var.clone(), var_ty.unwrap_or(Type::Int)));
                self.check_trace_expr(body, env);
                env.pop();
            }
        }
    }

    // ----- lemmas -----------------------------------------------------------

    fn check_lemma(&mut self, l: &LemmaDef) {
        let vars = self.infer_lemma_vars(l);
        let mut env: Env = vars.clone();
        if let Some(t) = self.infer(&l.body, &mut env) {
            if t != Type::Bool {
                self.error(l.body.span, format!("lemma body must be boolean, found {t}"));
            }
        }
        self.result.lemma_vars.insert(l.name.clone(), vars);
    }

    /// Fixpoint evidence pass over the lemma body: arithmetic and order
    /// contexts force int, logical contexts force bool, equalities propagate
    /// the known side. Unconstrained variables default to bool.
    fn infer_lemma_vars(&mut self, l: &LemmaDef) -> Vec<(String, Type)> {
        let free = l.body.free_vars();
        let mut evidence: HashMap<String, Type> = HashMap::new();
        let mut conflicted: Vec<String> = Vec::new();

        for _ in 0..10 {
            let before = evidence.clone();
            let mut shadow = Vec::new();
            self.gather(&l.body, None, &free, &mut evidence, &mut conflicted, &mut shadow);
            if evidence == before {
                break;
            }
        }
        for name in conflicted {
            self.error(l.body.span, format!("conflicting uses of `{name}` in lemma"));
        }
        free.into_iter()
            .map(|name| {
                let ty = evidence.get(&name).copied().unwrap_or(Type::Bool);
                (name, ty)
            })
            .collect()
    }

    fn record_evidence(
        &self,
        name: &str,
        ty: Type,
        free: &[String],
        evidence: &mut HashMap<String, Type>,
        conflicted: &mut Vec<String>,
        shadow: &[String],
    ) {
        if shadow.iter().any(|s| s == name) || !free.iter().any(|f| f == name) {
            return;
        }
        let ty = if ty == Type::Nat { Type::Int } else { ty };
        match evidence.get(name) {
            None => {
                evidence.insert(name.to_string(), ty);
            }
            Some(&prev) if prev != ty && !conflicted.iter().any(|c| c == name) => {
                conflicted.push(name.to_string());
            }
            _ => {}
        }
    }

    /// Shallow type guess used to propagate across equalities.
    fn known_type(
        &self,
        e: &Expr,
        evidence: &HashMap<String, Type>,
        shadow: &[String],
    ) -> Option<Type> {
        match &e.kind {
            ExprKind::IntLit(_) => Some(Type::Int),
            ExprKind::BoolLit(_) => Some(Type::Bool),
            ExprKind::Var(name) => {
                if shadow.iter().any(|s| s == name) {
                    None
                } else {
                    evidence.get(name).copied()
                }
            }
            ExprKind::Unary(UnOp::Neg, _) => Some(Type::Int),
            ExprKind::Unary(UnOp::Not, _) => Some(Type::Bool),
            ExprKind::Binary(op, ..) if op.is_arithmetic() => Some(Type::Int),
            ExprKind::Binary(..) => Some(Type::Bool),
            ExprKind::If(_, t, f) => self
                .known_type(t, evidence, shadow)
                .or_else(|| self.known_type(f, evidence, shadow)),
            ExprKind::Let(_, _, body) => self.known_type(body, evidence, shadow),
            ExprKind::Call(name, _) => self.sigs.get(name.as_str()).map(|f| {
                if f.return_type == Type::Bool { Type::Bool } else { Type::Int }
            }),
        }
    }

    fn gather(
        &self,
        e: &Expr,
        expected: Option<Type>,
        free: &[String],
        evidence: &mut HashMap<String, Type>,
        conflicted: &mut Vec<String>,
        shadow: &mut Vec<String>,
    ) {
        match &e.kind {
            ExprKind::IntLit(_) | ExprKind::BoolLit(_) => {}
            ExprKind::Var(name) => {
                if let Some(t) = expected {
                    self.record_evidence(name, t, free, evidence, conflicted, shadow);
                }
            }
            ExprKind::Unary(UnOp::Neg, a) => {
                self.gather(a, Some(Type::Int), free, evidence, conflicted, shadow)
            }
            ExprKind::Unary(UnOp::Not, a) => {
                self.gather(a, Some(Type::Bool), free, evidence, conflicted, shadow)
            }
            ExprKind::Binary(op, a, b) => {
                let operand = if op.is_arithmetic() {
                    Some(Type::Int)
                } else if matches!(op, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge) {
                    Some(Type::Int)
                } else if matches!(op, BinOp::Eq | BinOp::Ne) {
                    self.known_type(a, evidence, shadow)
                        .or_else(|| self.known_type(b, evidence, shadow))
                } else {
                    Some(Type::Bool)
                };
                self.gather(a, operand, free, evidence, conflicted, shadow);
                self.gather(b, operand, free, evidence, conflicted, shadow);
            }
            ExprKind::If(c, t, f) => {
                self.gather(c, Some(Type::Bool), free, evidence, conflicted, shadow);
                let branch = expected
                    .or_else(|| self.known_type(t, evidence, shadow))
                    .or_else(|| self.known_type(f, evidence, shadow));
                self.gather(t, branch, free, evidence, conflicted, shadow);
                self.gather(f, branch, free, evidence, conflicted, shadow);
            }
            ExprKind::Let(name, value, body) => {
                self.gather(value, None, free, evidence, conflicted, shadow);
                shadow.push(name.clone());
                self.gather(body, expected, free, evidence, conflicted, shadow);
                shadow.pop();
            }
            ExprKind::Call(name, args) => {
                if let Some(&f) = self.sigs.get(name.as_str()) {
                    for (arg, param) in args.iter().zip(&f.params) {
                        let t = if param.ty == Type::Bool { Type::Bool } else { Type::Int };
                        self.gather(arg, Some(t), free, evidence, conflicted, shadow);
                    }
                } else {
                    for arg in args {
                        self.gather(arg, None, free, evidence, conflicted, shadow);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minispec::parser::parse;

    fn check(text: &str) -> CheckResult {
        let (module, diags) = parse(text);
        assert!(diags.is_empty(), "parse diagnostics: {diags:?}");
        typecheck(&module.unwrap())
    }

    fn messages(r: &CheckResult) -> Vec<&str> {
        r.diagnostics.iter().map(|d| d.message.as_str()).collect()
    }

    #[test]
    fn non_boolean_lemma_is_an_error() {
        let r = check("module M lemma L : 1 + 2 end");
        assert!(
            messages(&r).iter().any(|m| m.contains("boolean")),
            "got: {:?}",
            messages(&r)
        );
    }

    #[test]
    fn nat_widens_to_int_without_error() {
        let r = check("module M f(x:nat):int == x end");
        assert!(r.diagnostics.is_empty(), "got: {:?}", messages(&r));
    }

    #[test]
    fn int_to_nat_narrowing_is_not_a_type_error() {
        let r = check("module M f(x:int):nat == x end");
        assert!(r.diagnostics.is_empty(), "got: {:?}", messages(&r));
    }

    #[test]
    fn result_is_bound_in_post_only() {
        let r = check("module M f(x:int):int == x post RESULT >= x end");
        assert!(r.diagnostics.is_empty());
        let r = check("module M f(x:int):int == RESULT end");
        assert!(messages(&r).iter().any(|m| m.contains("post-condition")));
    }

    #[test]
    fn bool_int_mixups_are_errors() {
        let r = check("module M f(x:int):int == x + true end");
        assert!(!r.diagnostics.is_empty());
        let r = check("module M f(b:bool):bool == 1 and b end");
        assert!(!r.diagnostics.is_empty());
        let r = check("module M f(b:bool):bool == b = 1 end");
        assert!(messages(&r).iter().any(|m| m.contains("compare")));
    }

    #[test]
    fn call_arity_and_types_are_checked() {
        let r = check("module M f(x:int):int == x g():int == f(1,2) end");
        assert!(messages(&r).iter().any(|m| m.contains("argument")));
        let r = check("module M f(x:bool):int == 1 g():int == f(3) end");
        assert!(!r.diagnostics.is_empty());
    }

    #[test]
    fn unknown_names_are_reported() {
        let r = check("module M f(x:int):int == y end");
        assert!(messages(&r).iter().any(|m| m.contains("unknown variable")));
        let r = check("module M f(x:int):int == g(x) end");
        assert!(messages(&r).iter().any(|m| m.contains("unknown function")));
    }

    #[test]
    fn duplicate_top_level_names_are_reported() {
        let r = check("module M f():int == 1 f(x:int):int == x end");
        assert!(messages(&r).iter().any(|m| m.contains("duplicate")));
        let r = check("module M f():int == 1 lemma f : true end");
        assert!(messages(&r).iter().any(|m| m.contains("duplicate")));
    }

    #[test]
    fn lemma_vars_infer_from_use() {
        let r = check("module M lemma L : x + 1 > x end");
        assert!(r.diagnostics.is_empty(), "got: {:?}", messages(&r));
        assert_eq!(r.lemma_vars["L"], vec![("x".to_string(), Type::Int)]);

        let r = check("module M lemma L : p => p end");
        assert!(r.diagnostics.is_empty());
        assert_eq!(r.lemma_vars["L"], vec![("p".to_string(), Type::Bool)]);

        // unconstrained: equality of two free variables defaults both to bool
        let r = check("module M lemma L : x = y end");
        assert!(r.diagnostics.is_empty());
        assert_eq!(
            r.lemma_vars["L"],
            vec![("x".to_string(), Type::Bool), ("y".to_string(), Type::Bool)]
        );

        // propagation through equality: y gets int evidence from x
        let r = check("module M lemma L : x > 0 and x = y end");
        assert!(r.diagnostics.is_empty());
        assert_eq!(
            r.lemma_vars["L"],
            vec![("x".to_string(), Type::Int), ("y".to_string(), Type::Int)]
        );
    }

    #[test]
    fn conflicting_lemma_var_use_is_an_error() {
        let r = check("module M lemma L : x and x > 1 end");
        assert!(messages(&r).iter().any(|m| m.contains("conflicting")));
    }

    #[test]
    fn trace_args_are_checked_statically() {
        let r = check("module M f(x:nat):int == x trace t = f(3) end");
        assert!(r.diagnostics.is_empty());
        let r = check("module M f(x:nat):int == x trace t = f(-3) end");
        assert!(!r.diagnostics.is_empty());
        let r = check("module M f(x:int):int == x trace t = let v in {1,-2} . f(v) end");
        assert!(r.diagnostics.is_empty());
        let r = check("module M f(x:nat):int == x trace t = let v in {1,-2} . f(v) end");
        assert!(!r.diagnostics.is_empty());
        let r = check("module M f(x:bool):int == 1 trace t = f(true) end");
        assert!(r.diagnostics.is_empty());
        let r = check("module M f(x:bool):int == 1 trace t = f(0) end");
        assert!(!r.diagnostics.is_empty());
    }

    #[test]
    fn forward_references_resolve() {
        let r = check("module M g(x:int):int == f(x) f(x:int):int == x end");
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn types_table_covers_expression_nodes() {
        let r = check("module M f(x:int):nat == if x > 0 then x else 0 - x end");
        assert!(r.diagnostics.is_empty());
        // root of the body is the if node: present and numeric
        assert!(r.types.values().any(|&t| t == Type::Int || t == Type::Nat));
    }
}
