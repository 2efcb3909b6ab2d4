//! Abstract syntax for MiniSpec modules, expressions and traces.
//!
//! Every expression node carries a source range and a `NodeId` so the type
//! checker can publish a side table (`NodeId` -> `Type`) without mutating the
//! tree. Expression equality is structural and ignores ids and ranges, which
//! is what the simplifier's syntactic rules (`X => X`, `X = X`) need.

use crate::slsp_types::Range;

pub type NodeId = u32;

/// Id used for expressions synthesized after parsing (substitutions,
/// simplifier output). They never appear in the type table.
pub const SYNTH_ID: NodeId = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Nat,
    Bool,
}

impl Type {
    pub fn is_numeric(self) -> bool {
        matches!(self, Type::Int | Type::Nat)
    }

    /// Widening assignability: `nat` is accepted wherever `int` is expected.
    /// `int` where `nat` is expected is also accepted here; the narrowing
    /// proof obligation is the POG engine's business, not a type error.
    pub fn assignable_to(self, expected: Type) -> bool {
        match (self, expected) {
            (Type::Bool, Type::Bool) => true,
            (a, b) => a.is_numeric() && b.is_numeric(),
        }
    }
}

impl std::fmt::Display for Type {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Type::Int => "int",
            Type::Nat => "nat",
            Type::Bool => "bool",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Imp,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "mod",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Imp => "=>",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod
        )
    }
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub id: NodeId,
    pub span: Range,
    pub kind: ExprKind,
}

impl Expr {
    pub fn synth(kind: ExprKind) -> Self {
        Expr { id: SYNTH_ID, span: Range::zero(), kind }
    }

    pub fn int(n: i64) -> Self {
        Expr::synth(ExprKind::IntLit(n))
    }

    pub fn bool(b: bool) -> Self {
        Expr::synth(ExprKind::BoolLit(b))
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::synth(ExprKind::Var(name.into()))
    }

    pub fn unary(op: UnOp, operand: Expr) -> Self {
        Expr::synth(ExprKind::Unary(op, Box::new(operand)))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::synth(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    pub fn is_true(&self) -> bool {
        matches!(self.kind, ExprKind::BoolLit(true))
    }

    /// Free variables in first-occurrence order (let-bound names excluded).
    pub fn free_vars(&self) -> Vec<String> {
        fn walk(e: &Expr, bound: &mut Vec<String>, out: &mut Vec<String>) {
            match &e.kind {
                ExprKind::IntLit(_) | ExprKind::BoolLit(_) => {}
                ExprKind::Var(name) => {
                    if !bound.contains(name) && !out.contains(name) {
                        out.push(name.clone());
                    }
                }
                ExprKind::Unary(_, a) => walk(a, bound, out),
                ExprKind::Binary(_, a, b) => {
                    walk(a, bound, out);
                    walk(b, bound, out);
                }
                ExprKind::If(c, t, f) => {
                    walk(c, bound, out);
                    walk(t, bound, out);
                    walk(f, bound, out);
                }
                ExprKind::Let(name, value, body) => {
                    walk(value, bound, out);
                    bound.push(name.clone());
                    walk(body, bound, out);
                    bound.pop();
                }
                ExprKind::Call(_, args) => {
                    for a in args {
                        walk(a, bound, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    /// Capture-free substitution of a closed expression for a variable.
    pub fn substitute(&self, var: &str, replacement: &Expr) -> Expr {
        let kind = match &self.kind {
            ExprKind::Var(name) if name == var => return replacement.clone(),
            ExprKind::IntLit(_) | ExprKind::BoolLit(_) | ExprKind::Var(_) => self.kind.clone(),
            ExprKind::Unary(op, a) => ExprKind::Unary(*op, Box::new(a.substitute(var, replacement))),
            ExprKind::Binary(op, a, b) => ExprKind::Binary(
                *op,
                Box::new(a.substitute(var, replacement)),
                Box::new(b.substitute(var, replacement)),
            ),
            ExprKind::If(c, t, f) => ExprKind::If(
                Box::new(c.substitute(var, replacement)),
                Box::new(t.substitute(var, replacement)),
                Box::new(f.substitute(var, replacement)),
            ),
            ExprKind::Let(name, value, body) => {
                let value = Box::new(value.substitute(var, replacement));
                let body = if name == var {
                    body.clone()
                } else {
                    Box::new(body.substitute(var, replacement))
                };
                ExprKind::Let(name.clone(), value, body)
            }
            ExprKind::Call(name, args) => ExprKind::Call(
                name.clone(),
                args.iter().map(|a| a.substitute(var, replacement)).collect(),
            ),
        };
        Expr { id: self.id, span: self.span, kind }
    }

    pub fn count_nodes(&self) -> usize {
        1 + match &self.kind {
            ExprKind::IntLit(_) | ExprKind::BoolLit(_) | ExprKind::Var(_) => 0,
            ExprKind::Unary(_, a) => a.count_nodes(),
            ExprKind::Binary(_, a, b) => a.count_nodes() + b.count_nodes(),
            ExprKind::If(c, t, f) => c.count_nodes() + t.count_nodes() + f.count_nodes(),
            ExprKind::Let(_, v, b) => v.count_nodes() + b.count_nodes(),
            ExprKind::Call(_, args) => args.iter().map(Expr::count_nodes).sum(),
        }
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Expr {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    IntLit(i64),
    BoolLit(bool),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Let(String, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceExpr {
    pub span: Range,
    pub kind: TraceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceKind {
    /// Call with literal arguments (or trace-let bound variables).
    Call { name: String, args: Vec<Expr> },
    Seq(Box<TraceExpr>, Box<TraceExpr>),
    Alt(Box<TraceExpr>, Box<TraceExpr>),
    Repeat(Box<TraceExpr>, u32, u32),
    Let { var: String, choices: Vec<Expr>, body: Box<TraceExpr> },
}

impl TraceExpr {
    pub fn substitute(&self, var: &str, replacement: &Expr) -> TraceExpr {
        let kind = match &self.kind {
            TraceKind::Call { name, args } => TraceKind::Call {
                name: name.clone(),
                args: args.iter().map(|a| a.substitute(var, replacement)).collect(),
            },
            TraceKind::Seq(a, b) => TraceKind::Seq(
                Box::new(a.substitute(var, replacement)),
                Box::new(b.substitute(var, replacement)),
            ),
            TraceKind::Alt(a, b) => TraceKind::Alt(
                Box::new(a.substitute(var, replacement)),
                Box::new(b.substitute(var, replacement)),
            ),
            TraceKind::Repeat(a, n, m) => {
                TraceKind::Repeat(Box::new(a.substitute(var, replacement)), *n, *m)
            }
            TraceKind::Let { var: v, choices, body } => {
                let choices = choices.iter().map(|c| c.substitute(var, replacement)).collect();
                let body = if v == var {
                    body.clone()
                } else {
                    Box::new(body.substitute(var, replacement))
                };
                TraceKind::Let { var: v.clone(), choices, body }
            }
        };
        TraceExpr { span: self.span, kind }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub span: Range,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuncDef {
    pub name: String,
    pub params: Vec<Param>,
    pub return_type: Type,
    pub body: Expr,
    pub pre: Option<Expr>,
    pub post: Option<Expr>,
    /// Range of the defining name token.
    pub location: Range,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceDef {
    pub name: String,
    pub body: TraceExpr,
    pub location: Range,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaDef {
    pub name: String,
    pub body: Expr,
    pub location: Range,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecModule {
    pub name: String,
    pub functions: Vec<FuncDef>,
    pub traces: Vec<TraceDef>,
    pub lemmas: Vec<LemmaDef>,
    pub location: Range,
}

impl SpecModule {
    pub fn function(&self, name: &str) -> Option<&FuncDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn trace(&self, name: &str) -> Option<&TraceDef> {
        self.traces.iter().find(|t| t.name == name)
    }

    pub fn lemma(&self, name: &str) -> Option<&LemmaDef> {
        self.lemmas.iter().find(|l| l.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expr_equality_ignores_spans_and_ids() {
        let a = Expr::binary(BinOp::Add, Expr::var("x"), Expr::int(1));
        let mut b = a.clone();
        b.id = 7;
        b.span = Range::zero();
        assert_eq!(a, b);
        let c = Expr::binary(BinOp::Add, Expr::var("x"), Expr::int(2));
        assert_ne!(a, c);
    }

    #[test]
    fn substitution_respects_let_shadowing() {
        // let x = x + 1 in x: outer x in the bound value is free, body x is not
        let body = Expr::synth(ExprKind::Let(
            "x".into(),
            Box::new(Expr::binary(BinOp::Add, Expr::var("x"), Expr::int(1))),
            Box::new(Expr::var("x")),
        ));
        let result = body.substitute("x", &Expr::int(5));
        let ExprKind::Let(_, value, inner) = &result.kind else {
            panic!("expected let");
        };
        assert_eq!(**value, Expr::binary(BinOp::Add, Expr::int(5), Expr::int(1)));
        assert_eq!(**inner, Expr::var("x"));
    }

    #[test]
    fn free_vars_in_first_occurrence_order() {
        let e = Expr::binary(
            BinOp::And,
            Expr::binary(BinOp::Eq, Expr::var("q"), Expr::var("p")),
            Expr::var("q"),
        );
        assert_eq!(e.free_vars(), vec!["q".to_string(), "p".to_string()]);
    }
}
