//! Big-step interpreter for MiniSpec expressions. Strict left-to-right
//! evaluation; `and`/`or`/`=>` short-circuit; arithmetic is 64-bit checked
//! (overflow is an error, never wraparound); `/` and `mod` truncate toward
//! zero. Inputs must be type-correct: the interpreter trusts the checker.

use super::ast::*;
use std::fmt;

/// Call-nesting bound; MiniSpec has no loops, so this also bounds evaluation
/// of any recursive specification.
pub const RECURSION_LIMIT: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("DivisionByZero")]
    DivisionByZero,
    #[error("Overflow")]
    Overflow,
    #[error("PreconditionViolation")]
    PreconditionViolation,
    #[error("RecursionLimit")]
    RecursionLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

impl Value {
    fn as_int(self) -> i64 {
        match self {
            Value::Int(n) => n,
            Value::Bool(_) => unreachable!("type checker admitted bool where int required"),
        }
    }

    fn as_bool(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Int(_) => unreachable!("type checker admitted int where bool required"),
        }
    }

    /// The literal expression denoting this value.
    pub fn to_expr(self) -> Expr {
        match self {
            Value::Int(n) => Expr::int(n),
            Value::Bool(b) => Expr::bool(b),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

pub type Bindings = Vec<(String, Value)>;

fn lookup(env: &Bindings, name: &str) -> Value {
    env.iter()
        .rev()
        .find(|(n, _)| n == name)
        .map(|&(_, v)| v)
        .unwrap_or_else(|| unreachable!("unbound variable `{name}` survived type checking"))
}

/// Evaluate `e` with `env` binding all free variables. Function calls resolve
/// against `module`; a callee's pre-condition is evaluated under the argument
/// binding before its body, and a false pre raises `PreconditionViolation`.
pub fn eval(e: &Expr, env: &Bindings, module: &SpecModule) -> Result<Value, RuntimeError> {
    let mut locals = env.clone();
    eval_in(e, &mut locals, module, 0)
}

fn eval_in(
    e: &Expr,
    locals: &mut Bindings,
    module: &SpecModule,
    depth: usize,
) -> Result<Value, RuntimeError> {
    match &e.kind {
        ExprKind::IntLit(n) => Ok(Value::Int(*n)),
        ExprKind::BoolLit(b) => Ok(Value::Bool(*b)),
        ExprKind::Var(name) => Ok(lookup(locals, name)),
        ExprKind::Unary(UnOp::Neg, a) => {
            let v = eval_in(a, locals, module, depth)?.as_int();
            v.checked_neg().map(Value::Int).ok_or(RuntimeError::Overflow)
        }
        ExprKind::Unary(UnOp::Not, a) => {
            let v = eval_in(a, locals, module, depth)?.as_bool();
            Ok(Value::Bool(!v))
        }
        ExprKind::Binary(BinOp::And, a, b) => {
            if !eval_in(a, locals, module, depth)?.as_bool() {
                Ok(Value::Bool(false))
            } else {
                eval_in(b, locals, module, depth)
            }
        }
        ExprKind::Binary(BinOp::Or, a, b) => {
            if eval_in(a, locals, module, depth)?.as_bool() {
                Ok(Value::Bool(true))
            } else {
                eval_in(b, locals, module, depth)
            }
        }
        ExprKind::Binary(BinOp::Imp, a, b) => {
            if !eval_in(a, locals, module, depth)?.as_bool() {
                Ok(Value::Bool(true))
            } else {
                eval_in(b, locals, module, depth)
            }
        }
        ExprKind::Binary(op, a, b) => {
            let va = eval_in(a, locals, module, depth)?;
            let vb = eval_in(b, locals, module, depth)?;
            match op {
                BinOp::Add => va.as_int().checked_add(vb.as_int()).map(Value::Int).ok_or(RuntimeError::Overflow),
                BinOp::Sub => va.as_int().checked_sub(vb.as_int()).map(Value::Int).ok_or(RuntimeError::Overflow),
                BinOp::Mul => va.as_int().checked_mul(vb.as_int()).map(Value::Int).ok_or(RuntimeError::Overflow),
                BinOp::Div => {
                    let d = vb.as_int();
                    if d == 0 {
                        Err(RuntimeError::DivisionByZero)
                    } else {
                        va.as_int().checked_div(d).map(Value::Int).ok_or(RuntimeError::Overflow)
                    }
                }
                BinOp::Mod => {
                    let d = vb.as_int();
                    if d == 0 {
                        Err(RuntimeError::DivisionByZero)
                    } else {
                        va.as_int().checked_rem(d).map(Value::Int).ok_or(RuntimeError::Overflow)
                    }
                }
                BinOp::Eq => Ok(Value::Bool(va == vb)),
                BinOp::Ne => Ok(Value::Bool(va != vb)),
                BinOp::Lt => Ok(Value::Bool(va.as_int() < vb.as_int())),
                BinOp::Le => Ok(Value::Bool(va.as_int() <= vb.as_int())),
                BinOp::Gt => Ok(Value::Bool(va.as_int() > vb.as_int())),
                BinOp::Ge => Ok(Value::Bool(va.as_int() >= vb.as_int())),
                BinOp::And | BinOp::Or | BinOp::Imp => unreachable!("handled above"),
            }
        }
        ExprKind::If(c, t, f) => {
            if eval_in(c, locals, module, depth)?.as_bool() {
                eval_in(t, locals, module, depth)
            } else {
                eval_in(f, locals, module, depth)
            }
        }
        ExprKind::Let(name, value, body) => {
            let v = eval_in(value, locals, module, depth)?;
            locals.push((name.clone(), v));
            let result = eval_in(body, locals, module, depth);
            locals.pop();
            result
        }
        ExprKind::Call(name, args) => {
            let mut values = Vec::with_capacity(args.len());
            for a in args {
                values.push(eval_in(a, locals, module, depth)?);
            }
            let f = module
                .function(name)
                .unwrap_or_else(|| unreachable!("unknown function `{name}` survived type checking"));
            call(f, &values, module, depth)
        }
    }
}

/// Apply a function to already-evaluated arguments: bind parameters, check
/// the pre-condition, then evaluate the body.
pub fn call(
    f: &FuncDef,
    args: &[Value],
    module: &SpecModule,
    depth: usize,
) -> Result<Value, RuntimeError> {
    if depth + 1 > RECURSION_LIMIT {
        return Err(RuntimeError::RecursionLimit);
    }
    let mut locals: Bindings = f
        .params
        .iter()
        .zip(args)
        .map(|(p, v)| (p.name.clone(), *v))
        .collect();
    if let Some(pre) = &f.pre {
        if !eval_in(pre, &mut locals, module, depth + 1)?.as_bool() {
            return Err(RuntimeError::PreconditionViolation);
        }
    }
    eval_in(&f.body, &mut locals, module, depth + 1)
}

/// Evaluate a function's pre-condition under an argument binding; `true` when
/// there is no pre-condition. Used by the test runner to distinguish an
/// inadmissible top-level call from a failing one.
pub fn pre_holds(f: &FuncDef, args: &[Value], module: &SpecModule) -> Result<bool, RuntimeError> {
    let Some(pre) = &f.pre else {
        return Ok(true);
    };
    let mut locals: Bindings = f
        .params
        .iter()
        .zip(args)
        .map(|(p, v)| (p.name.clone(), *v))
        .collect();
    Ok(eval_in(pre, &mut locals, module, 0)?.as_bool())
}
