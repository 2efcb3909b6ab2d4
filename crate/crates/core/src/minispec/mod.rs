//! MiniSpec: the small specification language served by the reference
//! server. A module holds functions (with optional pre/post-conditions),
//! traces for combinatorial testing, and lemmas for theorem proving.

pub mod ast;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod typecheck;

pub use ast::{
    BinOp, Expr, ExprKind, FuncDef, LemmaDef, NodeId, Param, SpecModule, TraceDef, TraceExpr,
    TraceKind, Type, UnOp,
};
pub use eval::{call, eval, pre_holds, Bindings, RuntimeError, Value, RECURSION_LIMIT};
pub use parser::parse;
pub use pretty::{print_expr, print_module, print_trace};
pub use typecheck::{typecheck, CheckResult};

use crate::slsp_types::Diagnostic;

/// A parsed and checked source file. `module` is present only when the file
/// parses cleanly; `diagnostics` then carries any type errors.
#[derive(Debug, Clone)]
pub struct CheckedFile {
    pub module: Option<SpecModule>,
    pub check: CheckResult,
    pub diagnostics: Vec<Diagnostic>,
}

impl CheckedFile {
    pub fn is_clean(&self) -> bool {
        self.module.is_some() && self.diagnostics.is_empty()
    }
}

/// Parse and type-check one source file.
pub fn analyze(text: &str) -> CheckedFile {
    let (module, mut diagnostics) = parse(text);
    let check = match &module {
        Some(m) => {
            let check = typecheck(m);
            diagnostics.extend(check.diagnostics.clone());
            check
        }
        None => CheckResult::default(),
    };
    CheckedFile { module, check, diagnostics }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analyze_combines_parse_and_type_diagnostics() {
        let clean = analyze("module M f(x: int): int == x end");
        assert!(clean.is_clean());

        let parse_error = analyze("module M f( end");
        assert!(!parse_error.is_clean());
        assert!(parse_error.module.is_none());

        let type_error = analyze("module M lemma L : 1 + 2 end");
        assert!(!type_error.is_clean());
        assert!(type_error.module.is_some());
        assert!(type_error.diagnostics[0].message.contains("boolean"));
    }
}
