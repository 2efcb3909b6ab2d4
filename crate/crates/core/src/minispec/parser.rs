//! Recursive-descent parser for MiniSpec. Parsing is total: errors become
//! diagnostics and the parser resynchronizes at the next definition. A module
//! value is produced only for a clean parse; any diagnostic suppresses it.

use super::ast::*;
use super::lexer::{lex, Token, TokenKind};
use crate::slsp_types::{Diagnostic, Range};

pub fn parse(text: &str) -> (Option<SpecModule>, Vec<Diagnostic>) {
    let (tokens, mut diagnostics) = lex(text);
    let mut parser = Parser { tokens: &tokens, pos: 0, diagnostics: Vec::new(), next_id: 0 };
    let module = parser.parse_module();
    diagnostics.extend(parser.diagnostics);
    if diagnostics.is_empty() {
        (module, diagnostics)
    } else {
        (None, diagnostics)
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    diagnostics: Vec<Diagnostic>,
    next_id: NodeId,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek2(&self) -> &TokenKind {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)].kind
    }

    fn span(&self) -> Range {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Range {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error(&mut self, span: Range, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic::error(span, message));
    }

    fn expect(&mut self, kind: TokenKind) -> bool {
        if self.peek() == &kind {
            self.advance();
            true
        } else {
            let found = self.peek().describe();
            let span = self.span();
            self.error(span, format!("expected {}, found {}", kind.describe(), found));
            false
        }
    }

    fn expect_ident(&mut self, what: &str) -> Option<(String, Range)> {
        if let TokenKind::Ident(name) = self.peek().clone() {
            let tok = self.advance();
            Some((name, tok.span))
        } else {
            let found = self.peek().describe();
            let span = self.span();
            self.error(span, format!("expected {what} name, found {found}"));
            None
        }
    }

    fn alloc(&mut self, kind: ExprKind, span: Range) -> Expr {
        let id = self.next_id;
        self.next_id += 1;
        Expr { id, span, kind }
    }

    /// Skip tokens until something that can start a definition (or `end`).
    fn recover(&mut self) {
        loop {
            match self.peek() {
                TokenKind::Eof | TokenKind::End | TokenKind::Trace | TokenKind::Lemma => return,
                TokenKind::Ident(_) if self.peek2() == &TokenKind::LParen => return,
                _ => {
                    self.advance();
                }
            }
        }
    }

    fn parse_module(&mut self) -> Option<SpecModule> {
        self.expect(TokenKind::Module);
        let (name, location) = self.expect_ident("module")?;
        let mut module = SpecModule {
            name,
            functions: Vec::new(),
            traces: Vec::new(),
            lemmas: Vec::new(),
            location,
        };
        loop {
            match self.peek().clone() {
                TokenKind::End => {
                    self.advance();
                    if self.peek() != &TokenKind::Eof {
                        let span = self.span();
                        self.error(span, "unexpected text after `end`");
                    }
                    break;
                }
                TokenKind::Eof => {
                    let span = self.span();
                    self.error(span, "expected `end` to close the module");
                    break;
                }
                TokenKind::Trace => {
                    self.advance();
                    if let Some(def) = self.parse_tracedef() {
                        module.traces.push(def);
                    } else {
                        self.recover();
                    }
                }
                TokenKind::Lemma => {
                    self.advance();
                    if let Some(def) = self.parse_lemmadef() {
                        module.lemmas.push(def);
                    } else {
                        self.recover();
                    }
                }
                TokenKind::Ident(_) => {
                    if let Some(def) = self.parse_funcdef() {
                        module.functions.push(def);
                    } else {
                        self.recover();
                    }
                }
                _ => {
                    let span = self.span();
                    let found = self.peek().describe();
                    self.error(span, format!("expected a definition, found {found}"));
                    self.advance();
                    self.recover();
                }
            }
        }
        Some(module)
    }

    fn parse_type(&mut self) -> Type {
        match self.peek() {
            TokenKind::TyInt => {
                self.advance();
                Type::Int
            }
            TokenKind::TyNat => {
                self.advance();
                Type::Nat
            }
            TokenKind::TyBool => {
                self.advance();
                Type::Bool
            }
            other => {
                let found = other.describe();
                let span = self.span();
                self.error(span, format!("expected a type (int, nat or bool), found {found}"));
                Type::Int
            }
        }
    }

    fn parse_funcdef(&mut self) -> Option<FuncDef> {
        let (name, location) = self.expect_ident("function")?;
        if !self.expect(TokenKind::LParen) {
            return None;
        }
        let mut params = Vec::new();
        if self.peek() != &TokenKind::RParen {
            loop {
                let (pname, pspan) = self.expect_ident("parameter")?;
                if !self.expect(TokenKind::Colon) {
                    return None;
                }
                let ty = self.parse_type();
                params.push(Param { name: pname, ty, span: pspan });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        if !self.expect(TokenKind::RParen) || !self.expect(TokenKind::Colon) {
            return None;
        }
        let return_type = self.parse_type();
        if !self.expect(TokenKind::DefEq) {
            return None;
        }
        let body = self.parse_expr();
        let pre = if self.eat(&TokenKind::Pre) {
            Some(self.parse_expr())
        } else {
            None
        };
        let post = if self.eat(&TokenKind::Post) {
            Some(self.parse_expr())
        } else {
            None
        };
        Some(FuncDef { name, params, return_type, body, pre, post, location })
    }

    fn parse_tracedef(&mut self) -> Option<TraceDef> {
        let (name, location) = self.expect_ident("trace")?;
        if !self.expect(TokenKind::Eq) {
            return None;
        }
        let body = self.parse_traceexpr()?;
        Some(TraceDef { name, body, location })
    }

    fn parse_lemmadef(&mut self) -> Option<LemmaDef> {
        let (name, location) = self.expect_ident("lemma")?;
        if !self.expect(TokenKind::Colon) {
            return None;
        }
        let body = self.parse_expr();
        Some(LemmaDef { name, body, location })
    }

    // ----- expressions ------------------------------------------------------

    fn parse_expr(&mut self) -> Expr {
        self.parse_imp()
    }

    fn parse_imp(&mut self) -> Expr {
        let lhs = self.parse_or();
        if self.eat(&TokenKind::Imp) {
            let rhs = self.parse_imp(); // right-associative
            let span = Range { start: lhs.span.start, end: rhs.span.end };
            self.alloc(ExprKind::Binary(BinOp::Imp, Box::new(lhs), Box::new(rhs)), span)
        } else {
            lhs
        }
    }

    fn parse_or(&mut self) -> Expr {
        let mut lhs = self.parse_and();
        while self.eat(&TokenKind::Or) {
            let rhs = self.parse_and();
            let span = Range { start: lhs.span.start, end: rhs.span.end };
            lhs = self.alloc(ExprKind::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs)), span);
        }
        lhs
    }

    fn parse_and(&mut self) -> Expr {
        let mut lhs = self.parse_not();
        while self.eat(&TokenKind::And) {
            let rhs = self.parse_not();
            let span = Range { start: lhs.span.start, end: rhs.span.end };
            lhs = self.alloc(ExprKind::Binary(BinOp::And, Box::new(lhs), Box::new(rhs)), span);
        }
        lhs
    }

    fn parse_not(&mut self) -> Expr {
        if self.peek() == &TokenKind::Not {
            let start = self.span().start;
            self.advance();
            let operand = self.parse_not();
            let span = Range { start, end: operand.span.end };
            self.alloc(ExprKind::Unary(UnOp::Not, Box::new(operand)), span)
        } else {
            self.parse_cmp()
        }
    }

    fn comparison_op(&self) -> Option<BinOp> {
        match self.peek() {
            TokenKind::Eq => Some(BinOp::Eq),
            TokenKind::Ne => Some(BinOp::Ne),
            TokenKind::Lt => Some(BinOp::Lt),
            TokenKind::Le => Some(BinOp::Le),
            TokenKind::Gt => Some(BinOp::Gt),
            TokenKind::Ge => Some(BinOp::Ge),
            _ => None,
        }
    }

    fn parse_cmp(&mut self) -> Expr {
        let lhs = self.parse_add();
        let Some(op) = self.comparison_op() else {
            return lhs;
        };
        self.advance();
        let rhs = self.parse_add();
        if self.comparison_op().is_some() {
            let span = self.span();
            self.error(span, "comparison operators are non-associative; use parentheses");
            self.advance();
            let _ = self.parse_add();
        }
        let span = Range { start: lhs.span.start, end: rhs.span.end };
        self.alloc(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span)
    }

    fn parse_add(&mut self) -> Expr {
        let mut lhs = self.parse_mul();
        loop {
            let op = match self.peek() {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.parse_mul();
            let span = Range { start: lhs.span.start, end: rhs.span.end };
            lhs = self.alloc(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        lhs
    }

    fn parse_mul(&mut self) -> Expr {
        let mut lhs = self.parse_neg();
        loop {
            let op = match self.peek() {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                TokenKind::Mod => BinOp::Mod,
                _ => break,
            };
            self.advance();
            let rhs = self.parse_neg();
            let span = Range { start: lhs.span.start, end: rhs.span.end };
            lhs = self.alloc(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        lhs
    }

    fn parse_neg(&mut self) -> Expr {
        if self.peek() == &TokenKind::Minus {
            let start = self.span().start;
            self.advance();
            let operand = self.parse_neg();
            let span = Range { start, end: operand.span.end };
            self.alloc(ExprKind::Unary(UnOp::Neg, Box::new(operand)), span)
        } else {
            self.parse_atom()
        }
    }

    fn parse_atom(&mut self) -> Expr {
        let span = self.span();
        match self.peek().clone() {
            TokenKind::Int(n) => {
                self.advance();
                self.alloc(ExprKind::IntLit(n), span)
            }
            TokenKind::True => {
                self.advance();
                self.alloc(ExprKind::BoolLit(true), span)
            }
            TokenKind::False => {
                self.advance();
                self.alloc(ExprKind::BoolLit(false), span)
            }
            TokenKind::Ident(name) => {
                self.advance();
                if self.peek() == &TokenKind::LParen {
                    self.advance();
                    let mut args = Vec::new();
                    if self.peek() != &TokenKind::RParen {
                        loop {
                            args.push(self.parse_expr());
                            if !self.eat(&TokenKind::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(TokenKind::RParen);
                    let full = Range { start: span.start, end: self.prev_span().end };
                    self.alloc(ExprKind::Call(name, args), full)
                } else {
                    self.alloc(ExprKind::Var(name), span)
                }
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.parse_expr();
                self.expect(TokenKind::RParen);
                inner
            }
            TokenKind::If => {
                self.advance();
                let cond = self.parse_expr();
                self.expect(TokenKind::Then);
                let then_branch = self.parse_expr();
                self.expect(TokenKind::Else);
                let else_branch = self.parse_expr();
                let full = Range { start: span.start, end: else_branch.span.end };
                self.alloc(
                    ExprKind::If(Box::new(cond), Box::new(then_branch), Box::new(else_branch)),
                    full,
                )
            }
            TokenKind::Let => {
                self.advance();
                let name = match self.expect_ident("binding") {
                    Some((name, _)) => name,
                    None => String::from("<error>"),
                };
                self.expect(TokenKind::Eq);
                let value = self.parse_expr();
                self.expect(TokenKind::In);
                let body = self.parse_expr();
                let full = Range { start: span.start, end: body.span.end };
                self.alloc(ExprKind::Let(name, Box::new(value), Box::new(body)), full)
            }
            other => {
                let found = other.describe();
                self.error(span, format!("expected an expression, found {found}"));
                if !matches!(other, TokenKind::Eof | TokenKind::End) {
                    self.advance();
                }
                self.alloc(ExprKind::IntLit(0), span)
            }
        }
    }

    // ----- traces -----------------------------------------------------------

    fn parse_traceexpr(&mut self) -> Option<TraceExpr> {
        let mut lhs = self.parse_trace_seq()?;
        while self.eat(&TokenKind::Pipe) {
            let rhs = self.parse_trace_seq()?;
            let span = Range { start: lhs.span.start, end: rhs.span.end };
            lhs = TraceExpr { span, kind: TraceKind::Alt(Box::new(lhs), Box::new(rhs)) };
        }
        Some(lhs)
    }

    fn parse_trace_seq(&mut self) -> Option<TraceExpr> {
        let mut lhs = self.parse_trace_rep()?;
        while self.eat(&TokenKind::Semi) {
            let rhs = self.parse_trace_rep()?;
            let span = Range { start: lhs.span.start, end: rhs.span.end };
            lhs = TraceExpr { span, kind: TraceKind::Seq(Box::new(lhs), Box::new(rhs)) };
        }
        Some(lhs)
    }

    fn parse_trace_rep(&mut self) -> Option<TraceExpr> {
        let mut t = self.parse_trace_atom()?;
        while self.peek() == &TokenKind::LBrace {
            self.advance();
            let n = self.parse_bound()?;
            if !self.expect(TokenKind::Comma) {
                return None;
            }
            let m = self.parse_bound()?;
            if !self.expect(TokenKind::RBrace) {
                return None;
            }
            if n > m {
                let span = self.prev_span();
                self.error(span, format!("repetition bounds must satisfy n <= m, got {{{n},{m}}}"));
                return None;
            }
            let span = Range { start: t.span.start, end: self.prev_span().end };
            t = TraceExpr { span, kind: TraceKind::Repeat(Box::new(t), n, m) };
        }
        Some(t)
    }

    fn parse_bound(&mut self) -> Option<u32> {
        if let TokenKind::Int(n) = *self.peek() {
            let span = self.span();
            self.advance();
            match u32::try_from(n) {
                Ok(v) => Some(v),
                Err(_) => {
                    self.error(span, "repetition bound too large");
                    None
                }
            }
        } else {
            let found = self.peek().describe();
            let span = self.span();
            self.error(span, format!("expected a repetition bound, found {found}"));
            None
        }
    }

    /// Literal trace argument: integer (possibly negated), boolean, or a
    /// trace-let bound variable.
    fn parse_trace_arg(&mut self, allow_var: bool) -> Option<Expr> {
        let span = self.span();
        match self.peek().clone() {
            TokenKind::Int(n) => {
                self.advance();
                Some(self.alloc(ExprKind::IntLit(n), span))
            }
            TokenKind::Minus => {
                self.advance();
                if let TokenKind::Int(n) = *self.peek() {
                    let end = self.span().end;
                    self.advance();
                    let full = Range { start: span.start, end };
                    let lit = self.alloc(ExprKind::IntLit(n), full);
                    Some(self.alloc(ExprKind::Unary(UnOp::Neg, Box::new(lit)), full))
                } else {
                    let found = self.peek().describe();
                    self.error(span, format!("expected an integer after `-`, found {found}"));
                    None
                }
            }
            TokenKind::True => {
                self.advance();
                Some(self.alloc(ExprKind::BoolLit(true), span))
            }
            TokenKind::False => {
                self.advance();
                Some(self.alloc(ExprKind::BoolLit(false), span))
            }
            TokenKind::Ident(name) if allow_var => {
                self.advance();
                Some(self.alloc(ExprKind::Var(name), span))
            }
            other => {
                let found = other.describe();
                self.error(span, format!("expected a literal argument, found {found}"));
                None
            }
        }
    }

    fn parse_trace_atom(&mut self) -> Option<TraceExpr> {
        let span = self.span();
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                self.advance();
                if !self.expect(TokenKind::LParen) {
                    return None;
                }
                let mut args = Vec::new();
                if self.peek() != &TokenKind::RParen {
                    loop {
                        args.push(self.parse_trace_arg(true)?);
                        if !self.eat(&TokenKind::Comma) {
                            break;
                        }
                    }
                }
                if !self.expect(TokenKind::RParen) {
                    return None;
                }
                let full = Range { start: span.start, end: self.prev_span().end };
                Some(TraceExpr { span: full, kind: TraceKind::Call { name, args } })
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.parse_traceexpr()?;
                if !self.expect(TokenKind::RParen) {
                    return None;
                }
                Some(inner)
            }
            TokenKind::Let => {
                self.advance();
                let (var, _) = self.expect_ident("binding")?;
                if !self.expect(TokenKind::In) || !self.expect(TokenKind::LBrace) {
                    return None;
                }
                let mut choices = Vec::new();
                loop {
                    choices.push(self.parse_trace_arg(false)?);
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                if !self.expect(TokenKind::RBrace) || !self.expect(TokenKind::Dot) {
                    return None;
                }
                let body = self.parse_traceexpr()?;
                let full = Range { start: span.start, end: body.span.end };
                Some(TraceExpr {
                    span: full,
                    kind: TraceKind::Let { var, choices, body: Box::new(body) },
                })
            }
            other => {
                let found = other.describe();
                self.error(span, format!("expected a trace expression, found {found}"));
                None
            }
        }
    }
}
