//! Recursive-descent parser for the ES5 subset.
//!
//! Semicolons are mandatory (no automatic semicolon insertion); scripts
//! that rely on ASI are rejected, mirroring the strict syntax
//! requirements of the obfuscation pipeline. Function declarations are
//! only accepted at program top level and directly inside function
//! bodies. On error the parser records a diagnostic and resynchronizes
//! at the next statement boundary so that one pass reports several
//! problems.

use crate::ast::*;
use crate::lexer::{Lexer, Tok, Token};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}: {}", self.span.start, self.span.end, self.message)
    }
}

/// Failure report for an unparseable script. A successful parse never
/// produces one of these; `recovered` marks that the parser managed to
/// continue past the first error and may have found more.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseDiagnostics {
    pub errors: Vec<ParseError>,
    pub recovered: bool,
}

impl fmt::Display for ParseDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error")?;
        for e in &self.errors {
            write!(f, "; {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseDiagnostics {}

const MAX_ERRORS: usize = 20;
const MAX_DEPTH: u32 = 400;

/// Parse a source string into a [`Program`], or report diagnostics.
pub fn parse(source: &str) -> Result<Program, ParseDiagnostics> {
    let tokens = match Lexer::new(source).tokenize() {
        Ok(t) => t,
        Err(e) => {
            return Err(ParseDiagnostics {
                errors: vec![ParseError {
                    span: e.span,
                    message: e.message,
                }],
                recovered: false,
            })
        }
    };
    let mut parser = Parser {
        tokens,
        pos: 0,
        errors: Vec::new(),
        depth: 0,
        source_len: source.len() as u32,
    };
    let program = parser.parse_program();
    if parser.errors.is_empty() {
        Ok(program)
    } else {
        Err(ParseDiagnostics {
            recovered: parser.errors.len() > 1
                || parser
                    .errors
                    .first()
                    .map(|e| e.span.end < parser.source_len)
                    .unwrap_or(false),
            errors: parser.errors,
        })
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    errors: Vec<ParseError>,
    depth: u32,
    source_len: u32,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn at_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Keyword(q) if *q == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.at_punct(p) {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&format!("expected `{p}`")))
        }
    }

    /// Statement terminator: a `;`, or nothing when the statement is the
    /// last thing before `}` or end of input (the one concession to
    /// compact output; there is no newline-based semicolon insertion).
    fn expect_semi(&mut self) -> PResult<Span> {
        if self.at_punct(";") {
            return Ok(self.advance().span);
        }
        if self.at_punct("}") || matches!(self.peek(), Tok::Eof) {
            return Ok(self.prev_span());
        }
        Err(self.unexpected("expected `;`"))
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let found = match self.peek() {
            Tok::Ident(n) => format!("identifier `{n}`"),
            Tok::Keyword(k) => format!("keyword `{k}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Regex { .. } => "regex literal".to_string(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        };
        ParseError {
            span: self.peek_span(),
            message: format!("{expected}, found {found}"),
        }
    }

    fn unsupported(&self, what: &str) -> ParseError {
        ParseError {
            span: self.peek_span(),
            message: format!("unsupported construct: {what}"),
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError {
                span: self.peek_span(),
                message: "nesting too deep".into(),
            });
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    // -- program / statements ------------------------------------------------

    fn parse_program(&mut self) -> Program {
        let mut body = Vec::new();
        while !matches!(self.peek(), Tok::Eof) {
            match self.parse_statement(true) {
                Ok(Some(stmt)) => body.push(stmt),
                Ok(None) => {}
                Err(e) => {
                    self.errors.push(e);
                    if self.errors.len() >= MAX_ERRORS {
                        break;
                    }
                    self.resync();
                }
            }
        }
        Program {
            span: Span::new(0, self.source_len),
            body,
        }
    }

    /// Skip tokens until just past a `;`, or to a `}`/EOF boundary.
    fn resync(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Punct(";") => {
                    self.advance();
                    return;
                }
                Tok::Punct("}") => {
                    self.advance();
                    return;
                }
                _ => {
                    self.advance();
                }
            }
        }
    }

    /// Parses one statement. Returns `None` for a bare `;` (allowed and
    /// dropped). `fn_decl_ok` is true at program top level and directly
    /// inside a function body.
    fn parse_statement(&mut self, fn_decl_ok: bool) -> PResult<Option<Stmt>> {
        self.enter()?;
        let r = self.parse_statement_inner(fn_decl_ok);
        self.leave();
        r
    }

    fn parse_statement_inner(&mut self, fn_decl_ok: bool) -> PResult<Option<Stmt>> {
        if self.eat_punct(";") {
            return Ok(None);
        }
        match self.peek().clone() {
            Tok::Keyword("function") => {
                if !fn_decl_ok {
                    return Err(self.unsupported(
                        "function declaration outside program or function-body top level",
                    ));
                }
                let f = self.parse_function(true)?;
                Ok(Some(Stmt::FunctionDecl(f)))
            }
            Tok::Keyword("var") => {
                let start = self.advance().span;
                let decls = self.parse_var_declarators()?;
                let end = self.expect_semi()?;
                Ok(Some(Stmt::VarDecl {
                    decls,
                    span: Span::new(start.start, end.end),
                }))
            }
            Tok::Keyword("if") => {
                let start = self.advance().span;
                self.expect_punct("(")?;
                let cond = self.parse_expression()?;
                self.expect_punct(")")?;
                let then_branch = Box::new(self.parse_required_statement()?);
                let (else_branch, end) = if self.at_keyword("else") {
                    self.advance();
                    let s = self.parse_required_statement()?;
                    let end = s.span();
                    (Some(Box::new(s)), end)
                } else {
                    (None, then_branch.span())
                };
                Ok(Some(Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                    span: Span::new(start.start, end.end),
                }))
            }
            Tok::Keyword("while") => {
                let start = self.advance().span;
                self.expect_punct("(")?;
                let cond = self.parse_expression()?;
                self.expect_punct(")")?;
                let body = Box::new(self.parse_required_statement()?);
                let end = body.span();
                Ok(Some(Stmt::While {
                    cond,
                    body,
                    span: Span::new(start.start, end.end),
                }))
            }
            Tok::Keyword("for") => {
                let start = self.advance().span;
                self.expect_punct("(")?;
                let init = if self.at_punct(";") {
                    None
                } else if self.at_keyword("var") {
                    let vstart = self.advance().span;
                    let decls = self.parse_var_declarators()?;
                    if self.at_keyword("in") {
                        return Err(self.unsupported("for-in loop"));
                    }
                    let vend = decls
                        .last()
                        .map(|d| {
                            d.init
                                .as_ref()
                                .map(|e| e.span())
                                .unwrap_or(d.name.span)
                        })
                        .unwrap_or(vstart);
                    Some(ForInit::VarDecl {
                        decls,
                        span: Span::new(vstart.start, vend.end),
                    })
                } else {
                    let e = self.parse_expression()?;
                    if self.at_keyword("in") {
                        return Err(self.unsupported("for-in loop"));
                    }
                    Some(ForInit::Expr(e))
                };
                self.expect_punct(";")?;
                let test = if self.at_punct(";") {
                    None
                } else {
                    Some(self.parse_expression()?)
                };
                self.expect_punct(";")?;
                let update = if self.at_punct(")") {
                    None
                } else {
                    Some(self.parse_expression()?)
                };
                self.expect_punct(")")?;
                let body = Box::new(self.parse_required_statement()?);
                let end = body.span();
                Ok(Some(Stmt::For {
                    init,
                    test,
                    update,
                    body,
                    span: Span::new(start.start, end.end),
                }))
            }
            Tok::Keyword("switch") => {
                let start = self.advance().span;
                self.expect_punct("(")?;
                let discriminant = self.parse_expression()?;
                self.expect_punct(")")?;
                self.expect_punct("{")?;
                let mut cases = Vec::new();
                let mut saw_default = false;
                while !self.at_punct("}") {
                    let case_start = self.peek_span();
                    let test = if self.at_keyword("case") {
                        self.advance();
                        let t = self.parse_expression()?;
                        Some(t)
                    } else if self.at_keyword("default") {
                        if saw_default {
                            return Err(self.unsupported("multiple default clauses"));
                        }
                        saw_default = true;
                        self.advance();
                        None
                    } else {
                        return Err(self.unexpected("expected `case`, `default`, or `}`"));
                    };
                    self.expect_punct(":")?;
                    let mut body = Vec::new();
                    while !self.at_punct("}")
                        && !self.at_keyword("case")
                        && !self.at_keyword("default")
                    {
                        if let Some(s) = self.parse_statement(false)? {
                            body.push(s);
                        }
                    }
                    let case_end = body.last().map(|s| s.span()).unwrap_or(case_start);
                    cases.push(Case {
                        test,
                        body,
                        span: Span::new(case_start.start, case_end.end.max(case_start.end)),
                    });
                }
                let end = self.expect_punct("}")?;
                Ok(Some(Stmt::Switch {
                    discriminant,
                    cases,
                    span: Span::new(start.start, end.end),
                }))
            }
            Tok::Keyword("return") => {
                let start = self.advance().span;
                let arg = if self.at_punct(";") || self.at_punct("}") {
                    None
                } else {
                    Some(self.parse_expression()?)
                };
                let end = self.expect_semi()?;
                Ok(Some(Stmt::Return {
                    arg,
                    span: Span::new(start.start, end.end),
                }))
            }
            Tok::Keyword("throw") => {
                let start = self.advance().span;
                let arg = self.parse_expression()?;
                let end = self.expect_semi()?;
                Ok(Some(Stmt::Throw {
                    arg,
                    span: Span::new(start.start, end.end),
                }))
            }
            Tok::Keyword("try") => {
                let start = self.advance().span;
                let (block, block_span) = self.parse_block()?;
                if self.at_keyword("finally") {
                    return Err(self.unsupported("finally clause"));
                }
                if !self.at_keyword("catch") {
                    return Err(self.unexpected("expected `catch`"));
                }
                self.advance();
                self.expect_punct("(")?;
                let param = self.parse_ident()?;
                self.expect_punct(")")?;
                let (handler, handler_span) = self.parse_block()?;
                if self.at_keyword("finally") {
                    return Err(self.unsupported("finally clause"));
                }
                Ok(Some(Stmt::TryCatch {
                    block,
                    block_span,
                    param,
                    handler,
                    handler_span,
                    span: Span::new(start.start, handler_span.end),
                }))
            }
            Tok::Punct("{") => {
                let (body, span) = self.parse_block()?;
                Ok(Some(Stmt::Block { body, span }))
            }
            Tok::Keyword(k)
                if matches!(
                    k,
                    "break" | "continue" | "do" | "with" | "debugger" | "delete" | "else"
                        | "case" | "default" | "catch" | "finally" | "in" | "instanceof"
                        | "class" | "const" | "let" | "enum" | "export" | "import" | "super"
                        | "extends" | "yield" | "static" | "implements" | "interface"
                        | "package" | "private" | "protected" | "public"
                ) =>
            {
                Err(self.unsupported(&format!("`{k}`")))
            }
            _ => {
                let expr = self.parse_expression()?;
                let start = expr.span();
                let end = self.expect_semi()?;
                Ok(Some(Stmt::Expr {
                    expr,
                    span: Span::new(start.start, end.end),
                }))
            }
        }
    }

    /// Statement position where an empty statement is not a useful body
    /// (loop and branch bodies); bare `;` becomes an empty block.
    fn parse_required_statement(&mut self) -> PResult<Stmt> {
        let span = self.peek_span();
        match self.parse_statement(false)? {
            Some(s) => Ok(s),
            None => Ok(Stmt::Block {
                body: Vec::new(),
                span,
            }),
        }
    }

    fn parse_block(&mut self) -> PResult<(Vec<Stmt>, Span)> {
        let start = self.expect_punct("{")?;
        let mut body = Vec::new();
        while !self.at_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return Err(self.unexpected("expected `}`"));
            }
            if let Some(s) = self.parse_statement(false)? {
                body.push(s);
            }
        }
        let end = self.expect_punct("}")?;
        Ok((body, Span::new(start.start, end.end)))
    }

    fn parse_var_declarators(&mut self) -> PResult<Vec<VarDeclarator>> {
        let mut decls = Vec::new();
        loop {
            let name = self.parse_ident()?;
            let init = if self.at_punct("=") {
                self.advance();
                Some(self.parse_assignment()?)
            } else {
                None
            };
            decls.push(VarDeclarator { name, init });
            if !self.eat_punct(",") {
                break;
            }
        }
        Ok(decls)
    }

    fn parse_ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.advance().span;
                Ok(Ident { name, span })
            }
            _ => Err(self.unexpected("expected identifier")),
        }
    }

    fn parse_function(&mut self, named_required: bool) -> PResult<Function> {
        let start = self.peek_span();
        if !self.at_keyword("function") {
            return Err(self.unexpected("expected `function`"));
        }
        self.advance();
        let name = if matches!(self.peek(), Tok::Ident(_)) {
            Some(self.parse_ident()?)
        } else if named_required {
            return Err(self.unexpected("expected function name"));
        } else {
            None
        };
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.at_punct(")") {
            loop {
                params.push(self.parse_ident()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        let mut body = Vec::new();
        while !self.at_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return Err(self.unexpected("expected `}`"));
            }
            if let Some(s) = self.parse_statement(true)? {
                body.push(s);
            }
        }
        let end = self.expect_punct("}")?;
        Ok(Function {
            name,
            params,
            body,
            span: Span::new(start.start, end.end),
        })
    }

    // -- expressions ----------------------------------------------------------

    /// Full expression including the comma operator.
    fn parse_expression(&mut self) -> PResult<Expr> {
        self.enter()?;
        let mut expr = self.parse_assignment()?;
        while self.at_punct(",") {
            self.advance();
            let right = self.parse_assignment()?;
            let span = Span::new(expr.span().start, right.span().end);
            expr = Expr::Binary {
                op: BinaryOp::Comma,
                left: Box::new(expr),
                right: Box::new(right),
                span,
            };
        }
        self.leave();
        Ok(expr)
    }

    fn parse_assignment(&mut self) -> PResult<Expr> {
        self.enter()?;
        let left = self.parse_conditional()?;
        let op = match self.peek() {
            Tok::Punct("=") => Some(AssignOp::Assign),
            Tok::Punct("+=") => Some(AssignOp::Add),
            Tok::Punct("-=") => Some(AssignOp::Sub),
            Tok::Punct("*=") => Some(AssignOp::Mul),
            Tok::Punct("/=") => Some(AssignOp::Div),
            Tok::Punct("%=") => Some(AssignOp::Mod),
            _ => None,
        };
        let r = if let Some(op) = op {
            if !matches!(left, Expr::Ident(_) | Expr::Member { .. } | Expr::Index { .. }) {
                return Err(ParseError {
                    span: left.span(),
                    message: "invalid assignment target".into(),
                });
            }
            self.advance();
            let value = self.parse_assignment()?;
            let span = Span::new(left.span().start, value.span().end);
            Ok(Expr::Assign {
                op,
                target: Box::new(left),
                value: Box::new(value),
                span,
            })
        } else {
            Ok(left)
        };
        self.leave();
        r
    }

    fn parse_conditional(&mut self) -> PResult<Expr> {
        let cond = self.parse_binary(0)?;
        if self.at_punct("?") {
            self.advance();
            let then_branch = self.parse_assignment()?;
            self.expect_punct(":")?;
            let else_branch = self.parse_assignment()?;
            let span = Span::new(cond.span().start, else_branch.span().end);
            Ok(Expr::Conditional {
                cond: Box::new(cond),
                then_branch: Box::new(then_branch),
                else_branch: Box::new(else_branch),
                span,
            })
        } else {
            Ok(cond)
        }
    }

    fn binary_op_at(&self) -> Option<(BinaryOp, u8)> {
        let (op, prec) = match self.peek() {
            Tok::Punct("||") => (BinaryOp::Or, 1),
            Tok::Punct("&&") => (BinaryOp::And, 2),
            Tok::Punct("|") => (BinaryOp::BitOr, 3),
            Tok::Punct("^") => (BinaryOp::BitXor, 4),
            Tok::Punct("&") => (BinaryOp::BitAnd, 5),
            Tok::Punct("==") => (BinaryOp::Eq, 6),
            Tok::Punct("!=") => (BinaryOp::NotEq, 6),
            Tok::Punct("===") => (BinaryOp::StrictEq, 6),
            Tok::Punct("!==") => (BinaryOp::StrictNotEq, 6),
            Tok::Punct("<") => (BinaryOp::Lt, 7),
            Tok::Punct("<=") => (BinaryOp::LtEq, 7),
            Tok::Punct(">") => (BinaryOp::Gt, 7),
            Tok::Punct(">=") => (BinaryOp::GtEq, 7),
            Tok::Punct("<<") => (BinaryOp::Shl, 8),
            Tok::Punct(">>") => (BinaryOp::Shr, 8),
            Tok::Punct(">>>") => (BinaryOp::UShr, 8),
            Tok::Punct("+") => (BinaryOp::Add, 9),
            Tok::Punct("-") => (BinaryOp::Sub, 9),
            Tok::Punct("*") => (BinaryOp::Mul, 10),
            Tok::Punct("/") => (BinaryOp::Div, 10),
            Tok::Punct("%") => (BinaryOp::Mod, 10),
            _ => return None,
        };
        Some((op, prec))
    }

    fn parse_binary(&mut self, min_prec: u8) -> PResult<Expr> {
        self.enter()?;
        let mut left = self.parse_unary()?;
        while let Some((op, prec)) = self.binary_op_at() {
            if prec < min_prec {
                break;
            }
            self.advance();
            let right = self.parse_binary(prec + 1)?;
            let span = Span::new(left.span().start, right.span().end);
            left = Expr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
                span,
            };
        }
        self.leave();
        Ok(left)
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        self.enter()?;
        let start = self.peek_span();
        let op = match self.peek() {
            Tok::Punct("!") => Some(UnaryOp::Not),
            Tok::Punct("~") => Some(UnaryOp::BitNot),
            Tok::Punct("-") => Some(UnaryOp::Neg),
            Tok::Punct("+") => Some(UnaryOp::Pos),
            Tok::Punct("++") => Some(UnaryOp::PreInc),
            Tok::Punct("--") => Some(UnaryOp::PreDec),
            Tok::Keyword("typeof") => Some(UnaryOp::TypeOf),
            Tok::Keyword("void") => Some(UnaryOp::Void),
            Tok::Keyword("delete") => {
                return Err(self.unsupported("`delete`"));
            }
            _ => None,
        };
        let r = if let Some(op) = op {
            self.advance();
            let operand = self.parse_unary()?;
            if matches!(op, UnaryOp::PreInc | UnaryOp::PreDec)
                && !matches!(
                    operand,
                    Expr::Ident(_) | Expr::Member { .. } | Expr::Index { .. }
                )
            {
                return Err(ParseError {
                    span: operand.span(),
                    message: "invalid increment/decrement target".into(),
                });
            }
            let span = Span::new(start.start, operand.span().end);
            Ok(Expr::Unary {
                op,
                operand: Box::new(operand),
                span,
            })
        } else {
            self.parse_postfix()
        };
        self.leave();
        r
    }

    fn parse_postfix(&mut self) -> PResult<Expr> {
        let expr = self.parse_call_member()?;
        if self.at_punct("++") || self.at_punct("--") {
            if !matches!(
                expr,
                Expr::Ident(_) | Expr::Member { .. } | Expr::Index { .. }
            ) {
                return Err(ParseError {
                    span: expr.span(),
                    message: "invalid increment/decrement target".into(),
                });
            }
            let op = if self.at_punct("++") {
                UnaryOp::PostInc
            } else {
                UnaryOp::PostDec
            };
            let end = self.advance().span;
            let span = Span::new(expr.span().start, end.end);
            return Ok(Expr::Unary {
                op,
                operand: Box::new(expr),
                span,
            });
        }
        Ok(expr)
    }

    fn parse_call_member(&mut self) -> PResult<Expr> {
        let mut expr = if self.at_keyword("new") {
            self.parse_new()?
        } else {
            self.parse_primary()?
        };
        loop {
            if self.at_punct(".") {
                self.advance();
                let property = self.parse_property_name()?;
                let span = Span::new(expr.span().start, property.span.end);
                expr = Expr::Member {
                    object: Box::new(expr),
                    property,
                    span,
                };
            } else if self.at_punct("[") {
                self.advance();
                let index = self.parse_expression()?;
                let end = self.expect_punct("]")?;
                let span = Span::new(expr.span().start, end.end);
                expr = Expr::Index {
                    object: Box::new(expr),
                    index: Box::new(index),
                    span,
                };
            } else if self.at_punct("(") {
                let args = self.parse_args()?;
                let span = Span::new(expr.span().start, self.prev_span().end);
                expr = Expr::Call {
                    callee: Box::new(expr),
                    args,
                    span,
                };
            } else {
                return Ok(expr);
            }
        }
    }

    /// `new Callee(args)` where Callee may be a dotted/bracketed chain.
    fn parse_new(&mut self) -> PResult<Expr> {
        self.enter()?;
        let start = self.advance().span; // `new`
        let mut callee = if self.at_keyword("new") {
            self.parse_new()?
        } else {
            self.parse_primary()?
        };
        loop {
            if self.at_punct(".") {
                self.advance();
                let property = self.parse_property_name()?;
                let span = Span::new(callee.span().start, property.span.end);
                callee = Expr::Member {
                    object: Box::new(callee),
                    property,
                    span,
                };
            } else if self.at_punct("[") {
                self.advance();
                let index = self.parse_expression()?;
                let end = self.expect_punct("]")?;
                let span = Span::new(callee.span().start, end.end);
                callee = Expr::Index {
                    object: Box::new(callee),
                    index: Box::new(index),
                    span,
                };
            } else {
                break;
            }
        }
        let args = if self.at_punct("(") {
            self.parse_args()?
        } else {
            Vec::new()
        };
        let span = Span::new(start.start, self.prev_span().end);
        self.leave();
        Ok(Expr::New {
            callee: Box::new(callee),
            args,
            span,
        })
    }

    /// Property names after `.` may be identifiers or reserved words.
    fn parse_property_name(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.advance().span;
                Ok(Ident { name, span })
            }
            Tok::Keyword(k) => {
                let span = self.advance().span;
                Ok(Ident {
                    name: k.to_string(),
                    span,
                })
            }
            _ => Err(self.unexpected("expected property name")),
        }
    }

    fn parse_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.at_punct(")") {
            loop {
                args.push(self.parse_assignment()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        self.enter()?;
        let r = self.parse_primary_inner();
        self.leave();
        r
    }

    fn parse_primary_inner(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Num(value) => {
                let span = self.advance().span;
                Ok(Expr::Num { value, span })
            }
            Tok::Str(value) => {
                let span = self.advance().span;
                Ok(Expr::Str(StrLit {
                    value,
                    hex: false,
                    span,
                }))
            }
            Tok::Regex { pattern, flags } => {
                let span = self.advance().span;
                Ok(Expr::Regex {
                    pattern,
                    flags,
                    span,
                })
            }
            Tok::Ident(name) => {
                let span = self.advance().span;
                Ok(Expr::Ident(Ident { name, span }))
            }
            Tok::Keyword("true") => {
                let span = self.advance().span;
                Ok(Expr::Bool { value: true, span })
            }
            Tok::Keyword("false") => {
                let span = self.advance().span;
                Ok(Expr::Bool { value: false, span })
            }
            Tok::Keyword("null") => {
                let span = self.advance().span;
                Ok(Expr::Null { span })
            }
            Tok::Keyword("this") => {
                let span = self.advance().span;
                Ok(Expr::This { span })
            }
            Tok::Keyword("function") => {
                let f = self.parse_function(false)?;
                Ok(Expr::Function(Box::new(f)))
            }
            Tok::Punct("(") => {
                self.advance();
                let e = self.parse_expression()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Punct("[") => {
                let start = self.advance().span;
                let mut elements = Vec::new();
                if !self.at_punct("]") {
                    loop {
                        if self.at_punct(",") {
                            return Err(self.unsupported("array hole (elision)"));
                        }
                        elements.push(self.parse_assignment()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                        if self.at_punct("]") {
                            break; // trailing comma
                        }
                    }
                }
                let end = self.expect_punct("]")?;
                Ok(Expr::Array {
                    elements,
                    span: Span::new(start.start, end.end),
                })
            }
            Tok::Punct("{") => {
                let start = self.advance().span;
                let mut props = Vec::new();
                if !self.at_punct("}") {
                    loop {
                        let key = match self.peek().clone() {
                            Tok::Ident(name) => {
                                let span = self.advance().span;
                                PropKey::Ident(Ident { name, span })
                            }
                            Tok::Keyword(k) => {
                                let span = self.advance().span;
                                PropKey::Ident(Ident {
                                    name: k.to_string(),
                                    span,
                                })
                            }
                            Tok::Str(value) => {
                                let span = self.advance().span;
                                PropKey::Str(StrLit {
                                    value,
                                    hex: false,
                                    span,
                                })
                            }
                            _ => return Err(self.unexpected("expected property key")),
                        };
                        self.expect_punct(":")?;
                        let value = self.parse_assignment()?;
                        props.push((key, value));
                        if !self.eat_punct(",") {
                            break;
                        }
                        if self.at_punct("}") {
                            break; // trailing comma
                        }
                    }
                }
                let end = self.expect_punct("}")?;
                Ok(Expr::Object {
                    props,
                    span: Span::new(start.start, end.end),
                })
            }
            Tok::Keyword(k) => Err(self.unsupported(&format!("`{k}` in expression position"))),
            Tok::Punct(p) => Err(self.unexpected(&format!("unexpected `{p}`"))),
            Tok::Eof => Err(self.unexpected("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast;

    #[test]
    fn welcome_script_shape() {
        let src = r#"function welcome(){console.log("Hi, how are you?")}welcome();"#;
        let program = parse(src).unwrap();
        assert_eq!(program.body.len(), 2);
        assert!(matches!(&program.body[0], Stmt::FunctionDecl(f) if f.name.as_ref().unwrap().name == "welcome"));
        assert!(matches!(
            &program.body[1],
            Stmt::Expr {
                expr: Expr::Call { .. },
                ..
            }
        ));
    }

    #[test]
    fn welcome_node_count_golden() {
        // Hand enumeration: Program, FunctionDecl, welcome, ExprStmt, Call,
        // Member, console, log, StringLit, ExprStmt, Call, welcome = 12.
        let src = r#"function welcome(){console.log("Hi, how are you?")}welcome();"#;
        let program = parse(src).unwrap();
        assert_eq!(ast::count_nodes(&program), 12);
    }

    #[test]
    fn empty_program() {
        let program = parse("").unwrap();
        assert!(program.body.is_empty());
        assert_eq!(ast::count_nodes(&program), 1);
    }

    #[test]
    fn destructuring_is_rejected() {
        let err = parse("function f({a}){}").unwrap_err();
        assert!(!err.errors.is_empty());
    }

    #[test]
    fn asi_is_not_performed() {
        assert!(parse("var a = 1\nvar b = 2;").is_err());
    }

    #[test]
    fn unsupported_statements_are_reported() {
        for src in [
            "while(true){break;}",
            "do { a(); } while(x);",
            "for (var k in o) {}",
            "delete a.b;",
            "try{a();}catch(e){}finally{}",
        ] {
            let err = parse(src).unwrap_err();
            assert!(
                err.errors
                    .iter()
                    .any(|e| e.message.contains("unsupported")),
                "expected unsupported-construct error for {src:?}, got {err:?}"
            );
        }
    }

    #[test]
    fn recovery_collects_multiple_errors() {
        let err = parse("var 1 = 2; var 3 = 4;").unwrap_err();
        assert!(err.errors.len() >= 2);
        assert!(err.recovered);
    }

    #[test]
    fn spans_nest() {
        let src = r#"function f(a,b){if(a<b){return a;}else{return b;}}var x=f(1,2);"#;
        let program = parse(src).unwrap();
        assert!(ast::spans_nested(&program));
    }

    #[test]
    fn iife_and_new_parse() {
        let src = "(function(a){return new RegExp(a,\"g\");})(\"x\");";
        let program = parse(src).unwrap();
        assert_eq!(program.body.len(), 1);
    }

    #[test]
    fn keyword_property_names_allowed() {
        assert!(parse("a.new;").is_ok());
        assert!(parse("a.case;").is_ok());
    }

    #[test]
    fn comma_operator_is_binary() {
        let program = parse("a = (1, 2);").unwrap();
        let Stmt::Expr { expr, .. } = &program.body[0] else {
            panic!()
        };
        let Expr::Assign { value, .. } = expr else {
            panic!()
        };
        assert!(matches!(
            **value,
            Expr::Binary {
                op: BinaryOp::Comma,
                ..
            }
        ));
    }
}
