//! Syntax tree for the supported ECMAScript-5 subset.
//!
//! The grammar covers: `var` declarations, function declarations and
//! expressions (including IIFEs), `if`/`while`/`for`/`switch`/`try`-`catch`,
//! `throw`/`return`, array and object literals, dot and bracket member
//! access, `new`, regex literals, string/number/bool/null literals, the
//! comma and conditional operators, and the standard binary, unary,
//! update, and assignment operators. There is no automatic semicolon
//! insertion and no ES2015+ syntax.
//!
//! Node counting rule: every node whose kind appears in [`NodeKind`]
//! counts exactly 1; punctuation, operators, and keywords count 0.
//! Function bodies are plain statement lists (braces are punctuation, so
//! a function body contributes no `Block` node), while explicit block
//! statements and `try`/`catch` bodies do. Member property names and
//! variable/parameter names are `Identifier` nodes and count 1 each.

use std::fmt;

/// Byte range into the original source. Synthetic nodes use `Span::ZERO`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: u32,
    pub end: u32,
}

impl Span {
    pub const ZERO: Span = Span { start: 0, end: 0 };

    pub fn new(start: u32, end: u32) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

/// The closed set of countable node kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Program,
    FunctionDecl,
    FunctionExpr,
    VarDecl,
    If,
    While,
    For,
    Switch,
    Case,
    Return,
    ExprStmt,
    Block,
    Call,
    New,
    Member,
    Index,
    Assign,
    Binary,
    Unary,
    Conditional,
    Identifier,
    StringLit,
    NumberLit,
    BoolLit,
    NullLit,
    ArrayLit,
    ObjectLit,
    RegexLit,
    This,
    Throw,
    TryCatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            span: Span::ZERO,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: Option<Ident>,
    pub params: Vec<Ident>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDeclarator {
    pub name: Ident,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    /// `function name(params) { body }` at program or function-body top level.
    FunctionDecl(Function),
    VarDecl {
        decls: Vec<VarDeclarator>,
        span: Span,
    },
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
        span: Span,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
        span: Span,
    },
    For {
        init: Option<ForInit>,
        test: Option<Expr>,
        update: Option<Expr>,
        body: Box<Stmt>,
        span: Span,
    },
    Switch {
        discriminant: Expr,
        cases: Vec<Case>,
        span: Span,
    },
    Return {
        arg: Option<Expr>,
        span: Span,
    },
    Throw {
        arg: Expr,
        span: Span,
    },
    TryCatch {
        block: Vec<Stmt>,
        block_span: Span,
        param: Ident,
        handler: Vec<Stmt>,
        handler_span: Span,
        span: Span,
    },
    Block {
        body: Vec<Stmt>,
        span: Span,
    },
    Expr {
        expr: Expr,
        span: Span,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForInit {
    VarDecl { decls: Vec<VarDeclarator>, span: Span },
    Expr(Expr),
}

/// One `case test:` or `default:` arm.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub test: Option<Expr>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    NotEq,
    StrictEq,
    StrictNotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    And,
    Or,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
    UShr,
    Comma,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Eq => "==",
            BinaryOp::NotEq => "!=",
            BinaryOp::StrictEq => "===",
            BinaryOp::StrictNotEq => "!==",
            BinaryOp::Lt => "<",
            BinaryOp::LtEq => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::GtEq => ">=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::BitXor => "^",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::UShr => ">>>",
            BinaryOp::Comma => ",",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Pos,
    Not,
    BitNot,
    TypeOf,
    Void,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Pos => "+",
            UnaryOp::Not => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::TypeOf => "typeof",
            UnaryOp::Void => "void",
            UnaryOp::PreInc | UnaryOp::PostInc => "++",
            UnaryOp::PreDec | UnaryOp::PostDec => "--",
        }
    }

    pub fn is_postfix(self) -> bool {
        matches!(self, UnaryOp::PostInc | UnaryOp::PostDec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Mod => "%=",
        }
    }
}

/// Object-literal keys are identifiers or string literals.
#[derive(Debug, Clone, PartialEq)]
pub enum PropKey {
    Ident(Ident),
    Str(StrLit),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrLit {
    pub value: String,
    /// Printer hint: emit every code unit as a `\xNN`/`\uNNNN` escape.
    /// Formatting only; ignored by structural equality.
    pub hex: bool,
    pub span: Span,
}

impl StrLit {
    pub fn new(value: impl Into<String>) -> Self {
        Self {
            value: value.into(),
            hex: false,
            span: Span::ZERO,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Ident(Ident),
    Str(StrLit),
    Num {
        value: f64,
        span: Span,
    },
    Bool {
        value: bool,
        span: Span,
    },
    Null {
        span: Span,
    },
    This {
        span: Span,
    },
    Regex {
        pattern: String,
        flags: String,
        span: Span,
    },
    Array {
        elements: Vec<Expr>,
        span: Span,
    },
    Object {
        props: Vec<(PropKey, Expr)>,
        span: Span,
    },
    Function(Box<Function>),
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
        span: Span,
    },
    New {
        callee: Box<Expr>,
        args: Vec<Expr>,
        span: Span,
    },
    /// Dot access: `object.property`.
    Member {
        object: Box<Expr>,
        property: Ident,
        span: Span,
    },
    /// Bracket access: `object[index]`.
    Index {
        object: Box<Expr>,
        index: Box<Expr>,
        span: Span,
    },
    Assign {
        op: AssignOp,
        target: Box<Expr>,
        value: Box<Expr>,
        span: Span,
    },
    Binary {
        op: BinaryOp,
        left: Box<Expr>,
        right: Box<Expr>,
        span: Span,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
        span: Span,
    },
    Conditional {
        cond: Box<Expr>,
        then_branch: Box<Expr>,
        else_branch: Box<Expr>,
        span: Span,
    },
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Ident(i) => i.span,
            Expr::Str(s) => s.span,
            Expr::Num { span, .. }
            | Expr::Bool { span, .. }
            | Expr::Null { span }
            | Expr::This { span }
            | Expr::Regex { span, .. }
            | Expr::Array { span, .. }
            | Expr::Object { span, .. }
            | Expr::Call { span, .. }
            | Expr::New { span, .. }
            | Expr::Member { span, .. }
            | Expr::Index { span, .. }
            | Expr::Assign { span, .. }
            | Expr::Binary { span, .. }
            | Expr::Unary { span, .. }
            | Expr::Conditional { span, .. } => *span,
            Expr::Function(f) => f.span,
        }
    }

    pub fn num(value: f64) -> Expr {
        Expr::Num {
            value,
            span: Span::ZERO,
        }
    }

    pub fn ident(name: impl Into<String>) -> Expr {
        Expr::Ident(Ident::new(name))
    }

    pub fn str(value: impl Into<String>) -> Expr {
        Expr::Str(StrLit::new(value))
    }
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::FunctionDecl(f) => f.span,
            Stmt::VarDecl { span, .. }
            | Stmt::If { span, .. }
            | Stmt::While { span, .. }
            | Stmt::For { span, .. }
            | Stmt::Switch { span, .. }
            | Stmt::Return { span, .. }
            | Stmt::Throw { span, .. }
            | Stmt::TryCatch { span, .. }
            | Stmt::Block { span, .. }
            | Stmt::Expr { span, .. } => *span,
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

// ---------------------------------------------------------------------------
// Node counting
// ---------------------------------------------------------------------------

/// Total node count under the documented counting rule.
pub fn count_nodes(program: &Program) -> u64 {
    let mut n = 1; // Program
    for stmt in &program.body {
        n += count_stmt(stmt);
    }
    n
}

fn count_function(f: &Function, decl: bool) -> u64 {
    let _ = decl;
    let mut n = 1;
    if f.name.is_some() {
        n += 1;
    }
    n += f.params.len() as u64;
    for stmt in &f.body {
        n += count_stmt(stmt);
    }
    n
}

fn count_stmt(stmt: &Stmt) -> u64 {
    match stmt {
        Stmt::FunctionDecl(f) => count_function(f, true),
        Stmt::VarDecl { decls, .. } => {
            let mut n = 1;
            for d in decls {
                n += 1; // name identifier
                if let Some(init) = &d.init {
                    n += count_expr(init);
                }
            }
            n
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            let mut n = 1 + count_expr(cond) + count_stmt(then_branch);
            if let Some(e) = else_branch {
                n += count_stmt(e);
            }
            n
        }
        Stmt::While { cond, body, .. } => 1 + count_expr(cond) + count_stmt(body),
        Stmt::For {
            init,
            test,
            update,
            body,
            ..
        } => {
            let mut n = 1;
            match init {
                Some(ForInit::VarDecl { decls, .. }) => {
                    n += 1;
                    for d in decls {
                        n += 1;
                        if let Some(e) = &d.init {
                            n += count_expr(e);
                        }
                    }
                }
                Some(ForInit::Expr(e)) => n += count_expr(e),
                None => {}
            }
            if let Some(e) = test {
                n += count_expr(e);
            }
            if let Some(e) = update {
                n += count_expr(e);
            }
            n + count_stmt(body)
        }
        Stmt::Switch {
            discriminant,
            cases,
            ..
        } => {
            let mut n = 1 + count_expr(discriminant);
            for case in cases {
                n += 1;
                if let Some(t) = &case.test {
                    n += count_expr(t);
                }
                for s in &case.body {
                    n += count_stmt(s);
                }
            }
            n
        }
        Stmt::Return { arg, .. } => 1 + arg.as_ref().map_or(0, count_expr),
        Stmt::Throw { arg, .. } => 1 + count_expr(arg),
        Stmt::TryCatch { block, handler, .. } => {
            // TryCatch + two Block nodes + the catch parameter identifier.
            let mut n = 1 + 2 + 1;
            for s in block {
                n += count_stmt(s);
            }
            for s in handler {
                n += count_stmt(s);
            }
            n
        }
        Stmt::Block { body, .. } => {
            let mut n = 1;
            for s in body {
                n += count_stmt(s);
            }
            n
        }
        Stmt::Expr { expr, .. } => 1 + count_expr(expr),
    }
}

fn count_expr(expr: &Expr) -> u64 {
    match expr {
        Expr::Ident(_)
        | Expr::Str(_)
        | Expr::Num { .. }
        | Expr::Bool { .. }
        | Expr::Null { .. }
        | Expr::This { .. }
        | Expr::Regex { .. } => 1,
        Expr::Array { elements, .. } => 1 + elements.iter().map(count_expr).sum::<u64>(),
        Expr::Object { props, .. } => {
            let mut n = 1;
            for (_key, value) in props {
                n += 1; // key is an Identifier or StringLit node
                n += count_expr(value);
            }
            n
        }
        Expr::Function(f) => count_function(f, false),
        Expr::Call { callee, args, .. } | Expr::New { callee, args, .. } => {
            1 + count_expr(callee) + args.iter().map(count_expr).sum::<u64>()
        }
        Expr::Member { object, .. } => 1 + count_expr(object) + 1,
        Expr::Index { object, index, .. } => 1 + count_expr(object) + count_expr(index),
        Expr::Assign { target, value, .. } => 1 + count_expr(target) + count_expr(value),
        Expr::Binary { left, right, .. } => 1 + count_expr(left) + count_expr(right),
        Expr::Unary { operand, .. } => 1 + count_expr(operand),
        Expr::Conditional {
            cond,
            then_branch,
            else_branch,
            ..
        } => 1 + count_expr(cond) + count_expr(then_branch) + count_expr(else_branch),
    }
}

// ---------------------------------------------------------------------------
// Structural equality (spans and formatting hints ignored)
// ---------------------------------------------------------------------------

/// Clone of the tree with all spans zeroed and formatting hints reset,
/// so that derived `PartialEq` compares pure structure.
pub fn stripped(program: &Program) -> Program {
    let mut p = program.clone();
    strip_program(&mut p);
    p
}

/// True when the two trees are structurally identical (ignoring spans and
/// string formatting hints).
pub fn structural_eq(a: &Program, b: &Program) -> bool {
    stripped(a) == stripped(b)
}

fn strip_program(p: &mut Program) {
    p.span = Span::ZERO;
    for s in &mut p.body {
        strip_stmt(s);
    }
}

fn strip_ident(i: &mut Ident) {
    i.span = Span::ZERO;
}

fn strip_function(f: &mut Function) {
    f.span = Span::ZERO;
    if let Some(name) = &mut f.name {
        strip_ident(name);
    }
    for p in &mut f.params {
        strip_ident(p);
    }
    for s in &mut f.body {
        strip_stmt(s);
    }
}

fn strip_stmt(stmt: &mut Stmt) {
    match stmt {
        Stmt::FunctionDecl(f) => strip_function(f),
        Stmt::VarDecl { decls, span } => {
            *span = Span::ZERO;
            for d in decls {
                strip_ident(&mut d.name);
                if let Some(e) = &mut d.init {
                    strip_expr(e);
                }
            }
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            span,
        } => {
            *span = Span::ZERO;
            strip_expr(cond);
            strip_stmt(then_branch);
            if let Some(e) = else_branch {
                strip_stmt(e);
            }
        }
        Stmt::While { cond, body, span } => {
            *span = Span::ZERO;
            strip_expr(cond);
            strip_stmt(body);
        }
        Stmt::For {
            init,
            test,
            update,
            body,
            span,
        } => {
            *span = Span::ZERO;
            match init {
                Some(ForInit::VarDecl { decls, span }) => {
                    *span = Span::ZERO;
                    for d in decls {
                        strip_ident(&mut d.name);
                        if let Some(e) = &mut d.init {
                            strip_expr(e);
                        }
                    }
                }
                Some(ForInit::Expr(e)) => strip_expr(e),
                None => {}
            }
            if let Some(e) = test {
                strip_expr(e);
            }
            if let Some(e) = update {
                strip_expr(e);
            }
            strip_stmt(body);
        }
        Stmt::Switch {
            discriminant,
            cases,
            span,
        } => {
            *span = Span::ZERO;
            strip_expr(discriminant);
            for case in cases {
                case.span = Span::ZERO;
                if let Some(t) = &mut case.test {
                    strip_expr(t);
                }
                for s in &mut case.body {
                    strip_stmt(s);
                }
            }
        }
        Stmt::Return { arg, span } => {
            *span = Span::ZERO;
            if let Some(e) = arg {
                strip_expr(e);
            }
        }
        Stmt::Throw { arg, span } => {
            *span = Span::ZERO;
            strip_expr(arg);
        }
        Stmt::TryCatch {
            block,
            block_span,
            param,
            handler,
            handler_span,
            span,
        } => {
            *span = Span::ZERO;
            *block_span = Span::ZERO;
            *handler_span = Span::ZERO;
            strip_ident(param);
            for s in block {
                strip_stmt(s);
            }
            for s in handler {
                strip_stmt(s);
            }
        }
        Stmt::Block { body, span } => {
            *span = Span::ZERO;
            for s in body {
                strip_stmt(s);
            }
        }
        Stmt::Expr { expr, span } => {
            *span = Span::ZERO;
            strip_expr(expr);
        }
    }
}

fn strip_expr(expr: &mut Expr) {
    match expr {
        Expr::Ident(i) => strip_ident(i),
        Expr::Str(s) => {
            s.span = Span::ZERO;
            s.hex = false;
        }
        Expr::Num { span, .. }
        | Expr::Bool { span, .. }
        | Expr::Null { span }
        | Expr::This { span }
        | Expr::Regex { span, .. } => *span = Span::ZERO,
        Expr::Array { elements, span } => {
            *span = Span::ZERO;
            for e in elements {
                strip_expr(e);
            }
        }
        Expr::Object { props, span } => {
            *span = Span::ZERO;
            for (key, value) in props {
                match key {
                    PropKey::Ident(i) => strip_ident(i),
                    PropKey::Str(s) => {
                        s.span = Span::ZERO;
                        s.hex = false;
                    }
                }
                strip_expr(value);
            }
        }
        Expr::Function(f) => strip_function(f),
        Expr::Call { callee, args, span } | Expr::New { callee, args, span } => {
            *span = Span::ZERO;
            strip_expr(callee);
            for a in args {
                strip_expr(a);
            }
        }
        Expr::Member {
            object,
            property,
            span,
        } => {
            *span = Span::ZERO;
            strip_expr(object);
            strip_ident(property);
        }
        Expr::Index {
            object,
            index,
            span,
        } => {
            *span = Span::ZERO;
            strip_expr(object);
            strip_expr(index);
        }
        Expr::Assign {
            target,
            value,
            span,
            ..
        } => {
            *span = Span::ZERO;
            strip_expr(target);
            strip_expr(value);
        }
        Expr::Binary {
            left, right, span, ..
        } => {
            *span = Span::ZERO;
            strip_expr(left);
            strip_expr(right);
        }
        Expr::Unary { operand, span, .. } => {
            *span = Span::ZERO;
            strip_expr(operand);
        }
        Expr::Conditional {
            cond,
            then_branch,
            else_branch,
            span,
        } => {
            *span = Span::ZERO;
            strip_expr(cond);
            strip_expr(then_branch);
            strip_expr(else_branch);
        }
    }
}

// ---------------------------------------------------------------------------
// Span nesting check (used by parser tests)
// ---------------------------------------------------------------------------

/// Verifies that every node's span lies within its parent's span.
/// Synthetic `Span::ZERO` children are exempt.
pub fn spans_nested(program: &Program) -> bool {
    program
        .body
        .iter()
        .all(|s| stmt_spans_nested(s, &program.span))
}

fn within(child: Span, parent: &Span) -> bool {
    child == Span::ZERO || parent.contains(&child)
}

fn stmt_spans_nested(stmt: &Stmt, parent: &Span) -> bool {
    let span = stmt.span();
    if !within(span, parent) {
        return false;
    }
    let here = if span == Span::ZERO { *parent } else { span };
    match stmt {
        Stmt::FunctionDecl(f) => function_spans_nested(f),
        Stmt::VarDecl { decls, .. } => decls.iter().all(|d| {
            within(d.name.span, &here)
                && d.init.as_ref().map_or(true, |e| expr_spans_nested(e, &here))
        }),
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            expr_spans_nested(cond, &here)
                && stmt_spans_nested(then_branch, &here)
                && else_branch
                    .as_ref()
                    .map_or(true, |e| stmt_spans_nested(e, &here))
        }
        Stmt::While { cond, body, .. } => {
            expr_spans_nested(cond, &here) && stmt_spans_nested(body, &here)
        }
        Stmt::For {
            init,
            test,
            update,
            body,
            ..
        } => {
            let init_ok = match init {
                Some(ForInit::VarDecl { decls, .. }) => decls.iter().all(|d| {
                    within(d.name.span, &here)
                        && d.init.as_ref().map_or(true, |e| expr_spans_nested(e, &here))
                }),
                Some(ForInit::Expr(e)) => expr_spans_nested(e, &here),
                None => true,
            };
            init_ok
                && test.as_ref().map_or(true, |e| expr_spans_nested(e, &here))
                && update.as_ref().map_or(true, |e| expr_spans_nested(e, &here))
                && stmt_spans_nested(body, &here)
        }
        Stmt::Switch {
            discriminant,
            cases,
            ..
        } => {
            expr_spans_nested(discriminant, &here)
                && cases.iter().all(|c| {
                    within(c.span, &here)
                        && c.test.as_ref().map_or(true, |t| expr_spans_nested(t, &c.span))
                        && c.body.iter().all(|s| stmt_spans_nested(s, &c.span))
                })
        }
        Stmt::Return { arg, .. } => arg.as_ref().map_or(true, |e| expr_spans_nested(e, &here)),
        Stmt::Throw { arg, .. } => expr_spans_nested(arg, &here),
        Stmt::TryCatch {
            block,
            block_span,
            param,
            handler,
            handler_span,
            ..
        } => {
            within(*block_span, &here)
                && within(*handler_span, &here)
                && within(param.span, &here)
                && block.iter().all(|s| stmt_spans_nested(s, block_span))
                && handler.iter().all(|s| stmt_spans_nested(s, handler_span))
        }
        Stmt::Block { body, .. } => body.iter().all(|s| stmt_spans_nested(s, &here)),
        Stmt::Expr { expr, .. } => expr_spans_nested(expr, &here),
    }
}

fn function_spans_nested(f: &Function) -> bool {
    let here = f.span;
    f.name.as_ref().map_or(true, |n| within(n.span, &here))
        && f.params.iter().all(|p| within(p.span, &here))
        && f.body.iter().all(|s| stmt_spans_nested(s, &here))
}

fn expr_spans_nested(expr: &Expr, parent: &Span) -> bool {
    let span = expr.span();
    if !within(span, parent) {
        return false;
    }
    let here = if span == Span::ZERO { *parent } else { span };
    match expr {
        Expr::Ident(_)
        | Expr::Str(_)
        | Expr::Num { .. }
        | Expr::Bool { .. }
        | Expr::Null { .. }
        | Expr::This { .. }
        | Expr::Regex { .. } => true,
        Expr::Array { elements, .. } => elements.iter().all(|e| expr_spans_nested(e, &here)),
        Expr::Object { props, .. } => props.iter().all(|(k, v)| {
            let key_ok = match k {
                PropKey::Ident(i) => within(i.span, &here),
                PropKey::Str(s) => within(s.span, &here),
            };
            key_ok && expr_spans_nested(v, &here)
        }),
        Expr::Function(f) => function_spans_nested(f),
        Expr::Call { callee, args, .. } | Expr::New { callee, args, .. } => {
            expr_spans_nested(callee, &here) && args.iter().all(|a| expr_spans_nested(a, &here))
        }
        Expr::Member {
            object, property, ..
        } => expr_spans_nested(object, &here) && within(property.span, &here),
        Expr::Index { object, index, .. } => {
            expr_spans_nested(object, &here) && expr_spans_nested(index, &here)
        }
        Expr::Assign { target, value, .. } => {
            expr_spans_nested(target, &here) && expr_spans_nested(value, &here)
        }
        Expr::Binary { left, right, .. } => {
            expr_spans_nested(left, &here) && expr_spans_nested(right, &here)
        }
        Expr::Unary { operand, .. } => expr_spans_nested(operand, &here),
        Expr::Conditional {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            expr_spans_nested(cond, &here)
                && expr_spans_nested(then_branch, &here)
                && expr_spans_nested(else_branch, &here)
        }
    }
}
