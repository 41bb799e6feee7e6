//! Source printer for the ES5 subset AST.
//!
//! `compact` emits minimal whitespace and no comments (comments never
//! survive lexing anyway); `pretty` indents with two spaces. Both styles
//! satisfy the round-trip contract: reparsing the printed text yields a
//! structurally identical tree.

use crate::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Compact,
    Pretty,
}

/// Print a whole program in the requested style.
pub fn print(program: &Program, style: Style) -> String {
    let mut p = Printer::new(style);
    for stmt in &program.body {
        p.stmt(stmt);
        if style == Style::Pretty {
            p.newline();
        }
    }
    if p.out.ends_with('\n') {
        p.out.pop();
    }
    p.out
}

/// Shorthand for `print(..., Style::Compact)`.
pub fn print_compact(program: &Program) -> String {
    print(program, Style::Compact)
}

// Precedence levels used for parenthesization. Higher binds tighter.
const PREC_COMMA: u8 = 1;
const PREC_ASSIGN: u8 = 2;
const PREC_COND: u8 = 3;
const PREC_UNARY: u8 = 14;
const PREC_POSTFIX: u8 = 15;
const PREC_CALL: u8 = 17;
const PREC_PRIMARY: u8 = 18;

fn binary_prec(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Comma => PREC_COMMA,
        BinaryOp::Or => 4,
        BinaryOp::And => 5,
        BinaryOp::BitOr => 6,
        BinaryOp::BitXor => 7,
        BinaryOp::BitAnd => 8,
        BinaryOp::Eq | BinaryOp::NotEq | BinaryOp::StrictEq | BinaryOp::StrictNotEq => 9,
        BinaryOp::Lt | BinaryOp::LtEq | BinaryOp::Gt | BinaryOp::GtEq => 10,
        BinaryOp::Shl | BinaryOp::Shr | BinaryOp::UShr => 11,
        BinaryOp::Add | BinaryOp::Sub => 12,
        BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 13,
    }
}

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op, .. } => binary_prec(*op),
        Expr::Assign { .. } => PREC_ASSIGN,
        Expr::Conditional { .. } => PREC_COND,
        Expr::Unary { op, .. } => {
            if op.is_postfix() {
                PREC_POSTFIX
            } else {
                PREC_UNARY
            }
        }
        Expr::Call { .. } | Expr::New { .. } | Expr::Member { .. } | Expr::Index { .. } => {
            PREC_CALL
        }
        _ => PREC_PRIMARY,
    }
}

struct Printer {
    out: String,
    style: Style,
    indent: usize,
}

impl Printer {
    fn new(style: Style) -> Self {
        Self {
            out: String::new(),
            style,
            indent: 0,
        }
    }

    fn pretty(&self) -> bool {
        self.style == Style::Pretty
    }

    fn newline(&mut self) {
        if self.pretty() {
            self.out.push('\n');
            for _ in 0..self.indent {
                self.out.push_str("  ");
            }
        }
    }

    /// Append a token, inserting a space where direct concatenation
    /// would merge tokens (`typeof x`, `a+ +b`, `a/ /^/`). In compact
    /// style a `;` directly before `}` is dropped, matching the layout
    /// of the obfuscator tools this testbed models.
    fn tok(&mut self, s: &str) {
        if s == "}" && !self.pretty() && self.out.ends_with(';') {
            self.out.pop();
        }
        if let (Some(last), Some(first)) = (self.out.chars().last(), s.chars().next()) {
            let ident_ish = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '$';
            let needs_space = (ident_ish(last) && ident_ish(first))
                || (last == '+' && first == '+')
                || (last == '-' && first == '-')
                || (last == '/' && first == '/');
            if needs_space {
                self.out.push(' ');
            }
        }
        self.out.push_str(s);
    }

    fn sp(&mut self) {
        if self.pretty() {
            self.out.push(' ');
        }
    }

    // -- statements -----------------------------------------------------------

    fn stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::FunctionDecl(f) => self.function(f),
            Stmt::VarDecl { decls, .. } => {
                self.var_decls(decls);
                self.tok(";");
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                self.tok("if");
                self.sp();
                self.tok("(");
                self.expr(cond, PREC_COMMA);
                self.tok(")");
                // A bare `if` without `else` in the then-branch would
                // capture our `else` on reparse; brace it. Parsed trees
                // never hit this (the source needed braces already).
                let needs_brace =
                    else_branch.is_some() && dangling_if(then_branch);
                if needs_brace {
                    self.tok("{");
                    self.stmt(then_branch);
                    self.tok("}");
                } else {
                    self.nested_stmt(then_branch);
                }
                if let Some(e) = else_branch {
                    self.tok("else");
                    self.sp();
                    self.nested_stmt(e);
                }
            }
            Stmt::While { cond, body, .. } => {
                self.tok("while");
                self.sp();
                self.tok("(");
                self.expr(cond, PREC_COMMA);
                self.tok(")");
                self.nested_stmt(body);
            }
            Stmt::For {
                init,
                test,
                update,
                body,
                ..
            } => {
                self.tok("for");
                self.sp();
                self.tok("(");
                match init {
                    Some(ForInit::VarDecl { decls, .. }) => self.var_decls(decls),
                    Some(ForInit::Expr(e)) => self.expr(e, PREC_COMMA),
                    None => {}
                }
                self.tok(";");
                if let Some(t) = test {
                    self.sp();
                    self.expr(t, PREC_COMMA);
                }
                self.tok(";");
                if let Some(u) = update {
                    self.sp();
                    self.expr(u, PREC_COMMA);
                }
                self.tok(")");
                self.nested_stmt(body);
            }
            Stmt::Switch {
                discriminant,
                cases,
                ..
            } => {
                self.tok("switch");
                self.sp();
                self.tok("(");
                self.expr(discriminant, PREC_COMMA);
                self.tok(")");
                self.tok("{");
                self.indent += 1;
                for case in cases {
                    self.newline();
                    match &case.test {
                        Some(t) => {
                            self.tok("case");
                            self.expr(t, PREC_ASSIGN);
                            self.tok(":");
                        }
                        None => {
                            self.tok("default");
                            self.tok(":");
                        }
                    }
                    self.indent += 1;
                    for s in &case.body {
                        self.newline();
                        self.stmt(s);
                    }
                    self.indent -= 1;
                }
                self.indent -= 1;
                self.newline();
                self.tok("}");
            }
            Stmt::Return { arg, .. } => {
                self.tok("return");
                if let Some(a) = arg {
                    self.sp();
                    self.expr(a, PREC_COMMA);
                }
                self.tok(";");
            }
            Stmt::Throw { arg, .. } => {
                self.tok("throw");
                self.sp();
                self.expr(arg, PREC_COMMA);
                self.tok(";");
            }
            Stmt::TryCatch {
                block,
                param,
                handler,
                ..
            } => {
                self.tok("try");
                self.block(block);
                self.tok("catch");
                self.sp();
                self.tok("(");
                self.tok(&param.name);
                self.tok(")");
                self.block(handler);
            }
            Stmt::Block { body, .. } => self.block(body),
            Stmt::Expr { expr, .. } => {
                if starts_with_function_or_brace(expr) {
                    self.tok("(");
                    self.expr(expr, PREC_COMMA);
                    self.tok(")");
                } else {
                    self.expr(expr, PREC_COMMA);
                }
                self.tok(";");
            }
        }
    }

    /// Loop/branch body: blocks inline, other statements on a new line
    /// when pretty.
    fn nested_stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::Block { body, .. } => self.block(body),
            _ => {
                if self.pretty() {
                    self.indent += 1;
                    self.newline();
                    self.stmt(stmt);
                    self.indent -= 1;
                    self.newline();
                } else {
                    self.stmt(stmt);
                }
            }
        }
    }

    fn block(&mut self, body: &[Stmt]) {
        self.tok("{");
        if body.is_empty() {
            self.tok("}");
            return;
        }
        self.indent += 1;
        for s in body {
            self.newline();
            self.stmt(s);
        }
        self.indent -= 1;
        self.newline();
        self.tok("}");
    }

    fn var_decls(&mut self, decls: &[VarDeclarator]) {
        self.tok("var");
        for (i, d) in decls.iter().enumerate() {
            if i > 0 {
                self.tok(",");
                self.sp();
            } else {
                self.sp();
            }
            self.tok(&d.name.name);
            if let Some(init) = &d.init {
                self.sp();
                self.tok("=");
                self.sp();
                self.expr(init, PREC_ASSIGN);
            }
        }
    }

    fn function(&mut self, f: &Function) {
        self.tok("function");
        if let Some(name) = &f.name {
            self.sp();
            self.tok(&name.name);
        }
        self.tok("(");
        for (i, p) in f.params.iter().enumerate() {
            if i > 0 {
                self.tok(",");
                self.sp();
            }
            self.tok(&p.name);
        }
        self.tok(")");
        self.block(&f.body);
    }

    // -- expressions ----------------------------------------------------------

    fn expr(&mut self, e: &Expr, min_prec: u8) {
        let prec = expr_prec(e);
        let parens = prec < min_prec;
        if parens {
            self.tok("(");
        }
        match e {
            Expr::Ident(i) => self.tok(&i.name),
            Expr::Str(s) => {
                let lit = quote_string(&s.value, s.hex);
                self.tok(&lit);
            }
            Expr::Num { value, .. } => {
                let lit = format_number(*value);
                self.tok(&lit);
            }
            Expr::Bool { value, .. } => self.tok(if *value { "true" } else { "false" }),
            Expr::Null { .. } => self.tok("null"),
            Expr::This { .. } => self.tok("this"),
            Expr::Regex { pattern, flags, .. } => {
                let lit = format!("/{pattern}/{flags}");
                self.tok(&lit);
            }
            Expr::Array { elements, .. } => {
                self.tok("[");
                for (i, el) in elements.iter().enumerate() {
                    if i > 0 {
                        self.tok(",");
                        self.sp();
                    }
                    self.expr(el, PREC_ASSIGN);
                }
                self.tok("]");
            }
            Expr::Object { props, .. } => {
                self.tok("{");
                for (i, (key, value)) in props.iter().enumerate() {
                    if i > 0 {
                        self.tok(",");
                        self.sp();
                    }
                    match key {
                        PropKey::Ident(id) => self.tok(&id.name),
                        PropKey::Str(s) => {
                            let lit = quote_string(&s.value, s.hex);
                            self.tok(&lit);
                        }
                    }
                    self.tok(":");
                    self.sp();
                    self.expr(value, PREC_ASSIGN);
                }
                self.tok("}");
            }
            Expr::Function(f) => self.function(f),
            Expr::Call { callee, args, .. } => {
                self.expr(callee, PREC_CALL);
                self.tok("(");
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        self.tok(",");
                        self.sp();
                    }
                    self.expr(a, PREC_ASSIGN);
                }
                self.tok(")");
            }
            Expr::New { callee, args, .. } => {
                self.tok("new");
                if new_callee_needs_parens(callee) {
                    self.tok("(");
                    self.expr(callee, PREC_COMMA);
                    self.tok(")");
                } else {
                    self.expr(callee, PREC_CALL);
                }
                self.tok("(");
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        self.tok(",");
                        self.sp();
                    }
                    self.expr(a, PREC_ASSIGN);
                }
                self.tok(")");
            }
            Expr::Member {
                object, property, ..
            } => {
                self.member_object(object);
                self.tok(".");
                self.tok(&property.name);
            }
            Expr::Index { object, index, .. } => {
                self.member_object(object);
                self.tok("[");
                self.expr(index, PREC_COMMA);
                self.tok("]");
            }
            Expr::Assign {
                op, target, value, ..
            } => {
                self.expr(target, PREC_POSTFIX);
                self.sp();
                self.tok(op.symbol());
                self.sp();
                self.expr(value, PREC_ASSIGN);
            }
            Expr::Binary {
                op, left, right, ..
            } => {
                let p = binary_prec(*op);
                self.expr(left, p);
                if *op == BinaryOp::Comma {
                    self.tok(",");
                    self.sp();
                } else {
                    self.sp();
                    self.tok(op.symbol());
                    self.sp();
                }
                self.expr(right, p + 1);
            }
            Expr::Unary { op, operand, .. } => {
                if op.is_postfix() {
                    self.expr(operand, PREC_POSTFIX);
                    self.tok(op.symbol());
                } else {
                    self.tok(op.symbol());
                    self.expr(operand, PREC_UNARY);
                }
            }
            Expr::Conditional {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                self.expr(cond, PREC_COND + 1);
                self.tok("?");
                self.expr(then_branch, PREC_ASSIGN);
                self.tok(":");
                self.expr(else_branch, PREC_ASSIGN);
            }
        }
        if parens {
            self.tok(")");
        }
    }

    /// Objects of member/index expressions; a bare number literal needs
    /// parentheses so the dot is not read as a decimal point.
    fn member_object(&mut self, object: &Expr) {
        if matches!(object, Expr::Num { .. }) {
            self.tok("(");
            self.expr(object, PREC_COMMA);
            self.tok(")");
        } else {
            self.expr(object, PREC_CALL);
        }
    }
}

/// True when the statement is an `if` without `else`, or ends in one
/// through nested branch tails (the dangling-else hazard).
fn dangling_if(stmt: &Stmt) -> bool {
    match stmt {
        Stmt::If {
            else_branch: None, ..
        } => true,
        Stmt::If {
            else_branch: Some(e),
            ..
        } => dangling_if(e),
        Stmt::While { body, .. } | Stmt::For { body, .. } => dangling_if(body),
        _ => false,
    }
}

fn starts_with_function_or_brace(e: &Expr) -> bool {
    match e {
        Expr::Function(_) | Expr::Object { .. } => true,
        Expr::Call { callee, .. } => starts_with_function_or_brace(callee),
        Expr::Member { object, .. } | Expr::Index { object, .. } => {
            starts_with_function_or_brace(object)
        }
        Expr::Assign { target, .. } => starts_with_function_or_brace(target),
        Expr::Binary { op, left, .. } if *op != BinaryOp::Comma => {
            starts_with_function_or_brace(left)
        }
        Expr::Binary { left, .. } => starts_with_function_or_brace(left),
        Expr::Conditional { cond, .. } => starts_with_function_or_brace(cond),
        Expr::Unary { op, operand, .. } if op.is_postfix() => {
            starts_with_function_or_brace(operand)
        }
        _ => false,
    }
}

fn new_callee_needs_parens(callee: &Expr) -> bool {
    match callee {
        Expr::Call { .. } => true,
        Expr::Member { object, .. } | Expr::Index { object, .. } => {
            new_callee_needs_parens(object)
        }
        _ => false,
    }
}

/// Deterministic numeric literal formatting; the printed text reparses
/// to the identical f64.
pub fn format_number(v: f64) -> String {
    debug_assert!(v.is_finite() && v >= 0.0);
    if v == 0.0 {
        return "0".to_string();
    }
    if v.fract() == 0.0 && v.abs() < 1e21 {
        return format!("{}", v as i128);
    }
    format!("{v:?}")
}

/// Quote and escape a string literal (double quotes). With `hex` every
/// code unit becomes a `\xNN` or `\uNNNN` escape, matching the hex
/// string-array style.
pub fn quote_string(value: &str, hex: bool) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    out.push('"');
    for c in value.chars() {
        if hex {
            let code = c as u32;
            if code <= 0xFF {
                out.push_str(&format!("\\x{code:02X}"));
            } else if code <= 0xFFFF {
                out.push_str(&format!("\\u{code:04X}"));
            } else {
                let v = code - 0x10000;
                let high = 0xD800 + (v >> 10);
                let low = 0xDC00 + (v & 0x3FF);
                out.push_str(&format!("\\u{high:04X}\\u{low:04X}"));
            }
            continue;
        }
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c as u32 == 0x7F => {
                out.push_str(&format!("\\x{:02X}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{count_nodes, structural_eq};
    use crate::parser::parse;

    fn roundtrip(src: &str) {
        let ast1 = parse(src).unwrap();
        for style in [Style::Compact, Style::Pretty] {
            let printed = print(&ast1, style);
            let ast2 = parse(&printed)
                .unwrap_or_else(|e| panic!("reparse failed for {printed:?}: {e}"));
            assert!(
                structural_eq(&ast1, &ast2),
                "round-trip mismatch ({style:?})\nsrc: {src}\nout: {printed}"
            );
            assert_eq!(count_nodes(&ast1), count_nodes(&ast2));
        }
    }

    #[test]
    fn whitespace_normalization() {
        let ast = parse("var a = 1 ;").unwrap();
        assert_eq!(print_compact(&ast), "var a=1;");
    }

    #[test]
    fn welcome_compact_layout() {
        let ast = parse("function welcome() {\n    console.log(\"Hi, how are you?\");\n}\nwelcome();").unwrap();
        assert_eq!(
            print_compact(&ast),
            "function welcome(){console.log(\"Hi, how are you?\")}welcome();"
        );
    }

    #[test]
    fn roundtrip_samples() {
        for src in [
            "var a=1;",
            "var a=1,b,c=\"x\";",
            "function f(a,b){return a+b;}",
            "(function(){var x=1;})();",
            "if(a<b){f();}else{g();}",
            "if(a)if(b)c();else d();",
            "while(i<10){i=i+1;}",
            "for(var i=0;i<10;i++){s+=i;}",
            "for(;;){x();}",
            "switch(x){case 1:a();case \"two\":b();default:c();}",
            "try{risky();}catch(e){console.log(e);}",
            "throw new Error(\"boom\");",
            "var o={a:1,\"b c\":2,log:f};",
            "var arr=[1,2,[3,4],\"five\"];",
            "a.b.c=d[e][\"f\"];",
            "x=a?b:c?d:e;",
            "y=(a,b,c);",
            "f((a,b),c);",
            "z=-a* +b;",
            "n=a- -b;",
            "q=~x+!y;",
            "t=typeof x==\"string\";",
            "v=void 0;",
            "u=x++ + ++y;",
            "w=a%b*c/d;",
            "bits=a<<2>>>1&b|c^d;",
            "cmp=a<=b!==c>=d;",
            "s=\"quote\\\"slash\\\\\";",
            "r=/^/;",
            "m=s.replace(new RegExp(\"\\\\b\"+w+\"\\\\b\",\"g\"),k);",
            "eval(\"var inner=1;\");",
            "new AudioContext();",
            "var ctx=new a.b.C(1,2);",
            "(1).toString(36);",
            "x=(7*3<20)?\"no\":\"yes\";",
            "var big=1.5e3+0.25;",
            "var h=0x1f;",
        ] {
            roundtrip(src);
        }
    }

    #[test]
    fn iife_keeps_parens() {
        let ast = parse("(function(){a();})();").unwrap();
        let out = print_compact(&ast);
        assert!(out.starts_with('('), "got {out}");
        roundtrip("(function(){a();})();");
    }

    #[test]
    fn hex_string_escapes() {
        assert_eq!(quote_string("Hi", true), "\"\\x48\\x69\"");
        let src = "var a=[\"\\x48\\x69\"];";
        let ast = parse(src).unwrap();
        // hex flag is not preserved by the lexer; value round-trips.
        assert_eq!(print_compact(&ast), "var a=[\"Hi\"];");
    }

    #[test]
    fn number_formatting_reparses() {
        for v in [0.0, 1.0, 42.0, 0.5, 1.5e3, 1e20, 123456789.25, 31.0] {
            let s = format_number(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "formatting {v} gave {s}");
        }
    }

    #[test]
    fn pretty_has_structure() {
        let ast = parse("function f(){if(a){b();}else{c();}}").unwrap();
        let pretty = print(&ast, Style::Pretty);
        assert!(pretty.contains('\n'));
        roundtrip(&pretty);
    }
}
