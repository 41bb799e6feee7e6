//! Fresh-name generation for transform-introduced identifiers.

use crate::ast::*;
use crate::rng::SplitMix64;
use std::collections::HashSet;

/// `_0x` + 6 seeded hex digits, the style the modeled obfuscators use.
pub fn fresh_hex_name(rng: &mut SplitMix64) -> String {
    format!("_0x{:06x}", rng.next_u64() & 0xFF_FFFF)
}

/// Every identifier-like name appearing in the program: references,
/// declarations, parameters, and property names. Used to keep fresh
/// names collision-free.
pub fn collect_ident_names(program: &Program) -> HashSet<String> {
    let mut out = HashSet::new();
    for stmt in &program.body {
        stmt_names(stmt, &mut out);
    }
    out
}

fn function_names(f: &Function, out: &mut HashSet<String>) {
    if let Some(name) = &f.name {
        out.insert(name.name.clone());
    }
    for p in &f.params {
        out.insert(p.name.clone());
    }
    for s in &f.body {
        stmt_names(s, out);
    }
}

fn stmt_names(stmt: &Stmt, out: &mut HashSet<String>) {
    match stmt {
        Stmt::FunctionDecl(f) => function_names(f, out),
        Stmt::VarDecl { decls, .. } => {
            for d in decls {
                out.insert(d.name.name.clone());
                if let Some(e) = &d.init {
                    expr_names(e, out);
                }
            }
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            expr_names(cond, out);
            stmt_names(then_branch, out);
            if let Some(e) = else_branch {
                stmt_names(e, out);
            }
        }
        Stmt::While { cond, body, .. } => {
            expr_names(cond, out);
            stmt_names(body, out);
        }
        Stmt::For {
            init,
            test,
            update,
            body,
            ..
        } => {
            match init {
                Some(ForInit::VarDecl { decls, .. }) => {
                    for d in decls {
                        out.insert(d.name.name.clone());
                        if let Some(e) = &d.init {
                            expr_names(e, out);
                        }
                    }
                }
                Some(ForInit::Expr(e)) => expr_names(e, out),
                None => {}
            }
            if let Some(e) = test {
                expr_names(e, out);
            }
            if let Some(e) = update {
                expr_names(e, out);
            }
            stmt_names(body, out);
        }
        Stmt::Switch {
            discriminant,
            cases,
            ..
        } => {
            expr_names(discriminant, out);
            for case in cases {
                if let Some(t) = &case.test {
                    expr_names(t, out);
                }
                for s in &case.body {
                    stmt_names(s, out);
                }
            }
        }
        Stmt::Return { arg, .. } => {
            if let Some(e) = arg {
                expr_names(e, out);
            }
        }
        Stmt::Throw { arg, .. } => expr_names(arg, out),
        Stmt::TryCatch {
            block,
            param,
            handler,
            ..
        } => {
            out.insert(param.name.clone());
            for s in block {
                stmt_names(s, out);
            }
            for s in handler {
                stmt_names(s, out);
            }
        }
        Stmt::Block { body, .. } => {
            for s in body {
                stmt_names(s, out);
            }
        }
        Stmt::Expr { expr, .. } => expr_names(expr, out),
    }
}

fn expr_names(expr: &Expr, out: &mut HashSet<String>) {
    match expr {
        Expr::Ident(id) => {
            out.insert(id.name.clone());
        }
        Expr::Str(_)
        | Expr::Num { .. }
        | Expr::Bool { .. }
        | Expr::Null { .. }
        | Expr::This { .. }
        | Expr::Regex { .. } => {}
        Expr::Array { elements, .. } => {
            for e in elements {
                expr_names(e, out);
            }
        }
        Expr::Object { props, .. } => {
            for (key, value) in props {
                if let PropKey::Ident(i) = key {
                    out.insert(i.name.clone());
                }
                expr_names(value, out);
            }
        }
        Expr::Function(f) => function_names(f, out),
        Expr::Call { callee, args, .. } | Expr::New { callee, args, .. } => {
            expr_names(callee, out);
            for a in args {
                expr_names(a, out);
            }
        }
        Expr::Member {
            object, property, ..
        } => {
            out.insert(property.name.clone());
            expr_names(object, out);
        }
        Expr::Index { object, index, .. } => {
            expr_names(object, out);
            expr_names(index, out);
        }
        Expr::Assign { target, value, .. } => {
            expr_names(target, out);
            expr_names(value, out);
        }
        Expr::Binary { left, right, .. } => {
            expr_names(left, out);
            expr_names(right, out);
        }
        Expr::Unary { operand, .. } => expr_names(operand, out),
        Expr::Conditional {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            expr_names(cond, out);
            expr_names(then_branch, out);
            expr_names(else_branch, out);
        }
    }
}
