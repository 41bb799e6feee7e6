//! String-array transform (the "functionality map"): hoist string
//! literals and dot-member property names into one array declared first,
//! replacing each use with an index into it. Optional seeded rotation
//! (with a prepended unrotate loop) and `\xNN` hex encoding of the
//! array entries.

use crate::ast::*;
use crate::obfuscate::naming::{collect_ident_names, fresh_hex_name};
use crate::rng::SplitMix64;
use std::collections::HashSet;

const RNG_LABEL: u64 = 0x5742_4152; // "STAR"

/// Hoist every string literal and member property name.
pub fn string_array_transform(program: &Program, rotate: bool, hex: bool, seed: u64) -> Program {
    string_array_with_threshold(program, rotate, hex, seed, 1.0)
}

/// Threshold variant: each string literal / member name is hoisted with
/// probability `threshold` (1.0 hoists everything).
pub fn string_array_with_threshold(
    program: &Program,
    rotate: bool,
    hex: bool,
    seed: u64,
    threshold: f64,
) -> Program {
    let mut rng = SplitMix64::new(seed).fork(RNG_LABEL);
    let used = collect_ident_names(program);
    let mut out = program.clone();

    let mut state = Hoister {
        rng: &mut rng,
        threshold,
        entries: Vec::new(),
        array_name: String::new(),
        pass: Pass::Strings,
    };
    // The array name must be fixed before rewriting uses. Avoid any name
    // already present in the script.
    state.array_name = fresh_name(state.rng, &used);
    // Two passes: string literals first, then member property names, so
    // the argument strings take the low indices.
    for stmt in &mut out.body {
        state.stmt(stmt);
    }
    state.pass = Pass::Members;
    for stmt in &mut out.body {
        state.stmt(stmt);
    }
    if state.entries.is_empty() {
        // Nothing hoisted: no prelude at all.
        return out;
    }

    let names: Vec<String> = state.entries;
    let array_name = state.array_name;
    let count = names.len();

    let mut stored = names;
    let mut prelude: Vec<Stmt> = Vec::new();

    let rotation = if rotate && count >= 2 {
        let k = rng.next_range(1, count as u64 - 1) as usize;
        // Store the array rotated right by k; the prepended loop rotates
        // left k times to restore the original order.
        let mut rotated = Vec::with_capacity(count);
        for i in 0..count {
            rotated.push(stored[(i + count - k) % count].clone());
        }
        stored = rotated;
        Some(k)
    } else {
        None
    };

    let elements: Vec<Expr> = stored
        .into_iter()
        .map(|value| {
            Expr::Str(StrLit {
                value,
                hex,
                span: Span::ZERO,
            })
        })
        .collect();
    prelude.push(Stmt::VarDecl {
        decls: vec![VarDeclarator {
            name: Ident::new(array_name.clone()),
            init: Some(Expr::Array {
                elements,
                span: Span::ZERO,
            }),
        }],
        span: Span::ZERO,
    });

    if let Some(k) = rotation {
        let arr_param = fresh_name(&mut rng, &used);
        let count_param = fresh_name(&mut rng, &used);
        // (function(a,b){while(b--){a.push(a.shift())}})(ARR, k);
        let body = vec![Stmt::While {
            cond: Expr::Unary {
                op: UnaryOp::PostDec,
                operand: Box::new(Expr::ident(count_param.clone())),
                span: Span::ZERO,
            },
            body: Box::new(Stmt::Block {
                body: vec![Stmt::Expr {
                    expr: Expr::Call {
                        callee: Box::new(Expr::Member {
                            object: Box::new(Expr::ident(arr_param.clone())),
                            property: Ident::new("push"),
                            span: Span::ZERO,
                        }),
                        args: vec![Expr::Call {
                            callee: Box::new(Expr::Member {
                                object: Box::new(Expr::ident(arr_param.clone())),
                                property: Ident::new("shift"),
                                span: Span::ZERO,
                            }),
                            args: vec![],
                            span: Span::ZERO,
                        }],
                        span: Span::ZERO,
                    },
                    span: Span::ZERO,
                }],
                span: Span::ZERO,
            }),
            span: Span::ZERO,
        }];
        let iife = Expr::Call {
            callee: Box::new(Expr::Function(Box::new(Function {
                name: None,
                params: vec![Ident::new(arr_param), Ident::new(count_param)],
                body,
                span: Span::ZERO,
            }))),
            args: vec![Expr::ident(array_name.clone()), Expr::num(k as f64)],
            span: Span::ZERO,
        };
        prelude.push(Stmt::Expr {
            expr: iife,
            span: Span::ZERO,
        });
    }

    prelude.extend(out.body);
    out.body = prelude;
    out
}

fn fresh_name(rng: &mut SplitMix64, used: &HashSet<String>) -> String {
    loop {
        let name = fresh_hex_name(rng);
        if !used.contains(&name) {
            return name;
        }
    }
}

#[derive(PartialEq, Clone, Copy)]
enum Pass {
    Strings,
    Members,
}

struct Hoister<'a> {
    rng: &'a mut SplitMix64,
    threshold: f64,
    entries: Vec<String>,
    array_name: String,
    pass: Pass,
}

impl<'a> Hoister<'a> {
    fn intern(&mut self, value: &str) -> usize {
        match self.entries.iter().position(|e| e == value) {
            Some(i) => i,
            None => {
                self.entries.push(value.to_string());
                self.entries.len() - 1
            }
        }
    }

    fn array_use(&mut self, value: &str) -> Expr {
        let idx = self.intern(value);
        Expr::Index {
            object: Box::new(Expr::ident(self.array_name.clone())),
            index: Box::new(Expr::num(idx as f64)),
            span: Span::ZERO,
        }
    }

    fn stmt(&mut self, stmt: &mut Stmt) {
        match stmt {
            Stmt::FunctionDecl(f) => {
                for s in &mut f.body {
                    self.stmt(s);
                }
            }
            Stmt::VarDecl { decls, .. } => {
                for d in decls {
                    if let Some(e) = &mut d.init {
                        self.expr(e);
                    }
                }
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                self.expr(cond);
                self.stmt(then_branch);
                if let Some(e) = else_branch {
                    self.stmt(e);
                }
            }
            Stmt::While { cond, body, .. } => {
                self.expr(cond);
                self.stmt(body);
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
                            if let Some(e) = &mut d.init {
                                self.expr(e);
                            }
                        }
                    }
                    Some(ForInit::Expr(e)) => self.expr(e),
                    None => {}
                }
                if let Some(e) = test {
                    self.expr(e);
                }
                if let Some(e) = update {
                    self.expr(e);
                }
                self.stmt(body);
            }
            Stmt::Switch {
                discriminant,
                cases,
                ..
            } => {
                self.expr(discriminant);
                for case in cases {
                    if let Some(t) = &mut case.test {
                        self.expr(t);
                    }
                    for s in &mut case.body {
                        self.stmt(s);
                    }
                }
            }
            Stmt::Return { arg, .. } => {
                if let Some(e) = arg {
                    self.expr(e);
                }
            }
            Stmt::Throw { arg, .. } => self.expr(arg),
            Stmt::TryCatch { block, handler, .. } => {
                for s in block {
                    self.stmt(s);
                }
                for s in handler {
                    self.stmt(s);
                }
            }
            Stmt::Block { body, .. } => {
                for s in body {
                    self.stmt(s);
                }
            }
            Stmt::Expr { expr, .. } => self.expr(expr),
        }
    }

    fn expr(&mut self, expr: &mut Expr) {
        match expr {
            Expr::Str(s) => {
                if self.pass == Pass::Strings && self.rng.coin(self.threshold) {
                    let value = s.value.clone();
                    *expr = self.array_use(&value);
                }
            }
            Expr::Member {
                object, property, ..
            } => {
                self.expr(object);
                if self.pass == Pass::Members && self.rng.coin(self.threshold) {
                    let use_expr = self.array_use(&property.name.clone());
                    let object = std::mem::replace(
                        object,
                        Box::new(Expr::Null { span: Span::ZERO }),
                    );
                    *expr = Expr::Index {
                        object,
                        index: Box::new(use_expr),
                        span: Span::ZERO,
                    };
                }
            }
            Expr::Ident(_)
            | Expr::Num { .. }
            | Expr::Bool { .. }
            | Expr::Null { .. }
            | Expr::This { .. }
            | Expr::Regex { .. } => {}
            Expr::Array { elements, .. } => {
                for e in elements {
                    self.expr(e);
                }
            }
            Expr::Object { props, .. } => {
                // Keys stay literal; only values are rewritten.
                for (_key, value) in props {
                    self.expr(value);
                }
            }
            Expr::Function(f) => {
                for s in &mut f.body {
                    self.stmt(s);
                }
            }
            Expr::Call { callee, args, .. } | Expr::New { callee, args, .. } => {
                self.expr(callee);
                for a in args {
                    self.expr(a);
                }
            }
            Expr::Index { object, index, .. } => {
                self.expr(object);
                self.expr(index);
            }
            Expr::Assign { target, value, .. } => {
                self.expr(target);
                self.expr(value);
            }
            Expr::Binary { left, right, .. } => {
                self.expr(left);
                self.expr(right);
            }
            Expr::Unary { operand, .. } => self.expr(operand),
            Expr::Conditional {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                self.expr(cond);
                self.expr(then_branch);
                self.expr(else_branch);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::printer::print_compact;
    use crate::sandbox::{execute, trace_equal, ExecLimits};

    #[test]
    fn welcome_takes_functionality_map_shape() {
        let src = r#"function welcome(){console.log("Hi, how are you?")}welcome();"#;
        let out = string_array_transform(&parse(src).unwrap(), false, false, 7);
        // First statement is the hoist array with the two strings.
        let Stmt::VarDecl { decls, .. } = &out.body[0] else {
            panic!("expected hoist array");
        };
        let Some(Expr::Array { elements, .. }) = &decls[0].init else {
            panic!("expected array literal");
        };
        assert_eq!(elements.len(), 2);
        let values: Vec<&str> = elements
            .iter()
            .map(|e| match e {
                Expr::Str(s) => s.value.as_str(),
                _ => panic!("non-string entry"),
            })
            .collect();
        assert!(values.contains(&"Hi, how are you?"));
        assert!(values.contains(&"log"));
        let printed = print_compact(&out);
        assert!(printed.starts_with("var _0x"), "{printed}");
        assert!(printed.contains("console[") && printed.contains("[1]]("), "{printed}");
        // Behavior is preserved.
        let t1 = execute(src, ExecLimits::default());
        let t2 = execute(&printed, ExecLimits::default());
        assert!(trace_equal(&t1, &t2));
    }

    #[test]
    fn hex_entries_print_as_escapes() {
        let src = r#"console.log("Hi");"#;
        let out = string_array_transform(&parse(src).unwrap(), false, true, 7);
        let printed = print_compact(&out);
        assert!(printed.contains("\\x48\\x69"), "{printed}");
        assert!(printed.contains("\\x6C\\x6F\\x67"), "{printed}"); // "log"
        let t1 = execute(src, ExecLimits::default());
        let t2 = execute(&printed, ExecLimits::default());
        assert!(trace_equal(&t1, &t2));
    }

    #[test]
    fn rotation_prepends_unrotate_loop() {
        let src = r#"console.log("a", "b", "c", navigator.userAgent);"#;
        let out = string_array_transform(&parse(src).unwrap(), true, false, 42);
        let printed = print_compact(&out);
        assert!(printed.contains("push") && printed.contains("shift"), "{printed}");
        let t1 = execute(src, ExecLimits::default());
        let t2 = execute(&printed, ExecLimits::default());
        assert!(trace_equal(&t1, &t2), "rotation broke semantics:\n{printed}");
    }

    #[test]
    fn no_strings_means_no_prelude() {
        let src = "var a=1;var b=a+2;";
        let ast = parse(src).unwrap();
        let out = string_array_transform(&ast, false, false, 7);
        assert_eq!(print_compact(&out), print_compact(&ast));
    }

    #[test]
    fn threshold_zero_is_identity() {
        let src = r#"console.log("x");"#;
        let ast = parse(src).unwrap();
        let out = string_array_with_threshold(&ast, false, false, 7, 0.0);
        assert_eq!(print_compact(&out), print_compact(&ast));
    }

    #[test]
    fn determinism_same_seed_same_bytes() {
        let src = r#"var greeting="hello";console.log(greeting, "there");"#;
        let ast = parse(src).unwrap();
        let a = print_compact(&string_array_transform(&ast, true, true, 99));
        let b = print_compact(&string_array_transform(&ast, true, true, 99));
        assert_eq!(a, b);
        let c = print_compact(&string_array_transform(&ast, true, true, 100));
        assert_ne!(a, c);
    }

    #[test]
    fn duplicate_strings_share_one_slot() {
        let src = r#"console.log("dup", "dup", "dup");"#;
        let out = string_array_transform(&parse(src).unwrap(), false, false, 7);
        let Stmt::VarDecl { decls, .. } = &out.body[0] else {
            panic!()
        };
        let Some(Expr::Array { elements, .. }) = &decls[0].init else {
            panic!()
        };
        assert_eq!(elements.len(), 2); // "dup" and "log"
    }
}
