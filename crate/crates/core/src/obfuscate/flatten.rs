//! Control-flow flattening: rewrite straight-line function bodies into a
//! loop-plus-switch dispatcher driven by a state array, with the textual
//! case order shuffled.
//!
//! Each case body is guarded by a re-check of the current state so that
//! switch fallthrough (the grammar has no `break`) executes exactly the
//! statements the state machine dictates, in the original order.

use crate::ast::*;
use crate::obfuscate::naming::{collect_ident_names, fresh_hex_name};
use crate::rng::SplitMix64;
use std::collections::HashSet;

const RNG_LABEL: u64 = 0x464C_4154; // "FLAT"

/// A body the dispatcher could not encode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipNote {
    pub function_name: Option<String>,
    pub reason: String,
}

/// Flatten each function body selected by the seeded threshold.
/// Ineligible selected bodies are left untouched and reported.
pub fn flatten_control_flow(
    program: &Program,
    threshold: f64,
    seed: u64,
) -> (Program, Vec<SkipNote>) {
    let mut rng = SplitMix64::new(seed).fork(RNG_LABEL);
    let used = collect_ident_names(program);
    let mut out = program.clone();
    let mut ctx = Flattener {
        rng: &mut rng,
        threshold,
        used,
        skips: Vec::new(),
    };
    for stmt in &mut out.body {
        ctx.stmt(stmt);
    }
    let skips = ctx.skips;
    (out, skips)
}

struct Flattener<'a> {
    rng: &'a mut SplitMix64,
    threshold: f64,
    used: HashSet<String>,
    skips: Vec<SkipNote>,
}

impl<'a> Flattener<'a> {
    fn fresh(&mut self) -> String {
        loop {
            let name = fresh_hex_name(self.rng);
            if !self.used.contains(&name) {
                self.used.insert(name.clone());
                return name;
            }
        }
    }

    fn function(&mut self, f: &mut Function) {
        // Transform inner functions first so their bodies are already in
        // final shape when the outer body is dispatched.
        for stmt in &mut f.body {
            self.stmt(stmt);
        }
        if !self.rng.coin(self.threshold) {
            return;
        }
        if f.body.len() < 2 {
            return; // nothing to shuffle; not worth a note
        }
        if f.body.iter().any(|s| matches!(s, Stmt::FunctionDecl(_))) {
            self.skips.push(SkipNote {
                function_name: f.name.as_ref().map(|n| n.name.clone()),
                reason: "body contains hoisted function declarations".into(),
            });
            return;
        }
        let body = std::mem::take(&mut f.body);
        f.body = self.dispatch(body);
    }

    /// Build:
    /// ```text
    /// var ORD = "L0|L1|…".split("|"), I = 0;
    /// while (I < N) {
    ///   switch (ORD[I]) {
    ///     case "Lk": if (ORD[I] === "Lk") { <stmt for Lk>; I = I + 1; }
    ///     …   // cases emitted in label order, not execution order
    ///   }
    /// }
    /// ```
    fn dispatch(&mut self, body: Vec<Stmt>) -> Vec<Stmt> {
        let n = body.len();
        let mut labels: Vec<usize> = (0..n).collect();
        // Require a non-identity shuffle so the textual order actually
        // differs; bounded retries keep this deterministic.
        for _ in 0..32 {
            self.rng.shuffle(&mut labels);
            if labels.iter().enumerate().any(|(i, l)| i != *l) {
                break;
            }
        }
        let order_string = labels
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join("|");
        let ord = self.fresh();
        let idx = self.fresh();

        let ord_index = |ord: &str, idx: &str| Expr::Index {
            object: Box::new(Expr::ident(ord.to_string())),
            index: Box::new(Expr::ident(idx.to_string())),
            span: Span::ZERO,
        };

        // case "L": if (ORD[I] === "L") { stmt; I = I + 1; }
        let mut cases: Vec<(usize, Case)> = Vec::with_capacity(n);
        for (exec_pos, stmt) in body.into_iter().enumerate() {
            let label = labels[exec_pos];
            let label_str = label.to_string();
            let guard = Expr::Binary {
                op: BinaryOp::StrictEq,
                left: Box::new(ord_index(&ord, &idx)),
                right: Box::new(Expr::str(label_str.clone())),
                span: Span::ZERO,
            };
            let advance = Stmt::Expr {
                expr: Expr::Assign {
                    op: AssignOp::Assign,
                    target: Box::new(Expr::ident(idx.clone())),
                    value: Box::new(Expr::Binary {
                        op: BinaryOp::Add,
                        left: Box::new(Expr::ident(idx.clone())),
                        right: Box::new(Expr::num(1.0)),
                        span: Span::ZERO,
                    }),
                    span: Span::ZERO,
                },
                span: Span::ZERO,
            };
            let guarded = Stmt::If {
                cond: guard,
                then_branch: Box::new(Stmt::Block {
                    body: vec![stmt, advance],
                    span: Span::ZERO,
                }),
                else_branch: None,
                span: Span::ZERO,
            };
            cases.push((
                label,
                Case {
                    test: Some(Expr::str(label_str)),
                    body: vec![guarded],
                    span: Span::ZERO,
                },
            ));
        }
        // Textual order: ascending label, which differs from execution
        // order whenever the shuffle is non-identity.
        cases.sort_by_key(|(label, _)| *label);

        let prelude = Stmt::VarDecl {
            decls: vec![
                VarDeclarator {
                    name: Ident::new(ord.clone()),
                    init: Some(Expr::Call {
                        callee: Box::new(Expr::Member {
                            object: Box::new(Expr::str(order_string)),
                            property: Ident::new("split"),
                            span: Span::ZERO,
                        }),
                        args: vec![Expr::str("|")],
                        span: Span::ZERO,
                    }),
                },
                VarDeclarator {
                    name: Ident::new(idx.clone()),
                    init: Some(Expr::num(0.0)),
                },
            ],
            span: Span::ZERO,
        };
        let dispatcher = Stmt::While {
            cond: Expr::Binary {
                op: BinaryOp::Lt,
                left: Box::new(Expr::ident(idx)),
                right: Box::new(Expr::num(n as f64)),
                span: Span::ZERO,
            },
            body: Box::new(Stmt::Block {
                body: vec![Stmt::Switch {
                    discriminant: ord_index(&ord, &{
                        // the discriminant reads the same index variable
                        match &prelude {
                            Stmt::VarDecl { decls, .. } => decls[1].name.name.clone(),
                            _ => unreachable!(),
                        }
                    }),
                    cases: cases.into_iter().map(|(_, c)| c).collect(),
                    span: Span::ZERO,
                }],
                span: Span::ZERO,
            }),
            span: Span::ZERO,
        };
        vec![prelude, dispatcher]
    }

    fn stmt(&mut self, stmt: &mut Stmt) {
        match stmt {
            Stmt::FunctionDecl(f) => self.function(f),
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
            Expr::Function(f) => self.function(f),
            Expr::Array { elements, .. } => {
                for e in elements {
                    self.expr(e);
                }
            }
            Expr::Object { props, .. } => {
                for (_k, v) in props {
                    self.expr(v);
                }
            }
            Expr::Call { callee, args, .. } | Expr::New { callee, args, .. } => {
                self.expr(callee);
                for a in args {
                    self.expr(a);
                }
            }
            Expr::Member { object, .. } => self.expr(object),
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
            _ => {}
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
    fn three_calls_keep_their_order() {
        let src = r#"
function run() { a(); b(); c(); }
function a() { console.log("a"); }
function b() { console.log("b"); }
function c() { console.log("c"); }
run();
"#;
        let (out, skips) = flatten_control_flow(&parse(src).unwrap(), 1.0, 3);
        assert!(skips.is_empty());
        let printed = print_compact(&out);
        assert!(printed.contains("switch"), "{printed}");
        assert!(printed.contains("while"), "{printed}");
        let t1 = execute(src, ExecLimits::default());
        let t2 = execute(&printed, ExecLimits::default());
        assert!(trace_equal(&t1, &t2), "flattened order diverged:\n{printed}");
        let args: Vec<&str> = t2.events.iter().map(|e| e.args[0].as_str()).collect();
        assert_eq!(args, vec!["a", "b", "c"]);
    }

    #[test]
    fn textual_case_order_is_shuffled() {
        let src = "function run(){a();b();c();d();e();}";
        let (out, _) = flatten_control_flow(&parse(src).unwrap(), 1.0, 5);
        let Stmt::FunctionDecl(f) = &out.body[0] else {
            panic!()
        };
        let Stmt::While { body, .. } = &f.body[1] else {
            panic!("expected dispatcher loop, got {:?}", f.body[1]);
        };
        let Stmt::Block { body, .. } = &**body else {
            panic!()
        };
        let Stmt::Switch { cases, .. } = &body[0] else {
            panic!()
        };
        assert_eq!(cases.len(), 5);
        // The order string lists labels in execution order; with a
        // non-identity shuffle it differs from the sorted case order.
        let Stmt::VarDecl { decls, .. } = &f.body[0] else {
            panic!()
        };
        let Some(Expr::Call { callee, .. }) = &decls[0].init else {
            panic!()
        };
        let Expr::Member { object, .. } = &**callee else {
            panic!()
        };
        let Expr::Str(order) = &**object else { panic!() };
        let exec_order: Vec<&str> = order.value.split('|').collect();
        let sorted: Vec<String> = (0..5).map(|i| i.to_string()).collect();
        assert_ne!(
            exec_order,
            sorted.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            "shuffle was identity"
        );
    }

    #[test]
    fn threshold_zero_is_identity() {
        let src = "function run(){a();b();}";
        let ast = parse(src).unwrap();
        let (out, skips) = flatten_control_flow(&ast, 0.0, 3);
        assert_eq!(print_compact(&out), print_compact(&ast));
        assert!(skips.is_empty());
    }

    #[test]
    fn bodies_with_function_decls_are_skipped_with_note() {
        let src = "function outer(){function inner(){return 1;}return inner();}";
        let ast = parse(src).unwrap();
        let (out, skips) = flatten_control_flow(&ast, 1.0, 3);
        assert_eq!(skips.len(), 1);
        assert_eq!(skips[0].function_name.as_deref(), Some("outer"));
        let printed = print_compact(&out);
        let t1 = execute("var r=(function(){function inner(){return 1;}return inner();})();console.log(r);", ExecLimits::default());
        let _ = t1;
        // Outer body untouched.
        assert!(!printed.contains("switch"), "{printed}");
    }

    #[test]
    fn returns_and_vars_survive_flattening() {
        let src = r#"
function compute(x) {
    var base = x * 2;
    var extra = base + 1;
    if (extra > 100) { return "big"; }
    return base + extra;
}
console.log(compute(4), compute(60));
"#;
        let (out, skips) = flatten_control_flow(&parse(src).unwrap(), 1.0, 11);
        assert!(skips.is_empty());
        let printed = print_compact(&out);
        let t1 = execute(src, ExecLimits::default());
        let t2 = execute(&printed, ExecLimits::default());
        assert!(trace_equal(&t1, &t2), "{printed}");
    }

    #[test]
    fn trace_preserved_across_seeds() {
        let src = r#"
function steps() {
    console.log("one");
    console.log("two");
    console.log("three");
    console.log("four");
}
steps();
"#;
        let base = execute(src, ExecLimits::default());
        for seed in 0..20u64 {
            let (out, _) = flatten_control_flow(&parse(src).unwrap(), 1.0, seed);
            let printed = print_compact(&out);
            let t = execute(&printed, ExecLimits::default());
            assert!(trace_equal(&base, &t), "seed {seed} diverged:\n{printed}");
        }
    }
}
