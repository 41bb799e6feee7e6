//! Dead-code injection: seeded decoy blocks behind opaque-false
//! predicates (constant arithmetic comparisons). Decoys use neutral
//! vocabulary only — no stubbed Web-API names — so they change the AST
//! without touching traces or fingerprinting-relevant features.

use crate::ast::*;
use crate::obfuscate::naming::{collect_ident_names, fresh_hex_name};
use crate::rng::SplitMix64;
use std::collections::HashSet;

const RNG_LABEL: u64 = 0x4445_4144; // "DEAD"

const DECOY_WORDS: &[&str] = &[
    "offset", "buffer", "cache", "token", "padding", "chunk", "delta", "cursor", "ratio",
    "probe", "ledger", "bucket", "stride", "margin",
];

/// Insert decoy blocks at statement boundaries of the program body and
/// every function body, each with probability `threshold`.
pub fn inject_dead_code(program: &Program, threshold: f64, seed: u64) -> Program {
    let mut rng = SplitMix64::new(seed).fork(RNG_LABEL);
    let used = collect_ident_names(program);
    let mut out = program.clone();
    let mut ctx = Injector {
        rng: &mut rng,
        threshold,
        used,
    };
    ctx.body(&mut out.body);
    out
}

struct Injector<'a> {
    rng: &'a mut SplitMix64,
    threshold: f64,
    used: HashSet<String>,
}

impl<'a> Injector<'a> {
    fn fresh(&mut self) -> String {
        loop {
            let name = fresh_hex_name(self.rng);
            if !self.used.contains(&name) {
                self.used.insert(name.clone());
                return name;
            }
        }
    }

    fn body(&mut self, body: &mut Vec<Stmt>) {
        for stmt in body.iter_mut() {
            self.stmt(stmt);
        }
        // Positions 0..=len, scanned back to front so indices stay valid.
        for pos in (0..=body.len()).rev() {
            if self.rng.coin(self.threshold) {
                let decoy = self.decoy_block();
                body.insert(pos, decoy);
            }
        }
    }

    fn opaque_false(&mut self) -> Expr {
        let variant = self.rng.next_below(3);
        match variant {
            0 => {
                // a*b < c with c <= a*b, e.g. (7*3<20)
                let a = self.rng.next_range(3, 9) as f64;
                let b = self.rng.next_range(2, 9) as f64;
                let c = self.rng.next_range(2, (a * b) as u64) as f64;
                Expr::Binary {
                    op: BinaryOp::Lt,
                    left: Box::new(Expr::Binary {
                        op: BinaryOp::Mul,
                        left: Box::new(Expr::num(a)),
                        right: Box::new(Expr::num(b)),
                        span: Span::ZERO,
                    }),
                    right: Box::new(Expr::num(c)),
                    span: Span::ZERO,
                }
            }
            1 => {
                // a + b === c with c != a+b
                let a = self.rng.next_range(2, 40) as f64;
                let b = self.rng.next_range(2, 40) as f64;
                let c = a + b + self.rng.next_range(1, 9) as f64;
                Expr::Binary {
                    op: BinaryOp::StrictEq,
                    left: Box::new(Expr::Binary {
                        op: BinaryOp::Add,
                        left: Box::new(Expr::num(a)),
                        right: Box::new(Expr::num(b)),
                        span: Span::ZERO,
                    }),
                    right: Box::new(Expr::num(c)),
                    span: Span::ZERO,
                }
            }
            _ => {
                // "word".length > k with k >= length
                let word = *self.rng.choose(DECOY_WORDS);
                let k = word.len() as u64 + self.rng.next_below(4);
                Expr::Binary {
                    op: BinaryOp::Gt,
                    left: Box::new(Expr::Member {
                        object: Box::new(Expr::str(word)),
                        property: Ident::new("length"),
                        span: Span::ZERO,
                    }),
                    right: Box::new(Expr::num(k as f64)),
                    span: Span::ZERO,
                }
            }
        }
    }

    fn decoy_block(&mut self) -> Stmt {
        let mut body = Vec::new();
        let var_a = self.fresh();
        let n1 = self.rng.next_range(1, 99) as f64;
        let n2 = self.rng.next_range(1, 99) as f64;
        body.push(Stmt::VarDecl {
            decls: vec![VarDeclarator {
                name: Ident::new(var_a.clone()),
                init: Some(Expr::Binary {
                    op: BinaryOp::Add,
                    left: Box::new(Expr::num(n1)),
                    right: Box::new(Expr::num(n2)),
                    span: Span::ZERO,
                }),
            }],
            span: Span::ZERO,
        });
        if self.rng.coin(0.6) {
            let w1 = *self.rng.choose(DECOY_WORDS);
            let w2 = *self.rng.choose(DECOY_WORDS);
            let var_b = self.fresh();
            body.push(Stmt::VarDecl {
                decls: vec![VarDeclarator {
                    name: Ident::new(var_b),
                    init: Some(Expr::Binary {
                        op: BinaryOp::Add,
                        left: Box::new(Expr::str(w1)),
                        right: Box::new(Expr::str(w2)),
                        span: Span::ZERO,
                    }),
                }],
                span: Span::ZERO,
            });
        }
        body.push(Stmt::Expr {
            expr: Expr::Assign {
                op: AssignOp::Mul,
                target: Box::new(Expr::ident(var_a)),
                value: Box::new(Expr::num(self.rng.next_range(2, 9) as f64)),
                span: Span::ZERO,
            },
            span: Span::ZERO,
        });
        Stmt::If {
            cond: self.opaque_false(),
            then_branch: Box::new(Stmt::Block {
                body,
                span: Span::ZERO,
            }),
            else_branch: None,
            span: Span::ZERO,
        }
    }

    fn stmt(&mut self, stmt: &mut Stmt) {
        match stmt {
            Stmt::FunctionDecl(f) => self.body(&mut f.body),
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
            Stmt::For { body, .. } => self.stmt(body),
            Stmt::Switch { cases, .. } => {
                for case in cases {
                    for s in &mut case.body {
                        self.stmt(s);
                    }
                }
            }
            Stmt::TryCatch { block, handler, .. } => {
                for s in block {
                    self.stmt(s);
                }
                for s in handler {
                    self.stmt(s);
                }
            }
            Stmt::Block { .. } | Stmt::Return { .. } | Stmt::Throw { .. } => {}
            Stmt::Expr { expr, .. } => self.expr(expr),
        }
    }

    fn expr(&mut self, expr: &mut Expr) {
        // Only function expressions carry bodies worth injecting into.
        match expr {
            Expr::Function(f) => self.body(&mut f.body),
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
            Expr::Member { object, .. } => self.expr(object),
            Expr::Index { object, index, .. } => {
                self.expr(object);
                self.expr(index);
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::count_nodes;
    use crate::parser::parse;
    use crate::printer::print_compact;
    use crate::sandbox::{execute, execute_with_coverage, trace_equal, ExecLimits};

    #[test]
    fn threshold_zero_is_identity() {
        let src = "function f(){return 1;}console.log(f());";
        let ast = parse(src).unwrap();
        let out = inject_dead_code(&ast, 0.0, 9);
        assert_eq!(print_compact(&out), print_compact(&ast));
    }

    #[test]
    fn threshold_one_grows_ast_and_keeps_trace() {
        let src = r#"
function work(x) { return x * 3; }
console.log(work(2), navigator.userAgent);
"#;
        let ast = parse(src).unwrap();
        let out = inject_dead_code(&ast, 1.0, 9);
        assert!(count_nodes(&out) > count_nodes(&ast));
        let printed = print_compact(&out);
        let t1 = execute(src, ExecLimits::default());
        let t2 = execute(&printed, ExecLimits::default());
        assert!(trace_equal(&t1, &t2), "decoys changed the trace:\n{printed}");
    }

    #[test]
    fn decoy_blocks_never_execute() {
        let src = "console.log(1);";
        let out = inject_dead_code(&parse(src).unwrap(), 1.0, 4);
        let printed = print_compact(&out);
        // Reparse to get decoy block spans in the printed source.
        let reparsed = parse(&printed).unwrap();
        let mut decoy_block_spans = Vec::new();
        for stmt in &reparsed.body {
            if let Stmt::If {
                then_branch,
                else_branch: None,
                ..
            } = stmt
            {
                let span = then_branch.span();
                decoy_block_spans.push((span.start, span.end));
            }
        }
        assert!(!decoy_block_spans.is_empty());
        let (trace, covered) = execute_with_coverage(&printed, ExecLimits::default());
        assert!(trace.completed());
        for (start, end) in decoy_block_spans {
            // No executed statement lies strictly inside a decoy block.
            assert!(
                !covered
                    .iter()
                    .any(|(s, e)| *s > start && *e <= end && (*s, *e) != (start, end)),
                "decoy statements ran"
            );
        }
    }

    #[test]
    fn decoys_avoid_fingerprinting_vocabulary() {
        let out = inject_dead_code(&parse("console.log(1);").unwrap(), 1.0, 77);
        let printed = print_compact(&out);
        for name in crate::sandbox::FINGERPRINTING_API_NAMES {
            let last = name.rsplit('.').next().unwrap();
            let decoy_part = printed.replace("console.log(1)", "");
            assert!(
                !decoy_part.contains(last),
                "decoy mentions {last}: {printed}"
            );
        }
    }

    #[test]
    fn injection_is_deterministic() {
        let ast = parse("var keep=1;function f(){return keep;}").unwrap();
        let a = print_compact(&inject_dead_code(&ast, 0.5, 123));
        let b = print_compact(&inject_dead_code(&ast, 0.5, 123));
        assert_eq!(a, b);
    }

    #[test]
    fn empty_program_still_grows_under_threshold_one() {
        let ast = parse("").unwrap();
        let out = inject_dead_code(&ast, 1.0, 5);
        assert!(count_nodes(&out) > 1);
        let t = execute(&print_compact(&out), ExecLimits::default());
        assert!(t.completed());
        assert!(t.events.is_empty());
    }
}
