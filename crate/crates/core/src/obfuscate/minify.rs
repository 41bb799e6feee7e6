//! Closure-style minification: rename locally scoped identifiers to the
//! shortest available names. Global bindings, free names, and property
//! names are never touched, and any scope that can reach a direct
//! `eval` keeps its original names (the evaluated code may look them up
//! by name).

use crate::ast::*;
use crate::lexer::is_valid_identifier;
use std::collections::{HashMap, HashSet};

/// Rename locals to `a, b, …, z, aa, ab, …` per scope. Pure: the input
/// tree is cloned.
pub fn minify(program: &Program) -> Program {
    let mut analysis = Analysis::default();
    analysis.collect_program(program);
    let finals = analysis.assign_names();
    let mut out = program.clone();
    let mut rewriter = Rewriter {
        scopes: &analysis.scopes,
        finals: &finals,
        stack: vec![0],
        next_scope: 1,
    };
    rewriter.program(&mut out);
    out
}

/// Shortest-name sequence: a..z, aa..az, ba.. (bijective base 26).
fn short_name(mut i: usize) -> String {
    let mut s = Vec::new();
    loop {
        s.push(b'a' + (i % 26) as u8);
        i /= 26;
        if i == 0 {
            break;
        }
        i -= 1;
    }
    s.reverse();
    String::from_utf8(s).unwrap()
}

#[derive(Default)]
struct ScopeInfo {
    parent: Option<usize>,
    declared: Vec<String>,
    declared_set: HashSet<String>,
    /// Occurrences anywhere in this scope's subtree, resolved to their
    /// binding scope.
    used: Vec<(usize, String)>,
    /// Names in the subtree that resolve to nothing (host globals,
    /// implicit globals).
    free: HashSet<String>,
}

#[derive(Default)]
struct Analysis {
    scopes: Vec<ScopeInfo>,
    stack: Vec<usize>,
}

impl Analysis {
    fn collect_program(&mut self, program: &Program) {
        let mut declared = Vec::new();
        hoisted_names(&program.body, &mut declared);
        self.push_scope(None, declared);
        for stmt in &program.body {
            self.stmt(stmt);
        }
        self.stack.pop();
    }

    fn push_scope(&mut self, parent: Option<usize>, declared: Vec<String>) -> usize {
        let mut set = HashSet::new();
        let mut unique = Vec::new();
        for name in declared {
            if set.insert(name.clone()) {
                unique.push(name);
            }
        }
        let idx = self.scopes.len();
        self.scopes.push(ScopeInfo {
            parent,
            declared: unique,
            declared_set: set,
            used: Vec::new(),
            free: HashSet::new(),
        });
        self.stack.push(idx);
        idx
    }

    fn occurrence(&mut self, name: &str) {
        // Resolve innermost-out, then record in every enclosing scope.
        let mut binding = None;
        for &idx in self.stack.iter().rev() {
            if self.scopes[idx].declared_set.contains(name) {
                binding = Some(idx);
                break;
            }
        }
        match binding {
            Some(b) => {
                for &idx in &self.stack {
                    self.scopes[idx].used.push((b, name.to_string()));
                }
            }
            None => {
                for &idx in &self.stack {
                    self.scopes[idx].free.insert(name.to_string());
                }
            }
        }
    }

    fn function(&mut self, f: &Function, self_name_binds_inside: bool) {
        if !self_name_binds_inside {
            if let Some(name) = &f.name {
                self.occurrence(&name.name);
            }
        }
        let parent = self.stack.last().copied();
        let mut declared = Vec::new();
        if self_name_binds_inside {
            if let Some(name) = &f.name {
                declared.push(name.name.clone());
            }
        }
        declared.extend(f.params.iter().map(|p| p.name.clone()));
        hoisted_names(&f.body, &mut declared);
        self.push_scope(parent, declared);
        if self_name_binds_inside {
            if let Some(name) = &f.name {
                self.occurrence(&name.name);
            }
        }
        for p in &f.params {
            self.occurrence(&p.name);
        }
        for stmt in &f.body {
            self.stmt(stmt);
        }
        self.stack.pop();
    }

    fn stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::FunctionDecl(f) => self.function(f, false),
            Stmt::VarDecl { decls, .. } => {
                for d in decls {
                    self.occurrence(&d.name.name);
                    if let Some(e) = &d.init {
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
                            self.occurrence(&d.name.name);
                            if let Some(e) = &d.init {
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
                    if let Some(t) = &case.test {
                        self.expr(t);
                    }
                    for s in &case.body {
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
            Stmt::TryCatch {
                block,
                param,
                handler,
                ..
            } => {
                for s in block {
                    self.stmt(s);
                }
                let parent = self.stack.last().copied();
                self.push_scope(parent, vec![param.name.clone()]);
                self.occurrence(&param.name);
                for s in handler {
                    self.stmt(s);
                }
                self.stack.pop();
            }
            Stmt::Block { body, .. } => {
                for s in body {
                    self.stmt(s);
                }
            }
            Stmt::Expr { expr, .. } => self.expr(expr),
        }
    }

    fn expr(&mut self, expr: &Expr) {
        match expr {
            Expr::Ident(id) => self.occurrence(&id.name),
            Expr::Str(_)
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
                for (_key, value) in props {
                    self.expr(value);
                }
            }
            Expr::Function(f) => self.function(f, true),
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
        }
    }

    /// Choose final names. Scope 0 (globals) keeps original names; any
    /// scope whose subtree references `eval` keeps its names too.
    fn assign_names(&self) -> HashMap<(usize, String), String> {
        let mut finals: HashMap<(usize, String), String> = HashMap::new();
        for name in &self.scopes[0].declared {
            finals.insert((0, name.clone()), name.clone());
        }
        for idx in 1..self.scopes.len() {
            let scope = &self.scopes[idx];
            if scope.free.contains("eval") {
                for name in &scope.declared {
                    finals.insert((idx, name.clone()), name.clone());
                }
                continue;
            }
            let mut forbidden: HashSet<String> = scope.free.clone();
            for (b, name) in &scope.used {
                if *b != idx && is_ancestor(&self.scopes, *b, idx) {
                    if let Some(f) = finals.get(&(*b, name.clone())) {
                        forbidden.insert(f.clone());
                    }
                }
            }
            let mut assigned: HashSet<String> = HashSet::new();
            let mut counter = 0usize;
            for name in &scope.declared {
                let fresh = loop {
                    let candidate = short_name(counter);
                    counter += 1;
                    if is_valid_identifier(&candidate)
                        && !forbidden.contains(&candidate)
                        && !assigned.contains(&candidate)
                    {
                        break candidate;
                    }
                };
                assigned.insert(fresh.clone());
                finals.insert((idx, name.clone()), fresh);
            }
        }
        finals
    }
}

fn is_ancestor(scopes: &[ScopeInfo], candidate: usize, of: usize) -> bool {
    let mut cur = scopes[of].parent;
    while let Some(p) = cur {
        if p == candidate {
            return true;
        }
        cur = scopes[p].parent;
    }
    false
}

/// `var` names (recursive, stopping at function boundaries) followed by
/// top-level function declaration names.
fn hoisted_names(body: &[Stmt], out: &mut Vec<String>) {
    fn vars(stmt: &Stmt, out: &mut Vec<String>) {
        match stmt {
            Stmt::FunctionDecl(_) => {}
            Stmt::VarDecl { decls, .. } => {
                out.extend(decls.iter().map(|d| d.name.name.clone()))
            }
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                vars(then_branch, out);
                if let Some(e) = else_branch {
                    vars(e, out);
                }
            }
            Stmt::While { body, .. } => vars(body, out),
            Stmt::For { init, body, .. } => {
                if let Some(ForInit::VarDecl { decls, .. }) = init {
                    out.extend(decls.iter().map(|d| d.name.name.clone()));
                }
                vars(body, out);
            }
            Stmt::Switch { cases, .. } => {
                for case in cases {
                    for s in &case.body {
                        vars(s, out);
                    }
                }
            }
            Stmt::TryCatch { block, handler, .. } => {
                for s in block {
                    vars(s, out);
                }
                for s in handler {
                    vars(s, out);
                }
            }
            Stmt::Block { body, .. } => {
                for s in body {
                    vars(s, out);
                }
            }
            Stmt::Return { .. } | Stmt::Throw { .. } | Stmt::Expr { .. } => {}
        }
    }
    for stmt in body {
        vars(stmt, out);
    }
    for stmt in body {
        if let Stmt::FunctionDecl(f) = stmt {
            if let Some(name) = &f.name {
                out.push(name.name.clone());
            }
        }
    }
}

struct Rewriter<'a> {
    scopes: &'a [ScopeInfo],
    finals: &'a HashMap<(usize, String), String>,
    stack: Vec<usize>,
    next_scope: usize,
}

impl<'a> Rewriter<'a> {
    fn rename(&self, ident: &mut Ident) {
        for &idx in self.stack.iter().rev() {
            if self.scopes[idx].declared_set.contains(&ident.name) {
                if let Some(new) = self.finals.get(&(idx, ident.name.clone())) {
                    if *new != ident.name {
                        ident.name = new.clone();
                    }
                }
                return;
            }
        }
    }

    fn enter_scope(&mut self) -> usize {
        let idx = self.next_scope;
        self.next_scope += 1;
        self.stack.push(idx);
        idx
    }

    fn program(&mut self, program: &mut Program) {
        for stmt in &mut program.body {
            self.stmt(stmt);
        }
    }

    fn function(&mut self, f: &mut Function, self_name_binds_inside: bool) {
        if !self_name_binds_inside {
            if let Some(name) = &mut f.name {
                self.rename(name);
            }
        }
        self.enter_scope();
        if self_name_binds_inside {
            if let Some(name) = &mut f.name {
                self.rename(name);
            }
        }
        for p in &mut f.params {
            self.rename(p);
        }
        for stmt in &mut f.body {
            self.stmt(stmt);
        }
        self.stack.pop();
    }

    fn stmt(&mut self, stmt: &mut Stmt) {
        match stmt {
            Stmt::FunctionDecl(f) => self.function(f, false),
            Stmt::VarDecl { decls, .. } => {
                for d in decls {
                    self.rename(&mut d.name);
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
                            self.rename(&mut d.name);
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
            Stmt::TryCatch {
                block,
                param,
                handler,
                ..
            } => {
                for s in block {
                    self.stmt(s);
                }
                self.enter_scope();
                self.rename(param);
                for s in handler {
                    self.stmt(s);
                }
                self.stack.pop();
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
            Expr::Ident(id) => self.rename(id),
            Expr::Str(_)
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
                for (_key, value) in props {
                    self.expr(value);
                }
            }
            Expr::Function(f) => self.function(f, true),
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
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::printer::print_compact;
    use crate::sandbox::{execute, trace_equal, ExecLimits};

    fn minified(src: &str) -> String {
        print_compact(&minify(&parse(src).unwrap()))
    }

    #[test]
    fn welcome_is_unchanged() {
        // Globals and property names stay; there are no locals to rename.
        let src = "function welcome() {\n  console.log(\"Hi, how are you?\");\n}\nwelcome();";
        assert_eq!(
            minified(src),
            "function welcome(){console.log(\"Hi, how are you?\")}welcome();"
        );
    }

    #[test]
    fn locals_renamed_globals_kept() {
        let src = "var longName=1;function f(parameter){return parameter+longName}";
        let out = minified(src);
        assert_eq!(out, "var longName=1;function f(a){return a+longName}");
    }

    #[test]
    fn renaming_preserves_behavior() {
        let src = r#"
var base = 10;
function mix(first, second) {
    var total = first * 2 + second;
    function inner(bump) { return total + bump + base; }
    return inner(first);
}
console.log(mix(3, 4));
"#;
        let out = minified(src);
        let t1 = execute(src, ExecLimits::default());
        let t2 = execute(&out, ExecLimits::default());
        assert!(trace_equal(&t1, &t2), "minified trace diverged:\n{out}");
        assert!(out.contains("function mix("));
        assert!(!out.contains("first"));
    }

    #[test]
    fn inner_scope_avoids_shadowing_used_outer_locals() {
        let src = r#"
function outer(x) {
    var inner = function(y) { return x + y; };
    return inner(1);
}
console.log(outer(41));
"#;
        let out = minified(src);
        let t1 = execute(src, ExecLimits::default());
        let t2 = execute(&out, ExecLimits::default());
        assert!(trace_equal(&t1, &t2), "shadowing broke semantics:\n{out}");
        assert_eq!(t2.events[0].args, vec!["42".to_string()]);
    }

    #[test]
    fn scopes_reaching_eval_keep_their_names() {
        let src = r#"
function probe(inputValue) {
    var marker = inputValue + 1;
    return eval("marker");
}
console.log(probe(1));
"#;
        let out = minified(src);
        assert!(out.contains("marker"), "eval scope was renamed: {out}");
        let t = execute(&out, ExecLimits::default());
        assert_eq!(t.events[0].args, vec!["2".to_string()]);
    }

    #[test]
    fn catch_params_participate_in_renaming() {
        let src = r#"
function f(longParam) {
    try { throw longParam; } catch (caught) { return caught + longParam; }
}
console.log(f(5));
"#;
        let out = minified(src);
        let t = execute(&out, ExecLimits::default());
        assert_eq!(t.events[0].args, vec!["10".to_string()]);
        assert!(!out.contains("caught"));
    }

    #[test]
    fn name_sequence_skips_reserved_words() {
        let names: Vec<String> = (0..200)
            .map(short_name)
            .filter(|n| is_valid_identifier(n))
            .collect();
        assert!(names.contains(&"a".to_string()));
        assert!(names.contains(&"aa".to_string()));
        assert!(!names.contains(&"do".to_string()));
        assert!(!names.contains(&"if".to_string()));
        assert!(!names.contains(&"in".to_string()));
    }

    #[test]
    fn empty_program_is_identity() {
        assert_eq!(minified(""), "");
    }
}
