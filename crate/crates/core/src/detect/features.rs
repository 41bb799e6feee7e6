//! Feature extraction for the static (AST) and dynamic (trace) models.
//!
//! Static matching is exact-name: a fingerprinting-relevant name counts
//! when it appears as an identifier node (including dot-member property
//! names and declarations) or as the entire decoded value of a string
//! literal. Whole-value matching means a hoisted string array still
//! surfaces the names, while an eval packer's pipe-joined dictionary
//! (one big literal) hides them — the mechanism behind the static
//! model's blindness to packed scripts.

use crate::ast::{self, Expr, ForInit, Program, PropKey, Stmt};
use crate::sandbox::{ExecutionTrace, TRACED_API_NAMES};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::OnceLock;

pub const STATIC_SCHEMA_ID: &str = "static-v1";
pub const DYNAMIC_SCHEMA_ID: &str = "dynamic-v1";

/// Names treated as fingerprinting-relevant by the static model, in
/// schema order.
pub const STATIC_API_NAMES: &[&str] = &[
    "AudioContext",
    "canvas",
    "charCodeAt",
    "colorDepth",
    "createAnalyser",
    "createOscillator",
    "fillText",
    "frequencyBinCount",
    "fromCharCode",
    "getContext",
    "getFloatFrequencyData",
    "getImageData",
    "getParameter",
    "getSupportedExtensions",
    "languages",
    "measureText",
    "navigator",
    "platform",
    "plugins",
    "screen",
    "toDataURL",
    "userAgent",
    "webgl",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub id: String,
    pub names: Vec<String>,
}

pub fn static_schema() -> &'static FeatureSchema {
    static SCHEMA: OnceLock<FeatureSchema> = OnceLock::new();
    SCHEMA.get_or_init(|| {
        let mut names: Vec<String> = STATIC_API_NAMES
            .iter()
            .map(|n| format!("name:{n}"))
            .collect();
        names.extend(
            [
                "string_literal_count",
                "eval_count",
                "node_count",
                "max_string_len",
                "function_count",
            ]
            .map(str::to_string),
        );
        FeatureSchema {
            id: STATIC_SCHEMA_ID.to_string(),
            names,
        }
    })
}

pub fn dynamic_schema() -> &'static FeatureSchema {
    static SCHEMA: OnceLock<FeatureSchema> = OnceLock::new();
    SCHEMA.get_or_init(|| {
        let mut names: Vec<String> = TRACED_API_NAMES
            .iter()
            .map(|n| format!("freq:{n}"))
            .collect();
        names.push("total_api_events".to_string());
        names.push("distinct_apis".to_string());
        FeatureSchema {
            id: DYNAMIC_SCHEMA_ID.to_string(),
            names,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub schema_id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, schema: &FeatureSchema, name: &str) -> Option<f64> {
        schema
            .names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

/// Static schema extraction.
pub fn extract_static_features(program: &Program) -> FeatureVector {
    let mut counts = NameCounts::default();
    for stmt in &program.body {
        count_stmt(stmt, &mut counts);
    }
    let mut values: Vec<f64> = STATIC_API_NAMES
        .iter()
        .map(|n| counts.occurrences(n) as f64)
        .collect();
    values.push(counts.string_literals as f64);
    values.push(counts.occurrences_ident_only("eval") as f64);
    values.push(ast::count_nodes(program) as f64);
    values.push(counts.max_string_len as f64);
    values.push(counts.functions as f64);
    FeatureVector {
        schema_id: STATIC_SCHEMA_ID.to_string(),
        values,
    }
}

/// Dynamic schema extraction from a trace's frequency table.
pub fn extract_dynamic_features(trace: &ExecutionTrace) -> FeatureVector {
    let mut values: Vec<f64> = TRACED_API_NAMES
        .iter()
        .map(|name| trace.freq.get(*name).copied().unwrap_or(0) as f64)
        .collect();
    let total: u64 = trace.freq.values().sum();
    let distinct = trace.freq.len();
    values.push(total as f64);
    values.push(distinct as f64);
    FeatureVector {
        schema_id: DYNAMIC_SCHEMA_ID.to_string(),
        values,
    }
}

/// How often `name` occurs in identifier position or as a whole string
/// literal value. Exposed for tests of the matching mechanism.
pub fn count_name_occurrences(program: &Program, name: &str) -> u64 {
    let mut counts = NameCounts::default();
    for stmt in &program.body {
        count_stmt(stmt, &mut counts);
    }
    counts.occurrences(name)
}

#[derive(Default)]
struct NameCounts {
    idents: HashMap<String, u64>,
    strings: HashMap<String, u64>,
    string_literals: u64,
    max_string_len: u64,
    functions: u64,
}

impl NameCounts {
    fn ident(&mut self, name: &str) {
        *self.idents.entry(name.to_string()).or_insert(0) += 1;
    }

    fn string(&mut self, value: &str) {
        self.string_literals += 1;
        self.max_string_len = self.max_string_len.max(value.chars().count() as u64);
        *self.strings.entry(value.to_string()).or_insert(0) += 1;
    }

    fn occurrences(&self, name: &str) -> u64 {
        self.idents.get(name).copied().unwrap_or(0)
            + self.strings.get(name).copied().unwrap_or(0)
    }

    fn occurrences_ident_only(&self, name: &str) -> u64 {
        self.idents.get(name).copied().unwrap_or(0)
    }
}

fn count_function(f: &crate::ast::Function, c: &mut NameCounts) {
    c.functions += 1;
    if let Some(name) = &f.name {
        c.ident(&name.name);
    }
    for p in &f.params {
        c.ident(&p.name);
    }
    for stmt in &f.body {
        count_stmt(stmt, c);
    }
}

fn count_stmt(stmt: &Stmt, c: &mut NameCounts) {
    match stmt {
        Stmt::FunctionDecl(f) => count_function(f, c),
        Stmt::VarDecl { decls, .. } => {
            for d in decls {
                c.ident(&d.name.name);
                if let Some(e) = &d.init {
                    count_expr(e, c);
                }
            }
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            count_expr(cond, c);
            count_stmt(then_branch, c);
            if let Some(e) = else_branch {
                count_stmt(e, c);
            }
        }
        Stmt::While { cond, body, .. } => {
            count_expr(cond, c);
            count_stmt(body, c);
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
                        c.ident(&d.name.name);
                        if let Some(e) = &d.init {
                            count_expr(e, c);
                        }
                    }
                }
                Some(ForInit::Expr(e)) => count_expr(e, c),
                None => {}
            }
            if let Some(e) = test {
                count_expr(e, c);
            }
            if let Some(e) = update {
                count_expr(e, c);
            }
            count_stmt(body, c);
        }
        Stmt::Switch {
            discriminant,
            cases,
            ..
        } => {
            count_expr(discriminant, c);
            for case in cases {
                if let Some(t) = &case.test {
                    count_expr(t, c);
                }
                for s in &case.body {
                    count_stmt(s, c);
                }
            }
        }
        Stmt::Return { arg, .. } => {
            if let Some(e) = arg {
                count_expr(e, c);
            }
        }
        Stmt::Throw { arg, .. } => count_expr(arg, c),
        Stmt::TryCatch {
            block,
            param,
            handler,
            ..
        } => {
            c.ident(&param.name);
            for s in block {
                count_stmt(s, c);
            }
            for s in handler {
                count_stmt(s, c);
            }
        }
        Stmt::Block { body, .. } => {
            for s in body {
                count_stmt(s, c);
            }
        }
        Stmt::Expr { expr, .. } => count_expr(expr, c),
    }
}

fn count_expr(expr: &Expr, c: &mut NameCounts) {
    match expr {
        Expr::Ident(id) => c.ident(&id.name),
        Expr::Str(s) => c.string(&s.value),
        Expr::Num { .. }
        | Expr::Bool { .. }
        | Expr::Null { .. }
        | Expr::This { .. }
        | Expr::Regex { .. } => {}
        Expr::Array { elements, .. } => {
            for e in elements {
                count_expr(e, c);
            }
        }
        Expr::Object { props, .. } => {
            for (key, value) in props {
                match key {
                    PropKey::Ident(i) => c.ident(&i.name),
                    PropKey::Str(s) => c.string(&s.value),
                }
                count_expr(value, c);
            }
        }
        Expr::Function(f) => count_function(f, c),
        Expr::Call { callee, args, .. } | Expr::New { callee, args, .. } => {
            count_expr(callee, c);
            for a in args {
                count_expr(a, c);
            }
        }
        Expr::Member {
            object, property, ..
        } => {
            count_expr(object, c);
            c.ident(&property.name);
        }
        Expr::Index { object, index, .. } => {
            count_expr(object, c);
            count_expr(index, c);
        }
        Expr::Assign { target, value, .. } => {
            count_expr(target, c);
            count_expr(value, c);
        }
        Expr::Binary { left, right, .. } => {
            count_expr(left, c);
            count_expr(right, c);
        }
        Expr::Unary { operand, .. } => count_expr(operand, c),
        Expr::Conditional {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            count_expr(cond, c);
            count_expr(then_branch, c);
            count_expr(else_branch, c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obfuscate::{eval_pack, string_array_transform};
    use crate::parser::parse;
    use crate::printer::print_compact;
    use crate::sandbox::{execute, ExecLimits, ExecutionTrace, Termination};

    const WELCOME: &str =
        "function welcome(){console.log(\"Hi, how are you?\")}welcome();";

    #[test]
    fn empty_program_is_all_zero_except_node_count() {
        let fv = extract_static_features(&parse("").unwrap());
        let schema = static_schema();
        for (name, value) in schema.names.iter().zip(&fv.values) {
            if name == "node_count" {
                assert_eq!(*value, 1.0);
            } else {
                assert_eq!(*value, 0.0, "{name} nonzero for empty program");
            }
        }
    }

    #[test]
    fn dot_member_names_are_counted() {
        let ast = parse(WELCOME).unwrap();
        assert_eq!(count_name_occurrences(&ast, "console"), 1);
        assert_eq!(count_name_occurrences(&ast, "log"), 1);
    }

    #[test]
    fn string_array_form_still_surfaces_names() {
        // The functionality-map shape keeps each name visible as an
        // exact string-literal value.
        let ast = parse(WELCOME).unwrap();
        let transformed = string_array_transform(&ast, false, true, 9);
        let reparsed = parse(&print_compact(&transformed)).unwrap();
        assert_eq!(count_name_occurrences(&reparsed, "console"), 1);
        assert_eq!(count_name_occurrences(&reparsed, "log"), 1);
    }

    #[test]
    fn eval_packing_collapses_api_counts() {
        let src = r#"
var c = document.createElement("canvas");
var g = c.getContext("2d");
g.fillText("probe", 1, 1);
var pixels = g.getImageData(0, 0, 2, 1);
var url = c.toDataURL();
console.log(url, pixels.width, navigator.userAgent);
"#;
        let original = extract_static_features(&parse(src).unwrap());
        let packed = eval_pack(src, false).unwrap();
        let after = extract_static_features(&parse(&packed).unwrap());
        let schema = static_schema();
        let mut some_positive = false;
        for api in STATIC_API_NAMES {
            let key = format!("name:{api}");
            let before_v = original.get(schema, &key).unwrap();
            let after_v = after.get(schema, &key).unwrap();
            assert!(
                after_v <= before_v,
                "{api}: packed count {after_v} > original {before_v}"
            );
            some_positive |= before_v > 0.0;
        }
        assert!(some_positive);
        // The packed payload dominates the string features instead.
        assert!(
            after.get(schema, "max_string_len").unwrap()
                > original.get(schema, "max_string_len").unwrap()
        );
        assert_eq!(after.get(schema, "eval_count").unwrap(), 1.0);
    }

    #[test]
    fn dynamic_features_follow_the_trace() {
        let empty = ExecutionTrace::new(Vec::new(), Termination::Completed);
        let fv = extract_dynamic_features(&empty);
        assert!(fv.values.iter().all(|v| *v == 0.0));

        let t = execute("console.log(\"x\");", ExecLimits::default());
        let fv = extract_dynamic_features(&t);
        let schema = dynamic_schema();
        assert_eq!(fv.get(schema, "freq:console.log").unwrap(), 1.0);
        assert_eq!(fv.get(schema, "total_api_events").unwrap(), 1.0);
        assert_eq!(fv.get(schema, "distinct_apis").unwrap(), 1.0);
    }

    #[test]
    fn packed_and_original_dynamic_features_match() {
        let packed = eval_pack(WELCOME, true).unwrap();
        let t1 = execute(WELCOME, ExecLimits::default());
        let t2 = execute(&packed, ExecLimits::default());
        assert_eq!(
            extract_dynamic_features(&t1),
            extract_dynamic_features(&t2)
        );
    }

    #[test]
    fn schemas_are_stable() {
        assert_eq!(static_schema().names.len(), STATIC_API_NAMES.len() + 5);
        assert_eq!(
            dynamic_schema().names.len(),
            crate::sandbox::TRACED_API_NAMES.len() + 2
        );
        assert_eq!(static_schema().id, STATIC_SCHEMA_ID);
    }
}
