//! Tree-walking interpreter over the subset AST.
//!
//! One "step" is one node evaluation; `ExecLimits::max_steps` bounds
//! total work. `eval` is a real direct eval: the string is parsed and
//! executed in the calling scope, nesting up to `max_eval_depth`.
//! Exceptions are JS-level values (catchable); resource-limit hits abort
//! the run and surface in the trace's termination status. There are no
//! timers, no prototype chains, and no `arguments` object.

use crate::ast::*;
use crate::parser::parse;
use crate::rng::SplitMix64;
use crate::sandbox::jsregex::MiniRegex;
use crate::sandbox::stubs::{self, StubId};
use crate::sandbox::trace::{EventKind, Termination, TraceEvent, MAX_ARG_CHARS};
use crate::sandbox::value::*;
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

/// Sandbox resource limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecLimits {
    pub max_steps: u64,
    pub max_eval_depth: u32,
    pub max_string_len: usize,
}

impl Default for ExecLimits {
    fn default() -> Self {
        Self {
            max_steps: 1_000_000,
            max_eval_depth: 8,
            max_string_len: 1_048_576,
        }
    }
}

const MAX_CALL_DEPTH: u32 = 200;
const MAX_TOSTRING_DEPTH: u32 = 16;

pub(crate) enum Interrupt {
    /// JS exception; catchable by `try`/`catch`.
    Throw(Value),
    /// Resource-limit abort; never catchable.
    Fatal(Termination),
}

type IResult<T> = Result<T, Interrupt>;

enum Flow {
    Normal,
    Return(Value),
}

pub(crate) struct Interp {
    global: ScopeRef,
    pub events: Vec<TraceEvent>,
    steps: u64,
    limits: ExecLimits,
    eval_depth: u32,
    call_depth: u32,
    math_rng: SplitMix64,
    singletons: HashMap<StubId, Value>,
    window: Value,
    pub coverage: Option<HashSet<(u32, u32)>>,
}

impl Interp {
    pub fn new(limits: ExecLimits, collect_coverage: bool) -> Self {
        let global = Scope::root();
        let mut singletons = HashMap::new();
        for id in [
            StubId::Window,
            StubId::Document,
            StubId::Navigator,
            StubId::Screen,
            StubId::Console,
            StubId::Math,
        ] {
            singletons.insert(id, Value::new_stub(id));
        }
        let window = singletons[&StubId::Window].clone();
        let mut interp = Self {
            global: global.clone(),
            events: Vec::new(),
            steps: 0,
            limits,
            eval_depth: 0,
            call_depth: 0,
            math_rng: SplitMix64::new(stubs::MATH_RANDOM_SEED),
            singletons,
            window,
            coverage: if collect_coverage {
                Some(HashSet::new())
            } else {
                None
            },
        };
        interp.install_globals();
        interp
    }

    fn install_globals(&mut self) {
        let mut g = self.global.borrow_mut();
        g.vars.insert("undefined".into(), Value::Undefined);
        g.vars.insert("NaN".into(), Value::Num(f64::NAN));
        g.vars.insert("Infinity".into(), Value::Num(f64::INFINITY));
        for (name, id) in [
            ("window", StubId::Window),
            ("document", StubId::Document),
            ("navigator", StubId::Navigator),
            ("screen", StubId::Screen),
            ("console", StubId::Console),
            ("Math", StubId::Math),
        ] {
            g.vars.insert(name.into(), self.singletons[&id].clone());
        }
        for (name, ctor) in [
            ("String", NativeCtor::String),
            ("Number", NativeCtor::Number),
            ("RegExp", NativeCtor::RegExp),
            ("AudioContext", NativeCtor::AudioContext),
            ("Error", NativeCtor::Error),
        ] {
            g.vars.insert(
                name.into(),
                Value::Obj(Rc::new(std::cell::RefCell::new(ObjData {
                    kind: ObjKind::NativeCtor(ctor),
                    props: HashMap::new(),
                }))),
            );
        }
        for (name, native) in [
            ("eval", Native::Eval),
            ("parseInt", Native::ParseInt),
            ("parseFloat", Native::ParseFloat),
            ("isNaN", Native::IsNaN),
        ] {
            g.vars.insert(
                name.into(),
                Value::Fun(Rc::new(FunData {
                    kind: FunKind::Native(native),
                })),
            );
        }
    }

    fn throw_str(&self, msg: impl Into<String>) -> Interrupt {
        Interrupt::Throw(Value::str(msg.into()))
    }

    fn fatal(&self, msg: impl Into<String>) -> Interrupt {
        Interrupt::Fatal(Termination::RuntimeError {
            message: msg.into(),
        })
    }

    fn step(&mut self) -> IResult<()> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(Interrupt::Fatal(Termination::StepLimit));
        }
        Ok(())
    }

    fn trace(&mut self, name: String, kind: EventKind, args: Vec<String>) {
        self.events.push(TraceEvent { name, kind, args });
    }

    // -- entry points ----------------------------------------------------------

    pub fn run_program(&mut self, program: &Program) -> Result<(), Interrupt> {
        let scope = self.global.clone();
        let this = self.window.clone();
        match self.run_body(&program.body, &scope, &this)? {
            Flow::Normal | Flow::Return(_) => Ok(()),
        }
    }

    fn run_body(&mut self, body: &[Stmt], scope: &ScopeRef, this: &Value) -> IResult<Flow> {
        self.hoist(body, scope)?;
        self.run_stmts(body, scope, this)
    }

    fn run_stmts(&mut self, body: &[Stmt], scope: &ScopeRef, this: &Value) -> IResult<Flow> {
        for stmt in body {
            match self.exec_stmt(stmt, scope, this)? {
                Flow::Normal => {}
                flow => return Ok(flow),
            }
        }
        Ok(Flow::Normal)
    }

    /// Hoisting at function/program entry: `var` names bind to undefined
    /// (unless already bound) and top-level function declarations bind
    /// their closures.
    fn hoist(&mut self, body: &[Stmt], scope: &ScopeRef) -> IResult<()> {
        let mut names = Vec::new();
        for stmt in body {
            collect_var_names(stmt, &mut names);
        }
        {
            let mut s = scope.borrow_mut();
            for name in names {
                s.vars.entry(name).or_insert(Value::Undefined);
            }
        }
        for stmt in body {
            if let Stmt::FunctionDecl(f) = stmt {
                let closure = self.make_closure(f, scope);
                scope
                    .borrow_mut()
                    .vars
                    .insert(f.name.as_ref().unwrap().name.clone(), closure);
            }
        }
        Ok(())
    }

    fn make_closure(&self, f: &Function, scope: &ScopeRef) -> Value {
        Value::Fun(Rc::new(FunData {
            kind: FunKind::Closure {
                func: Rc::new(f.clone()),
                scope: scope.clone(),
            },
        }))
    }

    // -- statements --------------------------------------------------------------

    fn exec_stmt(&mut self, stmt: &Stmt, scope: &ScopeRef, this: &Value) -> IResult<Flow> {
        self.step()?;
        if let Some(cov) = &mut self.coverage {
            let span = stmt.span();
            cov.insert((span.start, span.end));
        }
        match stmt {
            Stmt::FunctionDecl(_) => Ok(Flow::Normal), // bound during hoisting
            Stmt::VarDecl { decls, .. } => {
                for d in decls {
                    if let Some(init) = &d.init {
                        let v = self.eval_expr(init, scope, this)?;
                        self.assign_ident(&d.name.name, v, scope);
                    }
                }
                Ok(Flow::Normal)
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                if self.eval_expr(cond, scope, this)?.truthy() {
                    self.exec_stmt(then_branch, scope, this)
                } else if let Some(e) = else_branch {
                    self.exec_stmt(e, scope, this)
                } else {
                    Ok(Flow::Normal)
                }
            }
            Stmt::While { cond, body, .. } => {
                loop {
                    self.step()?;
                    if !self.eval_expr(cond, scope, this)?.truthy() {
                        break;
                    }
                    match self.exec_stmt(body, scope, this)? {
                        Flow::Normal => {}
                        flow => return Ok(flow),
                    }
                }
                Ok(Flow::Normal)
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
                            if let Some(e) = &d.init {
                                let v = self.eval_expr(e, scope, this)?;
                                self.assign_ident(&d.name.name, v, scope);
                            }
                        }
                    }
                    Some(ForInit::Expr(e)) => {
                        self.eval_expr(e, scope, this)?;
                    }
                    None => {}
                }
                loop {
                    self.step()?;
                    if let Some(t) = test {
                        if !self.eval_expr(t, scope, this)?.truthy() {
                            break;
                        }
                    }
                    match self.exec_stmt(body, scope, this)? {
                        Flow::Normal => {}
                        flow => return Ok(flow),
                    }
                    if let Some(u) = update {
                        self.eval_expr(u, scope, this)?;
                    }
                }
                Ok(Flow::Normal)
            }
            Stmt::Switch {
                discriminant,
                cases,
                ..
            } => {
                let disc = self.eval_expr(discriminant, scope, this)?;
                let mut start = None;
                for (i, case) in cases.iter().enumerate() {
                    if let Some(test) = &case.test {
                        let t = self.eval_expr(test, scope, this)?;
                        if disc.strict_eq(&t) {
                            start = Some(i);
                            break;
                        }
                    }
                }
                if start.is_none() {
                    start = cases.iter().position(|c| c.test.is_none());
                }
                if let Some(idx) = start {
                    // Fall through from the matched case to the end
                    // (the grammar has no `break`).
                    for case in &cases[idx..] {
                        match self.run_stmts(&case.body, scope, this)? {
                            Flow::Normal => {}
                            flow => return Ok(flow),
                        }
                    }
                }
                Ok(Flow::Normal)
            }
            Stmt::Return { arg, .. } => {
                let v = match arg {
                    Some(e) => self.eval_expr(e, scope, this)?,
                    None => Value::Undefined,
                };
                Ok(Flow::Return(v))
            }
            Stmt::Throw { arg, .. } => {
                let v = self.eval_expr(arg, scope, this)?;
                Err(Interrupt::Throw(v))
            }
            Stmt::TryCatch {
                block,
                param,
                handler,
                ..
            } => {
                match self.run_stmts(block, scope, this) {
                    Ok(flow) => Ok(flow),
                    Err(Interrupt::Throw(v)) => {
                        let catch_scope = Scope::child(scope);
                        catch_scope.borrow_mut().vars.insert(param.name.clone(), v);
                        self.run_stmts(handler, &catch_scope, this)
                    }
                    Err(fatal) => Err(fatal),
                }
            }
            Stmt::Block { body, .. } => self.run_stmts(body, scope, this),
            Stmt::Expr { expr, .. } => {
                self.eval_expr(expr, scope, this)?;
                Ok(Flow::Normal)
            }
        }
    }

    // -- scope helpers -------------------------------------------------------------

    fn lookup(&self, name: &str, scope: &ScopeRef) -> Option<Value> {
        let mut current = Some(scope.clone());
        while let Some(s) = current {
            let b = s.borrow();
            if let Some(v) = b.vars.get(name) {
                return Some(v.clone());
            }
            current = b.parent.clone();
        }
        None
    }

    /// Assignment walks the chain; unresolved names create a global
    /// binding (sloppy-mode semantics).
    fn assign_ident(&mut self, name: &str, value: Value, scope: &ScopeRef) {
        let mut current = Some(scope.clone());
        while let Some(s) = current {
            {
                let mut b = s.borrow_mut();
                if b.vars.contains_key(name) {
                    b.vars.insert(name.to_string(), value);
                    return;
                }
            }
            current = s.borrow().parent.clone();
        }
        self.global.borrow_mut().vars.insert(name.to_string(), value);
    }

    // -- expressions -----------------------------------------------------------------

    fn eval_expr(&mut self, e: &Expr, scope: &ScopeRef, this: &Value) -> IResult<Value> {
        self.step()?;
        match e {
            Expr::Ident(id) => self
                .lookup(&id.name, scope)
                .ok_or_else(|| self.throw_str(format!("ReferenceError: {} is not defined", id.name))),
            Expr::Str(s) => Ok(Value::str(s.value.clone())),
            Expr::Num { value, .. } => Ok(Value::Num(*value)),
            Expr::Bool { value, .. } => Ok(Value::Bool(*value)),
            Expr::Null { .. } => Ok(Value::Null),
            Expr::This { .. } => Ok(this.clone()),
            Expr::Regex {
                pattern, flags, ..
            } => self.make_regex(pattern, flags),
            Expr::Array { elements, .. } => {
                let mut items = Vec::with_capacity(elements.len());
                for el in elements {
                    items.push(self.eval_expr(el, scope, this)?);
                }
                Ok(Value::new_array(items))
            }
            Expr::Object { props, .. } => {
                let obj = Value::new_plain();
                if let Value::Obj(o) = &obj {
                    for (key, value) in props {
                        let k = match key {
                            PropKey::Ident(i) => i.name.clone(),
                            PropKey::Str(s) => s.value.clone(),
                        };
                        let v = self.eval_expr(value, scope, this)?;
                        o.borrow_mut().props.insert(k, v);
                    }
                }
                Ok(obj)
            }
            Expr::Function(f) => Ok(self.make_closure(f, scope)),
            Expr::Call { callee, args, .. } => self.eval_call(callee, args, scope, this),
            Expr::New { callee, args, .. } => {
                let ctor = self.eval_expr(callee, scope, this)?;
                let mut argv = Vec::with_capacity(args.len());
                for a in args {
                    argv.push(self.eval_expr(a, scope, this)?);
                }
                self.construct(ctor, argv, scope)
            }
            Expr::Member {
                object, property, ..
            } => {
                let obj = self.eval_expr(object, scope, this)?;
                self.get_property(&obj, &property.name, false)
            }
            Expr::Index { object, index, .. } => {
                let obj = self.eval_expr(object, scope, this)?;
                let key = self.eval_expr(index, scope, this)?;
                self.get_by_key(&obj, &key, false)
            }
            Expr::Assign {
                op, target, value, ..
            } => {
                let rhs = if *op == AssignOp::Assign {
                    self.eval_expr(value, scope, this)?
                } else {
                    let current = self.eval_expr(target, scope, this)?;
                    let operand = self.eval_expr(value, scope, this)?;
                    let bin = match op {
                        AssignOp::Add => BinaryOp::Add,
                        AssignOp::Sub => BinaryOp::Sub,
                        AssignOp::Mul => BinaryOp::Mul,
                        AssignOp::Div => BinaryOp::Div,
                        AssignOp::Mod => BinaryOp::Mod,
                        AssignOp::Assign => unreachable!(),
                    };
                    self.binary_value(bin, current, operand)?
                };
                self.assign_target(target, rhs.clone(), scope, this)?;
                Ok(rhs)
            }
            Expr::Binary {
                op, left, right, ..
            } => match op {
                BinaryOp::And => {
                    let l = self.eval_expr(left, scope, this)?;
                    if !l.truthy() {
                        Ok(l)
                    } else {
                        self.eval_expr(right, scope, this)
                    }
                }
                BinaryOp::Or => {
                    let l = self.eval_expr(left, scope, this)?;
                    if l.truthy() {
                        Ok(l)
                    } else {
                        self.eval_expr(right, scope, this)
                    }
                }
                BinaryOp::Comma => {
                    self.eval_expr(left, scope, this)?;
                    self.eval_expr(right, scope, this)
                }
                _ => {
                    let l = self.eval_expr(left, scope, this)?;
                    let r = self.eval_expr(right, scope, this)?;
                    self.binary_value(*op, l, r)
                }
            },
            Expr::Unary { op, operand, .. } => self.eval_unary(*op, operand, scope, this),
            Expr::Conditional {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                if self.eval_expr(cond, scope, this)?.truthy() {
                    self.eval_expr(then_branch, scope, this)
                } else {
                    self.eval_expr(else_branch, scope, this)
                }
            }
        }
    }

    fn make_regex(&self, pattern: &str, flags: &str) -> IResult<Value> {
        match MiniRegex::parse(pattern, flags) {
            Some(re) => Ok(Value::Obj(Rc::new(std::cell::RefCell::new(ObjData {
                kind: ObjKind::Regex(re),
                props: HashMap::new(),
            })))),
            None => Err(self.throw_str(format!(
                "SyntaxError: regex /{pattern}/{flags} is outside the supported subset"
            ))),
        }
    }

    fn eval_unary(
        &mut self,
        op: UnaryOp,
        operand: &Expr,
        scope: &ScopeRef,
        this: &Value,
    ) -> IResult<Value> {
        match op {
            UnaryOp::TypeOf => {
                // typeof tolerates unresolved identifiers.
                if let Expr::Ident(id) = operand {
                    match self.lookup(&id.name, scope) {
                        Some(v) => Ok(Value::str(v.type_of())),
                        None => Ok(Value::str("undefined")),
                    }
                } else {
                    let v = self.eval_expr(operand, scope, this)?;
                    Ok(Value::str(v.type_of()))
                }
            }
            UnaryOp::Void => {
                self.eval_expr(operand, scope, this)?;
                Ok(Value::Undefined)
            }
            UnaryOp::Not => {
                let v = self.eval_expr(operand, scope, this)?;
                Ok(Value::Bool(!v.truthy()))
            }
            UnaryOp::Neg => {
                let v = self.eval_expr(operand, scope, this)?;
                let n = self.to_number(&v)?;
                Ok(Value::Num(-n))
            }
            UnaryOp::Pos => {
                let v = self.eval_expr(operand, scope, this)?;
                let n = self.to_number(&v)?;
                Ok(Value::Num(n))
            }
            UnaryOp::BitNot => {
                let v = self.eval_expr(operand, scope, this)?;
                let n = self.to_number(&v)?;
                Ok(Value::Num(!(to_int32(n)) as f64))
            }
            UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec => {
                let old = self.eval_expr(operand, scope, this)?;
                let n = self.to_number(&old)?;
                let delta = if matches!(op, UnaryOp::PreInc | UnaryOp::PostInc) {
                    1.0
                } else {
                    -1.0
                };
                let new = Value::Num(n + delta);
                self.assign_target(operand, new.clone(), scope, this)?;
                if op.is_postfix() {
                    Ok(Value::Num(n))
                } else {
                    Ok(new)
                }
            }
        }
    }

    fn assign_target(
        &mut self,
        target: &Expr,
        value: Value,
        scope: &ScopeRef,
        this: &Value,
    ) -> IResult<()> {
        match target {
            Expr::Ident(id) => {
                self.assign_ident(&id.name, value, scope);
                Ok(())
            }
            Expr::Member {
                object, property, ..
            } => {
                let obj = self.eval_expr(object, scope, this)?;
                self.set_property(&obj, property.name.clone(), value)
            }
            Expr::Index { object, index, .. } => {
                let obj = self.eval_expr(object, scope, this)?;
                let key = self.eval_expr(index, scope, this)?;
                self.set_by_key(&obj, &key, value)
            }
            _ => Err(self.throw_str("TypeError: invalid assignment target")),
        }
    }

    // -- property access -------------------------------------------------------------

    fn get_by_key(&mut self, obj: &Value, key: &Value, in_callee: bool) -> IResult<Value> {
        // Numeric indexing on arrays and strings first.
        if let Value::Num(n) = key {
            if n.fract() == 0.0 && *n >= 0.0 {
                let idx = *n as usize;
                match obj {
                    Value::Obj(o) => {
                        if let ObjKind::Array(items) = &o.borrow().kind {
                            return Ok(items.get(idx).cloned().unwrap_or(Value::Undefined));
                        }
                    }
                    Value::Str(s) => {
                        return Ok(s
                            .chars()
                            .nth(idx)
                            .map(|c| Value::str(c.to_string()))
                            .unwrap_or(Value::Undefined));
                    }
                    _ => {}
                }
            }
        }
        let name = self.to_string(key)?;
        self.get_property(obj, &name, in_callee)
    }

    fn set_by_key(&mut self, obj: &Value, key: &Value, value: Value) -> IResult<()> {
        if let (Value::Obj(o), Value::Num(n)) = (obj, key) {
            if n.fract() == 0.0 && *n >= 0.0 {
                let idx = *n as usize;
                let mut b = o.borrow_mut();
                if let ObjKind::Array(items) = &mut b.kind {
                    if idx >= items.len() {
                        items.resize(idx + 1, Value::Undefined);
                    }
                    items[idx] = value;
                    return Ok(());
                }
            }
        }
        let name = self.to_string(key)?;
        self.set_property(obj, name, value)
    }

    fn get_property(&mut self, obj: &Value, name: &str, in_callee: bool) -> IResult<Value> {
        match obj {
            Value::Undefined | Value::Null => Err(self.throw_str(format!(
                "TypeError: cannot read property '{name}' of {}",
                if matches!(obj, Value::Null) {
                    "null"
                } else {
                    "undefined"
                }
            ))),
            Value::Str(s) => Ok(self.string_property(s, name)),
            Value::Num(_) => Ok(match name {
                "toString" => bound(obj.clone(), BoundMethod::Num("toString")),
                _ => Value::Undefined,
            }),
            Value::Bool(_) => Ok(Value::Undefined),
            Value::Fun(_) => Ok(Value::Undefined),
            Value::Obj(o) => {
                enum Route {
                    Value(Value),
                    Stub(StubId),
                    Ctor(NativeCtor),
                }
                let route = {
                    let b = o.borrow();
                    match &b.kind {
                        ObjKind::Array(items) => Route::Value(match name {
                            "length" => Value::Num(items.len() as f64),
                            "push" | "pop" | "shift" | "unshift" | "join" | "indexOf"
                            | "slice" | "concat" => {
                                bound(obj.clone(), BoundMethod::Array(match name {
                                    "push" => "push",
                                    "pop" => "pop",
                                    "shift" => "shift",
                                    "unshift" => "unshift",
                                    "join" => "join",
                                    "indexOf" => "indexOf",
                                    "slice" => "slice",
                                    _ => "concat",
                                }))
                            }
                            _ => Value::Undefined,
                        }),
                        ObjKind::Plain => {
                            Route::Value(b.props.get(name).cloned().unwrap_or(Value::Undefined))
                        }
                        ObjKind::Regex(re) => Route::Value(match name {
                            "source" => Value::str(re.source()),
                            _ => Value::Undefined,
                        }),
                        ObjKind::Stub(id) => Route::Stub(*id),
                        ObjKind::NativeCtor(c) => Route::Ctor(*c),
                    }
                };
                match route {
                    Route::Value(v) => Ok(v),
                    Route::Stub(id) => self.stub_get(id, obj, name, in_callee),
                    Route::Ctor(c) => Ok(self.ctor_property(c, name)),
                }
            }
        }
    }

    fn string_property(&self, s: &Rc<String>, name: &str) -> Value {
        match name {
            "length" => Value::Num(s.chars().count() as f64),
            "charAt" | "charCodeAt" | "indexOf" | "replace" | "split" | "substring"
            | "slice" | "toLowerCase" | "toUpperCase" | "concat" | "toString" | "trim" => bound(
                Value::Str(s.clone()),
                BoundMethod::Str(match name {
                    "charAt" => "charAt",
                    "charCodeAt" => "charCodeAt",
                    "indexOf" => "indexOf",
                    "replace" => "replace",
                    "split" => "split",
                    "substring" => "substring",
                    "slice" => "slice",
                    "toLowerCase" => "toLowerCase",
                    "toUpperCase" => "toUpperCase",
                    "concat" => "concat",
                    "trim" => "trim",
                    _ => "toString",
                }),
            ),
            _ => Value::Undefined,
        }
    }

    fn ctor_property(&self, ctor: NativeCtor, name: &str) -> Value {
        match (ctor, name) {
            (NativeCtor::String, "fromCharCode") => Value::Fun(Rc::new(FunData {
                kind: FunKind::Native(Native::StringFromCharCode),
            })),
            _ => Value::Undefined,
        }
    }

    fn set_property(&mut self, obj: &Value, name: String, value: Value) -> IResult<()> {
        match obj {
            Value::Undefined | Value::Null => Err(self.throw_str(format!(
                "TypeError: cannot set property '{name}' of undefined"
            ))),
            Value::Obj(o) => {
                let mut b = o.borrow_mut();
                match &mut b.kind {
                    ObjKind::Plain => {
                        b.props.insert(name, value);
                        Ok(())
                    }
                    ObjKind::Array(items) => {
                        if name == "length" {
                            drop(b);
                            let n = self.to_number(&value)?;
                            if n.fract() == 0.0 && n >= 0.0 {
                                if let Value::Obj(o) = obj {
                                    if let ObjKind::Array(items) = &mut o.borrow_mut().kind {
                                        items.resize(n as usize, Value::Undefined);
                                    }
                                }
                            }
                            return Ok(());
                        }
                        let _ = items;
                        Ok(()) // non-index array props are dropped
                    }
                    // Stub surfaces are read-only; writes are ignored.
                    ObjKind::Stub(_) | ObjKind::NativeCtor(_) | ObjKind::Regex(_) => Ok(()),
                }
            }
            // Property writes on primitives are silently dropped.
            _ => Ok(()),
        }
    }

    // -- stub dispatch ------------------------------------------------------------------

    fn stub_get(
        &mut self,
        id: StubId,
        recv: &Value,
        name: &str,
        in_callee: bool,
    ) -> IResult<Value> {
        let qualified = format!("{}.{}", id.canonical_name(), name);
        enum Entry {
            Data(Value),
            Method,
            Missing,
        }
        let entry = match (id, name) {
            (StubId::Window, "navigator") => Entry::Data(self.singletons[&StubId::Navigator].clone()),
            (StubId::Window, "document") => Entry::Data(self.singletons[&StubId::Document].clone()),
            (StubId::Window, "screen") => Entry::Data(self.singletons[&StubId::Screen].clone()),
            (StubId::Window, "console") => Entry::Data(self.singletons[&StubId::Console].clone()),
            (StubId::Document, "createElement") => Entry::Method,
            (StubId::Navigator, "userAgent") => Entry::Data(Value::str(stubs::USER_AGENT)),
            (StubId::Navigator, "platform") => Entry::Data(Value::str(stubs::PLATFORM)),
            (StubId::Navigator, "languages") => Entry::Data(Value::new_array(
                stubs::LANGUAGES.iter().map(|s| Value::str(*s)).collect(),
            )),
            (StubId::Navigator, "plugins") => Entry::Data(Value::new_array(
                stubs::PLUGINS.iter().map(|s| Value::str(*s)).collect(),
            )),
            (StubId::Screen, "width") => Entry::Data(Value::Num(stubs::SCREEN_WIDTH)),
            (StubId::Screen, "height") => Entry::Data(Value::Num(stubs::SCREEN_HEIGHT)),
            (StubId::Screen, "colorDepth") => Entry::Data(Value::Num(stubs::SCREEN_COLOR_DEPTH)),
            (StubId::Console, "log" | "info" | "warn" | "error") => Entry::Method,
            (StubId::Canvas, "getContext" | "toDataURL") => Entry::Method,
            (StubId::Ctx2d, "fillText" | "measureText" | "getImageData") => Entry::Method,
            (StubId::WebGl, "getParameter" | "getSupportedExtensions") => Entry::Method,
            (StubId::Audio, "createOscillator" | "createAnalyser") => Entry::Method,
            (StubId::Oscillator, "connect" | "start" | "stop") => Entry::Method,
            (StubId::Oscillator, "frequency") => {
                let obj = Value::new_plain();
                if let Value::Obj(o) = &obj {
                    o.borrow_mut()
                        .props
                        .insert("value".into(), Value::Num(stubs::OSCILLATOR_FREQUENCY));
                }
                Entry::Data(obj)
            }
            (StubId::Analyser, "frequencyBinCount") => {
                Entry::Data(Value::Num(stubs::ANALYSER_BIN_COUNT))
            }
            (StubId::Analyser, "getFloatFrequencyData") => Entry::Method,
            (StubId::Math, _) => return Ok(self.math_property(name)),
            _ => Entry::Missing,
        };
        match entry {
            Entry::Data(v) => {
                if id.traced() {
                    self.trace(qualified, EventKind::Get, Vec::new());
                }
                Ok(v)
            }
            Entry::Method => {
                if id.traced() && !in_callee {
                    self.trace(qualified, EventKind::Get, Vec::new());
                }
                Ok(bound(
                    recv.clone(),
                    BoundMethod::Stub {
                        stub: id,
                        method: method_static_name(id, name),
                    },
                ))
            }
            Entry::Missing => Ok(Value::Undefined),
        }
    }

    fn math_property(&self, name: &str) -> Value {
        match name {
            "PI" => Value::Num(std::f64::consts::PI),
            "E" => Value::Num(std::f64::consts::E),
            "floor" | "ceil" | "round" | "abs" | "min" | "max" | "pow" | "sqrt" | "random" => {
                bound(
                    self.singletons[&StubId::Math].clone(),
                    BoundMethod::Math(match name {
                        "floor" => "floor",
                        "ceil" => "ceil",
                        "round" => "round",
                        "abs" => "abs",
                        "min" => "min",
                        "max" => "max",
                        "pow" => "pow",
                        "sqrt" => "sqrt",
                        _ => "random",
                    }),
                )
            }
            _ => Value::Undefined,
        }
    }

    // -- calls ------------------------------------------------------------------------------

    fn eval_call(
        &mut self,
        callee: &Expr,
        args: &[Expr],
        scope: &ScopeRef,
        this: &Value,
    ) -> IResult<Value> {
        let (func, recv) = match callee {
            Expr::Member {
                object, property, ..
            } => {
                let obj = self.eval_expr(object, scope, this)?;
                let f = self.get_property(&obj, &property.name, true)?;
                (f, obj)
            }
            Expr::Index { object, index, .. } => {
                let obj = self.eval_expr(object, scope, this)?;
                let key = self.eval_expr(index, scope, this)?;
                let f = self.get_by_key(&obj, &key, true)?;
                (f, obj)
            }
            _ => {
                let f = self.eval_expr(callee, scope, this)?;
                (f, self.window.clone())
            }
        };
        let mut argv = Vec::with_capacity(args.len());
        for a in args {
            argv.push(self.eval_expr(a, scope, this)?);
        }
        self.call_value(&func, &recv, argv, scope)
    }

    pub(crate) fn call_value(
        &mut self,
        func: &Value,
        this: &Value,
        args: Vec<Value>,
        scope: &ScopeRef,
    ) -> IResult<Value> {
        match func {
            Value::Fun(f) => match &f.kind {
                FunKind::Closure { func, scope: captured } => {
                    let func = func.clone();
                    let captured = captured.clone();
                    self.call_closure(&func, &captured, this, args)
                }
                FunKind::Native(n) => self.call_native(*n, args, scope),
                FunKind::Bound { recv, method } => {
                    let recv = recv.clone();
                    let method = method.clone();
                    self.call_bound(&recv, &method, args)
                }
            },
            Value::Obj(o) => {
                let ctor = match &o.borrow().kind {
                    ObjKind::NativeCtor(c) => Some(*c),
                    _ => None,
                };
                match ctor {
                    Some(c) => self.call_ctor(c, args, false),
                    None => Err(self.throw_str("TypeError: object is not a function")),
                }
            }
            other => Err(self.throw_str(format!(
                "TypeError: {} is not a function",
                other.type_of()
            ))),
        }
    }

    fn construct(&mut self, ctor: Value, args: Vec<Value>, _scope: &ScopeRef) -> IResult<Value> {
        match &ctor {
            Value::Obj(o) => {
                let c = match &o.borrow().kind {
                    ObjKind::NativeCtor(c) => Some(*c),
                    _ => None,
                };
                match c {
                    Some(c) => self.call_ctor(c, args, true),
                    None => Err(self.throw_str("TypeError: object is not a constructor")),
                }
            }
            Value::Fun(f) => {
                if let FunKind::Closure { func, scope } = &f.kind {
                    let func = func.clone();
                    let captured = scope.clone();
                    let obj = Value::new_plain();
                    let ret = self.call_closure(&func, &captured, &obj, args)?;
                    Ok(match ret {
                        Value::Obj(_) | Value::Fun(_) => ret,
                        _ => obj,
                    })
                } else {
                    Err(self.throw_str("TypeError: value is not a constructor"))
                }
            }
            _ => Err(self.throw_str("TypeError: value is not a constructor")),
        }
    }

    fn call_closure(
        &mut self,
        func: &Rc<Function>,
        captured: &ScopeRef,
        this: &Value,
        args: Vec<Value>,
    ) -> IResult<Value> {
        self.call_depth += 1;
        if self.call_depth > MAX_CALL_DEPTH {
            self.call_depth -= 1;
            return Err(self.fatal("call stack size exceeded"));
        }
        let frame = Scope::child(captured);
        if let Some(name) = &func.name {
            // Named function expressions can call themselves.
            frame
                .borrow_mut()
                .vars
                .insert(name.name.clone(), self.make_closure(func, captured));
        }
        {
            let mut f = frame.borrow_mut();
            for (i, p) in func.params.iter().enumerate() {
                f.vars
                    .insert(p.name.clone(), args.get(i).cloned().unwrap_or(Value::Undefined));
            }
        }
        let result = self.run_body(&func.body, &frame, this);
        self.call_depth -= 1;
        match result? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Ok(Value::Undefined),
        }
    }

    fn call_native(&mut self, native: Native, args: Vec<Value>, scope: &ScopeRef) -> IResult<Value> {
        match native {
            Native::Eval => self.do_eval(args, scope),
            Native::ParseInt => {
                let s = match args.first() {
                    Some(v) => self.to_string(v)?,
                    None => return Ok(Value::Num(f64::NAN)),
                };
                let radix = match args.get(1) {
                    Some(v) => {
                        let r = self.to_number(v)?;
                        if r.is_nan() || r == 0.0 {
                            None
                        } else {
                            Some(r as u32)
                        }
                    }
                    None => None,
                };
                Ok(Value::Num(parse_int(&s, radix)))
            }
            Native::ParseFloat => {
                let s = match args.first() {
                    Some(v) => self.to_string(v)?,
                    None => return Ok(Value::Num(f64::NAN)),
                };
                Ok(Value::Num(parse_float_prefix(&s)))
            }
            Native::IsNaN => {
                let n = match args.first() {
                    Some(v) => self.to_number(v)?,
                    None => f64::NAN,
                };
                Ok(Value::Bool(n.is_nan()))
            }
            Native::StringFromCharCode => {
                let mut out = String::new();
                for a in &args {
                    let code = self.to_number(a)?;
                    let unit = (to_uint32(code) % 0x10000) as u32;
                    out.push(char::from_u32(unit).unwrap_or('\u{FFFD}'));
                }
                self.check_string(&out)?;
                Ok(Value::str(out))
            }
        }
    }

    fn do_eval(&mut self, args: Vec<Value>, scope: &ScopeRef) -> IResult<Value> {
        let Some(first) = args.into_iter().next() else {
            return Ok(Value::Undefined);
        };
        let Value::Str(src) = first else {
            // eval of a non-string returns it unchanged
            return Ok(first);
        };
        if self.eval_depth + 1 > self.limits.max_eval_depth {
            return Err(self.fatal("eval depth exceeded"));
        }
        let program = match parse(&src) {
            Ok(p) => p,
            Err(d) => {
                return Err(self.throw_str(format!("SyntaxError: eval: {d}")));
            }
        };
        self.eval_depth += 1;
        // Direct-eval semantics: the program runs in the calling scope,
        // so its var and function declarations land there. The result is
        // the completion value of the last top-level expression
        // statement.
        let this = self.window.clone();
        let result = (|| -> IResult<Value> {
            self.hoist(&program.body, scope)?;
            let mut completion = Value::Undefined;
            for stmt in &program.body {
                if let Stmt::Expr { expr, .. } = stmt {
                    self.step()?;
                    completion = self.eval_expr(expr, scope, &this)?;
                } else {
                    match self.exec_stmt(stmt, scope, &this)? {
                        Flow::Normal => {}
                        Flow::Return(_) => break,
                    }
                }
            }
            Ok(completion)
        })();
        self.eval_depth -= 1;
        result
    }

    fn call_bound(&mut self, recv: &Value, method: &BoundMethod, args: Vec<Value>) -> IResult<Value> {
        match method {
            BoundMethod::Str(name) => self.call_string_method(recv, name, args),
            BoundMethod::Num(_) => {
                let Value::Num(n) = recv else {
                    return Err(self.throw_str("TypeError: toString on non-number"));
                };
                let radix = match args.first() {
                    Some(v) => self.to_number(v)? as u32,
                    None => 10,
                };
                if radix == 10 {
                    return Ok(Value::str(js_num_to_string(*n)));
                }
                if !(2..=36).contains(&radix) {
                    return Err(self.throw_str("RangeError: toString radix must be 2..36"));
                }
                if n.fract() != 0.0 || !n.is_finite() {
                    return Err(self.throw_str(
                        "RangeError: non-integer radix conversion is not supported",
                    ));
                }
                Ok(Value::str(int_to_radix(*n as i128, radix)))
            }
            BoundMethod::Array(name) => self.call_array_method(recv, name, args),
            BoundMethod::Math(name) => self.call_math(name, args),
            BoundMethod::Stub { stub, method } => {
                let qualified = format!("{}.{}", stub.canonical_name(), method);
                if stub.traced() {
                    let mut norm = Vec::with_capacity(args.len());
                    for a in &args {
                        norm.push(self.normalize_arg(a)?);
                    }
                    self.trace(qualified, EventKind::Call, norm);
                }
                self.stub_call(*stub, method, args)
            }
        }
    }

    fn stub_call(&mut self, stub: StubId, method: &str, args: Vec<Value>) -> IResult<Value> {
        match (stub, method) {
            (StubId::Console, _) => Ok(Value::Undefined),
            (StubId::Document, "createElement") => {
                let tag = match args.first() {
                    Some(v) => self.to_string(v)?,
                    None => String::new(),
                };
                if tag.eq_ignore_ascii_case("canvas") {
                    Ok(Value::new_stub(StubId::Canvas))
                } else {
                    // Non-canvas elements are inert plain objects.
                    Ok(Value::new_plain())
                }
            }
            (StubId::Canvas, "getContext") => {
                let kind = match args.first() {
                    Some(v) => self.to_string(v)?,
                    None => String::new(),
                };
                match kind.as_str() {
                    "2d" => Ok(Value::new_stub(StubId::Ctx2d)),
                    "webgl" | "experimental-webgl" => Ok(Value::new_stub(StubId::WebGl)),
                    _ => Ok(Value::Null),
                }
            }
            (StubId::Canvas, "toDataURL") => Ok(Value::str(stubs::CANVAS_DATA_URL)),
            (StubId::Ctx2d, "fillText") => Ok(Value::Undefined),
            (StubId::Ctx2d, "measureText") => {
                let obj = Value::new_plain();
                if let Value::Obj(o) = &obj {
                    o.borrow_mut()
                        .props
                        .insert("width".into(), Value::Num(stubs::MEASURE_TEXT_WIDTH));
                }
                Ok(obj)
            }
            (StubId::Ctx2d, "getImageData") => {
                let data = Value::new_array(
                    stubs::IMAGE_DATA_BYTES.iter().map(|b| Value::Num(*b)).collect(),
                );
                let obj = Value::new_plain();
                if let Value::Obj(o) = &obj {
                    let mut b = o.borrow_mut();
                    b.props.insert("data".into(), data);
                    b.props.insert("width".into(), Value::Num(2.0));
                    b.props.insert("height".into(), Value::Num(1.0));
                }
                Ok(obj)
            }
            (StubId::WebGl, "getParameter") => {
                let code = match args.first() {
                    Some(v) => self.to_number(v)?,
                    None => 0.0,
                };
                Ok(Value::str(
                    stubs::webgl_parameter(code).unwrap_or("stub"),
                ))
            }
            (StubId::WebGl, "getSupportedExtensions") => Ok(Value::new_array(
                stubs::WEBGL_EXTENSIONS.iter().map(|s| Value::str(*s)).collect(),
            )),
            (StubId::Audio, "createOscillator") => Ok(Value::new_stub(StubId::Oscillator)),
            (StubId::Audio, "createAnalyser") => Ok(Value::new_stub(StubId::Analyser)),
            (StubId::Oscillator, _) => Ok(Value::Undefined),
            (StubId::Analyser, "getFloatFrequencyData") => {
                if let Some(Value::Obj(o)) = args.first() {
                    if let ObjKind::Array(items) = &mut o.borrow_mut().kind {
                        let pattern = stubs::FREQUENCY_DATA_PATTERN;
                        for (i, slot) in items.iter_mut().enumerate() {
                            *slot = Value::Num(pattern[i % pattern.len()]);
                        }
                    }
                }
                Ok(Value::Undefined)
            }
            _ => Ok(Value::Undefined),
        }
    }

    fn call_math(&mut self, name: &str, args: Vec<Value>) -> IResult<Value> {
        let num = |interp: &mut Self, i: usize| -> IResult<f64> {
            match args.get(i) {
                Some(v) => interp.to_number(v),
                None => Ok(f64::NAN),
            }
        };
        let v = match name {
            "floor" => num(self, 0)?.floor(),
            "ceil" => num(self, 0)?.ceil(),
            "round" => {
                let x = num(self, 0)?;
                (x + 0.5).floor()
            }
            "abs" => num(self, 0)?.abs(),
            "sqrt" => num(self, 0)?.sqrt(),
            "pow" => num(self, 0)?.powf(num(self, 1)?),
            "min" => {
                let mut m = f64::INFINITY;
                for i in 0..args.len() {
                    let x = num(self, i)?;
                    if x.is_nan() {
                        m = f64::NAN;
                        break;
                    }
                    if x < m {
                        m = x;
                    }
                }
                m
            }
            "max" => {
                let mut m = f64::NEG_INFINITY;
                for i in 0..args.len() {
                    let x = num(self, i)?;
                    if x.is_nan() {
                        m = f64::NAN;
                        break;
                    }
                    if x > m {
                        m = x;
                    }
                }
                m
            }
            "random" => self.math_rng.next_f64(),
            _ => f64::NAN,
        };
        Ok(Value::Num(v))
    }

    fn call_ctor(&mut self, ctor: NativeCtor, args: Vec<Value>, _is_new: bool) -> IResult<Value> {
        match ctor {
            NativeCtor::String => {
                let s = match args.first() {
                    Some(v) => self.to_string(v)?,
                    None => String::new(),
                };
                Ok(Value::str(s))
            }
            NativeCtor::Number => {
                let n = match args.first() {
                    Some(v) => self.to_number(v)?,
                    None => 0.0,
                };
                Ok(Value::Num(n))
            }
            NativeCtor::RegExp => {
                let pattern = match args.first() {
                    Some(v) => self.to_string(v)?,
                    None => String::new(),
                };
                let flags = match args.get(1) {
                    Some(v) => self.to_string(v)?,
                    None => String::new(),
                };
                self.make_regex(&pattern, &flags)
            }
            NativeCtor::AudioContext => {
                self.trace("AudioContext".into(), EventKind::Call, Vec::new());
                Ok(Value::new_stub(StubId::Audio))
            }
            NativeCtor::Error => {
                let msg = match args.first() {
                    Some(v) => self.to_string(v)?,
                    None => String::new(),
                };
                let obj = Value::new_plain();
                if let Value::Obj(o) = &obj {
                    let mut b = o.borrow_mut();
                    b.props.insert("name".into(), Value::str("Error"));
                    b.props.insert("message".into(), Value::str(msg));
                }
                Ok(obj)
            }
        }
    }

    // -- string / array builtins ------------------------------------------------------

    fn call_string_method(&mut self, recv: &Value, name: &str, args: Vec<Value>) -> IResult<Value> {
        let Value::Str(s) = recv else {
            return Err(self.throw_str("TypeError: string method on non-string"));
        };
        let s = s.clone();
        match name {
            "charAt" => {
                let i = match args.first() {
                    Some(v) => self.to_number(v)?,
                    None => 0.0,
                };
                let out = if i.fract() == 0.0 && i >= 0.0 {
                    s.chars().nth(i as usize).map(|c| c.to_string())
                } else {
                    None
                };
                Ok(Value::str(out.unwrap_or_default()))
            }
            "charCodeAt" => {
                let i = match args.first() {
                    Some(v) => self.to_number(v)?,
                    None => 0.0,
                };
                let out = if i.fract() == 0.0 && i >= 0.0 {
                    s.chars().nth(i as usize).map(|c| c as u32 as f64)
                } else {
                    None
                };
                Ok(Value::Num(out.unwrap_or(f64::NAN)))
            }
            "indexOf" => {
                let needle = match args.first() {
                    Some(v) => self.to_string(v)?,
                    None => "undefined".to_string(),
                };
                let char_index = s.find(&needle).map(|byte_idx| {
                    s[..byte_idx].chars().count() as f64
                });
                Ok(Value::Num(char_index.unwrap_or(-1.0)))
            }
            "replace" => self.string_replace(&s, args),
            "split" => {
                let sep = match args.first() {
                    Some(Value::Undefined) | None => {
                        return Ok(Value::new_array(vec![Value::Str(s)]));
                    }
                    Some(v) => self.to_string(v)?,
                };
                let parts: Vec<Value> = if sep.is_empty() {
                    s.chars().map(|c| Value::str(c.to_string())).collect()
                } else {
                    s.split(sep.as_str()).map(Value::str).collect()
                };
                Ok(Value::new_array(parts))
            }
            "substring" | "slice" => {
                let len = s.chars().count() as i64;
                let a = match args.first() {
                    Some(v) => self.to_number(v)? as i64,
                    None => 0,
                };
                let b = match args.get(1) {
                    Some(Value::Undefined) | None => len,
                    Some(v) => self.to_number(v)? as i64,
                };
                let (start, end) = if name == "slice" {
                    let norm = |x: i64| {
                        if x < 0 {
                            (len + x).max(0)
                        } else {
                            x.min(len)
                        }
                    };
                    let (s1, e1) = (norm(a), norm(b));
                    (s1, e1.max(s1))
                } else {
                    let clamp = |x: i64| x.clamp(0, len);
                    let (s1, e1) = (clamp(a), clamp(b));
                    (s1.min(e1), s1.max(e1))
                };
                let out: String = s
                    .chars()
                    .skip(start as usize)
                    .take((end - start) as usize)
                    .collect();
                Ok(Value::str(out))
            }
            "toLowerCase" => Ok(Value::str(s.to_lowercase())),
            "toUpperCase" => Ok(Value::str(s.to_uppercase())),
            "concat" => {
                let mut out = (*s).clone();
                for a in &args {
                    out.push_str(&self.to_string(a)?);
                    self.check_string(&out)?;
                }
                Ok(Value::str(out))
            }
            "trim" => Ok(Value::str(s.trim().to_string())),
            "toString" => Ok(Value::Str(s)),
            _ => Err(self.throw_str(format!("TypeError: unknown string method {name}"))),
        }
    }

    fn string_replace(&mut self, s: &Rc<String>, args: Vec<Value>) -> IResult<Value> {
        let pattern = args.first().cloned().unwrap_or(Value::Undefined);
        let replacement = args.get(1).cloned().unwrap_or(Value::Undefined);

        let matches: Vec<(usize, usize)> = match &pattern {
            Value::Obj(o) => {
                let b = o.borrow();
                if let ObjKind::Regex(re) = &b.kind {
                    re.find_matches(s)
                } else {
                    drop(b);
                    let lit = self.to_string(&pattern)?;
                    match s.find(&lit) {
                        Some(i) => vec![(i, i + lit.len())],
                        None => vec![],
                    }
                }
            }
            _ => {
                let lit = self.to_string(&pattern)?;
                match s.find(&lit) {
                    Some(i) => vec![(i, i + lit.len())],
                    None => vec![],
                }
            }
        };
        if matches.is_empty() {
            return Ok(Value::Str(s.clone()));
        }
        let mut out = String::with_capacity(s.len());
        let mut last = 0;
        for (start, end) in matches {
            out.push_str(&s[last..start]);
            let matched = &s[start..end];
            let rep = match &replacement {
                Value::Fun(_) | Value::Obj(_)
                    if matches!(replacement, Value::Fun(_))
                        || matches!(
                            &replacement,
                            Value::Obj(o) if matches!(o.borrow().kind, ObjKind::NativeCtor(_))
                        ) =>
                {
                    // Function replacement: called with the matched text.
                    let scope = self.global.clone();
                    let this = self.window.clone();
                    let v = self.call_value(
                        &replacement,
                        &this,
                        vec![Value::str(matched.to_string())],
                        &scope,
                    )?;
                    self.to_string(&v)?
                }
                other => self.to_string(other)?,
            };
            // No `$&`-style expansion: replacement strings are literal.
            out.push_str(&rep);
            self.check_string(&out)?;
            last = end;
        }
        out.push_str(&s[last..]);
        self.check_string(&out)?;
        Ok(Value::str(out))
    }

    fn call_array_method(&mut self, recv: &Value, name: &str, args: Vec<Value>) -> IResult<Value> {
        let Value::Obj(o) = recv else {
            return Err(self.throw_str("TypeError: array method on non-array"));
        };
        match name {
            "push" => {
                let mut b = o.borrow_mut();
                if let ObjKind::Array(items) = &mut b.kind {
                    items.extend(args);
                    Ok(Value::Num(items.len() as f64))
                } else {
                    Err(self.throw_str("TypeError: push on non-array"))
                }
            }
            "pop" => {
                let mut b = o.borrow_mut();
                if let ObjKind::Array(items) = &mut b.kind {
                    Ok(items.pop().unwrap_or(Value::Undefined))
                } else {
                    Err(self.throw_str("TypeError: pop on non-array"))
                }
            }
            "shift" => {
                let mut b = o.borrow_mut();
                if let ObjKind::Array(items) = &mut b.kind {
                    if items.is_empty() {
                        Ok(Value::Undefined)
                    } else {
                        Ok(items.remove(0))
                    }
                } else {
                    Err(self.throw_str("TypeError: shift on non-array"))
                }
            }
            "unshift" => {
                let mut b = o.borrow_mut();
                if let ObjKind::Array(items) = &mut b.kind {
                    for (i, a) in args.into_iter().enumerate() {
                        items.insert(i, a);
                    }
                    Ok(Value::Num(items.len() as f64))
                } else {
                    Err(self.throw_str("TypeError: unshift on non-array"))
                }
            }
            "join" => {
                let sep = match args.first() {
                    Some(Value::Undefined) | None => ",".to_string(),
                    Some(v) => self.to_string(v)?,
                };
                let items = {
                    let b = o.borrow();
                    match &b.kind {
                        ObjKind::Array(items) => items.clone(),
                        _ => return Err(self.throw_str("TypeError: join on non-array")),
                    }
                };
                let mut out = String::new();
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(&sep);
                    }
                    match item {
                        Value::Undefined | Value::Null => {}
                        v => out.push_str(&self.to_string(v)?),
                    }
                    self.check_string(&out)?;
                }
                Ok(Value::str(out))
            }
            "indexOf" => {
                let needle = args.first().cloned().unwrap_or(Value::Undefined);
                let b = o.borrow();
                if let ObjKind::Array(items) = &b.kind {
                    for (i, item) in items.iter().enumerate() {
                        if item.strict_eq(&needle) {
                            return Ok(Value::Num(i as f64));
                        }
                    }
                    Ok(Value::Num(-1.0))
                } else {
                    Err(self.throw_str("TypeError: indexOf on non-array"))
                }
            }
            "slice" => {
                let items = {
                    let b = o.borrow();
                    match &b.kind {
                        ObjKind::Array(items) => items.clone(),
                        _ => return Err(self.throw_str("TypeError: slice on non-array")),
                    }
                };
                let len = items.len() as i64;
                let norm = |x: i64| if x < 0 { (len + x).max(0) } else { x.min(len) };
                let a = match args.first() {
                    Some(v) => norm(self.to_number(v)? as i64),
                    None => 0,
                };
                let b = match args.get(1) {
                    Some(Value::Undefined) | None => len,
                    Some(v) => norm(self.to_number(v)? as i64),
                };
                let out = if a < b {
                    items[a as usize..b as usize].to_vec()
                } else {
                    Vec::new()
                };
                Ok(Value::new_array(out))
            }
            "concat" => {
                let mut out = {
                    let b = o.borrow();
                    match &b.kind {
                        ObjKind::Array(items) => items.clone(),
                        _ => return Err(self.throw_str("TypeError: concat on non-array")),
                    }
                };
                for a in args {
                    match &a {
                        Value::Obj(other) => {
                            let b = other.borrow();
                            if let ObjKind::Array(items) = &b.kind {
                                out.extend(items.iter().cloned());
                            } else {
                                drop(b);
                                out.push(a);
                            }
                        }
                        _ => out.push(a),
                    }
                }
                Ok(Value::new_array(out))
            }
            _ => Err(self.throw_str(format!("TypeError: unknown array method {name}"))),
        }
    }

    // -- operators -------------------------------------------------------------------------

    fn binary_value(&mut self, op: BinaryOp, l: Value, r: Value) -> IResult<Value> {
        use BinaryOp::*;
        match op {
            Add => {
                let lp = self.to_primitive(&l)?;
                let rp = self.to_primitive(&r)?;
                if let (Prim::Str(a), b) = (&lp, &rp) {
                    let mut out = a.clone();
                    out.push_str(&prim_to_string(b));
                    self.check_string(&out)?;
                    return Ok(Value::str(out));
                }
                if let (a, Prim::Str(b)) = (&lp, &rp) {
                    let mut out = prim_to_string(a);
                    out.push_str(b);
                    self.check_string(&out)?;
                    return Ok(Value::str(out));
                }
                Ok(Value::Num(prim_to_number(&lp) + prim_to_number(&rp)))
            }
            Sub | Mul | Div | Mod => {
                let a = self.to_number(&l)?;
                let b = self.to_number(&r)?;
                Ok(Value::Num(match op {
                    Sub => a - b,
                    Mul => a * b,
                    Div => a / b,
                    _ => {
                        // JS % keeps the dividend's sign.
                        if b == 0.0 || a.is_infinite() {
                            f64::NAN
                        } else {
                            a % b
                        }
                    }
                }))
            }
            Lt | LtEq | Gt | GtEq => {
                let lp = self.to_primitive(&l)?;
                let rp = self.to_primitive(&r)?;
                if let (Prim::Str(a), Prim::Str(b)) = (&lp, &rp) {
                    return Ok(Value::Bool(match op {
                        Lt => a < b,
                        LtEq => a <= b,
                        Gt => a > b,
                        _ => a >= b,
                    }));
                }
                let a = prim_to_number(&lp);
                let b = prim_to_number(&rp);
                if a.is_nan() || b.is_nan() {
                    return Ok(Value::Bool(false));
                }
                Ok(Value::Bool(match op {
                    Lt => a < b,
                    LtEq => a <= b,
                    Gt => a > b,
                    _ => a >= b,
                }))
            }
            StrictEq => Ok(Value::Bool(l.strict_eq(&r))),
            StrictNotEq => Ok(Value::Bool(!l.strict_eq(&r))),
            Eq => Ok(Value::Bool(self.loose_eq(&l, &r)?)),
            NotEq => Ok(Value::Bool(!self.loose_eq(&l, &r)?)),
            BitAnd | BitOr | BitXor | Shl | Shr => {
                let a = to_int32(self.to_number(&l)?);
                let b = to_int32(self.to_number(&r)?);
                Ok(Value::Num(match op {
                    BitAnd => (a & b) as f64,
                    BitOr => (a | b) as f64,
                    BitXor => (a ^ b) as f64,
                    Shl => (a << (b & 31)) as f64,
                    _ => (a >> (b & 31)) as f64,
                }))
            }
            UShr => {
                let a = to_uint32(self.to_number(&l)?);
                let b = to_int32(self.to_number(&r)?) & 31;
                Ok(Value::Num((a >> b) as f64))
            }
            And | Or | Comma => unreachable!("handled with short-circuit evaluation"),
        }
    }

    fn loose_eq(&mut self, l: &Value, r: &Value) -> IResult<bool> {
        use Value::*;
        Ok(match (l, r) {
            (Undefined | Null, Undefined | Null) => true,
            (Num(_), Num(_))
            | (Str(_), Str(_))
            | (Bool(_), Bool(_))
            | (Obj(_), Obj(_))
            | (Fun(_), Fun(_)) => l.strict_eq(r),
            (Num(a), Str(s)) => *a == str_to_number(s),
            (Str(s), Num(b)) => str_to_number(s) == *b,
            (Bool(b), other) => {
                let n = if *b { 1.0 } else { 0.0 };
                self.loose_eq(&Num(n), other)?
            }
            (other, Bool(b)) => {
                let n = if *b { 1.0 } else { 0.0 };
                self.loose_eq(other, &Num(n))?
            }
            (Obj(_), Num(_) | Str(_)) => {
                let p = self.to_string(l)?;
                self.loose_eq(&Value::str(p), r)?
            }
            (Num(_) | Str(_), Obj(_)) => {
                let p = self.to_string(r)?;
                self.loose_eq(l, &Value::str(p))?
            }
            _ => false,
        })
    }

    // -- conversions -----------------------------------------------------------------------

    fn check_string(&self, s: &str) -> IResult<()> {
        if s.len() > self.limits.max_string_len {
            return Err(self.fatal("string length limit exceeded"));
        }
        Ok(())
    }

    fn to_primitive(&mut self, v: &Value) -> IResult<Prim> {
        Ok(match v {
            Value::Undefined => Prim::Other("undefined".into(), f64::NAN),
            Value::Null => Prim::Other("null".into(), 0.0),
            Value::Bool(b) => Prim::Other(
                if *b { "true" } else { "false" }.into(),
                if *b { 1.0 } else { 0.0 },
            ),
            Value::Num(n) => Prim::Num(*n),
            Value::Str(s) => Prim::Str((**s).clone()),
            Value::Obj(_) | Value::Fun(_) => Prim::Str(self.to_string(v)?),
        })
    }

    pub(crate) fn to_string(&mut self, v: &Value) -> IResult<String> {
        self.to_string_depth(v, 0)
    }

    fn to_string_depth(&mut self, v: &Value, depth: u32) -> IResult<String> {
        if depth > MAX_TOSTRING_DEPTH {
            return Err(self.fatal("toString recursion limit exceeded"));
        }
        Ok(match v {
            Value::Undefined => "undefined".into(),
            Value::Null => "null".into(),
            Value::Bool(b) => if *b { "true" } else { "false" }.into(),
            Value::Num(n) => js_num_to_string(*n),
            Value::Str(s) => (**s).clone(),
            Value::Fun(_) => "function".into(),
            Value::Obj(o) => {
                enum Snap {
                    Items(Vec<Value>),
                    Regex(String),
                    Stub(&'static str),
                    Ctor,
                    Plain,
                }
                let snap = {
                    let b = o.borrow();
                    match &b.kind {
                        ObjKind::Array(items) => Snap::Items(items.clone()),
                        ObjKind::Regex(re) => Snap::Regex(format!("/{}/", re.source())),
                        ObjKind::Stub(id) => Snap::Stub(id.canonical_name()),
                        ObjKind::NativeCtor(_) => Snap::Ctor,
                        ObjKind::Plain => Snap::Plain,
                    }
                };
                match snap {
                    Snap::Items(items) => {
                        let mut out = String::new();
                        for (i, item) in items.iter().enumerate() {
                            if i > 0 {
                                out.push(',');
                            }
                            match item {
                                Value::Undefined | Value::Null => {}
                                other => {
                                    out.push_str(&self.to_string_depth(other, depth + 1)?)
                                }
                            }
                            self.check_string(&out)?;
                        }
                        out
                    }
                    Snap::Regex(s) => s,
                    Snap::Stub(name) => format!("[object {name}]"),
                    Snap::Ctor => "function".into(),
                    Snap::Plain => "[object Object]".into(),
                }
            }
        })
    }

    pub(crate) fn to_number(&mut self, v: &Value) -> IResult<f64> {
        Ok(match v {
            Value::Undefined => f64::NAN,
            Value::Null => 0.0,
            Value::Bool(b) => {
                if *b {
                    1.0
                } else {
                    0.0
                }
            }
            Value::Num(n) => *n,
            Value::Str(s) => str_to_number(s),
            Value::Obj(_) | Value::Fun(_) => {
                let s = self.to_string(v)?;
                str_to_number(&s)
            }
        })
    }

    /// Trace-argument normalization: primitives stringified, objects
    /// reduced to a type tag, truncated to [`MAX_ARG_CHARS`] characters.
    fn normalize_arg(&mut self, v: &Value) -> IResult<String> {
        let s = match v {
            Value::Undefined => "undefined".into(),
            Value::Null => "null".into(),
            Value::Bool(b) => if *b { "true" } else { "false" }.to_string(),
            Value::Num(n) => js_num_to_string(*n),
            Value::Str(s) => (**s).clone(),
            Value::Fun(_) => "[function]".into(),
            Value::Obj(o) => {
                let b = o.borrow();
                match &b.kind {
                    ObjKind::Array(_) => "[array]".into(),
                    ObjKind::Regex(re) => format!("[regex {}]", re.source()),
                    ObjKind::Stub(id) => format!("[object {}]", id.canonical_name()),
                    ObjKind::NativeCtor(_) => "[function]".into(),
                    ObjKind::Plain => "[object]".into(),
                }
            }
        };
        Ok(if s.chars().count() > MAX_ARG_CHARS {
            s.chars().take(MAX_ARG_CHARS).collect()
        } else {
            s
        })
    }
}

/// Collect `var` names from a statement without descending into nested
/// function bodies (those hoist into their own frames).
fn collect_var_names(stmt: &Stmt, out: &mut Vec<String>) {
    match stmt {
        Stmt::FunctionDecl(_) => {}
        Stmt::VarDecl { decls, .. } => {
            for d in decls {
                out.push(d.name.name.clone());
            }
        }
        Stmt::If {
            then_branch,
            else_branch,
            ..
        } => {
            collect_var_names(then_branch, out);
            if let Some(e) = else_branch {
                collect_var_names(e, out);
            }
        }
        Stmt::While { body, .. } => collect_var_names(body, out),
        Stmt::For { init, body, .. } => {
            if let Some(ForInit::VarDecl { decls, .. }) = init {
                for d in decls {
                    out.push(d.name.name.clone());
                }
            }
            collect_var_names(body, out);
        }
        Stmt::Switch { cases, .. } => {
            for case in cases {
                for s in &case.body {
                    collect_var_names(s, out);
                }
            }
        }
        Stmt::TryCatch { block, handler, .. } => {
            for s in block {
                collect_var_names(s, out);
            }
            for s in handler {
                collect_var_names(s, out);
            }
        }
        Stmt::Block { body, .. } => {
            for s in body {
                collect_var_names(s, out);
            }
        }
        Stmt::Return { .. } | Stmt::Throw { .. } | Stmt::Expr { .. } => {}
    }
}

fn bound(recv: Value, method: BoundMethod) -> Value {
    Value::Fun(Rc::new(FunData {
        kind: FunKind::Bound { recv, method },
    }))
}

fn method_static_name(id: StubId, name: &str) -> &'static str {
    // Map back to 'static strings for the bound-method table.
    const NAMES: &[&str] = &[
        "createElement",
        "log",
        "info",
        "warn",
        "error",
        "getContext",
        "toDataURL",
        "fillText",
        "measureText",
        "getImageData",
        "getParameter",
        "getSupportedExtensions",
        "createOscillator",
        "createAnalyser",
        "connect",
        "start",
        "stop",
        "getFloatFrequencyData",
    ];
    let _ = id;
    NAMES
        .iter()
        .find(|n| **n == name)
        .copied()
        .unwrap_or("unknown")
}

/// ES ToInt32.
pub(crate) fn to_int32(n: f64) -> i32 {
    if !n.is_finite() || n == 0.0 {
        return 0;
    }
    let m = n.trunc();
    let two32 = 4294967296.0;
    let mut r = m % two32;
    if r < 0.0 {
        r += two32;
    }
    if r >= two32 / 2.0 {
        (r - two32) as i32
    } else {
        r as i32
    }
}

/// ES ToUint32.
pub(crate) fn to_uint32(n: f64) -> u32 {
    if !n.is_finite() || n == 0.0 {
        return 0;
    }
    let m = n.trunc();
    let two32 = 4294967296.0;
    let mut r = m % two32;
    if r < 0.0 {
        r += two32;
    }
    r as u32
}

enum Prim {
    Num(f64),
    Str(String),
    Other(String, f64),
}

fn prim_to_string(p: &Prim) -> String {
    match p {
        Prim::Num(n) => js_num_to_string(*n),
        Prim::Str(s) => s.clone(),
        Prim::Other(s, _) => s.clone(),
    }
}

fn prim_to_number(p: &Prim) -> f64 {
    match p {
        Prim::Num(n) => *n,
        Prim::Str(s) => str_to_number(s),
        Prim::Other(_, n) => *n,
    }
}

/// ES string-to-number: empty → 0, hex with `0x`, else decimal.
pub(crate) fn str_to_number(s: &str) -> f64 {
    let t = s.trim();
    if t.is_empty() {
        return 0.0;
    }
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        return match u128::from_str_radix(hex, 16) {
            Ok(v) => v as f64,
            Err(_) => f64::NAN,
        };
    }
    if t == "Infinity" || t == "+Infinity" {
        return f64::INFINITY;
    }
    if t == "-Infinity" {
        return f64::NEG_INFINITY;
    }
    t.parse::<f64>().unwrap_or(f64::NAN)
}

fn parse_int(s: &str, radix: Option<u32>) -> f64 {
    let t = s.trim_start();
    let mut chars = t.chars().peekable();
    let mut sign = 1.0;
    if let Some(&c) = chars.peek() {
        if c == '+' || c == '-' {
            if c == '-' {
                sign = -1.0;
            }
            chars.next();
        }
    }
    let rest: String = chars.collect();
    let (digits, radix) = match radix {
        Some(16) => (
            rest.strip_prefix("0x")
                .or_else(|| rest.strip_prefix("0X"))
                .unwrap_or(&rest),
            16,
        ),
        Some(r) if (2..=36).contains(&r) => (rest.as_str(), r),
        Some(_) => return f64::NAN,
        None => {
            if let Some(hex) = rest.strip_prefix("0x").or_else(|| rest.strip_prefix("0X")) {
                (hex, 16)
            } else {
                (rest.as_str(), 10)
            }
        }
    };
    let mut value = 0.0f64;
    let mut any = false;
    for c in digits.chars() {
        let d = match c.to_digit(radix) {
            Some(d) => d,
            None => break,
        };
        value = value * radix as f64 + d as f64;
        any = true;
    }
    if !any {
        f64::NAN
    } else {
        sign * value
    }
}

fn parse_float_prefix(s: &str) -> f64 {
    let t = s.trim_start();
    let bytes = t.as_bytes();
    let mut end = 0;
    let mut seen_digit = false;
    let mut seen_dot = false;
    let mut seen_exp = false;
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_digit() {
            seen_digit = true;
            i += 1;
            end = i;
        } else if c == b'.' && !seen_dot && !seen_exp {
            seen_dot = true;
            i += 1;
            if seen_digit {
                end = i;
            }
        } else if (c == b'e' || c == b'E') && seen_digit && !seen_exp {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                seen_exp = true;
                i = j;
            } else {
                break;
            }
        } else {
            break;
        }
    }
    if !seen_digit {
        return f64::NAN;
    }
    t[..end].parse::<f64>().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int32_conversions() {
        assert_eq!(to_int32(0.0), 0);
        assert_eq!(to_int32(-1.0), -1);
        assert_eq!(to_int32(4294967296.0), 0);
        assert_eq!(to_int32(2147483648.0), -2147483648);
        assert_eq!(to_uint32(-1.0), 4294967295);
    }

    #[test]
    fn string_number_parsing() {
        assert_eq!(str_to_number(""), 0.0);
        assert_eq!(str_to_number(" 42 "), 42.0);
        assert_eq!(str_to_number("0x1f"), 31.0);
        assert!(str_to_number("12abc").is_nan());
        assert_eq!(parse_int("12abc", None), 12.0);
        assert_eq!(parse_int("  -0x10", None), -16.0);
        assert_eq!(parse_int("z", Some(36)), 35.0);
        assert!(parse_int("xyz", Some(10)).is_nan());
        assert_eq!(parse_float_prefix("1.5e2px"), 150.0);
        assert!(parse_float_prefix("px").is_nan());
    }
}
