//! Runtime values for the sandbox interpreter.
//!
//! Objects are reference-counted with interior mutability; an interpreter
//! instance is strictly single-threaded and nothing here is shared across
//! executions.

use crate::ast::Function;
use crate::sandbox::jsregex::MiniRegex;
use crate::sandbox::stubs::StubId;
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

#[derive(Debug, Clone)]
pub enum Value {
    Undefined,
    Null,
    Bool(bool),
    Num(f64),
    Str(Rc<String>),
    Obj(Rc<RefCell<ObjData>>),
    Fun(Rc<FunData>),
}

#[derive(Debug)]
pub struct ObjData {
    pub kind: ObjKind,
    pub props: HashMap<String, Value>,
}

#[derive(Debug)]
pub enum ObjKind {
    Plain,
    Array(Vec<Value>),
    Regex(MiniRegex),
    /// Fixed-surface browser stub; accesses are traced by canonical name.
    Stub(StubId),
    /// Callable builtin global (String, Number, RegExp, AudioContext, Error).
    NativeCtor(NativeCtor),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NativeCtor {
    String,
    Number,
    RegExp,
    AudioContext,
    Error,
}

#[derive(Debug)]
pub struct FunData {
    pub kind: FunKind,
}

#[derive(Debug)]
pub enum FunKind {
    Closure {
        func: Rc<Function>,
        scope: ScopeRef,
    },
    Native(Native),
    /// Bound method of a primitive or object receiver (string/array/number
    /// methods, stub methods).
    Bound {
        recv: Value,
        method: BoundMethod,
    },
}

/// Free native functions installed as globals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Native {
    Eval,
    ParseInt,
    ParseFloat,
    IsNaN,
    StringFromCharCode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundMethod {
    Str(&'static str),
    Num(&'static str),
    Array(&'static str),
    Math(&'static str),
    /// Stub method; the canonical trace name is `<stub>.<method>`.
    Stub { stub: StubId, method: &'static str },
}

pub type ScopeRef = Rc<RefCell<Scope>>;

#[derive(Debug)]
pub struct Scope {
    pub vars: HashMap<String, Value>,
    pub parent: Option<ScopeRef>,
}

impl Scope {
    pub fn root() -> ScopeRef {
        Rc::new(RefCell::new(Scope {
            vars: HashMap::new(),
            parent: None,
        }))
    }

    pub fn child(parent: &ScopeRef) -> ScopeRef {
        Rc::new(RefCell::new(Scope {
            vars: HashMap::new(),
            parent: Some(parent.clone()),
        }))
    }
}

impl Value {
    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(Rc::new(s.into()))
    }

    pub fn new_plain() -> Value {
        Value::Obj(Rc::new(RefCell::new(ObjData {
            kind: ObjKind::Plain,
            props: HashMap::new(),
        })))
    }

    pub fn new_array(items: Vec<Value>) -> Value {
        Value::Obj(Rc::new(RefCell::new(ObjData {
            kind: ObjKind::Array(items),
            props: HashMap::new(),
        })))
    }

    pub fn new_stub(id: StubId) -> Value {
        Value::Obj(Rc::new(RefCell::new(ObjData {
            kind: ObjKind::Stub(id),
            props: HashMap::new(),
        })))
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::Undefined | Value::Null => false,
            Value::Bool(b) => *b,
            Value::Num(n) => *n != 0.0 && !n.is_nan(),
            Value::Str(s) => !s.is_empty(),
            Value::Obj(_) | Value::Fun(_) => true,
        }
    }

    pub fn type_of(&self) -> &'static str {
        match self {
            Value::Undefined => "undefined",
            Value::Null => "object",
            Value::Bool(_) => "boolean",
            Value::Num(_) => "number",
            Value::Str(_) => "string",
            Value::Fun(_) => "function",
            Value::Obj(o) => match o.borrow().kind {
                ObjKind::NativeCtor(_) => "function",
                _ => "object",
            },
        }
    }

    /// Strict equality (`===`). Objects compare by reference.
    pub fn strict_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Undefined, Value::Undefined) | (Value::Null, Value::Null) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Num(a), Value::Num(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Obj(a), Value::Obj(b)) => Rc::ptr_eq(a, b),
            (Value::Fun(a), Value::Fun(b)) => Rc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// ECMAScript-style number-to-string, restricted to the deterministic
/// cases the testbed needs (integers without exponent below 1e21,
/// shortest round-trip decimal otherwise).
pub fn js_num_to_string(v: f64) -> String {
    if v.is_nan() {
        return "NaN".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "Infinity" } else { "-Infinity" }.to_string();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    if v.fract() == 0.0 && v.abs() < 1e21 {
        return format!("{}", v as i128);
    }
    format!("{v:?}")
}

/// Integer-to-string in an arbitrary radix (2..=36), lowercase digits.
pub fn int_to_radix(mut n: i128, radix: u32) -> String {
    debug_assert!((2..=36).contains(&radix));
    if n == 0 {
        return "0".to_string();
    }
    let neg = n < 0;
    if neg {
        n = -n;
    }
    let digits = b"0123456789abcdefghijklmnopqrstuvwxyz";
    let mut buf = Vec::new();
    while n > 0 {
        buf.push(digits[(n % radix as i128) as usize]);
        n /= radix as i128;
    }
    if neg {
        buf.push(b'-');
    }
    buf.reverse();
    String::from_utf8(buf).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(js_num_to_string(f64::NAN), "NaN");
        assert_eq!(js_num_to_string(f64::INFINITY), "Infinity");
        assert_eq!(js_num_to_string(-0.0), "0");
        assert_eq!(js_num_to_string(42.0), "42");
        assert_eq!(js_num_to_string(-3.0), "-3");
        assert_eq!(js_num_to_string(0.5), "0.5");
        assert_eq!(js_num_to_string(1e20), "100000000000000000000");
    }

    #[test]
    fn radix_conversion() {
        assert_eq!(int_to_radix(35, 36), "z");
        assert_eq!(int_to_radix(36, 36), "10");
        assert_eq!(int_to_radix(255, 16), "ff");
        assert_eq!(int_to_radix(0, 2), "0");
        assert_eq!(int_to_radix(-7, 2), "-111");
    }

    #[test]
    fn strict_eq_is_reference_equality_for_objects() {
        let a = Value::new_plain();
        let b = Value::new_plain();
        assert!(a.strict_eq(&a));
        assert!(!a.strict_eq(&b));
    }
}
