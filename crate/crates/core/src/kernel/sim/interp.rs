//! Tree-walking evaluator over the parsed subset.
//!
//! Supported surface: module-level statements (assignment, augmented
//! assignment, `del`, imports, `if`/`while`/`for`, `raise`), arithmetic and
//! boolean expressions, lists/tuples/dicts, and a pandas subset: frame
//! construction, column access and assignment, boolean masks, `iloc`,
//! `to_numeric`, `astype`, sorting, head/tail, reductions and the `.str`
//! accessor with literal (non-regex) patterns.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};
use std::sync::Arc;

use super::parser::{parse, Arg, Expr, Stmt, StmtKind, Target};
use super::value::{
    infer_dtype, normalize_numeric, parse_number, str_repr, type_err, Dtype, Frame, PyErr, Scalar,
    Series,
};

#[derive(Debug, Clone)]
pub enum Value {
    Scalar(Scalar),
    List(Vec<Value>),
    Tuple(Vec<Value>),
    Dict(Vec<(Value, Value)>),
    Slice(Option<i64>, Option<i64>),
    Series(Series),
    Frame(Frame),
    Module(&'static str),
    Builtin(String),
    ILoc(Box<Value>),
    StrAccessor(Series),
    Stream(&'static str),
    Exception(String, String),
}

impl Value {
    fn none() -> Value {
        Value::Scalar(Scalar::Null)
    }

    fn type_name(&self) -> &'static str {
        match self {
            Value::Scalar(s) => s.type_name(),
            Value::List(_) => "list",
            Value::Tuple(_) => "tuple",
            Value::Dict(_) => "dict",
            Value::Slice(..) => "slice",
            Value::Series(_) => "Series",
            Value::Frame(_) => "DataFrame",
            Value::Module(_) => "module",
            Value::Builtin(_) => "builtin_function_or_method",
            Value::ILoc(_) => "_iLocIndexer",
            Value::StrAccessor(_) => "StringMethods",
            Value::Stream(_) => "TextIOWrapper",
            Value::Exception(..) => "Exception",
        }
    }

    /// Python `str()`.
    pub fn to_str(&self) -> String {
        match self {
            Value::Scalar(s) => s.to_str(),
            Value::Series(s) => s.render(),
            Value::Frame(f) => f.render(),
            Value::Exception(_, m) => m.clone(),
            other => other.repr(),
        }
    }

    pub fn repr(&self) -> String {
        match self {
            Value::Scalar(s) => s.repr(),
            Value::List(items) => format!("[{}]", items.iter().map(Value::repr).collect::<Vec<_>>().join(", ")),
            Value::Tuple(items) if items.len() == 1 => format!("({},)", items[0].repr()),
            Value::Tuple(items) => format!("({})", items.iter().map(Value::repr).collect::<Vec<_>>().join(", ")),
            Value::Dict(items) => format!(
                "{{{}}}",
                items
                    .iter()
                    .map(|(k, v)| format!("{}: {}", k.repr(), v.repr()))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            Value::Series(_) | Value::Frame(_) => self.to_str(),
            Value::Module(m) => format!("<module '{m}'>"),
            Value::Builtin(b) => format!("<built-in function {b}>"),
            Value::Exception(c, m) => format!("{c}({})", str_repr(m)),
            other => format!("<{} object>", other.type_name()),
        }
    }

    fn truthy(&self) -> Result<bool, PyErr> {
        Ok(match self {
            Value::Scalar(s) => s.truthy(),
            Value::List(v) | Value::Tuple(v) => !v.is_empty(),
            Value::Dict(v) => !v.is_empty(),
            Value::Series(_) | Value::Frame(_) => {
                return Err(PyErr::new(
                    "ValueError",
                    format!(
                        "The truth value of a {} is ambiguous. Use a.empty, a.bool(), a.item(), a.any() or a.all().",
                        self.type_name()
                    ),
                ))
            }
            _ => true,
        })
    }

    fn scalar(&self) -> Result<&Scalar, PyErr> {
        match self {
            Value::Scalar(s) => Ok(s),
            other => type_err(format!("expected a scalar, got '{}'", other.type_name())),
        }
    }

    fn str_arg(&self, what: &str) -> Result<String, PyErr> {
        match self {
            Value::Scalar(Scalar::Str(s)) => Ok(s.clone()),
            other => type_err(format!("{what} must be str, not {}", other.type_name())),
        }
    }

    fn int_arg(&self, what: &str) -> Result<i64, PyErr> {
        match self {
            Value::Scalar(Scalar::Int(i)) => Ok(*i),
            Value::Scalar(Scalar::Bool(b)) => Ok(*b as i64),
            other => type_err(format!("{what} must be an integer, not '{}'", other.type_name())),
        }
    }

    fn iter_items(&self) -> Result<Vec<Value>, PyErr> {
        Ok(match self {
            Value::List(v) | Value::Tuple(v) => v.clone(),
            Value::Dict(v) => v.iter().map(|(k, _)| k.clone()).collect(),
            Value::Scalar(Scalar::Str(s)) => s.chars().map(|c| Value::Scalar(Scalar::Str(c.to_string()))).collect(),
            Value::Series(s) => s.values.iter().cloned().map(Value::Scalar).collect(),
            Value::Frame(f) => f.columns.iter().map(|c| Value::Scalar(Scalar::Str(c.clone()))).collect(),
            other => return type_err(format!("'{}' object is not iterable", other.type_name())),
        })
    }
}

fn str_val(s: impl Into<String>) -> Value {
    Value::Scalar(Scalar::Str(s.into()))
}

fn int_val(i: i64) -> Value {
    Value::Scalar(Scalar::Int(i))
}

fn bool_val(b: bool) -> Value {
    Value::Scalar(Scalar::Bool(b))
}

pub enum Ctrl {
    Err(PyErr),
    Exit(i32),
    Cancelled,
    Break,
    Continue,
}

impl From<PyErr> for Ctrl {
    fn from(e: PyErr) -> Self {
        Ctrl::Err(e)
    }
}

type R<T> = Result<T, Ctrl>;

/// Outcome of one cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellEnd {
    Ok,
    /// Formatted error text.
    Err(String),
    Exit(i32),
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellResult {
    pub stdout: String,
    pub stderr: String,
    pub end: CellEnd,
}

struct Args {
    pos: Vec<Value>,
    kw: Vec<(String, Value)>,
}

impl Args {
    fn get(&self, i: usize, name: &str) -> Option<&Value> {
        self.kw
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v)
            .or_else(|| self.pos.get(i))
    }

    fn req(&self, i: usize, name: &str, func: &str) -> Result<&Value, PyErr> {
        self.get(i, name).ok_or_else(|| {
            PyErr::new("TypeError", format!("{func}() missing required argument: '{name}'"))
        })
    }

    fn flag(&self, i: usize, name: &str, default: bool) -> Result<bool, PyErr> {
        match self.get(i, name) {
            Some(v) => v.truthy(),
            None => Ok(default),
        }
    }
}

#[derive(Default)]
pub struct Interp {
    pub globals: BTreeMap<String, Value>,
    stdout: String,
    stderr: String,
    cancel: Option<Arc<AtomicBool>>,
}

const BUILTINS: [&str; 28] = [
    "print", "len", "abs", "int", "float", "str", "round", "max", "min", "sum", "sorted", "list",
    "bool", "range", "any", "all", "tuple", "ValueError", "TypeError", "KeyError", "IndexError",
    "RuntimeError", "Exception", "ZeroDivisionError", "NameError", "AssertionError",
    "AttributeError", "NotImplementedError",
];

const MODULES: [(&str, &str); 7] = [
    ("pandas", "pandas"),
    ("numpy", "numpy"),
    ("os", "os"),
    ("sys", "sys"),
    ("math", "math"),
    ("re", "re"),
    ("datetime", "datetime"),
];

impl Interp {
    pub fn new(cancel: Option<Arc<AtomicBool>>) -> Self {
        Interp {
            cancel,
            ..Default::default()
        }
    }

    pub fn frame(&self, name: &str) -> Option<&Frame> {
        match self.globals.get(name) {
            Some(Value::Frame(f)) => Some(f),
            _ => None,
        }
    }

    pub fn run_cell(&mut self, code: &str) -> CellResult {
        self.stdout.clear();
        self.stderr.clear();
        let end = match parse(code) {
            Err(e) => CellEnd::Err(format_error("SyntaxError", &e.msg, Some(e.line), code)),
            Ok(stmts) => match self.exec_block(&stmts) {
                Ok(()) => CellEnd::Ok,
                Err(Ctrl::Err(e)) => CellEnd::Err(format_error(&e.class, &e.msg, e.line, code)),
                Err(Ctrl::Exit(c)) => CellEnd::Exit(c),
                Err(Ctrl::Cancelled) => CellEnd::Cancelled,
                Err(Ctrl::Break) | Err(Ctrl::Continue) => CellEnd::Err(format_error(
                    "SyntaxError",
                    "'break' or 'continue' outside loop",
                    None,
                    code,
                )),
            },
        };
        CellResult {
            stdout: std::mem::take(&mut self.stdout),
            stderr: std::mem::take(&mut self.stderr),
            end,
        }
    }

    fn check_cancel(&self) -> R<()> {
        match &self.cancel {
            Some(flag) if flag.load(AtomicOrdering::Relaxed) => Err(Ctrl::Cancelled),
            _ => Ok(()),
        }
    }

    fn exec_block(&mut self, stmts: &[Stmt]) -> R<()> {
        for stmt in stmts {
            self.exec(stmt).map_err(|c| match c {
                Ctrl::Err(mut e) => {
                    e.line.get_or_insert(stmt.line);
                    Ctrl::Err(e)
                }
                other => other,
            })?;
        }
        Ok(())
    }

    fn exec(&mut self, stmt: &Stmt) -> R<()> {
        match &stmt.kind {
            StmtKind::Pass => Ok(()),
            StmtKind::Break => Err(Ctrl::Break),
            StmtKind::Continue => Err(Ctrl::Continue),
            StmtKind::Expr(e) => self.eval(e).map(|_| ()),
            StmtKind::Assign(targets, value) => {
                let v = self.eval(value)?;
                for t in targets {
                    self.assign(t, v.clone())?;
                }
                Ok(())
            }
            StmtKind::AugAssign(target, op, value) => {
                let current = match target {
                    Target::Name(n) => self.lookup(n)?,
                    Target::Index(obj, idx) => {
                        let o = self.eval(obj)?;
                        let i = self.eval(idx)?;
                        self.index(o, i)?
                    }
                };
                let rhs = self.eval(value)?;
                let v = binary(op, current, rhs)?;
                self.assign(target, v)
            }
            StmtKind::Del(targets) => {
                for t in targets {
                    match t {
                        Target::Name(n) => {
                            self.globals
                                .remove(n)
                                .ok_or_else(|| PyErr::new("NameError", format!("name '{n}' is not defined")))?;
                        }
                        Target::Index(Expr::Name(n), idx) => {
                            let key = self.eval(idx)?;
                            let mut obj = self.lookup(n)?;
                            match (&mut obj, key) {
                                (Value::Frame(f), Value::Scalar(Scalar::Str(c))) => {
                                    let p = f
                                        .column_position(&c)
                                        .ok_or_else(|| PyErr::new("KeyError", str_repr(&c)))?;
                                    f.columns.remove(p);
                                    f.data.remove(p);
                                }
                                (Value::List(items), k) => {
                                    let i = norm_index(k.int_arg("list indices")?, items.len())?;
                                    items.remove(i);
                                }
                                (Value::Dict(items), k) => {
                                    let p = dict_pos(items, &k)?;
                                    items.remove(p);
                                }
                                (o, _) => return Err(type_err::<()>(format!("'{}' object does not support item deletion", o.type_name())).unwrap_err().into()),
                            }
                            self.globals.insert(n.clone(), obj);
                        }
                        Target::Index(..) => return Err(PyErr::new("SyntaxError", "cannot delete expression").into()),
                    }
                }
                Ok(())
            }
            StmtKind::Import(names) => {
                for (module, alias) in names {
                    let m = module_named(module)?;
                    if module.contains('.') && alias == module.split('.').next().unwrap_or("") {
                        self.globals.insert(alias.clone(), Value::Module(module_named(alias)?));
                    } else {
                        self.globals.insert(alias.clone(), Value::Module(m));
                    }
                }
                Ok(())
            }
            StmtKind::FromImport(module, names) => {
                let m = module_named(module)?;
                for (name, alias) in names {
                    let v = module_attr(m, name)?;
                    self.globals.insert(alias.clone(), v);
                }
                Ok(())
            }
            StmtKind::Raise(e) => {
                let (class, msg) = match e {
                    None => ("RuntimeError".to_string(), "No active exception to reraise".to_string()),
                    Some(e) => match self.eval(e)? {
                        Value::Exception(c, m) => (c, m),
                        Value::Builtin(b) if is_exception(&b) => (b, String::new()),
                        _ => ("TypeError".to_string(), "exceptions must derive from BaseException".to_string()),
                    },
                };
                Err(PyErr::new(&class, msg).into())
            }
            StmtKind::While(cond, body) => {
                loop {
                    self.check_cancel()?;
                    if !self.eval(cond)?.truthy()? {
                        return Ok(());
                    }
                    match self.exec_block(body) {
                        Err(Ctrl::Break) => return Ok(()),
                        Err(Ctrl::Continue) | Ok(()) => {}
                        Err(other) => return Err(other),
                    }
                }
            }
            StmtKind::For(var, iter, body) => {
                let items = self.eval(iter)?.iter_items()?;
                for item in items {
                    self.check_cancel()?;
                    self.globals.insert(var.clone(), item);
                    match self.exec_block(body) {
                        Err(Ctrl::Break) => return Ok(()),
                        Err(Ctrl::Continue) | Ok(()) => {}
                        Err(other) => return Err(other),
                    }
                }
                Ok(())
            }
            StmtKind::If(branches, otherwise) => {
                for (cond, body) in branches {
                    if self.eval(cond)?.truthy()? {
                        return self.exec_block(body);
                    }
                }
                self.exec_block(otherwise)
            }
        }
    }

    fn lookup(&self, name: &str) -> R<Value> {
        if let Some(v) = self.globals.get(name) {
            return Ok(v.clone());
        }
        if BUILTINS.contains(&name) {
            return Ok(Value::Builtin(name.to_string()));
        }
        Err(PyErr::new("NameError", format!("name '{name}' is not defined")).into())
    }

    fn assign(&mut self, target: &Target, value: Value) -> R<()> {
        match target {
            Target::Name(n) => {
                self.globals.insert(n.clone(), value);
                Ok(())
            }
            Target::Index(Expr::Name(n), idx) => {
                let key = self.eval(idx)?;
                let mut obj = self.lookup(n)?;
                match &mut obj {
                    Value::Frame(f) => {
                        let col = key.str_arg("column name")?;
                        let values = column_values(f, value)?;
                        f.set_column(&col, values);
                    }
                    Value::List(items) => {
                        let i = norm_index(key.int_arg("list indices")?, items.len())?;
                        items[i] = value;
                    }
                    Value::Dict(items) => match dict_pos(items, &key) {
                        Ok(p) => items[p].1 = value,
                        Err(_) => items.push((key, value)),
                    },
                    other => {
                        return Err(PyErr::new(
                            "TypeError",
                            format!("'{}' object does not support item assignment", other.type_name()),
                        )
                        .into())
                    }
                }
                self.globals.insert(n.clone(), obj);
                Ok(())
            }
            Target::Index(..) => Err(PyErr::new("NotImplementedError", "nested item assignment").into()),
        }
    }

    fn eval(&mut self, e: &Expr) -> R<Value> {
        Ok(match e {
            Expr::Name(n) => self.lookup(n)?,
            Expr::Int(i) => int_val(*i),
            Expr::Float(x) => Value::Scalar(Scalar::Float(*x)),
            Expr::Str(s) => str_val(s.clone()),
            Expr::Bool(b) => bool_val(*b),
            Expr::NoneLit => Value::none(),
            Expr::List(items) => Value::List(items.iter().map(|i| self.eval(i)).collect::<R<_>>()?),
            Expr::Tuple(items) => Value::Tuple(items.iter().map(|i| self.eval(i)).collect::<R<_>>()?),
            Expr::Dict(items) => {
                let mut out = Vec::new();
                for (k, v) in items {
                    out.push((self.eval(k)?, self.eval(v)?));
                }
                Value::Dict(out)
            }
            Expr::Slice(lo, hi) => {
                let bound = |s: &mut Self, b: &Option<Box<Expr>>| -> R<Option<i64>> {
                    match b {
                        None => Ok(None),
                        Some(e) => Ok(Some(s.eval(e)?.int_arg("slice indices")?)),
                    }
                };
                Value::Slice(bound(self, lo)?, bound(self, hi)?)
            }
            Expr::Unary(op, inner) => unary(op, self.eval(inner)?)?,
            Expr::Not(inner) => bool_val(!self.eval(inner)?.truthy()?),
            Expr::IfElse(cond, then, other) => {
                if self.eval(cond)?.truthy()? {
                    self.eval(then)?
                } else {
                    self.eval(other)?
                }
            }
            Expr::And(l, r) => {
                let lv = self.eval(l)?;
                if !lv.truthy()? {
                    lv
                } else {
                    self.eval(r)?
                }
            }
            Expr::Or(l, r) => {
                let lv = self.eval(l)?;
                if lv.truthy()? {
                    lv
                } else {
                    self.eval(r)?
                }
            }
            Expr::Binary(op, l, r) => {
                let lv = self.eval(l)?;
                let rv = self.eval(r)?;
                binary(op, lv, rv)?
            }
            Expr::Compare(op, l, r) => {
                let lv = self.eval(l)?;
                let rv = self.eval(r)?;
                compare(op, lv, rv)?
            }
            Expr::Attr(obj, name) => {
                let o = self.eval(obj)?;
                attribute(o, name)?
            }
            Expr::Index(obj, idx) => {
                let o = self.eval(obj)?;
                let i = self.eval(idx)?;
                self.index(o, i)?
            }
            Expr::Call(f, args) => self.call(f, args)?,
        })
    }

    fn eval_args(&mut self, args: &[Arg]) -> R<Args> {
        let mut out = Args { pos: Vec::new(), kw: Vec::new() };
        for a in args {
            let v = self.eval(&a.value)?;
            match &a.name {
                Some(n) => out.kw.push((n.clone(), v)),
                None => out.pos.push(v),
            }
        }
        Ok(out)
    }

    fn call(&mut self, f: &Expr, args: &[Arg]) -> R<Value> {
        let mut args = self.eval_args(args)?;
        if let Expr::Attr(obj, method) = f {
            let receiver = self.eval(obj)?;
            let inplace = match args.kw.iter().position(|(k, _)| k == "inplace") {
                Some(p) => args.kw.remove(p).1.truthy()?,
                None => false,
            };
            let mutating_list = matches!(receiver, Value::List(_)) && matches!(method.as_str(), "append" | "extend");
            if inplace || mutating_list {
                let Expr::Name(n) = obj.as_ref() else {
                    return Err(PyErr::new("NotImplementedError", "in-place call on an expression").into());
                };
                let updated = if mutating_list {
                    let Value::List(mut items) = receiver else { unreachable!() };
                    let arg = args.req(0, "object", method)?.clone();
                    if method == "append" {
                        items.push(arg);
                    } else {
                        items.extend(arg.iter_items()?);
                    }
                    Value::List(items)
                } else {
                    self.call_method(receiver, method, &args)?
                };
                self.globals.insert(n.clone(), updated);
                return Ok(Value::none());
            }
            return self.call_method(receiver, method, &args);
        }
        let callee = self.eval(f)?;
        match callee {
            Value::Builtin(name) => self.call_builtin(&name, &args),
            other => Err(PyErr::new("TypeError", format!("'{}' object is not callable", other.type_name())).into()),
        }
    }

    fn call_method(&mut self, receiver: Value, method: &str, args: &Args) -> R<Value> {
        match receiver {
            Value::Module(m) => match module_attr(m, method)? {
                Value::Builtin(b) => self.call_builtin(&b, args),
                other => Err(PyErr::new("TypeError", format!("'{}' object is not callable", other.type_name())).into()),
            },
            Value::Stream(s) => match method {
                "write" => {
                    let text = args.req(0, "s", "write")?.str_arg("write() argument")?;
                    let n = text.chars().count() as i64;
                    self.write(s, &text);
                    Ok(int_val(n))
                }
                "flush" => Ok(Value::none()),
                _ => Err(no_attr("TextIOWrapper", method).into()),
            },
            Value::Scalar(Scalar::Str(s)) => Ok(str_method(&s, method, args)?),
            Value::Scalar(x) if method == "item" => Ok(Value::Scalar(x)),
            Value::List(items) => list_method(items, method, args).map_err(Ctrl::from),
            Value::Dict(items) => match method {
                "get" => {
                    let k = args.req(0, "key", "get")?;
                    Ok(match dict_pos(&items, k) {
                        Ok(p) => items[p].1.clone(),
                        Err(_) => args.get(1, "default").cloned().unwrap_or_else(Value::none),
                    })
                }
                "keys" => Ok(Value::List(items.into_iter().map(|(k, _)| k).collect())),
                "values" => Ok(Value::List(items.into_iter().map(|(_, v)| v).collect())),
                _ => Err(no_attr("dict", method).into()),
            },
            Value::Series(s) => Ok(series_method(s, method, args)?),
            Value::StrAccessor(s) => Ok(str_accessor_method(s, method, args)?),
            Value::Frame(f) => Ok(frame_method(f, method, args)?),
            other => Err(no_attr(other.type_name(), method).into()),
        }
    }

    fn write(&mut self, stream: &str, text: &str) {
        if stream == "stderr" {
            self.stderr.push_str(text);
        } else {
            self.stdout.push_str(text);
        }
    }

    fn call_builtin(&mut self, name: &str, args: &Args) -> R<Value> {
        if is_exception(name) {
            let msg = args.pos.first().map(Value::to_str).unwrap_or_default();
            return Ok(Value::Exception(name.to_string(), msg));
        }
        let first = || args.req(0, "x", name);
        Ok(match name {
            "print" => {
                let sep = match args.get(usize::MAX, "sep") {
                    Some(v) => v.str_arg("sep")?,
                    None => " ".into(),
                };
                let end = match args.get(usize::MAX, "end") {
                    Some(v) => v.str_arg("end")?,
                    None => "\n".into(),
                };
                let stream = match args.get(usize::MAX, "file") {
                    Some(Value::Stream(s)) => *s,
                    Some(other) => return Err(no_attr(other.type_name(), "write").into()),
                    None => "stdout",
                };
                let text = args.pos.iter().map(Value::to_str).collect::<Vec<_>>().join(&sep);
                self.write(stream, &format!("{text}{end}"));
                Value::none()
            }
            "len" => int_val(match first()? {
                Value::List(v) | Value::Tuple(v) => v.len(),
                Value::Dict(v) => v.len(),
                Value::Scalar(Scalar::Str(s)) => s.chars().count(),
                Value::Series(s) => s.len(),
                Value::Frame(f) => f.nrows(),
                other => return Err(PyErr::new("TypeError", format!("object of type '{}' has no len()", other.type_name())).into()),
            } as i64),
            "abs" => match first()? {
                Value::Series(s) => Value::Series(map_series(&s, |v| scalar_abs(v))?),
                v => Value::Scalar(scalar_abs(v.scalar()?)?),
            },
            "int" => Value::Scalar(to_int(first()?.scalar()?)?),
            "float" => Value::Scalar(to_float(first()?.scalar()?)?),
            "str" => str_val(args.pos.first().map(Value::to_str).unwrap_or_default()),
            "bool" => bool_val(match args.pos.first() {
                Some(v) => v.truthy()?,
                None => false,
            }),
            "round" => {
                let digits = match args.get(1, "ndigits") {
                    Some(v) if !matches!(v, Value::Scalar(Scalar::Null)) => Some(v.int_arg("ndigits")?),
                    _ => None,
                };
                match first()? {
                    Value::Series(s) => Value::Series(map_series(&s, |v| round_scalar(v, Some(digits.unwrap_or(0))))?),
                    v => Value::Scalar(round_scalar(v.scalar()?, digits)?),
                }
            }
            "max" | "min" => {
                let items = if args.pos.len() == 1 { args.pos[0].iter_items()? } else { args.pos.clone() };
                if items.is_empty() {
                    return Err(PyErr::new("ValueError", format!("{name}() arg is an empty sequence")).into());
                }
                let mut best = items[0].clone();
                for item in &items[1..] {
                    let ord = item.scalar()?.compare(best.scalar()?)?;
                    let better = if name == "max" { ord.is_gt() } else { ord.is_lt() };
                    if better {
                        best = item.clone();
                    }
                }
                best
            }
            "sum" => {
                let mut acc = args.get(1, "start").cloned().unwrap_or(int_val(0));
                for item in first()?.iter_items()? {
                    acc = binary("+", acc, item)?;
                }
                acc
            }
            "any" | "all" => {
                let items = first()?.iter_items()?;
                let mut result = name == "all";
                for item in items {
                    if item.truthy()? != result {
                        result = !result;
                        break;
                    }
                }
                bool_val(result)
            }
            "sorted" => {
                let mut items: Vec<Scalar> = first()?
                    .iter_items()?
                    .iter()
                    .map(|v| v.scalar().cloned())
                    .collect::<Result<_, _>>()?;
                sort_scalars(&mut items)?;
                if args.flag(usize::MAX, "reverse", false)? {
                    items.reverse();
                }
                Value::List(items.into_iter().map(Value::Scalar).collect())
            }
            "list" => Value::List(match args.pos.first() {
                Some(v) => v.iter_items()?,
                None => Vec::new(),
            }),
            "tuple" => Value::Tuple(match args.pos.first() {
                Some(v) => v.iter_items()?,
                None => Vec::new(),
            }),
            "range" => {
                let a = first()?.int_arg("range")?;
                let (lo, hi) = match args.pos.get(1) {
                    Some(b) => (a, b.int_arg("range")?),
                    None => (0, a),
                };
                Value::List((lo..hi.max(lo)).map(int_val).collect())
            }
            "os._exit" => return Err(Ctrl::Exit(first()?.int_arg("status")? as i32)),
            "pandas.DataFrame" => Value::Frame(make_frame(args)?),
            "pandas.Series" => {
                let values = scalars(args.get(0, "data").cloned().unwrap_or(Value::List(Vec::new())))?;
                let name = match args.get(usize::MAX, "name") {
                    Some(v) => Some(v.to_str()),
                    None => None,
                };
                let index = (0..values.len() as i64).map(Scalar::Int).collect();
                Value::Series(Series::new(name, index, values))
            }
            "pandas.to_numeric" => {
                let coerce = match args.get(1, "errors") {
                    Some(v) => match v.str_arg("errors")?.as_str() {
                        "coerce" => true,
                        "raise" => false,
                        other => return Err(PyErr::new("ValueError", format!("invalid error value specified: {other}")).into()),
                    },
                    None => false,
                };
                match args.req(0, "arg", "to_numeric")? {
                    Value::Series(s) => Value::Series(to_numeric(&s, coerce)?),
                    Value::List(items) => {
                        let s = Series::new(None, (0..items.len() as i64).map(Scalar::Int).collect(), scalars(Value::List(items.clone()))?);
                        Value::List(to_numeric(&s, coerce)?.values.into_iter().map(Value::Scalar).collect())
                    }
                    v => {
                        let s = Series::new(None, vec![Scalar::Int(0)], vec![v.scalar()?.clone()]);
                        Value::Scalar(to_numeric(&s, coerce)?.values.remove(0))
                    }
                }
            }
            "pandas.isna" | "pandas.isnull" => match first()? {
                Value::Series(s) => Value::Series(s.with_values(s.values.iter().map(|v| Scalar::Bool(v.is_missing())).collect())),
                v => bool_val(v.scalar()?.is_missing()),
            },
            "math.floor" | "math.ceil" | "math.sqrt" => {
                let x = first()?
                    .scalar()?
                    .as_f64()
                    .ok_or_else(|| PyErr::new("TypeError", "must be real number"))?;
                match name {
                    "math.floor" => int_val(x.floor() as i64),
                    "math.ceil" => int_val(x.ceil() as i64),
                    _ => {
                        if x < 0.0 {
                            return Err(PyErr::new("ValueError", "math domain error").into());
                        }
                        Value::Scalar(Scalar::Float(x.sqrt()))
                    }
                }
            }
            other => return Err(PyErr::new("NotImplementedError", format!("{other}() is not available in this kernel")).into()),
        })
    }

    fn index(&mut self, obj: Value, key: Value) -> R<Value> {
        Ok(match (obj, key) {
            (Value::Frame(f), Value::Scalar(Scalar::Str(c))) => Value::Series(f.column(&c)?),
            (Value::Frame(f), Value::List(cols)) => {
                let mut out = Frame { columns: Vec::new(), index: f.index.clone(), data: Vec::new() };
                for c in cols {
                    let name = c.str_arg("column name")?;
                    let s = f.column(&name)?;
                    out.columns.push(name);
                    out.data.push(s.values);
                }
                Value::Frame(out)
            }
            (Value::Frame(f), Value::Series(mask)) => {
                let positions = mask_positions(&mask, f.nrows())?;
                Value::Frame(f.take_rows(&positions))
            }
            (Value::Frame(f), Value::Slice(lo, hi)) => {
                let positions = slice_positions(lo, hi, f.nrows());
                Value::Frame(f.take_rows(&positions))
            }
            (Value::Series(s), Value::Series(mask)) => {
                let positions = mask_positions(&mask, s.len())?;
                Value::Series(s.take(&positions))
            }
            (Value::Series(s), Value::Slice(lo, hi)) => {
                let positions = slice_positions(lo, hi, s.len());
                Value::Series(s.take(&positions))
            }
            (Value::Series(s), Value::Scalar(k)) => Value::Scalar(s.get_label(&k)?),
            (Value::ILoc(target), key) => match (*target, key) {
                (Value::Frame(f), Value::Scalar(k)) => {
                    let i = iloc_pos(&k, f.nrows())?;
                    Value::Series(f.row(i))
                }
                (Value::Frame(f), Value::Slice(lo, hi)) => Value::Frame(f.take_rows(&slice_positions(lo, hi, f.nrows()))),
                (Value::Frame(f), Value::List(rows)) => {
                    let mut positions = Vec::new();
                    for r in rows {
                        positions.push(iloc_pos(r.scalar()?, f.nrows())?);
                    }
                    Value::Frame(f.take_rows(&positions))
                }
                (Value::Frame(f), Value::Tuple(parts)) if parts.len() == 2 => {
                    let r = iloc_pos(parts[0].scalar()?, f.nrows())?;
                    let c = iloc_pos(parts[1].scalar()?, f.columns.len())?;
                    Value::Scalar(f.data[c][r].clone())
                }
                (Value::Series(s), Value::Scalar(k)) => {
                    let i = iloc_pos(&k, s.len())?;
                    Value::Scalar(s.values[i].clone())
                }
                (Value::Series(s), Value::Slice(lo, hi)) => Value::Series(s.take(&slice_positions(lo, hi, s.len()))),
                (_, k) => return Err(PyErr::new("TypeError", format!("cannot index by location with {}", k.type_name())).into()),
            },
            (Value::List(items), Value::Scalar(k)) | (Value::Tuple(items), Value::Scalar(k)) => {
                let i = norm_index(Value::Scalar(k).int_arg("list indices")?, items.len())?;
                items[i].clone()
            }
            (Value::List(items), Value::Slice(lo, hi)) => {
                Value::List(slice_positions(lo, hi, items.len()).into_iter().map(|p| items[p].clone()).collect())
            }
            (Value::Scalar(Scalar::Str(s)), Value::Scalar(k)) => {
                let chars: Vec<char> = s.chars().collect();
                let i = norm_index(Value::Scalar(k).int_arg("string indices")?, chars.len())?;
                str_val(chars[i].to_string())
            }
            (Value::Scalar(Scalar::Str(s)), Value::Slice(lo, hi)) => {
                let chars: Vec<char> = s.chars().collect();
                str_val(slice_positions(lo, hi, chars.len()).into_iter().map(|p| chars[p]).collect::<String>())
            }
            (Value::Dict(items), k) => {
                let p = dict_pos(&items, &k)?;
                items[p].1.clone()
            }
            (o, _) => return Err(PyErr::new("TypeError", format!("'{}' object is not subscriptable", o.type_name())).into()),
        })
    }
}

fn format_error(class: &str, msg: &str, line: Option<usize>, code: &str) -> String {
    let head = if msg.is_empty() { class.to_string() } else { format!("{class}: {msg}") };
    match line {
        Some(n) => {
            let text = code.lines().nth(n.saturating_sub(1)).unwrap_or("").trim();
            format!("{head} (line {n}: {text})")
        }
        None => head,
    }
}

fn is_exception(name: &str) -> bool {
    name.ends_with("Error") || name == "Exception"
}

fn no_attr(type_name: &str, attr: &str) -> PyErr {
    PyErr::new("AttributeError", format!("'{type_name}' object has no attribute '{attr}'"))
}

fn module_named(name: &str) -> Result<&'static str, PyErr> {
    let root = name.split('.').next().unwrap_or(name);
    MODULES
        .iter()
        .find(|(n, _)| *n == root)
        .map(|(_, m)| *m)
        .ok_or_else(|| PyErr::new("ModuleNotFoundError", format!("No module named '{name}'")))
}

fn module_attr(module: &'static str, name: &str) -> Result<Value, PyErr> {
    let builtin = |n: &str| Value::Builtin(format!("{module}.{n}"));
    Ok(match (module, name) {
        ("pandas", "DataFrame" | "Series" | "to_numeric" | "isna" | "isnull") => builtin(name),
        ("pandas" | "numpy", "nan" | "NaN") => Value::Scalar(Scalar::Float(f64::NAN)),
        ("os", "_exit") => builtin(name),
        ("sys", "stderr") => Value::Stream("stderr"),
        ("sys", "stdout") => Value::Stream("stdout"),
        ("math", "floor" | "ceil" | "sqrt") => builtin(name),
        ("math", "pi") => Value::Scalar(Scalar::Float(std::f64::consts::PI)),
        _ => return Err(PyErr::new("AttributeError", format!("module '{module}' has no attribute '{name}'"))),
    })
}

fn attribute(obj: Value, name: &str) -> Result<Value, PyErr> {
    Ok(match (&obj, name) {
        (Value::Module(m), _) => module_attr(m, name)?,
        (Value::Frame(f), "columns") => Value::List(f.columns.iter().map(|c| str_val(c.clone())).collect()),
        (Value::Frame(f), "index") => Value::List(f.index.iter().cloned().map(Value::Scalar).collect()),
        (Value::Frame(f), "shape") => Value::Tuple(vec![int_val(f.nrows() as i64), int_val(f.columns.len() as i64)]),
        (Value::Frame(f), "empty") => bool_val(f.nrows() == 0 || f.columns.is_empty()),
        (Value::Frame(_), "iloc") | (Value::Series(_), "iloc") => Value::ILoc(Box::new(obj)),
        (Value::Frame(f), col) if f.column_position(col).is_some() => Value::Series(f.column(col)?),
        (Value::Series(s), "str") => Value::StrAccessor(s.clone()),
        (Value::Series(s), "values") => Value::List(s.values.iter().cloned().map(Value::Scalar).collect()),
        (Value::Series(s), "index") => Value::List(s.index.iter().cloned().map(Value::Scalar).collect()),
        (Value::Series(s), "name") => s.name.clone().map_or(Value::none(), str_val),
        (Value::Series(s), "shape") => Value::Tuple(vec![int_val(s.len() as i64)]),
        (Value::Series(s), "empty") => bool_val(s.len() == 0),
        (Value::Series(s), "dtype") => str_val(s.dtype().name()),
        (Value::Exception(_, m), "args") => Value::Tuple(vec![str_val(m.clone())]),
        _ => return Err(no_attr(obj.type_name(), name)),
    })
}

fn scalars(v: Value) -> Result<Vec<Scalar>, PyErr> {
    match v {
        Value::Series(s) => Ok(s.values),
        other => other.iter_items()?.into_iter().map(|i| i.scalar().cloned()).collect(),
    }
}

fn make_frame(args: &Args) -> Result<Frame, PyErr> {
    let data = args.get(0, "data").cloned().unwrap_or(Value::List(Vec::new()));
    let columns = match args.get(1, "columns") {
        Some(Value::Scalar(Scalar::Null)) | None => None,
        Some(v) => Some(
            v.iter_items()?
                .iter()
                .map(Value::to_str)
                .collect::<Vec<_>>(),
        ),
    };
    match data {
        Value::Dict(items) => {
            let mut cols = Vec::new();
            let mut data = Vec::new();
            for (k, v) in items {
                cols.push(k.to_str());
                data.push(scalars(v)?);
            }
            let n = data.first().map_or(0, Vec::len);
            if data.iter().any(|c| c.len() != n) {
                return Err(PyErr::new("ValueError", "All arrays must be of the same length"));
            }
            Ok(Frame { columns: cols, index: (0..n as i64).map(Scalar::Int).collect(), data })
        }
        other => {
            let rows = other.iter_items()?;
            let width = match &columns {
                Some(c) => c.len(),
                None => rows.first().map_or(Ok(0), |r| r.iter_items().map(|v| v.len()))?,
            };
            let mut data: Vec<Vec<Scalar>> = vec![Vec::with_capacity(rows.len()); width];
            for row in &rows {
                let cells = row.iter_items()?;
                if cells.len() != width {
                    return Err(PyErr::new(
                        "ValueError",
                        format!("{width} columns passed, passed data had {} columns", cells.len()),
                    ));
                }
                for (c, cell) in cells.into_iter().enumerate() {
                    data[c].push(cell.scalar()?.clone());
                }
            }
            let columns = columns.unwrap_or_else(|| (0..width).map(|i| i.to_string()).collect());
            let data = data.into_iter().map(normalize_numeric).collect();
            Ok(Frame { columns, index: (0..rows.len() as i64).map(Scalar::Int).collect(), data })
        }
    }
}

fn column_values(f: &Frame, value: Value) -> Result<Vec<Scalar>, PyErr> {
    let n = f.nrows();
    match value {
        Value::Scalar(s) => Ok(vec![s; n]),
        Value::Series(s) => {
            if s.index == f.index {
                return Ok(s.values);
            }
            Ok(normalize_numeric(
                f.index
                    .iter()
                    .map(|label| s.get_label(label).unwrap_or(Scalar::Float(f64::NAN)))
                    .collect(),
            ))
        }
        other => {
            let items = scalars(other)?;
            if items.len() != n {
                return Err(PyErr::new(
                    "ValueError",
                    format!("Length of values ({}) does not match length of index ({n})", items.len()),
                ));
            }
            Ok(items)
        }
    }
}

fn mask_positions(mask: &Series, n: usize) -> Result<Vec<usize>, PyErr> {
    if mask.len() != n {
        return Err(PyErr::new(
            "ValueError",
            format!("Item wrong length {} instead of {n}.", mask.len()),
        ));
    }
    let mut out = Vec::new();
    for (i, v) in mask.values.iter().enumerate() {
        match v {
            Scalar::Bool(true) => out.push(i),
            Scalar::Bool(false) => {}
            _ => return Err(PyErr::new("KeyError", "boolean mask expected")),
        }
    }
    Ok(out)
}

fn slice_positions(lo: Option<i64>, hi: Option<i64>, n: usize) -> Vec<usize> {
    let clamp = |b: i64| -> usize {
        if b < 0 {
            (n as i64 + b).max(0) as usize
        } else {
            (b as usize).min(n)
        }
    };
    let lo = lo.map_or(0, clamp);
    let hi = hi.map_or(n, clamp);
    (lo..hi.max(lo)).collect()
}

fn norm_index(i: i64, n: usize) -> Result<usize, PyErr> {
    let j = if i < 0 { n as i64 + i } else { i };
    if j < 0 || j >= n as i64 {
        return Err(PyErr::new("IndexError", "list index out of range"));
    }
    Ok(j as usize)
}

fn iloc_pos(k: &Scalar, n: usize) -> Result<usize, PyErr> {
    let i = match k {
        Scalar::Int(i) => *i,
        other => return type_err(format!("Cannot index by location index with a non-integer key {}", other.repr())),
    };
    norm_index(i, n).map_err(|_| PyErr::new("IndexError", "single positional indexer is out-of-bounds"))
}

fn dict_pos(items: &[(Value, Value)], key: &Value) -> Result<usize, PyErr> {
    let k = key.scalar()?;
    items
        .iter()
        .position(|(ik, _)| matches!(ik, Value::Scalar(s) if s == k))
        .ok_or_else(|| PyErr::new("KeyError", k.repr()))
}

fn sort_scalars(items: &mut [Scalar]) -> Result<(), PyErr> {
    let mut failure = None;
    items.sort_by(|a, b| {
        a.compare(b).unwrap_or_else(|e| {
            failure.get_or_insert(e);
            std::cmp::Ordering::Equal
        })
    });
    failure.map_or(Ok(()), Err)
}

fn scalar_abs(v: &Scalar) -> Result<Scalar, PyErr> {
    Ok(match v {
        Scalar::Int(i) => Scalar::Int(i.abs()),
        Scalar::Bool(b) => Scalar::Int(*b as i64),
        Scalar::Float(x) => Scalar::Float(x.abs()),
        other => return type_err(format!("bad operand type for abs(): '{}'", other.type_name())),
    })
}

fn to_int(v: &Scalar) -> Result<Scalar, PyErr> {
    Ok(Scalar::Int(match v {
        Scalar::Int(i) => *i,
        Scalar::Bool(b) => *b as i64,
        Scalar::Float(x) if x.is_finite() => x.trunc() as i64,
        Scalar::Float(x) if x.is_nan() => return Err(PyErr::new("ValueError", "cannot convert float NaN to integer")),
        Scalar::Float(_) => return Err(PyErr::new("OverflowError", "cannot convert float infinity to integer")),
        Scalar::Str(s) => match parse_number(s) {
            Some(Scalar::Int(i)) => i,
            _ => return Err(PyErr::new("ValueError", format!("invalid literal for int() with base 10: {}", str_repr(s)))),
        },
        Scalar::Null => return type_err("int() argument must be a string, a bytes-like object or a real number, not 'NoneType'"),
    }))
}

fn to_float(v: &Scalar) -> Result<Scalar, PyErr> {
    Ok(Scalar::Float(match v {
        Scalar::Str(s) => match parse_number(s).and_then(|n| n.as_f64()) {
            Some(x) => x,
            None => return Err(PyErr::new("ValueError", format!("could not convert string to float: {}", str_repr(s)))),
        },
        Scalar::Null => return type_err("float() argument must be a string or a real number, not 'NoneType'"),
        other => other.as_f64().expect("numeric"),
    }))
}

fn round_scalar(v: &Scalar, digits: Option<i64>) -> Result<Scalar, PyErr> {
    match (v, digits) {
        (Scalar::Int(i), _) => Ok(Scalar::Int(*i)),
        (Scalar::Float(x), None) => Ok(Scalar::Int(x.round_ties_even() as i64)),
        (Scalar::Float(x), Some(d)) => {
            let f = 10f64.powi(d as i32);
            Ok(Scalar::Float((x * f).round_ties_even() / f))
        }
        (other, _) => type_err(format!("type {} doesn't define __round__ method", other.type_name())),
    }
}

fn to_numeric(s: &Series, coerce: bool) -> Result<Series, PyErr> {
    let mut out = Vec::with_capacity(s.len());
    for (i, v) in s.values.iter().enumerate() {
        out.push(match v {
            Scalar::Int(_) | Scalar::Float(_) => v.clone(),
            Scalar::Bool(b) => Scalar::Int(*b as i64),
            Scalar::Null => Scalar::Float(f64::NAN),
            Scalar::Str(text) => match parse_number(text) {
                Some(n) => n,
                None if coerce || text.trim().is_empty() => Scalar::Float(f64::NAN),
                None => {
                    return Err(PyErr::new(
                        "ValueError",
                        format!("Unable to parse string \"{text}\" at position {i}"),
                    ))
                }
            },
        });
    }
    Ok(s.with_values(normalize_numeric(out)))
}

fn map_series(s: &Series, f: impl Fn(&Scalar) -> Result<Scalar, PyErr>) -> Result<Series, PyErr> {
    Ok(s.with_values(s.values.iter().map(f).collect::<Result<_, _>>()?))
}

fn arith(op: &str, a: &Scalar, b: &Scalar) -> Result<Scalar, PyErr> {
    use Scalar::*;
    let unsupported = || {
        type_err(format!(
            "unsupported operand type(s) for {op}: '{}' and '{}'",
            a.type_name(),
            b.type_name()
        ))
    };
    match (a, b) {
        (Str(x), Str(y)) if op == "+" => return Ok(Str(format!("{x}{y}"))),
        (Str(x), Int(n)) | (Int(n), Str(x)) if op == "*" => return Ok(Str(x.repeat((*n).max(0) as usize))),
        (Str(_), _) | (_, Str(_)) | (Null, _) | (_, Null) => return unsupported(),
        _ => {}
    }
    let ints = match (a, b) {
        (Int(_) | Bool(_), Int(_) | Bool(_)) => Some((a.as_f64().unwrap() as i64, b.as_f64().unwrap() as i64)),
        _ => None,
    };
    let (x, y) = (a.as_f64().expect("numeric"), b.as_f64().expect("numeric"));
    let zero_div = |what: &str| Err(PyErr::new("ZeroDivisionError", what.to_string()));
    Ok(match op {
        "+" | "-" | "*" => match ints {
            Some((i, j)) => {
                let r = match op {
                    "+" => i.checked_add(j),
                    "-" => i.checked_sub(j),
                    _ => i.checked_mul(j),
                };
                r.map(Int).unwrap_or_else(|| Float(match op { "+" => x + y, "-" => x - y, _ => x * y }))
            }
            None => Float(match op { "+" => x + y, "-" => x - y, _ => x * y }),
        },
        "/" => {
            if y == 0.0 {
                return zero_div("division by zero");
            }
            Float(x / y)
        }
        "//" => match ints {
            Some((_, 0)) => return zero_div("integer division or modulo by zero"),
            Some((i, j)) => Int(i.div_euclid(j) - if (i.rem_euclid(j) != 0) && (j < 0) { 1 } else { 0 }),
            None if y == 0.0 => return zero_div("float floor division by zero"),
            None => Float((x / y).floor()),
        },
        "%" => match ints {
            Some((_, 0)) => return zero_div("integer modulo by zero"),
            Some((i, j)) => Int(((i % j) + j) % j),
            None if y == 0.0 => return zero_div("float modulo"),
            None => Float(x - y * (x / y).floor()),
        },
        "**" => match ints {
            Some((i, j)) if j >= 0 => i.checked_pow(j as u32).map(Int).unwrap_or(Float(x.powf(y))),
            _ => Float(x.powf(y)),
        },
        _ => return unsupported(),
    })
}

/// Elementwise arithmetic where missing values propagate as NaN.
fn series_arith(op: &str, a: &Scalar, b: &Scalar) -> Result<Scalar, PyErr> {
    if a.is_missing() || b.is_missing() {
        if matches!(a, Scalar::Str(_)) || matches!(b, Scalar::Str(_)) {
            return arith(op, a, b);
        }
        return Ok(Scalar::Float(f64::NAN));
    }
    match arith(op, a, b) {
        Err(e) if e.class == "ZeroDivisionError" => {
            let (x, y) = (a.as_f64().unwrap_or(0.0), b.as_f64().unwrap_or(0.0));
            Ok(Scalar::Float(if x == 0.0 || y.is_nan() { f64::NAN } else { x.signum() * f64::INFINITY }))
        }
        other => other,
    }
}

fn bitwise(op: &str, a: &Scalar, b: &Scalar) -> Result<Scalar, PyErr> {
    match (a, b) {
        (Scalar::Bool(x), Scalar::Bool(y)) => Ok(Scalar::Bool(match op {
            "&" => *x && *y,
            "|" => *x || *y,
            _ => *x ^ *y,
        })),
        (Scalar::Int(_) | Scalar::Bool(_), Scalar::Int(_) | Scalar::Bool(_)) => {
            let (x, y) = (a.as_f64().unwrap() as i64, b.as_f64().unwrap() as i64);
            Ok(Scalar::Int(match op {
                "&" => x & y,
                "|" => x | y,
                _ => x ^ y,
            }))
        }
        _ => type_err(format!(
            "unsupported operand type(s) for {op}: '{}' and '{}'",
            a.type_name(),
            b.type_name()
        )),
    }
}

fn zip_series(
    l: Value,
    r: Value,
    f: impl Fn(&Scalar, &Scalar) -> Result<Scalar, PyErr>,
) -> Result<Value, PyErr> {
    match (l, r) {
        (Value::Series(a), Value::Series(b)) => {
            if a.len() != b.len() {
                return Err(PyErr::new("ValueError", "Can only compare identically-labeled Series objects"));
            }
            let vals = a.values.iter().zip(&b.values).map(|(x, y)| f(x, y)).collect::<Result<_, _>>()?;
            Ok(Value::Series(a.with_values(normalize_numeric(vals))))
        }
        (Value::Series(a), Value::Scalar(y)) => {
            let vals = a.values.iter().map(|x| f(x, &y)).collect::<Result<_, _>>()?;
            Ok(Value::Series(a.with_values(normalize_numeric(vals))))
        }
        (Value::Scalar(x), Value::Series(b)) => {
            let vals = b.values.iter().map(|y| f(&x, y)).collect::<Result<_, _>>()?;
            Ok(Value::Series(b.with_values(normalize_numeric(vals))))
        }
        (a, b) => type_err(format!(
            "unsupported operand types: '{}' and '{}'",
            a.type_name(),
            b.type_name()
        )),
    }
}

fn binary(op: &str, l: Value, r: Value) -> Result<Value, PyErr> {
    let series = matches!(l, Value::Series(_)) || matches!(r, Value::Series(_));
    if series {
        return match op {
            "&" | "|" | "^" => zip_series(l, r, |a, b| bitwise(op, a, b)),
            _ => zip_series(l, r, |a, b| series_arith(op, a, b)),
        };
    }
    match (l, r) {
        (Value::Scalar(a), Value::Scalar(b)) => Ok(Value::Scalar(match op {
            "&" | "|" | "^" => bitwise(op, &a, &b)?,
            _ => arith(op, &a, &b)?,
        })),
        (Value::List(mut a), Value::List(b)) if op == "+" => {
            a.extend(b);
            Ok(Value::List(a))
        }
        (a, b) => type_err(format!(
            "unsupported operand type(s) for {op}: '{}' and '{}'",
            a.type_name(),
            b.type_name()
        )),
    }
}

fn unary(op: &str, v: Value) -> Result<Value, PyErr> {
    let f = |s: &Scalar| -> Result<Scalar, PyErr> {
        match (op, s) {
            ("-", Scalar::Int(i)) => Ok(Scalar::Int(-i)),
            ("-", Scalar::Float(x)) => Ok(Scalar::Float(-x)),
            ("-", Scalar::Bool(b)) => Ok(Scalar::Int(-(*b as i64))),
            ("+", Scalar::Int(_) | Scalar::Float(_)) => Ok(s.clone()),
            ("~", Scalar::Bool(b)) => Ok(Scalar::Bool(!b)),
            ("~", Scalar::Int(i)) => Ok(Scalar::Int(!i)),
            _ => type_err(format!("bad operand type for unary {op}: '{}'", s.type_name())),
        }
    };
    match v {
        Value::Series(s) => Ok(Value::Series(map_series(&s, f)?)),
        Value::Scalar(s) => {
            if op == "~" {
                if let Scalar::Bool(b) = s {
                    // Python's ~True is -2; numpy bools from masks invert.
                    return Ok(Value::Scalar(Scalar::Int(!(b as i64))));
                }
            }
            Ok(Value::Scalar(f(&s)?))
        }
        other => type_err(format!("bad operand type for unary {op}: '{}'", other.type_name())),
    }
}

fn scalar_compare(op: &str, a: &Scalar, b: &Scalar) -> Result<bool, PyErr> {
    Ok(match op {
        "==" => a == b,
        "!=" => a != b,
        _ => {
            if a.is_nan() || b.is_nan() {
                return Ok(false);
            }
            let ord = a.compare(b).map_err(|_| {
                PyErr::new(
                    "TypeError",
                    format!(
                        "'{op}' not supported between instances of '{}' and '{}'",
                        a.type_name(),
                        b.type_name()
                    ),
                )
            })?;
            match op {
                "<" => ord.is_lt(),
                "<=" => ord.is_le(),
                ">" => ord.is_gt(),
                _ => ord.is_ge(),
            }
        }
    })
}

fn contains(container: &Value, item: &Value) -> Result<bool, PyErr> {
    Ok(match container {
        Value::List(items) | Value::Tuple(items) => {
            let s = item.scalar()?;
            items.iter().any(|i| matches!(i, Value::Scalar(x) if x == s))
        }
        Value::Dict(items) => dict_pos(items, item).is_ok(),
        Value::Scalar(Scalar::Str(h)) => h.contains(&item.str_arg("'in <string>' requires string as left operand")?),
        Value::Series(s) => s.index.contains(item.scalar()?),
        Value::Frame(f) => f.column_position(&item.to_str()).is_some(),
        other => return type_err(format!("argument of type '{}' is not iterable", other.type_name())),
    })
}

fn compare(op: &str, l: Value, r: Value) -> Result<Value, PyErr> {
    match op {
        "in" => return Ok(bool_val(contains(&r, &l)?)),
        "not in" => return Ok(bool_val(!contains(&r, &l)?)),
        "is" | "is not" => {
            let same = match (&l, &r) {
                (Value::Scalar(Scalar::Null), Value::Scalar(Scalar::Null)) => true,
                (Value::Scalar(Scalar::Bool(a)), Value::Scalar(Scalar::Bool(b))) => a == b,
                _ => false,
            };
            return Ok(bool_val(same == (op == "is")));
        }
        _ => {}
    }
    if matches!(l, Value::Series(_)) || matches!(r, Value::Series(_)) {
        return zip_series(l, r, |a, b| Ok(Scalar::Bool(scalar_compare(op, a, b)?)));
    }
    match (&l, &r) {
        (Value::Scalar(a), Value::Scalar(b)) => Ok(bool_val(scalar_compare(op, a, b)?)),
        (Value::List(a), Value::List(b)) | (Value::Tuple(a), Value::Tuple(b)) if op == "==" || op == "!=" => {
            let eq = a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| matches!((x, y), (Value::Scalar(p), Value::Scalar(q)) if p == q));
            Ok(bool_val(eq == (op == "==")))
        }
        _ if op == "==" => Ok(bool_val(false)),
        _ if op == "!=" => Ok(bool_val(true)),
        _ => type_err(format!(
            "'{op}' not supported between instances of '{}' and '{}'",
            l.type_name(),
            r.type_name()
        )),
    }
}

fn str_method(s: &str, method: &str, args: &Args) -> Result<Value, PyErr> {
    let arg = |i: usize, name: &str| -> Result<String, PyErr> { args.req(i, name, method)?.str_arg(name) };
    let max_args = match method {
        "lower" | "upper" | "title" | "isdigit" => 0,
        "strip" | "lstrip" | "rstrip" | "join" => 1,
        "split" => 2,
        "replace" | "startswith" | "endswith" => 3,
        _ => usize::MAX,
    };
    if args.pos.len() > max_args {
        return type_err(match max_args {
            0 => format!("str.{method}() takes no arguments ({} given)", args.pos.len()),
            n => format!("{method}() takes at most {n} arguments ({} given)", args.pos.len()),
        });
    }
    let chars = || -> Result<Option<String>, PyErr> {
        match args.get(0, "chars") {
            Some(Value::Scalar(Scalar::Null)) | None => Ok(None),
            Some(v) => v.str_arg("chars").map(Some),
        }
    };
    let strip = |left: bool, right: bool| -> Result<Value, PyErr> {
        let set = chars()?;
        let hit = |c: char| set.as_deref().map_or(c.is_whitespace(), |set| set.contains(c));
        let t = if left { s.trim_start_matches(hit) } else { s };
        Ok(str_val(if right { t.trim_end_matches(hit) } else { t }))
    };
    Ok(match method {
        "lower" => str_val(s.to_lowercase()),
        "upper" => str_val(s.to_uppercase()),
        "strip" => strip(true, true)?,
        "lstrip" => strip(true, false)?,
        "rstrip" => strip(false, true)?,
        "title" => str_val(
            s.split(' ')
                .map(|w| {
                    let mut c = w.chars();
                    match c.next() {
                        Some(f) => f.to_uppercase().collect::<String>() + &c.as_str().to_lowercase(),
                        None => String::new(),
                    }
                })
                .collect::<Vec<_>>()
                .join(" "),
        ),
        "replace" => str_val(s.replace(&arg(0, "old")?, &arg(1, "new")?)),
        "startswith" => bool_val(s.starts_with(&arg(0, "prefix")?)),
        "endswith" => bool_val(s.ends_with(&arg(0, "suffix")?)),
        "isdigit" => bool_val(!s.is_empty() && s.chars().all(|c| c.is_ascii_digit())),
        "split" => {
            let parts: Vec<Value> = match args.get(0, "sep") {
                Some(Value::Scalar(Scalar::Null)) | None => s.split_whitespace().map(str_val).collect(),
                Some(v) => s.split(v.str_arg("sep")?.as_str()).map(str_val).collect(),
            };
            Value::List(parts)
        }
        "join" => {
            let items = args.req(0, "iterable", "join")?.iter_items()?;
            let parts = items.iter().map(|i| i.str_arg("sequence item")).collect::<Result<Vec<_>, _>>()?;
            str_val(parts.join(s))
        }
        _ => return Err(no_attr("str", method)),
    })
}

fn list_method(items: Vec<Value>, method: &str, args: &Args) -> Result<Value, PyErr> {
    Ok(match method {
        "tolist" => Value::List(items),
        "index" => {
            let target = args.req(0, "value", "index")?.scalar()?.clone();
            let p = items
                .iter()
                .position(|i| matches!(i, Value::Scalar(s) if *s == target))
                .ok_or_else(|| PyErr::new("ValueError", format!("{} is not in list", target.repr())))?;
            int_val(p as i64)
        }
        "count" => {
            let target = args.req(0, "value", "count")?.scalar()?.clone();
            int_val(items.iter().filter(|i| matches!(i, Value::Scalar(s) if *s == target)).count() as i64)
        }
        _ => return Err(no_attr("list", method)),
    })
}

fn non_missing(s: &Series) -> Vec<Scalar> {
    s.values.iter().filter(|v| !v.is_missing()).cloned().collect()
}

fn reduce_extreme(s: &Series, max: bool) -> Result<Scalar, PyErr> {
    let vals = non_missing(s);
    let Some(first) = vals.first() else {
        return Ok(Scalar::Float(f64::NAN));
    };
    let mut best = first.clone();
    for v in &vals[1..] {
        let ord = v.compare(&best)?;
        if (max && ord.is_gt()) || (!max && ord.is_lt()) {
            best = v.clone();
        }
    }
    Ok(best)
}

fn numeric_values(s: &Series, what: &str) -> Result<Vec<f64>, PyErr> {
    non_missing(s)
        .iter()
        .map(|v| match v {
            Scalar::Str(t) => type_err(format!("Could not convert string '{t}' to numeric for {what}")),
            other => Ok(other.as_f64().expect("numeric")),
        })
        .collect()
}

fn cast(s: &Series, dtype: &Value) -> Result<Series, PyErr> {
    let name = match dtype {
        Value::Builtin(b) => b.clone(),
        Value::Scalar(Scalar::Str(t)) => t.clone(),
        other => return type_err(format!("data type '{}' not understood", other.to_str())),
    };
    let f: fn(&Scalar) -> Result<Scalar, PyErr> = match name.as_str() {
        "int" | "int64" | "int32" => |v| match v {
            Scalar::Float(x) if !x.is_finite() => Err(PyErr::new(
                "IntCastingNaNError",
                "Cannot convert non-finite values (NA or inf) to integer",
            )),
            other => to_int(other),
        },
        "float" | "float64" => |v| match v {
            Scalar::Null => Ok(Scalar::Float(f64::NAN)),
            other => to_float(other),
        },
        "str" | "object" => |v| Ok(Scalar::Str(v.to_str())),
        "bool" => |v| Ok(Scalar::Bool(v.truthy())),
        other => return type_err(format!("data type '{other}' not understood")),
    };
    map_series(s, f)
}

fn series_method(s: Series, method: &str, args: &Args) -> Result<Value, PyErr> {
    Ok(match method {
        "max" => Value::Scalar(reduce_extreme(&s, true)?),
        "min" => Value::Scalar(reduce_extreme(&s, false)?),
        "sum" => {
            let vals = non_missing(&s);
            if vals.iter().all(|v| matches!(v, Scalar::Str(_))) && !vals.is_empty() {
                str_val(vals.iter().map(Scalar::to_str).collect::<String>())
            } else {
                let mut acc = Scalar::Int(0);
                for v in &vals {
                    acc = arith("+", &acc, v)?;
                }
                Value::Scalar(acc)
            }
        }
        "mean" | "median" => {
            let mut vals = numeric_values(&s, method)?;
            if vals.is_empty() {
                return Ok(Value::Scalar(Scalar::Float(f64::NAN)));
            }
            let x = if method == "mean" {
                vals.iter().sum::<f64>() / vals.len() as f64
            } else {
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                let m = vals.len() / 2;
                if vals.len() % 2 == 1 { vals[m] } else { (vals[m - 1] + vals[m]) / 2.0 }
            };
            Value::Scalar(Scalar::Float(x))
        }
        "count" => int_val(non_missing(&s).len() as i64),
        "nunique" => {
            let mut seen: Vec<Scalar> = Vec::new();
            for v in non_missing(&s) {
                if !seen.contains(&v) {
                    seen.push(v);
                }
            }
            int_val(seen.len() as i64)
        }
        "unique" => {
            let mut seen: Vec<Scalar> = Vec::new();
            for v in &s.values {
                if !seen.contains(v) {
                    seen.push(v.clone());
                }
            }
            Value::List(seen.into_iter().map(Value::Scalar).collect())
        }
        "tolist" | "to_list" => Value::List(s.values.into_iter().map(Value::Scalar).collect()),
        "item" => {
            if s.len() != 1 {
                return Err(PyErr::new("ValueError", "can only convert an array of size 1 to a Python scalar"));
            }
            Value::Scalar(s.values[0].clone())
        }
        "any" => bool_val(s.values.iter().any(Scalar::truthy)),
        "all" => bool_val(s.values.iter().all(Scalar::truthy)),
        "abs" => Value::Series(map_series(&s, scalar_abs)?),
        "round" => {
            let d = match args.get(0, "decimals") {
                Some(v) => v.int_arg("decimals")?,
                None => 0,
            };
            Value::Series(map_series(&s, |v| match v {
                Scalar::Float(x) if x.is_nan() => Ok(v.clone()),
                other => round_scalar(other, Some(d)).map(|r| match (other, r) {
                    (Scalar::Float(_), Scalar::Int(i)) => Scalar::Float(i as f64),
                    (_, r) => r,
                }),
            })?)
        }
        "astype" => Value::Series(cast(&s, args.req(0, "dtype", "astype")?)?),
        "isin" => {
            let pool = scalars(args.req(0, "values", "isin")?.clone())?;
            Value::Series(s.with_values(s.values.iter().map(|v| Scalar::Bool(pool.contains(v))).collect()))
        }
        "isna" | "isnull" => Value::Series(s.with_values(s.values.iter().map(|v| Scalar::Bool(v.is_missing())).collect())),
        "notna" | "notnull" => Value::Series(s.with_values(s.values.iter().map(|v| Scalar::Bool(!v.is_missing())).collect())),
        "fillna" => {
            let fill = args.req(0, "value", "fillna")?.scalar()?.clone();
            Value::Series(s.with_values(normalize_numeric(
                s.values.iter().map(|v| if v.is_missing() { fill.clone() } else { v.clone() }).collect(),
            )))
        }
        "dropna" => {
            let keep: Vec<usize> = (0..s.len()).filter(|&i| !s.values[i].is_missing()).collect();
            Value::Series(s.take(&keep))
        }
        "between" => {
            let lo = args.req(0, "left", "between")?.scalar()?.clone();
            let hi = args.req(1, "right", "between")?.scalar()?.clone();
            let vals = s
                .values
                .iter()
                .map(|v| Ok(Scalar::Bool(scalar_compare(">=", v, &lo)? && scalar_compare("<=", v, &hi)?)))
                .collect::<Result<_, PyErr>>()?;
            Value::Series(s.with_values(vals))
        }
        "idxmax" | "idxmin" => {
            let target = reduce_extreme(&s, method == "idxmax")?;
            let p = s
                .values
                .iter()
                .position(|v| *v == target)
                .ok_or_else(|| PyErr::new("ValueError", format!("attempt to get {method} of an empty sequence")))?;
            Value::Scalar(s.index[p].clone())
        }
        "head" | "tail" => {
            let n = match args.get(0, "n") {
                Some(v) => v.int_arg("n")?,
                None => 5,
            };
            let positions = head_tail(s.len(), n, method == "head");
            Value::Series(s.take(&positions))
        }
        "sort_values" => {
            let ascending = args.flag(usize::MAX, "ascending", true)?;
            let order = sorted_positions(&[&s.values], &[ascending])?;
            Value::Series(s.take(&order))
        }
        "reset_index" => {
            let n = s.len() as i64;
            Value::Series(Series::new(s.name.clone(), (0..n).map(Scalar::Int).collect(), s.values))
        }
        "copy" => Value::Series(s),
        _ => return Err(no_attr("Series", method)),
    })
}

fn str_accessor_method(s: Series, method: &str, args: &Args) -> Result<Value, PyErr> {
    let arg = |i: usize, name: &str| -> Result<String, PyErr> { args.req(i, name, method)?.str_arg(name) };
    let map = |f: &dyn Fn(&str) -> Result<Scalar, PyErr>| -> Result<Value, PyErr> {
        let vals = s
            .values
            .iter()
            .map(|v| match v {
                Scalar::Str(t) => f(t),
                _ => Ok(Scalar::Float(f64::NAN)),
            })
            .collect::<Result<_, _>>()?;
        Ok(Value::Series(s.with_values(vals)))
    };
    if !s.values.iter().any(|v| matches!(v, Scalar::Str(_))) && !s.values.is_empty() {
        return Err(PyErr::new("AttributeError", "Can only use .str accessor with string values!"));
    }
    match method {
        "replace" => {
            let (old, new) = (arg(0, "pat")?, arg(1, "repl")?);
            map(&|t| Ok(Scalar::Str(t.replace(&old, &new))))
        }
        "contains" => {
            let pat = arg(0, "pat")?;
            let case = args.flag(1, "case", true)?;
            let na = args.get(usize::MAX, "na").map(|v| v.truthy()).transpose()?;
            let vals = s
                .values
                .iter()
                .map(|v| match v {
                    Scalar::Str(t) => Scalar::Bool(if case {
                        t.contains(&pat)
                    } else {
                        t.to_lowercase().contains(&pat.to_lowercase())
                    }),
                    _ => na.map_or(Scalar::Float(f64::NAN), Scalar::Bool),
                })
                .collect();
            Ok(Value::Series(s.with_values(vals)))
        }
        "startswith" => {
            let p = arg(0, "pat")?;
            map(&|t| Ok(Scalar::Bool(t.starts_with(&p))))
        }
        "endswith" => {
            let p = arg(0, "pat")?;
            map(&|t| Ok(Scalar::Bool(t.ends_with(&p))))
        }
        "strip" => map(&|t| Ok(Scalar::Str(t.trim().to_string()))),
        "lower" => map(&|t| Ok(Scalar::Str(t.to_lowercase()))),
        "upper" => map(&|t| Ok(Scalar::Str(t.to_uppercase()))),
        "len" => map(&|t| Ok(Scalar::Int(t.chars().count() as i64))),
        _ => Err(no_attr("StringMethods", method)),
    }
}

fn head_tail(n: usize, k: i64, head: bool) -> Vec<usize> {
    let k = if k < 0 { (n as i64 + k).max(0) as usize } else { (k as usize).min(n) };
    if head {
        (0..k).collect()
    } else {
        (n - k..n).collect()
    }
}

/// Stable multi-key sort; missing values go last.
fn sorted_positions(keys: &[&Vec<Scalar>], ascending: &[bool]) -> Result<Vec<usize>, PyErr> {
    let n = keys.first().map_or(0, |k| k.len());
    let mut order: Vec<usize> = (0..n).collect();
    let mut failure = None;
    order.sort_by(|&a, &b| {
        for (key, asc) in keys.iter().zip(ascending) {
            let (x, y) = (&key[a], &key[b]);
            let ord = match (x.is_missing(), y.is_missing()) {
                (true, true) => std::cmp::Ordering::Equal,
                (true, false) => return std::cmp::Ordering::Greater,
                (false, true) => return std::cmp::Ordering::Less,
                _ => match x.compare(y) {
                    Ok(o) => if *asc { o } else { o.reverse() },
                    Err(e) => {
                        failure.get_or_insert(e);
                        std::cmp::Ordering::Equal
                    }
                },
            };
            if ord.is_ne() {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    });
    failure.map_or(Ok(order), Err)
}

fn str_list(v: &Value) -> Result<Vec<String>, PyErr> {
    match v {
        Value::Scalar(Scalar::Str(s)) => Ok(vec![s.clone()]),
        other => other.iter_items()?.iter().map(|i| i.str_arg("label")).collect(),
    }
}

fn frame_method(f: Frame, method: &str, args: &Args) -> Result<Value, PyErr> {
    Ok(match method {
        "head" | "tail" => {
            let n = match args.get(0, "n") {
                Some(v) => v.int_arg("n")?,
                None => 5,
            };
            Value::Frame(f.take_rows(&head_tail(f.nrows(), n, method == "head")))
        }
        "copy" => Value::Frame(f),
        "reset_index" => {
            let n = f.nrows() as i64;
            let mut out = f;
            if !args.flag(usize::MAX, "drop", false)? {
                out.columns.insert(0, "index".into());
                out.data.insert(0, out.index.clone());
            }
            out.index = (0..n).map(Scalar::Int).collect();
            Value::Frame(out)
        }
        "sort_values" => {
            let by = str_list(args.req(0, "by", "sort_values")?)?;
            let asc: Vec<bool> = match args.get(usize::MAX, "ascending") {
                Some(Value::List(items)) => items.iter().map(Value::truthy).collect::<Result<_, _>>()?,
                Some(v) => vec![v.truthy()?; by.len()],
                None => vec![true; by.len()],
            };
            let cols: Vec<Series> = by.iter().map(|c| f.column(c)).collect::<Result<_, _>>()?;
            let keys: Vec<&Vec<Scalar>> = cols.iter().map(|c| &c.values).collect();
            let order = sorted_positions(&keys, &asc)?;
            Value::Frame(f.take_rows(&order))
        }
        "nlargest" | "nsmallest" => {
            let n = args.req(0, "n", method)?.int_arg("n")?;
            let col = f.column(&args.req(1, "columns", method)?.str_arg("columns")?)?;
            let order = sorted_positions(&[&col.values], &[method == "nsmallest"])?;
            let k = (n.max(0) as usize).min(order.len());
            Value::Frame(f.take_rows(&order[..k]))
        }
        "drop" => {
            let columns = match (args.get(usize::MAX, "columns"), args.get(usize::MAX, "axis"), args.pos.first()) {
                (Some(c), _, _) => Some(str_list(c)?),
                (None, Some(Value::Scalar(Scalar::Int(1))), Some(l)) => Some(str_list(l)?),
                (None, Some(Value::Scalar(Scalar::Str(a))), Some(l)) if a == "columns" => Some(str_list(l)?),
                _ => None,
            };
            let mut out = f;
            if let Some(cols) = columns {
                for c in cols {
                    let p = out
                        .column_position(&c)
                        .ok_or_else(|| PyErr::new("KeyError", format!("\"['{c}'] not found in axis\"")))?;
                    out.columns.remove(p);
                    out.data.remove(p);
                }
                return Ok(Value::Frame(out));
            }
            let labels = scalars(
                args.get(usize::MAX, "index")
                    .or_else(|| args.pos.first())
                    .cloned()
                    .ok_or_else(|| PyErr::new("ValueError", "Need to specify at least one of 'labels', 'index' or 'columns'"))?,
            )
            .or_else(|_| args.get(usize::MAX, "index").or(args.pos.first()).unwrap().scalar().map(|s| vec![s.clone()]))?;
            for l in &labels {
                if !out.index.contains(l) {
                    return Err(PyErr::new("KeyError", format!("[{}] not found in axis", l.repr())));
                }
            }
            let keep: Vec<usize> = (0..out.nrows()).filter(|&i| !labels.contains(&out.index[i])).collect();
            Value::Frame(out.take_rows(&keep))
        }
        "rename" => {
            let mapping = match args.get(usize::MAX, "columns") {
                Some(Value::Dict(items)) => items.clone(),
                _ => return Err(PyErr::new("TypeError", "rename() needs a columns={...} mapping")),
            };
            let mut out = f;
            for c in out.columns.iter_mut() {
                if let Some((_, v)) = mapping.iter().find(|(k, _)| k.to_str() == *c) {
                    *c = v.to_str();
                }
            }
            Value::Frame(out)
        }
        "dropna" => {
            let subset = match args.get(usize::MAX, "subset") {
                Some(v) => str_list(v)?,
                None => f.columns.clone(),
            };
            let cols: Vec<usize> = subset
                .iter()
                .map(|c| f.column_position(c).ok_or_else(|| PyErr::new("KeyError", str_repr(c))))
                .collect::<Result<_, _>>()?;
            let keep: Vec<usize> = (0..f.nrows()).filter(|&r| cols.iter().all(|&c| !f.data[c][r].is_missing())).collect();
            Value::Frame(f.take_rows(&keep))
        }
        "count" | "max" | "min" | "sum" | "mean" => {
            let mut values = Vec::new();
            for c in &f.columns {
                let s = f.column(c)?;
                values.push(match series_method(s, method, args)? {
                    Value::Scalar(v) => v,
                    other => return type_err(format!("unexpected {}", other.type_name())),
                });
            }
            Value::Series(Series::new(None, f.columns.iter().map(|c| Scalar::Str(c.clone())).collect(), values))
        }
        _ => return Err(no_attr("DataFrame", method)),
    })
}

pub fn dtype_of(values: &[Scalar]) -> Dtype {
    infer_dtype(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(interp: &mut Interp, code: &str) -> CellResult {
        interp.run_cell(code)
    }

    const INIT: &str = "import pandas as pd\ndf = pd.DataFrame(data=[[\"1\",\"United States\",\"40\"],[\"2\",\"China\",\"40\"],[\"Totals\",\"\",\"80\"]], columns=[\"Rank\",\"NOC\",\"Gold\"])";

    #[test]
    fn frame_workflow() {
        let mut i = Interp::new(None);
        assert_eq!(run(&mut i, INIT).end, CellEnd::Ok);
        let r = run(&mut i, "df = df[df['Rank'] != 'Totals']\ndf['Gold'] = pd.to_numeric(df['Gold'])\nprint(df['Gold'].sum())");
        assert_eq!(r.end, CellEnd::Ok);
        assert_eq!(r.stdout, "80\n");
        let r = run(&mut i, "top = df.sort_values('Gold', ascending=False).iloc[0]['NOC']\nprint(top, len(df))");
        assert_eq!(r.stdout, "United States 2\n");
        let f = i.frame("df").unwrap();
        assert_eq!(f.cell_rows(), vec![vec!["1", "United States", "40"], vec!["2", "China", "40"]]);
    }

    #[test]
    fn errors_are_formatted() {
        let mut i = Interp::new(None);
        let r = run(&mut i, "# c\nx = 1/0");
        assert_eq!(r.end, CellEnd::Err("ZeroDivisionError: division by zero (line 2: x = 1/0)".into()));
        let r = run(&mut i, "print(nope)");
        assert_eq!(r.end, CellEnd::Err("NameError: name 'nope' is not defined (line 1: print(nope))".into()));
        let r = run(&mut i, "x = (");
        assert!(matches!(r.end, CellEnd::Err(ref e) if e.starts_with("SyntaxError")));
        let r = run(&mut i, "raise ValueError(\"bad\")");
        assert_eq!(r.end, CellEnd::Err("ValueError: bad (line 1: raise ValueError(\"bad\"))".into()));
        run(&mut i, INIT);
        let r = run(&mut i, "df['Gold'] = pd.to_numeric(df['NOC'])");
        assert!(matches!(r.end, CellEnd::Err(ref e) if e.starts_with("ValueError: Unable to parse string \"United States\" at position 0")));
    }

    #[test]
    fn partial_stdout_survives_errors() {
        let mut i = Interp::new(None);
        let r = run(&mut i, "print('a')\nraise KeyError('k')");
        assert_eq!(r.stdout, "a\n");
        assert!(matches!(r.end, CellEnd::Err(_)));
    }

    #[test]
    fn exit_and_stderr() {
        let mut i = Interp::new(None);
        assert_eq!(run(&mut i, "import os\nos._exit(3)").end, CellEnd::Exit(3));
        let r = run(&mut i, "import sys\nsys.stderr.write('warn\\n')\nprint('x', file=sys.stderr)");
        assert_eq!(r.end, CellEnd::Ok);
        assert_eq!(r.stdout, "");
        assert_eq!(r.stderr, "warn\nx\n");
    }

    #[test]
    fn cancel_stops_loops() {
        let flag = Arc::new(AtomicBool::new(true));
        let mut i = Interp::new(Some(flag));
        assert_eq!(run(&mut i, "while True:\n    pass").end, CellEnd::Cancelled);
    }

    #[test]
    fn python_semantics() {
        let mut i = Interp::new(None);
        let r = run(&mut i, "print(7 // 2, -7 // 2, 7 % 3, 2 ** 10, 1 / 4, round(2.5), round(3.14159, 2))");
        assert_eq!(r.stdout, "3 -4 1 1024 0.25 2 3.14\n");
        let r = run(&mut i, "x = [3, 1, 2]\nx.append(0)\nprint(sorted(x), x[-1], 'a' in ['a'], max(x))");
        assert_eq!(r.stdout, "[0, 1, 2, 3] 0 True 3\n");
        let r = run(&mut i, "print('$1,200.'.strip('$.'), ' a '.strip(), 'a,b'.split(','))");
        assert_eq!(r.stdout, "1,200 a ['a', 'b']\n");
        let r = run(&mut i, "x = 3\nprint('big' if x > 2 else 'small', 1 if x < 0 else 2 if x < 5 else 3)");
        assert_eq!(r.stdout, "big 2\n");
        let r = run(&mut i, "print('a'.upper(1))");
        assert_eq!(r.end, CellEnd::Err("TypeError: str.upper() takes no arguments (1 given) (line 1: print('a'.upper(1)))".into()));
        let r = run(&mut i, "t = 0\nfor k in range(4):\n    if k == 2:\n        continue\n    t += k\nprint(t)");
        assert_eq!(r.stdout, "4\n");
        let r = run(&mut i, "s = 'A, B'\nprint(s.lower().split(', '))");
        assert_eq!(r.stdout, "['a', 'b']\n");
    }

    #[test]
    fn masks_and_str_accessor() {
        let mut i = Interp::new(None);
        run(&mut i, INIT);
        let r = run(
            &mut i,
            "df['Gold'] = df['Gold'].str.replace('0', '5').astype(int)\nm = (df['Gold'] >= 45) & df['NOC'].str.contains('china', case=False)\nprint(df[m]['NOC'].tolist())\nprint(df['Gold'].mean())",
        );
        assert_eq!(r.end, CellEnd::Ok);
        assert_eq!(r.stdout, "['China']\n58.333333333333336\n");
        let r = run(&mut i, "if df['Gold'] > 1:\n    pass");
        assert!(matches!(r.end, CellEnd::Err(ref e) if e.starts_with("ValueError: The truth value of a Series is ambiguous")));
    }

    #[test]
    fn inplace_and_delete() {
        let mut i = Interp::new(None);
        run(&mut i, INIT);
        assert_eq!(run(&mut i, "df.drop(columns=['Rank'], inplace=True)").end, CellEnd::Ok);
        assert_eq!(i.frame("df").unwrap().columns, ["NOC", "Gold"]);
        run(&mut i, "del df['Gold']");
        assert_eq!(i.frame("df").unwrap().columns, ["NOC"]);
        run(&mut i, "del df");
        assert!(i.frame("df").is_none());
    }
}
