//! Lexer and parser for the Python subset the simulated kernel runs.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    Op(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(n) => write!(f, "{n}"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Float(x) => write!(f, "{x}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Op(o) => write!(f, "{o}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Line {
    pub number: usize,
    pub indent: usize,
    pub tokens: Vec<Tok>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, SyntaxError> {
    Err(SyntaxError { line, msg: msg.into() })
}

const OPS: [&str; 37] = [
    "**=", "//=", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "**", "//", "->", "(", ")", "[",
    "]", "{", "}", ",", ":", ".", ";", "+", "-", "*", "/", "%", "<", ">", "=", "&", "|", "~", "^",
    "@", "!",
];

pub fn lex(src: &str) -> Result<Vec<Line>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut lines = Vec::new();
    let mut i = 0;
    let mut line_no = 1;
    let mut depth = 0usize;
    let mut current: Option<Line> = None;
    let mut at_line_start = true;

    while i < chars.len() {
        let c = chars[i];
        if at_line_start && depth == 0 && current.is_none() {
            let mut indent = 0;
            while i < chars.len() && (chars[i] == ' ' || chars[i] == '\t') {
                indent += if chars[i] == '\t' { 8 } else { 1 };
                i += 1;
            }
            at_line_start = false;
            current = Some(Line {
                number: line_no,
                indent,
                tokens: Vec::new(),
            });
            continue;
        }
        match c {
            '\n' => {
                line_no += 1;
                i += 1;
                if depth == 0 {
                    if let Some(l) = current.take() {
                        if !l.tokens.is_empty() {
                            lines.push(l);
                        }
                    }
                    at_line_start = true;
                }
            }
            ' ' | '\t' | '\r' => i += 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '\\' if chars.get(i + 1) == Some(&'\n') => {
                i += 2;
                line_no += 1;
            }
            '"' | '\'' => {
                let (s, next, newlines) = lex_string(&chars, i, false, line_no)?;
                push(&mut current, Tok::Str(s));
                line_no += newlines;
                i = next;
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.' || chars[i] == '_') {
                    if (chars[i] == 'e' || chars[i] == 'E') && matches!(chars.get(i + 1), Some('+') | Some('-')) {
                        i += 1;
                    }
                    i += 1;
                }
                let text: String = chars[start..i].iter().filter(|c| **c != '_').collect();
                let tok = if text.contains(['.', 'e', 'E']) {
                    text.parse::<f64>().map(Tok::Float)
                        .or_else(|_| err(line_no, format!("invalid number literal {text}")))?
                } else {
                    text.parse::<i64>().map(Tok::Int)
                        .or_else(|_| err(line_no, format!("invalid number literal {text}")))?
                };
                push(&mut current, tok);
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                let prefix = name.to_ascii_lowercase();
                if matches!(chars.get(i), Some('"') | Some('\'')) && (prefix == "r" || prefix == "f" || prefix == "rf" || prefix == "fr") {
                    if prefix.contains('f') {
                        return err(line_no, "f-strings are not supported");
                    }
                    let (s, next, newlines) = lex_string(&chars, i, true, line_no)?;
                    push(&mut current, Tok::Str(s));
                    line_no += newlines;
                    i = next;
                } else {
                    push(&mut current, Tok::Name(name));
                }
            }
            _ => {
                let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
                let op = OPS
                    .iter()
                    .find(|op| rest.starts_with(**op))
                    .ok_or_else(|| SyntaxError {
                        line: line_no,
                        msg: format!("invalid character '{c}'"),
                    })?;
                match *op {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => {
                        depth = depth
                            .checked_sub(1)
                            .ok_or_else(|| SyntaxError { line: line_no, msg: format!("unmatched '{op}'") })?
                    }
                    _ => {}
                }
                push(&mut current, Tok::Op(op));
                i += op.len();
            }
        }
    }
    if depth != 0 {
        return err(line_no, "unexpected EOF while parsing");
    }
    if let Some(l) = current.take() {
        if !l.tokens.is_empty() {
            lines.push(l);
        }
    }
    Ok(lines)
}

fn push(current: &mut Option<Line>, tok: Tok) {
    if let Some(l) = current {
        l.tokens.push(tok);
    }
}

fn lex_string(
    chars: &[char],
    start: usize,
    raw: bool,
    line: usize,
) -> Result<(String, usize, usize), SyntaxError> {
    let quote = chars[start];
    let triple = chars.get(start + 1) == Some(&quote) && chars.get(start + 2) == Some(&quote);
    let mut i = start + if triple { 3 } else { 1 };
    let mut out = String::new();
    let mut newlines = 0;
    loop {
        let Some(&c) = chars.get(i) else {
            return err(line, "unterminated string literal");
        };
        if c == quote {
            if !triple {
                return Ok((out, i + 1, newlines));
            }
            if chars.get(i + 1) == Some(&quote) && chars.get(i + 2) == Some(&quote) {
                return Ok((out, i + 3, newlines));
            }
        }
        if c == '\n' {
            if !triple {
                return err(line, "unterminated string literal");
            }
            newlines += 1;
        }
        if c == '\\' && !raw {
            let next = chars.get(i + 1).copied();
            i += 2;
            match next {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some('r') => out.push('\r'),
                Some('b') => out.push('\u{8}'),
                Some('f') => out.push('\u{c}'),
                Some('0') => out.push('\0'),
                Some('\\') => out.push('\\'),
                Some('\'') => out.push('\''),
                Some('"') => out.push('"'),
                Some('\n') => newlines += 1,
                Some('u') => {
                    let hex: String = chars.get(i..i + 4).map(|h| h.iter().collect()).unwrap_or_default();
                    let ch = u32::from_str_radix(&hex, 16)
                        .ok()
                        .and_then(|v| {
                            if (0xD800..0xDC00).contains(&v) && chars.get(i + 4) == Some(&'\\') && chars.get(i + 5) == Some(&'u') {
                                let lo: String = chars.get(i + 6..i + 10)?.iter().collect();
                                let lo = u32::from_str_radix(&lo, 16).ok()?;
                                let cp = 0x10000 + ((v - 0xD800) << 10) + (lo - 0xDC00);
                                i += 6;
                                char::from_u32(cp)
                            } else {
                                char::from_u32(v)
                            }
                        })
                        .ok_or_else(|| SyntaxError { line, msg: "invalid \\u escape".into() })?;
                    out.push(ch);
                    i += 4;
                }
                Some(other) => {
                    out.push('\\');
                    out.push(other);
                }
                None => return err(line, "unterminated string literal"),
            }
            continue;
        }
        out.push(c);
        i += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    NoneLit,
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    Dict(Vec<(Expr, Expr)>),
    Slice(Option<Box<Expr>>, Option<Box<Expr>>),
    Unary(&'static str, Box<Expr>),
    Binary(&'static str, Box<Expr>, Box<Expr>),
    Compare(&'static str, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    /// `then if cond else other`, fields in evaluation order.
    IfElse(Box<Expr>, Box<Expr>, Box<Expr>),
    Attr(Box<Expr>, String),
    Call(Box<Expr>, Vec<Arg>),
    Index(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub name: Option<String>,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Name(String),
    Index(Expr, Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Expr(Expr),
    Assign(Vec<Target>, Expr),
    AugAssign(Target, &'static str, Expr),
    Del(Vec<Target>),
    Import(Vec<(String, String)>),
    FromImport(String, Vec<(String, String)>),
    Pass,
    Break,
    Continue,
    Raise(Option<Expr>),
    While(Expr, Vec<Stmt>),
    If(Vec<(Expr, Vec<Stmt>)>, Vec<Stmt>),
    For(String, Expr, Vec<Stmt>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub line: usize,
    pub kind: StmtKind,
}

struct P<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl<'a> P<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Some(Tok::Op(o)) if *o == op)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Name(n)) if n == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), SyntaxError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.fail()
        }
    }

    fn fail<T>(&self) -> Result<T, SyntaxError> {
        match self.peek() {
            Some(t) => err(self.line, format!("invalid syntax near '{t}'")),
            None => err(self.line, "invalid syntax"),
        }
    }

    fn name(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Name(n)) if !KEYWORDS.contains(&n.as_str()) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => self.fail(),
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let e = self.or_test()?;
        if !self.eat_kw("if") {
            return Ok(e);
        }
        let cond = self.or_test()?;
        if !self.eat_kw("else") {
            return self.fail();
        }
        let other = self.expr()?;
        Ok(Expr::IfElse(Box::new(cond), Box::new(e), Box::new(other)))
    }

    /// Expression list; a trailing or separating comma makes a tuple.
    fn expr_list(&mut self) -> Result<Expr, SyntaxError> {
        let first = self.expr()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.done() || self.is_op("=") || self.is_op(")") {
                break;
            }
            items.push(self.expr()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn or_test(&mut self) -> Result<Expr, SyntaxError> {
        let mut l = self.and_test()?;
        while self.eat_kw("or") {
            l = Expr::Or(Box::new(l), Box::new(self.and_test()?));
        }
        Ok(l)
    }

    fn and_test(&mut self) -> Result<Expr, SyntaxError> {
        let mut l = self.not_test()?;
        while self.eat_kw("and") {
            l = Expr::And(Box::new(l), Box::new(self.not_test()?));
        }
        Ok(l)
    }

    fn not_test(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_kw("not") {
            return Ok(Expr::Not(Box::new(self.not_test()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, SyntaxError> {
        let first = self.bitor()?;
        let mut parts: Vec<(&'static str, Expr)> = Vec::new();
        loop {
            let op = match self.peek() {
                Some(Tok::Op(o)) if matches!(*o, "==" | "!=" | "<" | "<=" | ">" | ">=") => *o,
                Some(Tok::Name(n)) if n == "in" => "in",
                Some(Tok::Name(n)) if n == "is" => {
                    self.pos += 1;
                    if self.is_kw("not") {
                        "is not"
                    } else {
                        self.pos -= 1;
                        "is"
                    }
                }
                Some(Tok::Name(n)) if n == "not" => {
                    if matches!(self.toks.get(self.pos + 1), Some(Tok::Name(m)) if m == "in") {
                        self.pos += 1;
                        "not in"
                    } else {
                        break;
                    }
                }
                _ => break,
            };
            self.pos += 1;
            parts.push((op, self.bitor()?));
        }
        if parts.is_empty() {
            return Ok(first);
        }
        // a < b < c  ->  (a < b) and (b < c)
        let mut left = first;
        let mut result: Option<Expr> = None;
        for (op, right) in parts {
            let cmp = Expr::Compare(op, Box::new(left), Box::new(right.clone()));
            result = Some(match result {
                None => cmp,
                Some(prev) => Expr::And(Box::new(prev), Box::new(cmp)),
            });
            left = right;
        }
        Ok(result.expect("non-empty"))
    }

    fn binary_level(
        &mut self,
        ops: &[&'static str],
        next: fn(&mut Self) -> Result<Expr, SyntaxError>,
    ) -> Result<Expr, SyntaxError> {
        let mut l = next(self)?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op(o)) if ops.contains(o) => *o,
                _ => return Ok(l),
            };
            self.pos += 1;
            l = Expr::Binary(op, Box::new(l), Box::new(next(self)?));
        }
    }

    fn bitor(&mut self) -> Result<Expr, SyntaxError> {
        self.binary_level(&["|"], Self::bitxor)
    }

    fn bitxor(&mut self) -> Result<Expr, SyntaxError> {
        self.binary_level(&["^"], Self::bitand)
    }

    fn bitand(&mut self) -> Result<Expr, SyntaxError> {
        self.binary_level(&["&"], Self::arith)
    }

    fn arith(&mut self) -> Result<Expr, SyntaxError> {
        self.binary_level(&["+", "-"], Self::term)
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        self.binary_level(&["*", "/", "//", "%"], Self::factor)
    }

    fn factor(&mut self) -> Result<Expr, SyntaxError> {
        for op in ["-", "+", "~"] {
            if self.eat_op(op) {
                return Ok(Expr::Unary(op, Box::new(self.factor()?)));
            }
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, SyntaxError> {
        let base = self.postfix()?;
        if self.eat_op("**") {
            return Ok(Expr::Binary("**", Box::new(base), Box::new(self.factor()?)));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.atom()?;
        loop {
            if self.eat_op(".") {
                let n = self.name()?;
                e = Expr::Attr(Box::new(e), n);
            } else if self.eat_op("(") {
                let args = self.call_args()?;
                e = Expr::Call(Box::new(e), args);
            } else if self.eat_op("[") {
                let idx = self.subscript()?;
                self.expect_op("]")?;
                e = Expr::Index(Box::new(e), Box::new(idx));
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> Result<Vec<Arg>, SyntaxError> {
        let mut args = Vec::new();
        let mut seen_kw = false;
        while !self.eat_op(")") {
            let is_kw = matches!(self.peek(), Some(Tok::Name(_)))
                && matches!(self.toks.get(self.pos + 1), Some(Tok::Op("=")));
            if is_kw {
                let name = self.name()?;
                self.expect_op("=")?;
                args.push(Arg { name: Some(name), value: self.expr()? });
                seen_kw = true;
            } else {
                if seen_kw {
                    return err(self.line, "positional argument follows keyword argument");
                }
                args.push(Arg { name: None, value: self.expr()? });
            }
            if !self.eat_op(",") {
                self.expect_op(")")?;
                break;
            }
        }
        Ok(args)
    }

    fn subscript(&mut self) -> Result<Expr, SyntaxError> {
        let first = self.slice_item()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.is_op("]") {
                break;
            }
            items.push(self.slice_item()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn slice_item(&mut self) -> Result<Expr, SyntaxError> {
        let lo = if self.is_op(":") { None } else { Some(self.expr()?) };
        if !self.eat_op(":") {
            return lo.map_or_else(|| self.fail(), Ok);
        }
        let hi = if self.is_op("]") || self.is_op(",") { None } else { Some(self.expr()?) };
        Ok(Expr::Slice(lo.map(Box::new), hi.map(Box::new)))
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        let Some(tok) = self.peek().cloned() else {
            return self.fail();
        };
        self.pos += 1;
        Ok(match tok {
            Tok::Int(i) => Expr::Int(i),
            Tok::Float(x) => Expr::Float(x),
            Tok::Str(mut s) => {
                while let Some(Tok::Str(more)) = self.peek() {
                    s.push_str(more);
                    self.pos += 1;
                }
                Expr::Str(s)
            }
            Tok::Name(n) => match n.as_str() {
                "True" => Expr::Bool(true),
                "False" => Expr::Bool(false),
                "None" => Expr::NoneLit,
                "lambda" => return err(self.line, "lambda expressions are not supported"),
                kw if KEYWORDS.contains(&kw) => {
                    self.pos -= 1;
                    return self.fail();
                }
                _ => Expr::Name(n),
            },
            Tok::Op("(") => {
                if self.eat_op(")") {
                    return Ok(Expr::Tuple(Vec::new()));
                }
                let e = self.expr_list()?;
                self.expect_op(")")?;
                e
            }
            Tok::Op("[") => {
                let mut items = Vec::new();
                while !self.eat_op("]") {
                    items.push(self.expr()?);
                    if self.is_kw("for") {
                        return err(self.line, "comprehensions are not supported");
                    }
                    if !self.eat_op(",") {
                        self.expect_op("]")?;
                        break;
                    }
                }
                Expr::List(items)
            }
            Tok::Op("{") => {
                let mut items = Vec::new();
                while !self.eat_op("}") {
                    let k = self.expr()?;
                    self.expect_op(":")?;
                    let v = self.expr()?;
                    items.push((k, v));
                    if !self.eat_op(",") {
                        self.expect_op("}")?;
                        break;
                    }
                }
                Expr::Dict(items)
            }
            _ => {
                self.pos -= 1;
                return self.fail();
            }
        })
    }
}

const KEYWORDS: [&str; 26] = [
    "and", "or", "not", "in", "is", "if", "elif", "else", "while", "for", "def", "class", "return",
    "import", "from", "as", "del", "pass", "break", "continue", "raise", "try", "except", "with",
    "lambda", "global",
];

fn to_target(e: Expr, line: usize) -> Result<Target, SyntaxError> {
    match e {
        Expr::Name(n) => Ok(Target::Name(n)),
        Expr::Index(obj, idx) => Ok(Target::Index(*obj, *idx)),
        _ => err(line, "cannot assign to expression"),
    }
}

fn dotted(p: &mut P<'_>) -> Result<String, SyntaxError> {
    let mut name = p.name()?;
    while p.eat_op(".") {
        name.push('.');
        name.push_str(&p.name()?);
    }
    Ok(name)
}

fn simple_stmt(p: &mut P<'_>) -> Result<StmtKind, SyntaxError> {
    if p.eat_kw("pass") {
        return Ok(StmtKind::Pass);
    }
    if p.eat_kw("break") {
        return Ok(StmtKind::Break);
    }
    if p.eat_kw("continue") {
        return Ok(StmtKind::Continue);
    }
    if p.eat_kw("import") {
        let mut names = Vec::new();
        loop {
            let module = dotted(p)?;
            let alias = if p.eat_kw("as") { p.name()? } else { module.split('.').next().unwrap_or("").to_string() };
            names.push((module, alias));
            if !p.eat_op(",") {
                break;
            }
        }
        return Ok(StmtKind::Import(names));
    }
    if p.eat_kw("from") {
        let module = dotted(p)?;
        if !p.eat_kw("import") {
            return p.fail();
        }
        let mut names = Vec::new();
        loop {
            let n = p.name()?;
            let alias = if p.eat_kw("as") { p.name()? } else { n.clone() };
            names.push((n, alias));
            if !p.eat_op(",") {
                break;
            }
        }
        return Ok(StmtKind::FromImport(module, names));
    }
    if p.eat_kw("del") {
        let mut targets = Vec::new();
        loop {
            let e = p.postfix()?;
            targets.push(to_target(e, p.line)?);
            if !p.eat_op(",") {
                break;
            }
        }
        return Ok(StmtKind::Del(targets));
    }
    if p.eat_kw("raise") {
        if p.done() || p.is_op(";") {
            return Ok(StmtKind::Raise(None));
        }
        return Ok(StmtKind::Raise(Some(p.expr()?)));
    }
    if let Some(Tok::Name(n)) = p.peek() {
        if matches!(n.as_str(), "def" | "class" | "try" | "with" | "return" | "global" | "except") {
            return err(p.line, format!("'{n}' statements are not supported"));
        }
    }
    let first = p.expr_list()?;
    for op in ["+=", "-=", "*=", "/=", "//=", "**="] {
        if p.eat_op(op) {
            let value = p.expr_list()?;
            let bin = &op[..op.len() - 1];
            let bin: &'static str = ["+", "-", "*", "/", "//", "**"]
                .into_iter()
                .find(|b| *b == bin)
                .expect("known operator");
            return Ok(StmtKind::AugAssign(to_target(first, p.line)?, bin, value));
        }
    }
    if !p.is_op("=") {
        return Ok(StmtKind::Expr(first));
    }
    let mut targets = vec![first];
    while p.eat_op("=") {
        targets.push(p.expr_list()?);
    }
    let value = targets.pop().expect("at least two");
    let targets = targets
        .into_iter()
        .map(|t| match t {
            Expr::Tuple(_) => err(p.line, "tuple assignment is not supported"),
            t => to_target(t, p.line),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StmtKind::Assign(targets, value))
}

pub fn parse(src: &str) -> Result<Vec<Stmt>, SyntaxError> {
    let lines = lex(src)?;
    let mut pos = 0;
    let stmts = block(&lines, &mut pos, 0)?;
    if pos < lines.len() {
        return err(lines[pos].number, "unexpected indent");
    }
    Ok(stmts)
}

fn block(lines: &[Line], pos: &mut usize, indent: usize) -> Result<Vec<Stmt>, SyntaxError> {
    let mut out = Vec::new();
    while *pos < lines.len() {
        let line = &lines[*pos];
        if line.indent < indent {
            break;
        }
        if line.indent > indent {
            return err(line.number, "unexpected indent");
        }
        *pos += 1;
        let mut p = P {
            toks: &line.tokens,
            pos: 0,
            line: line.number,
        };
        let head = match p.peek() {
            Some(Tok::Name(n)) if matches!(n.as_str(), "while" | "if" | "for" | "elif" | "else") => Some(n.clone()),
            _ => None,
        };
        match head.as_deref() {
            Some("elif") | Some("else") => return err(line.number, "invalid syntax"),
            Some(kw) => {
                p.pos += 1;
                let kind = compound(kw, &mut p, lines, pos, indent)?;
                out.push(Stmt { line: line.number, kind });
            }
            None => loop {
                let kind = simple_stmt(&mut p)?;
                out.push(Stmt { line: line.number, kind });
                if p.done() {
                    break;
                }
                p.expect_op(";")?;
                if p.done() {
                    break;
                }
            },
        }
    }
    Ok(out)
}

fn suite(
    p: &mut P<'_>,
    lines: &[Line],
    pos: &mut usize,
    indent: usize,
) -> Result<Vec<Stmt>, SyntaxError> {
    p.expect_op(":")?;
    if !p.done() {
        // Body on the same line: `while True: pass`.
        let mut body = Vec::new();
        loop {
            body.push(Stmt { line: p.line, kind: simple_stmt(p)? });
            if p.done() {
                return Ok(body);
            }
            p.expect_op(";")?;
        }
    }
    let inner = match lines.get(*pos) {
        Some(l) if l.indent > indent => l.indent,
        _ => return err(p.line, "expected an indented block"),
    };
    block(lines, pos, inner)
}

fn compound(
    kw: &str,
    p: &mut P<'_>,
    lines: &[Line],
    pos: &mut usize,
    indent: usize,
) -> Result<StmtKind, SyntaxError> {
    match kw {
        "while" => {
            let cond = p.expr()?;
            Ok(StmtKind::While(cond, suite(p, lines, pos, indent)?))
        }
        "for" => {
            let var = p.name()?;
            if !p.eat_kw("in") {
                return p.fail();
            }
            let iter = p.expr_list()?;
            Ok(StmtKind::For(var, iter, suite(p, lines, pos, indent)?))
        }
        _ => {
            let cond = p.expr()?;
            let mut branches = vec![(cond, suite(p, lines, pos, indent)?)];
            let mut otherwise = Vec::new();
            while let Some(line) = lines.get(*pos).filter(|l| l.indent == indent) {
                let mut q = P { toks: &line.tokens, pos: 0, line: line.number };
                if q.eat_kw("elif") {
                    *pos += 1;
                    let c = q.expr()?;
                    branches.push((c, suite(&mut q, lines, pos, indent)?));
                } else if q.eat_kw("else") {
                    *pos += 1;
                    otherwise = suite(&mut q, lines, pos, indent)?;
                    break;
                } else {
                    break;
                }
            }
            Ok(StmtKind::If(branches, otherwise))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_strings_and_comments() {
        let lines = lex("# header\nx = 'a\\'b' + \"c\"  # tail\ny = [1,\n 2.5]\n").unwrap();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].number, 2);
        assert_eq!(lines[0].tokens[2], Tok::Str("a'b".into()));
        assert_eq!(lines[1].tokens.len(), 7);
        assert_eq!(lex("s = \"\\u00e9\"").unwrap()[0].tokens[2], Tok::Str("é".into()));
    }

    #[test]
    fn precedence() {
        let stmts = parse("m = (df['a'] > 1) & (df['b'] == 'x')").unwrap();
        let StmtKind::Assign(_, Expr::Binary("&", l, _)) = &stmts[0].kind else {
            panic!("{stmts:?}");
        };
        assert!(matches!(**l, Expr::Compare(">", _, _)));
        let stmts = parse("x = 1 + 2 * 3 ** 2").unwrap();
        let StmtKind::Assign(_, Expr::Binary("+", _, r)) = &stmts[0].kind else { panic!() };
        assert!(matches!(**r, Expr::Binary("*", _, _)));
    }

    #[test]
    fn compound_blocks() {
        let stmts = parse("while True:\n    pass\nx = 1").unwrap();
        assert_eq!(stmts.len(), 2);
        assert!(matches!(stmts[0].kind, StmtKind::While(_, ref b) if b.len() == 1));
        let stmts = parse("if a:\n  b = 1\nelif c:\n  b = 2\nelse:\n  b = 3\n").unwrap();
        assert!(matches!(&stmts[0].kind, StmtKind::If(br, e) if br.len() == 2 && e.len() == 1));
        assert!(parse("while True: pass").is_ok());
    }

    #[test]
    fn syntax_errors_carry_lines() {
        assert_eq!(parse("x = 1\ny = (").unwrap_err().line, 2);
        assert_eq!(parse("a = 1\n  b = 2").unwrap_err().line, 2);
        assert!(parse("def f():\n  pass").is_err());
        assert!(parse("x = = 1").is_err());
        assert!(parse("1 = x").is_err());
    }
}
