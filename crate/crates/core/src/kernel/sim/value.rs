//! Runtime values of the simulated kernel: Python scalars and a small
//! column-oriented frame model.

use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PyErr {
    pub class: String,
    pub msg: String,
    pub line: Option<usize>,
}

impl PyErr {
    pub fn new(class: &str, msg: impl Into<String>) -> Self {
        PyErr {
            class: class.to_string(),
            msg: msg.into(),
            line: None,
        }
    }
}

pub fn type_err<T>(msg: impl Into<String>) -> Result<T, PyErr> {
    Err(PyErr::new("TypeError", msg))
}

#[derive(Debug, Clone)]
pub enum Scalar {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Null, Scalar::Null) => true,
            (Scalar::Str(a), Scalar::Str(b)) => a == b,
            (a, b) => match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => x == y,
                _ => false,
            },
        }
    }
}

impl Scalar {
    pub fn type_name(&self) -> &'static str {
        match self {
            Scalar::Null => "NoneType",
            Scalar::Bool(_) => "bool",
            Scalar::Int(_) => "int",
            Scalar::Float(_) => "float",
            Scalar::Str(_) => "str",
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Bool(b) => Some(*b as i64 as f64),
            Scalar::Int(i) => Some(*i as f64),
            Scalar::Float(x) => Some(*x),
            _ => None,
        }
    }

    pub fn is_nan(&self) -> bool {
        matches!(self, Scalar::Float(x) if x.is_nan())
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Scalar::Null) || self.is_nan()
    }

    pub fn truthy(&self) -> bool {
        match self {
            Scalar::Null => false,
            Scalar::Bool(b) => *b,
            Scalar::Int(i) => *i != 0,
            Scalar::Float(x) => *x != 0.0,
            Scalar::Str(s) => !s.is_empty(),
        }
    }

    /// Python `str()`.
    pub fn to_str(&self) -> String {
        match self {
            Scalar::Null => "None".into(),
            Scalar::Bool(true) => "True".into(),
            Scalar::Bool(false) => "False".into(),
            Scalar::Int(i) => i.to_string(),
            Scalar::Float(x) => float_repr(*x),
            Scalar::Str(s) => s.clone(),
        }
    }

    /// Python `repr()`.
    pub fn repr(&self) -> String {
        match self {
            Scalar::Str(s) => str_repr(s),
            other => other.to_str(),
        }
    }

    /// Rendering used for table status: integral floats drop `.0`, missing
    /// values become empty cells.
    pub fn cell_text(&self) -> String {
        match self {
            Scalar::Null => String::new(),
            Scalar::Float(x) if x.is_nan() => String::new(),
            Scalar::Float(x) if x.fract() == 0.0 && x.abs() < 1e16 => format!("{}", *x as i64),
            other => other.to_str(),
        }
    }

    pub fn compare(&self, other: &Scalar) -> Result<Ordering, PyErr> {
        match (self, other) {
            (Scalar::Str(a), Scalar::Str(b)) => Ok(a.cmp(b)),
            (a, b) => match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => Ok(x.partial_cmp(&y).unwrap_or(Ordering::Equal)),
                _ => type_err(format!(
                    "'<' not supported between instances of '{}' and '{}'",
                    a.type_name(),
                    b.type_name()
                )),
            },
        }
    }
}

pub fn str_repr(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::new();
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

/// Python's shortest round-trip float repr.
pub fn float_repr(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{x:e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let sign = if negative { "-" } else { "" };
    if !(-4..16).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let frac = if tail.is_empty() { String::new() } else { format!(".{tail}") };
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{head}{frac}e{esign}{:02}", exp.abs());
    }
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}.0", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{a}.{b}")
    };
    format!("{sign}{body}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    Int,
    Float,
    Bool,
    Object,
}

impl Dtype {
    pub fn name(self) -> &'static str {
        match self {
            Dtype::Int => "int64",
            Dtype::Float => "float64",
            Dtype::Bool => "bool",
            Dtype::Object => "object",
        }
    }
}

pub fn infer_dtype(values: &[Scalar]) -> Dtype {
    if values.is_empty() {
        return Dtype::Object;
    }
    if values.iter().all(|v| matches!(v, Scalar::Bool(_))) {
        return Dtype::Bool;
    }
    if values.iter().all(|v| matches!(v, Scalar::Int(_))) {
        return Dtype::Int;
    }
    if values
        .iter()
        .all(|v| matches!(v, Scalar::Int(_) | Scalar::Float(_) | Scalar::Null))
    {
        return Dtype::Float;
    }
    Dtype::Object
}

/// Coerces a numeric column holding missing values to floats.
pub fn normalize_numeric(values: Vec<Scalar>) -> Vec<Scalar> {
    let numeric = values
        .iter()
        .all(|v| matches!(v, Scalar::Int(_) | Scalar::Float(_) | Scalar::Null));
    let any_float = values
        .iter()
        .any(|v| matches!(v, Scalar::Float(_) | Scalar::Null));
    if !numeric || !any_float {
        return values;
    }
    values
        .into_iter()
        .map(|v| match v {
            Scalar::Int(i) => Scalar::Float(i as f64),
            Scalar::Null => Scalar::Float(f64::NAN),
            other => other,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: Option<String>,
    pub index: Vec<Scalar>,
    pub values: Vec<Scalar>,
}

impl Series {
    pub fn new(name: Option<String>, index: Vec<Scalar>, values: Vec<Scalar>) -> Self {
        Series { name, index, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn with_values(&self, values: Vec<Scalar>) -> Series {
        Series {
            name: self.name.clone(),
            index: self.index.clone(),
            values,
        }
    }

    pub fn dtype(&self) -> Dtype {
        infer_dtype(&self.values)
    }

    pub fn take(&self, positions: &[usize]) -> Series {
        Series {
            name: self.name.clone(),
            index: positions.iter().map(|&p| self.index[p].clone()).collect(),
            values: positions.iter().map(|&p| self.values[p].clone()).collect(),
        }
    }

    pub fn get_label(&self, label: &Scalar) -> Result<Scalar, PyErr> {
        self.index
            .iter()
            .position(|l| l == label)
            .map(|p| self.values[p].clone())
            .ok_or_else(|| PyErr::new("KeyError", label.repr()))
    }

    pub fn render(&self) -> String {
        let labels: Vec<String> = self.index.iter().map(Scalar::to_str).collect();
        let cells: Vec<String> = self.values.iter().map(display_cell).collect();
        let lw = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0);
        let cw = cells.iter().map(|c| c.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for (l, c) in labels.iter().zip(&cells) {
            out.push_str(&format!("{l:<lw$}    {c:>cw$}\n"));
        }
        match &self.name {
            Some(n) => out.push_str(&format!("Name: {n}, dtype: {}", self.dtype().name())),
            None => out.push_str(&format!("dtype: {}", self.dtype().name())),
        }
        out
    }
}

fn display_cell(v: &Scalar) -> String {
    match v {
        Scalar::Float(x) if x.is_nan() => "NaN".into(),
        Scalar::Null => "None".into(),
        other => other.to_str(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub columns: Vec<String>,
    pub index: Vec<Scalar>,
    /// Column-major.
    pub data: Vec<Vec<Scalar>>,
}

impl Frame {
    pub fn nrows(&self) -> usize {
        self.index.len()
    }

    pub fn column_position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Result<Series, PyErr> {
        let p = self
            .column_position(name)
            .ok_or_else(|| PyErr::new("KeyError", str_repr(name)))?;
        Ok(Series::new(Some(name.to_string()), self.index.clone(), self.data[p].clone()))
    }

    pub fn set_column(&mut self, name: &str, values: Vec<Scalar>) {
        match self.column_position(name) {
            Some(p) => self.data[p] = values,
            None => {
                self.columns.push(name.to_string());
                self.data.push(values);
            }
        }
    }

    pub fn take_rows(&self, positions: &[usize]) -> Frame {
        Frame {
            columns: self.columns.clone(),
            index: positions.iter().map(|&p| self.index[p].clone()).collect(),
            data: self
                .data
                .iter()
                .map(|col| positions.iter().map(|&p| col[p].clone()).collect())
                .collect(),
        }
    }

    pub fn row(&self, pos: usize) -> Series {
        Series::new(
            Some(self.index[pos].to_str()),
            self.columns.iter().map(|c| Scalar::Str(c.clone())).collect(),
            self.data.iter().map(|col| col[pos].clone()).collect(),
        )
    }

    pub fn cell_rows(&self) -> Vec<Vec<String>> {
        (0..self.nrows())
            .map(|r| self.data.iter().map(|col| col[r].cell_text()).collect())
            .collect()
    }

    pub fn render(&self) -> String {
        if self.columns.is_empty() {
            return format!("Empty DataFrame\nColumns: []\nIndex: [{}]", self.nrows());
        }
        let mut grid: Vec<Vec<String>> = Vec::with_capacity(self.nrows() + 1);
        let mut header = vec![String::new()];
        header.extend(self.columns.iter().cloned());
        grid.push(header);
        for r in 0..self.nrows() {
            let mut row = vec![self.index[r].to_str()];
            row.extend(self.data.iter().map(|col| display_cell(&col[r])));
            grid.push(row);
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|c| grid.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
            .collect();
        grid.iter()
            .map(|row| {
                row.iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(i, (cell, w))| if i == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Parses a string cell the way `pd.to_numeric` does for plain decimals.
pub fn parse_number(text: &str) -> Option<Scalar> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    let body = t.strip_prefix(['+', '-']).unwrap_or(t);
    if body.bytes().all(|b| b.is_ascii_digit()) {
        return t.parse::<i64>().ok().map(Scalar::Int);
    }
    let lower = body.to_ascii_lowercase();
    if matches!(lower.as_str(), "nan" | "inf" | "infinity") {
        return t.parse::<f64>().ok().map(Scalar::Float);
    }
    let valid = body.bytes().all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'))
        && body.bytes().any(|b| b.is_ascii_digit());
    if valid {
        t.parse::<f64>().ok().map(Scalar::Float)
    } else {
        None
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn python_float_repr() {
        for (x, s) in [
            (5.0, "5.0"),
            (0.1, "0.1"),
            (1e-5, "1e-05"),
            (1e16, "1e+16"),
            (123456.5, "123456.5"),
            (-2.5, "-2.5"),
            (0.0001, "0.0001"),
            (1.5e300, "1.5e+300"),
            (100.0, "100.0"),
            (1234567890123456.0, "1234567890123456.0"),
        ] {
            assert_eq!(float_repr(x), s, "{x}");
        }
    }

    #[test]
    fn status_cells() {
        assert_eq!(Scalar::Float(126.0).cell_text(), "126");
        assert_eq!(Scalar::Float(2.5).cell_text(), "2.5");
        assert_eq!(Scalar::Float(f64::NAN).cell_text(), "");
        assert_eq!(Scalar::Null.cell_text(), "");
        assert_eq!(Scalar::Str("x".into()).cell_text(), "x");
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_number(" 42 "), Some(Scalar::Int(42)));
        assert_eq!(parse_number("-1.5"), Some(Scalar::Float(-1.5)));
        assert_eq!(parse_number("1,234"), None);
        assert_eq!(parse_number("abc"), None);
        assert_eq!(parse_number(""), None);
    }

    #[test]
    fn repr_quotes() {
        assert_eq!(str_repr("a"), "'a'");
        assert_eq!(str_repr("it's"), "\"it's\"");
    }
}
