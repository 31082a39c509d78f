//! Tolerant front end plus strict grammar.
//!
//! Cleanup blanks out markdown fence lines, skips everything before the
//! first `bbox_<n> =` or `joints =` line, and stops reading at the `]` that
//! closes the joint list, so surrounding prose never reaches the lexer.
//! Positions in errors refer to the original text.

use super::{
    AbsoluteJoint, ArtCodeDocument, CenterRelativeJoint, DocJoint, DocObb, PredictionDialect,
    FORMAT_VERSION,
};
use crate::articulation::{JointType, RelativeJoint, Sign};
use crate::geom::Obb;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Str(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
    peeked: Option<Token>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, pos: usize, line: usize) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos,
            line,
            col: 1,
            peeked: None,
        }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn here(&self) -> (usize, usize) {
        (self.line, self.col)
    }

    fn peek(&mut self) -> Result<Option<&Token>> {
        if self.peeked.is_none() {
            self.peeked = self.lex()?;
        }
        Ok(self.peeked.as_ref())
    }

    fn next(&mut self) -> Result<Option<Token>> {
        match self.peeked.take() {
            Some(t) => Ok(Some(t)),
            None => self.lex(),
        }
    }

    fn lex(&mut self) -> Result<Option<Token>> {
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_whitespace() {
                self.bump();
            } else if c == b'#' {
                while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                    self.bump();
                }
            } else {
                break;
            }
        }
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let (line, col) = self.here();
        let c = self.src[self.pos];
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.bump();
            }
            Tok::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
        } else if c.is_ascii_digit() || c == b'+' || c == b'-' || c == b'.' {
            let start = self.pos;
            self.bump();
            while self.pos < self.src.len() {
                let d = self.src[self.pos];
                let exp_sign = (d == b'+' || d == b'-')
                    && matches!(self.src[self.pos - 1], b'e' | b'E');
                if d.is_ascii_digit() || d == b'.' || d == b'e' || d == b'E' || exp_sign {
                    self.bump();
                } else {
                    break;
                }
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
            let v: f64 = text
                .parse()
                .map_err(|_| Error::syntax(line, col, format!("bad number `{text}`")))?;
            Tok::Num(v)
        } else if c == b'"' || c == b'\'' {
            let quote = self.bump();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos] != quote && self.src[self.pos] != b'\n' {
                self.bump();
            }
            if self.pos >= self.src.len() || self.src[self.pos] != quote {
                return Err(Error::syntax(line, col, "unterminated string"));
            }
            let s = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
            self.bump();
            Tok::Str(s)
        } else if b"()[]=,".contains(&c) {
            self.bump();
            Tok::Punct(c as char)
        } else {
            let ch = std::str::from_utf8(&self.src[self.pos..])
                .ok()
                .and_then(|s| s.chars().next())
                .unwrap_or('?');
            return Err(Error::syntax(line, col, format!("unexpected character `{ch}`")));
        };
        Ok(Some(Token { tok, line, col }))
    }
}

#[derive(Debug, Clone)]
enum Value {
    Num(f64),
    Str(String),
    List(Vec<Value>),
    Call { name: String, args: Vec<(String, Value)> },
}

#[derive(Debug, Clone)]
struct Spanned {
    value: Value,
    line: usize,
    col: usize,
}

struct Parser<'a> {
    lex: Lexer<'a>,
    last: (usize, usize),
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Result<Token> {
        match self.lex.next()? {
            Some(t) => {
                self.last = (t.line, t.col);
                Ok(t)
            }
            None => Err(Error::syntax(self.lex.line, self.lex.col, "unexpected end of input")),
        }
    }

    fn expect(&mut self, c: char) -> Result<Token> {
        let t = self.next()?;
        if t.tok == Tok::Punct(c) {
            Ok(t)
        } else {
            Err(Error::syntax(t.line, t.col, format!("expected `{c}`, found {:?}", t.tok)))
        }
    }

    fn peek_is(&mut self, c: char) -> Result<bool> {
        Ok(matches!(self.lex.peek()?, Some(Token { tok: Tok::Punct(p), .. }) if *p == c))
    }

    fn value(&mut self) -> Result<Spanned> {
        let t = self.next()?;
        let (line, col) = (t.line, t.col);
        let value = match t.tok {
            Tok::Num(v) => Value::Num(v),
            Tok::Str(s) => Value::Str(s),
            Tok::Punct('[') => {
                let mut items = Vec::new();
                loop {
                    if self.peek_is(']')? {
                        self.next()?;
                        break;
                    }
                    items.push(self.value()?.value);
                    if self.peek_is(',')? {
                        self.next()?;
                    } else {
                        self.expect(']')?;
                        break;
                    }
                }
                Value::List(items)
            }
            Tok::Ident(name) => {
                self.expect('(')?;
                let args = self.kwargs()?;
                Value::Call { name, args }
            }
            other => return Err(Error::syntax(line, col, format!("unexpected {other:?}"))),
        };
        Ok(Spanned { value, line, col })
    }

    /// `name=value, ...)`; the opening paren is already consumed.
    fn kwargs(&mut self) -> Result<Vec<(String, Value)>> {
        let mut args = Vec::new();
        loop {
            if self.peek_is(')')? {
                self.next()?;
                return Ok(args);
            }
            let t = self.next()?;
            let Tok::Ident(key) = t.tok else {
                return Err(Error::syntax(t.line, t.col, "expected keyword argument"));
            };
            self.expect('=')?;
            let v = self.value()?;
            args.push((key, v.value));
            if self.peek_is(',')? {
                self.next()?;
            } else {
                self.expect(')')?;
                return Ok(args);
            }
        }
    }
}

/// Locates the first statement line and the version comment, blanking fence
/// lines in place so byte offsets and line numbers are preserved.
fn clean(text: &str) -> Result<(String, usize, usize, String)> {
    let mut cleaned = String::with_capacity(text.len());
    let mut start = None;
    let mut version = FORMAT_VERSION.to_string();
    let mut offset = 0usize;
    for (lineno, raw) in text.split_inclusive('\n').enumerate() {
        let trimmed = raw.trim();
        if trimmed.starts_with("```") || trimmed.starts_with("~~~") {
            cleaned.extend(raw.chars().map(|c| if c == '\n' { '\n' } else { ' ' }));
        } else {
            if start.is_none() {
                if let Some(v) = trimmed.strip_prefix("# artcode ") {
                    version = v.trim().to_string();
                } else if is_statement_start(trimmed) {
                    start = Some((offset + (raw.len() - raw.trim_start().len()), lineno + 1));
                }
            }
            cleaned.push_str(raw);
        }
        offset += raw.len();
    }
    let (pos, line) = start.ok_or_else(|| {
        Error::syntax(1, 1, "no `bbox_<n> =` or `joints =` statement found")
    })?;
    Ok((cleaned, pos, line, version))
}

fn is_statement_start(line: &str) -> bool {
    let after_name = if let Some(rest) = line.strip_prefix("bbox_") {
        let digits = rest.chars().take_while(char::is_ascii_digit).count();
        if digits == 0 {
            return false;
        }
        &rest[digits..]
    } else if let Some(rest) = line.strip_prefix("joints") {
        rest
    } else {
        return false;
    };
    after_name.trim_start().starts_with('=')
}

/// Parses a full document or a joints-only block. Joint indices are checked
/// against the boxes in the text, if any.
pub fn parse_artcode(text: &str, dialect: PredictionDialect) -> Result<ArtCodeDocument> {
    parse_inner(text, dialect, None)
}

/// Like [`parse_artcode`], with boxes supplied separately for joints-only
/// completions. Boxes in the text take precedence.
pub fn parse_artcode_with_obbs(
    text: &str,
    dialect: PredictionDialect,
    obbs: &[Obb],
) -> Result<ArtCodeDocument> {
    let docs: Vec<DocObb> = obbs.iter().map(DocObb::from_obb).collect();
    parse_inner(text, dialect, Some(docs))
}

fn parse_inner(
    text: &str,
    dialect: PredictionDialect,
    external: Option<Vec<DocObb>>,
) -> Result<ArtCodeDocument> {
    let (cleaned, pos, line, version) = clean(text)?;
    let mut p = Parser {
        lex: Lexer::new(&cleaned, pos, line),
        last: (line, 1),
    };
    let mut obbs = Vec::new();
    let joints_raw = loop {
        let t = p.next()?;
        let Tok::Ident(name) = &t.tok else {
            return Err(Error::syntax(t.line, t.col, "expected `bbox_<n>` or `joints`"));
        };
        p.expect('=')?;
        if name == "joints" {
            p.expect('[')?;
            let mut items = Vec::new();
            loop {
                if p.peek_is(']')? {
                    p.next()?;
                    break;
                }
                items.push(p.value()?);
                if p.peek_is(',')? {
                    p.next()?;
                } else {
                    p.expect(']')?;
                    break;
                }
            }
            break items;
        }
        let index = name
            .strip_prefix("bbox_")
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| Error::syntax(t.line, t.col, format!("unexpected statement `{name}`")))?;
        if index != obbs.len() {
            return Err(Error::syntax(
                t.line,
                t.col,
                format!("expected bbox_{}, found {name}", obbs.len()),
            ));
        }
        let v = p.value()?;
        obbs.push(interpret_obb(&v)?);
    };

    let n_parts = if !obbs.is_empty() {
        Some(obbs.len())
    } else {
        external.as_ref().map(Vec::len)
    };
    if obbs.is_empty() {
        if let Some(ext) = external {
            obbs = ext;
        }
    }
    let joints = joints_raw
        .iter()
        .map(|v| interpret_joint(v, dialect, n_parts))
        .collect::<Result<Vec<_>>>()?;
    Ok(ArtCodeDocument {
        format_version: version,
        dialect,
        obbs,
        joints,
    })
}

fn err_at(s: &Spanned, msg: impl Into<String>) -> Error {
    Error::syntax(s.line, s.col, msg)
}

fn num(v: &Value) -> Option<f64> {
    match v {
        Value::Num(x) => Some(*x),
        _ => None,
    }
}

fn vec3(s: &Spanned, v: &Value, what: &str) -> Result<[f64; 3]> {
    match v {
        Value::List(items) if items.len() == 3 => {
            let xs: Option<Vec<f64>> = items.iter().map(num).collect();
            xs.map(|x| [x[0], x[1], x[2]])
                .ok_or_else(|| err_at(s, format!("`{what}` must hold numbers")))
        }
        _ => Err(err_at(s, format!("`{what}` must be a list of three numbers"))),
    }
}

fn call<'v>(s: &Spanned, v: &'v Value, expected: &str) -> Result<&'v [(String, Value)]> {
    match v {
        Value::Call { name, args } if name == expected => Ok(args),
        _ => Err(err_at(s, format!("expected {expected}(...)"))),
    }
}

/// Looks up required keywords and rejects unknown ones.
fn take<'v>(
    s: &Spanned,
    args: &'v [(String, Value)],
    required: &[&str],
    optional: &[&str],
) -> Result<Vec<Option<&'v Value>>> {
    for (k, _) in args {
        if !required.contains(&k.as_str()) && !optional.contains(&k.as_str()) {
            return Err(err_at(s, format!("unknown keyword argument `{k}`")));
        }
    }
    let mut seen = std::collections::HashSet::new();
    for (k, _) in args {
        if !seen.insert(k.as_str()) {
            return Err(err_at(s, format!("duplicate keyword argument `{k}`")));
        }
    }
    required
        .iter()
        .chain(optional)
        .enumerate()
        .map(|(i, key)| {
            let found = args.iter().find(|(k, _)| k == key).map(|(_, v)| v);
            if i < required.len() && found.is_none() {
                Err(err_at(s, format!("missing keyword argument `{key}`")))
            } else {
                Ok(found)
            }
        })
        .collect()
}

fn interpret_obb(s: &Spanned) -> Result<DocObb> {
    let args = call(s, &s.value, "OBB")?;
    let v = take(s, args, &["center", "R", "half"], &[])?;
    let center = vec3(s, v[0].unwrap(), "center")?;
    let rotation = match v[1].unwrap() {
        Value::List(rows) if rows.len() == 3 => {
            let r0 = vec3(s, &rows[0], "R")?;
            let r1 = vec3(s, &rows[1], "R")?;
            let r2 = vec3(s, &rows[2], "R")?;
            [r0, r1, r2]
        }
        _ => return Err(err_at(s, "`R` must be a 3x3 nested list")),
    };
    let half = vec3(s, v[2].unwrap(), "half")?;
    Ok(DocObb {
        center,
        rotation,
        half,
    })
}

fn int(s: &Spanned, v: &Value, what: &str) -> Result<i64> {
    match num(v) {
        Some(x) if x.fract() == 0.0 && x.abs() < 1e12 => Ok(x as i64),
        _ => Err(err_at(s, format!("`{what}` must be an integer"))),
    }
}

fn sign(s: &Spanned, v: &Value, what: &str) -> Result<Sign> {
    Sign::from_int(int(s, v, what)?).ok_or_else(|| err_at(s, format!("`{what}` must be +1 or -1")))
}

fn part_index(s: &Spanned, v: &Value, what: &str, n_parts: Option<usize>) -> Result<usize> {
    let i = int(s, v, what)?;
    if i < 0 || n_parts.is_some_and(|n| i as usize >= n) {
        return Err(Error::UnknownPart(format!("{what}={i} (line {})", s.line)));
    }
    Ok(i as usize)
}

struct AxisRef {
    idx: u8,
    sign: Sign,
}

fn axis_ref(s: &Spanned, v: &Value, child: usize) -> Result<AxisRef> {
    let args = call(s, v, "Axis")?;
    let a = take(s, args, &["box", "idx", "sign"], &[])?;
    let b = int(s, a[0].unwrap(), "box")?;
    if b != child as i64 {
        return Err(err_at(s, format!("Axis box={b} must name the child box {child}")));
    }
    let idx = int(s, a[1].unwrap(), "idx")?;
    if !(0..=2).contains(&idx) {
        return Err(Error::InvalidAxisIndex(idx));
    }
    Ok(AxisRef {
        idx: idx as u8,
        sign: sign(s, a[2].unwrap(), "sign")?,
    })
}

fn interpret_joint(
    s: &Spanned,
    dialect: PredictionDialect,
    n_parts: Option<usize>,
) -> Result<DocJoint> {
    let args = call(s, &s.value, "Joint")?;
    let v = take(s, args, &["type", "parent", "child", "axis"], &["pivot", "pos"])?;
    let joint_type = match v[0].unwrap() {
        Value::Str(t) if t == "revolute" => JointType::Revolute,
        Value::Str(t) if t == "prismatic" => JointType::Prismatic,
        _ => return Err(err_at(s, "`type` must be \"revolute\" or \"prismatic\"")),
    };
    let parent = part_index(s, v[1].unwrap(), "parent", n_parts)?;
    let child = part_index(s, v[2].unwrap(), "child", n_parts)?;
    if parent == child {
        return Err(err_at(s, "joint connects a part to itself"));
    }
    let axis = v[3].unwrap();
    let (pivot, pos) = (v[4], v[5]);

    let found = match (axis, pivot, pos) {
        (Value::List(_), _, _) | (_, _, Some(Value::List(_))) => PredictionDialect::AbsoluteNumeric,
        (_, _, Some(_)) => PredictionDialect::RelativeToCenter,
        // prismatic Axis(...) lines are shared by the two box-relative dialects
        (_, None, None) if dialect != PredictionDialect::AbsoluteNumeric => dialect,
        _ => PredictionDialect::EdgeAxis,
    };
    if found != dialect {
        return Err(Error::DialectMismatch {
            line: s.line,
            expected: dialect.name(),
            found: found.name(),
        });
    }
    let needs_pivot = joint_type == JointType::Revolute;
    let check_presence = |present: bool, key: &str| -> Result<()> {
        match (needs_pivot, present) {
            (true, false) => Err(err_at(s, format!("revolute joint needs `{key}`"))),
            (false, true) => Err(err_at(s, format!("prismatic joint takes no `{key}`"))),
            _ => Ok(()),
        }
    };

    Ok(match dialect {
        PredictionDialect::EdgeAxis => {
            if pos.is_some() {
                return Err(err_at(s, "`pos` is not part of the edge-axis dialect"));
            }
            check_presence(pivot.is_some(), "pivot")?;
            let a = axis_ref(s, axis, child)?;
            let edge_signs = match pivot {
                Some(pv) => {
                    let e = take(s, call(s, pv, "Edge")?, &["s1", "s2"], &[])?;
                    Some((sign(s, e[0].unwrap(), "s1")?, sign(s, e[1].unwrap(), "s2")?))
                }
                None => None,
            };
            DocJoint::EdgeAxis(RelativeJoint {
                joint_type,
                parent,
                child,
                axis_idx: a.idx,
                axis_sign: a.sign,
                edge_signs,
            })
        }
        PredictionDialect::AbsoluteNumeric => {
            if pivot.is_some() {
                return Err(err_at(s, "`pivot` is not part of the absolute dialect"));
            }
            check_presence(pos.is_some(), "pos")?;
            DocJoint::Absolute(AbsoluteJoint {
                joint_type,
                parent,
                child,
                axis: vec3(s, axis, "axis")?,
                pos: pos.map(|p| vec3(s, p, "pos")).transpose()?,
            })
        }
        PredictionDialect::RelativeToCenter => {
            if pivot.is_some() {
                return Err(err_at(s, "`pivot` is not part of the relative dialect"));
            }
            check_presence(pos.is_some(), "pos")?;
            let a = axis_ref(s, axis, child)?;
            let offset = match pos {
                Some(pv) => {
                    let o = take(s, call(s, pv, "Offset")?, &["u", "v"], &[])?;
                    let u = num(o[0].unwrap()).ok_or_else(|| err_at(s, "`u` must be a number"))?;
                    let w = num(o[1].unwrap()).ok_or_else(|| err_at(s, "`v` must be a number"))?;
                    Some((u, w))
                }
                None => None,
            };
            DocJoint::CenterRelative(CenterRelativeJoint {
                joint_type,
                parent,
                child,
                axis_idx: a.idx,
                axis_sign: a.sign,
                offset,
            })
        }
    })
}
