//! Predicate language for parameterized correspondences.
//!
//! Each action of a player gets a boolean predicate over the sigma cell of the
//! player's type (`zcell`) and the masses the current distribution tuple puts
//! on actions (`lam[j][a]`, players numbered from 1). A predicate can read the
//! type only through its cell, so every correspondence defined this way is
//! measurable in the type.
//!
//! ```text
//! expr := or
//! or   := and ("or" and)*
//! and  := not ("and" not)*
//! not  := "not" not | cmp
//! cmp  := sum (("<"|"<="|"="|">="|">") sum)?
//!       | "zcell" "in" "{" ident ("," ident)* "}" | "true" | "false"
//! sum  := prod (("+"|"-") prod)*
//! prod := atom ("*" atom)*
//! atom := number | "lam" "[" int "]" "[" ident "]"
//!       | ("min"|"max") "(" expr ("," expr)* ")" | "(" expr ")"
//! ```

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::correspondence::ActionSet;
use crate::measure::Distribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DslErrorKind {
    Lexical,
    Syntax,
    UnknownIdentifier,
    Type,
}

impl fmt::Display for DslErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DslErrorKind::Lexical => "lexical error",
            DslErrorKind::Syntax => "syntax error",
            DslErrorKind::UnknownIdentifier => "unknown identifier",
            DslErrorKind::Type => "type mismatch",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}: {message}")]
pub struct DslError {
    pub kind: DslErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Bool(bool),
    Num(f64),
    /// Mass that player `player` (1-based) puts on `action`.
    Lam {
        player: usize,
        action: String,
    },
    ZcellIn(Vec<String>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Bool,
    Num,
}

/// Topological shape of the inclusion region a predicate cuts out of the
/// distribution tuple space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Closedness {
    /// Only non-strict comparisons and no negation: the region is closed.
    Closed,
    Mixed,
}

/// Identifiers a predicate may reference.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    /// Action labels per player, players in declaration order.
    pub actions: Vec<Vec<String>>,
    /// Cell labels of the owning player's type space.
    pub cells: Vec<String>,
}

/// Values a predicate is evaluated against.
pub trait EvalEnv {
    fn zcell(&self) -> &str;
    fn lam(&self, player: usize, action: &str) -> f64;
}

/// Cell label plus one distribution per player.
pub struct Assignment<'a> {
    pub zcell: &'a str,
    pub lambdas: &'a [Distribution],
}

impl EvalEnv for Assignment<'_> {
    fn zcell(&self) -> &str {
        self.zcell
    }

    fn lam(&self, player: usize, action: &str) -> f64 {
        self.lambdas
            .get(player.wrapping_sub(1))
            .and_then(|d| d.mass_of(action))
            .unwrap_or(0.0)
    }
}

impl Expr {
    pub fn eval(&self, env: &dyn EvalEnv) -> bool {
        match self {
            Expr::Bool(b) => *b,
            Expr::ZcellIn(cells) => cells.iter().any(|c| c == env.zcell()),
            Expr::Not(e) => !e.eval(env),
            Expr::And(a, b) => a.eval(env) && b.eval(env),
            Expr::Or(a, b) => a.eval(env) || b.eval(env),
            Expr::Cmp(op, a, b) => op.apply(a.value(env), b.value(env)),
            _ => self.value(env) != 0.0,
        }
    }

    fn value(&self, env: &dyn EvalEnv) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Lam { player, action } => env.lam(*player, action),
            Expr::Arith(op, a, b) => {
                let (x, y) = (a.value(env), b.value(env));
                match op {
                    ArithOp::Add => x + y,
                    ArithOp::Sub => x - y,
                    ArithOp::Mul => x * y,
                }
            }
            Expr::Min(xs) => xs.iter().map(|e| e.value(env)).fold(f64::INFINITY, f64::min),
            Expr::Max(xs) => xs.iter().map(|e| e.value(env)).fold(f64::NEG_INFINITY, f64::max),
            _ => f64::from(u8::from(self.eval(env))),
        }
    }

    pub fn closedness(&self) -> Closedness {
        fn walk(e: &Expr) -> bool {
            match e {
                Expr::Bool(_) | Expr::Num(_) | Expr::Lam { .. } | Expr::ZcellIn(_) => true,
                Expr::Not(_) => false,
                Expr::Cmp(CmpOp::Lt | CmpOp::Gt, _, _) => false,
                Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) | Expr::Arith(_, a, b) => walk(a) && walk(b),
                Expr::Min(xs) | Expr::Max(xs) => xs.iter().all(walk),
            }
        }
        if walk(self) {
            Closedness::Closed
        } else {
            Closedness::Mixed
        }
    }

    /// Fully parenthesized text that parses back to the same tree.
    pub fn print_canonical(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Lam { player, action } => write!(f, "lam[{player}][{action}]"),
            Expr::ZcellIn(cells) => write!(f, "zcell in {{{}}}", cells.join(", ")),
            Expr::Not(e) => write!(f, "(not {e})"),
            Expr::And(a, b) => write!(f, "({a} and {b})"),
            Expr::Or(a, b) => write!(f, "({a} or {b})"),
            Expr::Cmp(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Arith(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Min(xs) | Expr::Max(xs) => {
                let name = if matches!(self, Expr::Min(_)) { "min" } else { "max" };
                let args: Vec<String> = xs.iter().map(|e| e.to_string()).collect();
                write!(f, "{name}({})", args.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, String),
    Ident(String),
    Sym(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let advance = |n: usize, col: &mut usize| *col += n;
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            advance(1, &mut col);
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let raw: String = chars[start..i].iter().collect();
            let value: f64 = raw.parse().map_err(|_| DslError {
                kind: DslErrorKind::Lexical,
                line: start_line,
                column: start_col,
                message: format!("malformed number `{raw}`"),
            })?;
            advance(i - start, &mut col);
            out.push(Token {
                tok: Tok::Num(value, raw),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            advance(i - start, &mut col);
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = match two.as_str() {
            "<=" => Some("<="),
            ">=" => Some(">="),
            _ => None,
        };
        let (sym, len) = match sym {
            Some(s) => (s, 2),
            None => {
                let s = match c {
                    '<' => "<",
                    '>' => ">",
                    '=' => "=",
                    '+' => "+",
                    '-' => "-",
                    '*' => "*",
                    '(' => "(",
                    ')' => ")",
                    '[' => "[",
                    ']' => "]",
                    '{' => "{",
                    '}' => "}",
                    ',' => ",",
                    other => {
                        return Err(DslError {
                            kind: DslErrorKind::Lexical,
                            line,
                            column: col,
                            message: format!("unexpected character `{other}`"),
                        });
                    }
                };
                (s, 1)
            }
        };
        i += len;
        advance(len, &mut col);
        out.push(Token {
            tok: Tok::Sym(sym),
            line: start_line,
            column: start_col,
        });
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    scope: Option<&'a Scope>,
    end: (usize, usize),
}

type Parsed = Result<(Expr, Ty), DslError>;

impl Parser<'_> {
    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.column))
    }

    fn err<T>(&self, kind: DslErrorKind, at: (usize, usize), message: impl Into<String>) -> Result<T, DslError> {
        Err(DslError {
            kind,
            line: at.0,
            column: at.1,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn peek_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym)
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), DslError> {
        if self.peek_sym(sym) {
            self.pos += 1;
            Ok(())
        } else {
            let found = self.describe();
            self.err(
                DslErrorKind::Syntax,
                self.here(),
                format!("expected `{sym}`, found {found}"),
            )
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(Tok::Num(_, raw)) => format!("`{raw}`"),
            Some(Tok::Ident(s)) => format!("`{s}`"),
            Some(Tok::Sym(s)) => format!("`{s}`"),
        }
    }

    fn want(&self, got: Ty, want: Ty, at: (usize, usize)) -> Result<(), DslError> {
        if got == want {
            return Ok(());
        }
        let name = |t: Ty| if t == Ty::Bool { "boolean" } else { "numeric" };
        self.err(
            DslErrorKind::Type,
            at,
            format!("expected {} expression, found {}", name(want), name(got)),
        )
    }

    fn expr(&mut self) -> Parsed {
        self.or()
    }

    fn or(&mut self) -> Parsed {
        let at = self.here();
        let (mut lhs, ty) = self.and()?;
        while self.peek_keyword("or") {
            self.want(ty, Ty::Bool, at)?;
            self.pos += 1;
            let at_r = self.here();
            let (rhs, rty) = self.and()?;
            self.want(rty, Ty::Bool, at_r)?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok((lhs, ty))
    }

    fn and(&mut self) -> Parsed {
        let at = self.here();
        let (mut lhs, ty) = self.not()?;
        while self.peek_keyword("and") {
            self.want(ty, Ty::Bool, at)?;
            self.pos += 1;
            let at_r = self.here();
            let (rhs, rty) = self.not()?;
            self.want(rty, Ty::Bool, at_r)?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok((lhs, ty))
    }

    fn not(&mut self) -> Parsed {
        if self.peek_keyword("not") {
            self.pos += 1;
            let at = self.here();
            let (e, ty) = self.not()?;
            self.want(ty, Ty::Bool, at)?;
            return Ok((Expr::Not(Box::new(e)), Ty::Bool));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Parsed {
        if self.peek_keyword("true") || self.peek_keyword("false") {
            let value = self.peek_keyword("true");
            self.pos += 1;
            return Ok((Expr::Bool(value), Ty::Bool));
        }
        if self.peek_keyword("zcell") {
            self.pos += 1;
            if !self.peek_keyword("in") {
                let found = self.describe();
                return self.err(
                    DslErrorKind::Syntax,
                    self.here(),
                    format!("expected `in`, found {found}"),
                );
            }
            self.pos += 1;
            self.expect_sym("{")?;
            let mut cells = vec![self.label("cell")?];
            while self.peek_sym(",") {
                self.pos += 1;
                cells.push(self.label("cell")?);
            }
            self.expect_sym("}")?;
            return Ok((Expr::ZcellIn(cells), Ty::Bool));
        }
        let at = self.here();
        let (lhs, ty) = self.sum()?;
        let op = match self.peek() {
            Some(Tok::Sym("<")) => CmpOp::Lt,
            Some(Tok::Sym("<=")) => CmpOp::Le,
            Some(Tok::Sym("=")) => CmpOp::Eq,
            Some(Tok::Sym(">=")) => CmpOp::Ge,
            Some(Tok::Sym(">")) => CmpOp::Gt,
            _ => return Ok((lhs, ty)),
        };
        self.want(ty, Ty::Num, at)?;
        self.pos += 1;
        let at_r = self.here();
        let (rhs, rty) = self.sum()?;
        self.want(rty, Ty::Num, at_r)?;
        Ok((Expr::Cmp(op, Box::new(lhs), Box::new(rhs)), Ty::Bool))
    }

    fn sum(&mut self) -> Parsed {
        let at = self.here();
        let (mut lhs, ty) = self.prod()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Sym("+")) => ArithOp::Add,
                Some(Tok::Sym("-")) => ArithOp::Sub,
                _ => return Ok((lhs, ty)),
            };
            self.want(ty, Ty::Num, at)?;
            self.pos += 1;
            let at_r = self.here();
            let (rhs, rty) = self.prod()?;
            self.want(rty, Ty::Num, at_r)?;
            lhs = Expr::Arith(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn prod(&mut self) -> Parsed {
        let at = self.here();
        let (mut lhs, ty) = self.atom()?;
        while self.peek_sym("*") {
            self.want(ty, Ty::Num, at)?;
            self.pos += 1;
            let at_r = self.here();
            let (rhs, rty) = self.atom()?;
            self.want(rty, Ty::Num, at_r)?;
            lhs = Expr::Arith(ArithOp::Mul, Box::new(lhs), Box::new(rhs));
        }
        Ok((lhs, ty))
    }

    fn atom(&mut self) -> Parsed {
        let at = self.here();
        match self.peek().cloned() {
            Some(Tok::Num(v, _)) => {
                self.pos += 1;
                Ok((Expr::Num(v), Ty::Num))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_sym(")")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) if name == "lam" => {
                self.pos += 1;
                self.expect_sym("[")?;
                let at_p = self.here();
                let player = match self.peek() {
                    Some(Tok::Num(v, raw)) if raw.chars().all(|c| c.is_ascii_digit()) && *v >= 1.0 => *v as usize,
                    _ => {
                        let found = self.describe();
                        return self.err(
                            DslErrorKind::Syntax,
                            at_p,
                            format!("expected player number, found {found}"),
                        );
                    }
                };
                self.pos += 1;
                self.expect_sym("]")?;
                self.expect_sym("[")?;
                let at_a = self.here();
                let action = self.label("action")?;
                self.expect_sym("]")?;
                if let Some(scope) = self.scope {
                    let Some(actions) = scope.actions.get(player - 1) else {
                        return self.err(
                            DslErrorKind::UnknownIdentifier,
                            at_p,
                            format!("no player {player} (instance has {})", scope.actions.len()),
                        );
                    };
                    if !actions.contains(&action) {
                        return self.err(
                            DslErrorKind::UnknownIdentifier,
                            at_a,
                            format!("player {player} has no action `{action}`"),
                        );
                    }
                }
                Ok((Expr::Lam { player, action }, Ty::Num))
            }
            Some(Tok::Ident(name)) if name == "min" || name == "max" => {
                self.pos += 1;
                self.expect_sym("(")?;
                let mut args = Vec::new();
                loop {
                    let at_e = self.here();
                    let (e, ty) = self.expr()?;
                    self.want(ty, Ty::Num, at_e)?;
                    args.push(e);
                    if self.peek_sym(",") {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                self.expect_sym(")")?;
                let e = if name == "min" {
                    Expr::Min(args)
                } else {
                    Expr::Max(args)
                };
                Ok((e, Ty::Num))
            }
            _ => {
                let found = self.describe();
                self.err(DslErrorKind::Syntax, at, format!("expected expression, found {found}"))
            }
        }
    }

    /// Identifier position inside `lam[..][..]` or `{..}`; bare integers are
    /// accepted so numeric labels work.
    fn label(&mut self, what: &str) -> Result<String, DslError> {
        let at = self.here();
        let label = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            Some(Tok::Num(_, raw)) if raw.chars().all(|c| c.is_ascii_digit()) => raw.clone(),
            _ => {
                let found = self.describe();
                return self.err(DslErrorKind::Syntax, at, format!("expected {what} name, found {found}"));
            }
        };
        self.pos += 1;
        if what == "cell"
            && let Some(scope) = self.scope
            && !scope.cells.contains(&label)
        {
            return self.err(DslErrorKind::UnknownIdentifier, at, format!("no cell `{label}`"));
        }
        Ok(label)
    }
}

fn end_position(text: &str) -> (usize, usize) {
    let line = text.matches('\n').count() + 1;
    let column = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn parse_inner(text: &str, scope: Option<&Scope>) -> Result<Expr, DslError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        scope,
        end: end_position(text),
    };
    let at = p.here();
    let (expr, ty) = p.expr()?;
    if p.pos < p.toks.len() {
        let found = p.describe();
        return p.err(DslErrorKind::Syntax, p.here(), format!("unexpected {found}"));
    }
    p.want(ty, Ty::Bool, at)?;
    Ok(expr)
}

/// Parses and type-checks a predicate without resolving identifiers.
pub fn parse(text: &str) -> Result<Expr, DslError> {
    parse_inner(text, None)
}

/// Parses a predicate and checks every player, action, and cell against `scope`.
pub fn parse_in(text: &str, scope: &Scope) -> Result<Expr, DslError> {
    parse_inner(text, Some(scope))
}

/// One predicate per action of a player.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSpec {
    predicates: Vec<Expr>,
}

impl CorrespondenceSpec {
    pub fn new(predicates: Vec<Expr>) -> Self {
        Self { predicates }
    }

    /// Compiles `text_by_action` (action label -> predicate source) for the
    /// given ordered action list. Every action needs a predicate. The error
    /// carries the offending action label.
    pub fn compile(
        actions: &[String],
        text_by_action: &BTreeMap<String, String>,
        scope: &Scope,
    ) -> Result<Self, (String, DslError)> {
        if let Some(extra) = text_by_action.keys().find(|k| !actions.contains(k)) {
            return Err((
                extra.clone(),
                DslError {
                    kind: DslErrorKind::UnknownIdentifier,
                    line: 1,
                    column: 1,
                    message: format!("predicate given for undeclared action `{extra}`"),
                },
            ));
        }
        let predicates = actions
            .iter()
            .map(|a| match text_by_action.get(a) {
                Some(text) => parse_in(text, scope).map_err(|e| (a.clone(), e)),
                None => Err((
                    a.clone(),
                    DslError {
                        kind: DslErrorKind::Syntax,
                        line: 1,
                        column: 1,
                        message: format!("no predicate for action `{a}`"),
                    },
                )),
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { predicates })
    }

    /// Spec including every action unconditionally.
    pub fn all(num_actions: usize) -> Self {
        Self::new(vec![Expr::Bool(true); num_actions])
    }

    pub fn none(num_actions: usize) -> Self {
        Self::new(vec![Expr::Bool(false); num_actions])
    }

    pub fn predicates(&self) -> &[Expr] {
        &self.predicates
    }

    pub fn eval(&self, env: &dyn EvalEnv) -> ActionSet {
        self.predicates
            .iter()
            .enumerate()
            .filter(|(_, p)| p.eval(env))
            .map(|(a, _)| a)
            .collect()
    }

    pub fn closedness(&self) -> Closedness {
        if self.predicates.iter().all(|p| p.closedness() == Closedness::Closed) {
            Closedness::Closed
        } else {
            Closedness::Mixed
        }
    }
}

/// Random well-typed predicate over players `1..=players`, actions `a0..`,
/// and cells `c0..`. Numbers are nonnegative, matching what the grammar can
/// express as literals.
pub fn random_predicate<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> Expr {
    random_bool(rng, depth)
}

fn random_ident<R: Rng + ?Sized>(rng: &mut R, prefix: &str) -> String {
    format!("{prefix}{}", rng.gen_range(0..4))
}

fn random_bool<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.25);
    if leaf {
        return match rng.gen_range(0..3) {
            0 => Expr::Bool(rng.gen_bool(0.5)),
            1 => Expr::ZcellIn((0..rng.gen_range(1..4)).map(|_| random_ident(rng, "c")).collect()),
            _ => {
                let op = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt][rng.gen_range(0..5)];
                Expr::Cmp(op, Box::new(random_num(rng, 1)), Box::new(random_num(rng, 1)))
            }
        };
    }
    match rng.gen_range(0..4) {
        0 => Expr::Not(Box::new(random_bool(rng, depth - 1))),
        1 => Expr::And(
            Box::new(random_bool(rng, depth - 1)),
            Box::new(random_bool(rng, depth - 1)),
        ),
        2 => Expr::Or(
            Box::new(random_bool(rng, depth - 1)),
            Box::new(random_bool(rng, depth - 1)),
        ),
        _ => {
            let op = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt][rng.gen_range(0..5)];
            Expr::Cmp(
                op,
                Box::new(random_num(rng, depth - 1)),
                Box::new(random_num(rng, depth - 1)),
            )
        }
    }
}

fn random_num<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return if rng.gen_bool(0.5) {
            let v = match rng.gen_range(0..3) {
                0 => rng.gen_range(0..10) as f64 / 4.0,
                1 => rng.r#gen::<f64>(),
                _ => rng.r#gen::<f64>() * 10f64.powi(rng.gen_range(-12..12)),
            };
            Expr::Num(v)
        } else {
            Expr::Lam {
                player: rng.gen_range(1..4),
                action: random_ident(rng, "a"),
            }
        };
    }
    match rng.gen_range(0..4) {
        0 => Expr::Arith(
            [ArithOp::Add, ArithOp::Sub, ArithOp::Mul][rng.gen_range(0..3)],
            Box::new(random_num(rng, depth - 1)),
            Box::new(random_num(rng, depth - 1)),
        ),
        1 => Expr::Min((0..rng.gen_range(1..4)).map(|_| random_num(rng, depth - 1)).collect()),
        2 => Expr::Max((0..rng.gen_range(1..4)).map(|_| random_num(rng, depth - 1)).collect()),
        _ => random_num(rng, 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::labels;

    fn lam(player: usize, action: &str) -> Box<Expr> {
        Box::new(Expr::Lam {
            player,
            action: action.into(),
        })
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse("true").unwrap(), Expr::Bool(true));
        assert_eq!(
            parse("lam[2][b] <= 0.5").unwrap(),
            Expr::Cmp(CmpOp::Le, lam(2, "b"), Box::new(Expr::Num(0.5)))
        );
        let golden = Expr::And(
            Box::new(Expr::ZcellIn(vec!["c1".into(), "c2".into()])),
            Box::new(Expr::Cmp(
                CmpOp::Ge,
                Box::new(Expr::Arith(ArithOp::Add, lam(1, "a"), lam(1, "b"))),
                Box::new(Expr::Num(1.0)),
            )),
        );
        let e = parse("zcell in {c1, c2} and lam[1][a] + lam[1][b] >= 1.0").unwrap();
        assert_eq!(e, golden);
        assert_eq!(
            e.print_canonical(),
            "(zcell in {c1, c2} and ((lam[1][a] + lam[1][b]) >= 1.0))"
        );
        assert_eq!(parse(&e.print_canonical()).unwrap(), e);
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("1 - 2 - 3 < 4 * 5 + 6").unwrap();
        assert_eq!(e.print_canonical(), "(((1.0 - 2.0) - 3.0) < ((4.0 * 5.0) + 6.0))");
        let e = parse("not true or false and true").unwrap();
        assert_eq!(e.print_canonical(), "((not true) or (false and true))");
    }

    #[test]
    fn eval_examples() {
        let ys = labels(&["a", "b"]);
        let half = Distribution::new(ys.clone(), vec![0.5, 0.5]).unwrap();
        let skew = Distribution::new(ys.clone(), vec![0.2, 0.8]).unwrap();
        let delta_a = Distribution::point_mass(ys, 0).unwrap();
        let env = Assignment {
            zcell: "c1",
            lambdas: &[half.clone(), skew],
        };
        assert!(parse("true").unwrap().eval(&env));
        let at_a = Assignment {
            zcell: "c1",
            lambdas: &[delta_a],
        };
        assert!(parse("lam[1][a] >= 0.5").unwrap().eval(&at_a));
        assert!(!parse("min(lam[1][a], lam[2][a]) > 0.25").unwrap().eval(&env));
        assert!(parse("max(lam[1][a], lam[2][a]) > 0.25").unwrap().eval(&env));
        assert!(parse("zcell in {c0, c1}").unwrap().eval(&env));
        assert!(!parse("zcell in {c2}").unwrap().eval(&env));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("lam[1][a] <= 0.5 and $").unwrap_err();
        assert_eq!((e.kind, e.line, e.column), (DslErrorKind::Lexical, 1, 22));
        let e = parse("lam[1][a] <=").unwrap_err();
        assert_eq!((e.kind, e.line, e.column), (DslErrorKind::Syntax, 1, 13));
        let e = parse("true and\n  0.5").unwrap_err();
        assert_eq!((e.kind, e.line, e.column), (DslErrorKind::Type, 2, 3));
        let e = parse("lam[1][a]").unwrap_err();
        assert_eq!(e.kind, DslErrorKind::Type);
        let e = parse("(true) + 1 > 0").unwrap_err();
        assert_eq!(e.kind, DslErrorKind::Type);
        let e = parse("true true").unwrap_err();
        assert_eq!((e.kind, e.column), (DslErrorKind::Syntax, 6));
        assert_eq!(e.to_string(), "1:6: syntax error: unexpected `true`");
    }

    #[test]
    fn scope_checks() {
        let scope = Scope {
            actions: vec![vec!["a".into(), "b".into()], vec!["0".into(), "1".into()]],
            cells: vec!["c1".into()],
        };
        assert!(parse_in("lam[2][1] < 0.5 and zcell in {c1}", &scope).is_ok());
        let e = parse_in("lam[3][a] < 0.5", &scope).unwrap_err();
        assert_eq!((e.kind, e.column), (DslErrorKind::UnknownIdentifier, 5));
        let e = parse_in("lam[1][c] < 0.5", &scope).unwrap_err();
        assert_eq!((e.kind, e.column), (DslErrorKind::UnknownIdentifier, 8));
        let e = parse_in("zcell in {c9}", &scope).unwrap_err();
        assert_eq!(e.kind, DslErrorKind::UnknownIdentifier);
    }

    #[test]
    fn closedness_tags() {
        assert_eq!(
            parse("lam[1][a] <= 0.5 and lam[1][b] >= 0.1").unwrap().closedness(),
            Closedness::Closed
        );
        assert_eq!(parse("lam[1][a] < 0.5").unwrap().closedness(), Closedness::Mixed);
        assert_eq!(parse("not lam[1][a] <= 0.5").unwrap().closedness(), Closedness::Mixed);
    }

    #[test]
    fn compile_spec() {
        let scope = Scope {
            actions: vec![vec!["a".into(), "b".into()]],
            cells: vec!["c".into()],
        };
        let actions = vec!["a".to_string(), "b".to_string()];
        let mut map = BTreeMap::new();
        map.insert("a".to_string(), "true".to_string());
        assert_eq!(CorrespondenceSpec::compile(&actions, &map, &scope).unwrap_err().0, "b");
        map.insert("b".to_string(), "lam[1][a] >= 1".to_string());
        let spec = CorrespondenceSpec::compile(&actions, &map, &scope).unwrap();
        let d = Distribution::point_mass(labels(&["a", "b"]), 1).unwrap();
        let got = spec.eval(&Assignment {
            zcell: "c",
            lambdas: &[d],
        });
        assert_eq!(got, [0].into_iter().collect());
        map.insert("z".to_string(), "true".to_string());
        assert_eq!(CorrespondenceSpec::compile(&actions, &map, &scope).unwrap_err().0, "z");
    }

    #[test]
    fn random_round_trip_smoke() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let e = random_predicate(&mut rng, 4);
            let text = e.print_canonical();
            assert_eq!(parse(&text).unwrap(), e, "{text}");
        }
    }
}
