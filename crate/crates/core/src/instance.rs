//! GNEPP instances: the player model, the text format, the built-in example
//! library and random instances.
//!
//! The text format is line oriented, with `#` starting a comment:
//!
//! ```text
//! name intro-1.4
//! players 2
//! block x1 1
//! block x2 1
//! player 1
//! objective: x1_1
//! constraint: x2_1*(x1_1 - x2_1 - 1) >= 0
//! constraint: x1_1 >= 0
//! player 2
//! objective: x2_1^2 - (x1_1 - 1)*x2_1
//! constraint: x1_1^2 + x2_1^2 <= 3
//! constraint: x2_1 >= 0
//! ```
//!
//! Constraints accept `>=`, `<=` and `==` with arbitrary expressions on both
//! sides, and chains such as `0.3 <= x1_1 <= 0.5`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gs::TauRule;
use crate::poly::{basis, BlockLayout, Monomial, Polynomial, Var, MAX_EXPONENT};

/// Default feasibility tolerance.
pub const FEASTOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `poly >= 0`
    Geq,
    /// `poly == 0`
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub poly: Polynomial,
    pub rel: Relation,
}

impl Constraint {
    pub fn geq(poly: Polynomial) -> Self {
        Constraint { poly, rel: Relation::Geq }
    }

    pub fn eq(poly: Polynomial) -> Self {
        Constraint { poly, rel: Relation::Eq }
    }

    /// Amount by which the value `v` of the constraint polynomial violates it.
    pub fn violation(&self, v: f64) -> f64 {
        match self.rel {
            Relation::Geq => (-v).max(0.0),
            Relation::Eq => v.abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlayerProblem {
    pub objective: Polynomial,
    pub constraints: Vec<Constraint>,
}

impl PlayerProblem {
    pub fn new(objective: Polynomial, constraints: Vec<Constraint>) -> Self {
        PlayerProblem { objective, constraints }
    }

    pub fn inequalities(&self) -> impl Iterator<Item = &Polynomial> {
        self.constraints.iter().filter(|c| c.rel == Relation::Geq).map(|c| &c.poly)
    }

    pub fn equalities(&self) -> impl Iterator<Item = &Polynomial> {
        self.constraints.iter().filter(|c| c.rel == Relation::Eq).map(|c| &c.poly)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GneppInstance {
    pub name: String,
    pub layout: BlockLayout,
    pub players: Vec<PlayerProblem>,
}

impl GneppInstance {
    /// Checks that there is one player per block and that every polynomial
    /// only mentions variables of the layout.
    pub fn new(name: impl Into<String>, layout: BlockLayout, players: Vec<PlayerProblem>) -> Result<Self> {
        if players.len() != layout.num_blocks() {
            return Err(Error::Input(format!(
                "{} players for {} blocks",
                players.len(),
                layout.num_blocks()
            )));
        }
        for (i, p) in players.iter().enumerate() {
            for q in std::iter::once(&p.objective).chain(p.constraints.iter().map(|c| &c.poly)) {
                if let Some(v) = q.vars().into_iter().find(|&v| !layout.contains(v)) {
                    return Err(Error::Input(format!("player {}: variable {v} is outside the layout", i + 1)));
                }
            }
        }
        Ok(GneppInstance { name: name.into(), layout, players })
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Input(format!("point has dimension {}, instance has {}", x.len(), self.dim())));
        }
        Ok(())
    }

    /// Values `g_{i,j}(x)` of every constraint polynomial, grouped by player.
    pub fn feasibility_residual(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_point(x)?;
        self.players
            .iter()
            .map(|p| p.constraints.iter().map(|c| c.poly.eval_flat(&self.layout, x)).collect())
            .collect()
    }

    /// Largest constraint violation over all players.
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        let res = self.feasibility_residual(x)?;
        let mut worst = 0.0f64;
        for (p, vals) in self.players.iter().zip(&res) {
            for (c, &v) in p.constraints.iter().zip(vals) {
                worst = worst.max(c.violation(v));
            }
        }
        Ok(worst)
    }

    pub fn is_feasible(&self, x: &[f64], feastol: f64) -> Result<bool> {
        Ok(self.max_violation(x)? <= feastol)
    }

    /// Objective values `f_i(x)`.
    pub fn objectives(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.players.iter().map(|p| p.objective.eval_flat(&self.layout, x)).collect()
    }

    /// Adds `R^2 - ||x_i||^2 >= 0` to every player's own block.
    pub fn with_ball(&self, radius: f64) -> Self {
        let mut out = self.clone();
        for (i, p) in out.players.iter_mut().enumerate() {
            let norm2 = self
                .layout
                .block_vars(i)
                .into_iter()
                .fold(Polynomial::zero(), |acc, v| acc + Polynomial::var(v).pow(2));
            p.constraints.push(Constraint::geq(radius * radius - norm2));
        }
        out.name = format!("{}+ball({radius})", self.name);
        out
    }

    /// Screens the shared-constraint structure: a constraint of player `i`
    /// that mentions player `j`'s variables should also be listed by `j`.
    /// Returns one message per constraint that is missing somewhere.
    pub fn shared_constraint_warnings(&self) -> Vec<String> {
        let normalized: Vec<Vec<Constraint>> = self
            .players
            .iter()
            .map(|p| p.constraints.iter().map(normalize_constraint).collect())
            .collect();
        let mut out = Vec::new();
        for (i, cons) in normalized.iter().enumerate() {
            for (k, c) in cons.iter().enumerate() {
                let others: std::collections::BTreeSet<usize> =
                    c.poly.vars().into_iter().map(|v| v.block).filter(|&b| b != i).collect();
                for j in others {
                    let listed = normalized[j].iter().any(|d| d.rel == c.rel && (&d.poly - &c.poly).max_abs_coeff() <= 1e-9);
                    if !listed {
                        out.push(format!(
                            "constraint {} of player {} mentions player {} but player {} does not list it",
                            k + 1,
                            i + 1,
                            j + 1,
                            j + 1
                        ));
                    }
                }
            }
        }
        out
    }
}

fn normalize_constraint(c: &Constraint) -> Constraint {
    let m = c.poly.max_abs_coeff();
    if m == 0.0 {
        return c.clone();
    }
    let mut s = 1.0 / m;
    if c.rel == Relation::Eq {
        if let Some((_, lead)) = c.poly.terms().last() {
            if lead < 0.0 {
                s = -s;
            }
        }
    }
    Constraint { poly: c.poly.scale(s), rel: c.rel }
}

// ---------------------------------------------------------------------------
// text format

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Var(Var),
    Word(String),
    Colon,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Geq,
    Leq,
    EqEq,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { line, col, msg: msg.into() }
}

fn lex_line(text: &str, line: usize) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let col = k + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        let single = match c {
            ':' => Some(Tok::Colon),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, line, col });
            k += 1;
            continue;
        }
        if matches!(c, '>' | '<' | '=') {
            let two = chars.get(k + 1) == Some(&'=');
            let tok = match (c, two) {
                ('>', true) => Tok::Geq,
                ('<', true) => Tok::Leq,
                ('=', true) => Tok::EqEq,
                ('=', false) => Tok::EqEq,
                _ => return Err(syntax(line, col, format!("strict relation `{c}` is not supported, use `{c}=`"))),
            };
            out.push(Spanned { tok, line, col });
            k += if two { 2 } else { 1 };
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                k += 1;
            }
            if k < chars.len() && matches!(chars[k], 'e' | 'E') {
                let mut j = k + 1;
                if j < chars.len() && matches!(chars[j], '+' | '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    k = j;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let s: String = chars[start..k].iter().collect();
            let v: f64 = s.parse().map_err(|_| syntax(line, col, format!("malformed number `{s}`")))?;
            out.push(Spanned { tok: Tok::Num(v), line, col });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            let s: String = chars[start..k].iter().collect();
            out.push(Spanned { tok: word_token(&s, line, col)?, line, col });
            continue;
        }
        return Err(syntax(line, col, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

/// `x<i>_<j>` becomes a variable, `x<i>` stays a word (block names), and any
/// other `x<digits>...` spelling is rejected.
fn word_token(s: &str, line: usize, col: usize) -> Result<Tok> {
    let Some(rest) = s.strip_prefix('x') else {
        return Ok(Tok::Word(s.to_string()));
    };
    if rest.is_empty() || !rest.starts_with(|c: char| c.is_ascii_digit()) {
        return Ok(Tok::Word(s.to_string()));
    }
    let bad = || syntax(line, col, format!("malformed variable `{s}`, expected x<i>_<j>"));
    match rest.split_once('_') {
        None if rest.chars().all(|c| c.is_ascii_digit()) => Ok(Tok::Word(s.to_string())),
        None => Err(bad()),
        Some((b, c)) => {
            let b: usize = b.parse().map_err(|_| bad())?;
            let c: usize = c.parse().map_err(|_| bad())?;
            if b == 0 || c == 0 {
                return Err(bad());
            }
            Ok(Tok::Var(Var::new(b - 1, c - 1)))
        }
    }
}

struct ExprParser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    layout: &'a BlockLayout,
    line: usize,
    eol: usize,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|s| (s.line, s.col)).unwrap_or((self.line, self.eol))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let (l, c) = self.here();
        syntax(l, c, msg)
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc + self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc * self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let here = self.here();
                    let d = self.unary()?;
                    match d.as_constant() {
                        Some(c) if c != 0.0 => acc = acc.scale(1.0 / c),
                        _ => return Err(syntax(here.0, here.1, "division is only allowed by a nonzero constant")),
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        match self.peek() {
            Some(&Tok::Num(e)) if e.fract() == 0.0 && e >= 0.0 && e <= MAX_EXPONENT as f64 => {
                self.pos += 1;
                let p = base.pow(e as u32);
                if p.degree() > MAX_EXPONENT {
                    return Err(Error::Degree(format!("line {}: degree {} exceeds {MAX_EXPONENT}", self.line, p.degree())));
                }
                Ok(p)
            }
            Some(Tok::Num(_)) => Err(self.err(format!("exponent must be an integer in 0..={MAX_EXPONENT}"))),
            _ => Err(self.err("expected an integer exponent after `^`")),
        }
    }

    fn atom(&mut self) -> Result<Polynomial> {
        let Some(s) = self.toks.get(self.pos) else {
            return Err(self.err("unexpected end of line, expected an expression"));
        };
        match &s.tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Polynomial::constant(*v))
            }
            Tok::Var(v) => {
                if !self.layout.contains(*v) {
                    return Err(self.err(format!("unknown variable {v}")));
                }
                self.pos += 1;
                Ok(Polynomial::var(*v))
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Tok::Word(w) => Err(self.err(format!("unknown identifier `{w}`"))),
            other => Err(self.err(format!("unexpected token {other:?}"))),
        }
    }

    fn finished(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

/// Parses the text format described in the module docs.
pub fn parse_instance(text: &str) -> Result<GneppInstance> {
    let mut name: Option<String> = None;
    let mut n_players: Option<usize> = None;
    let mut dims: Vec<Option<usize>> = Vec::new();
    let mut layout: Option<BlockLayout> = None;
    let mut players: Vec<Option<PlayerProblem>> = Vec::new();
    let mut current: Option<usize> = None;

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let toks = lex_line(raw, line)?;
        let Some(first) = toks.first() else { continue };
        let kw = match &first.tok {
            Tok::Word(w) => w.as_str(),
            _ => return Err(syntax(line, first.col, "expected a keyword")),
        };
        let int_at = |k: usize, what: &str| -> Result<usize> {
            match toks.get(k) {
                Some(Spanned { tok: Tok::Num(v), .. }) if v.fract() == 0.0 && *v >= 1.0 => Ok(*v as usize),
                Some(s) => Err(syntax(line, s.col, format!("expected a positive integer {what}"))),
                None => Err(syntax(line, raw.len() + 1, format!("expected a positive integer {what}"))),
            }
        };
        let no_more = |k: usize| -> Result<()> {
            match toks.get(k) {
                Some(s) => Err(syntax(line, s.col, "unexpected trailing input")),
                None => Ok(()),
            }
        };
        match kw {
            "name" => {
                let col = toks.get(1).map(|s| s.col).unwrap_or(raw.len() + 1);
                let body = raw.split('#').next().unwrap_or("").trim_end();
                let rest = body.chars().skip(col - 1).collect::<String>();
                if rest.trim().is_empty() {
                    return Err(syntax(line, col, "expected a name"));
                }
                name = Some(rest.trim().to_string());
            }
            "players" => {
                if n_players.is_some() {
                    return Err(syntax(line, first.col, "duplicate `players` line"));
                }
                let n = int_at(1, "player count")?;
                no_more(2)?;
                n_players = Some(n);
                dims = vec![None; n];
                players = vec![None; n];
            }
            "block" => {
                let n = n_players.ok_or_else(|| syntax(line, first.col, "`block` before `players`"))?;
                if layout.is_some() {
                    return Err(syntax(line, first.col, "`block` after the first `player` section"));
                }
                let b = match toks.get(1) {
                    Some(Spanned { tok: Tok::Word(w), col, .. }) => {
                        let idx = w.strip_prefix('x').and_then(|s| s.parse::<usize>().ok());
                        match idx {
                            Some(i) if (1..=n).contains(&i) => i - 1,
                            _ => return Err(syntax(line, *col, format!("block name must be x1..x{n}"))),
                        }
                    }
                    Some(s) => return Err(syntax(line, s.col, "expected a block name x<i>")),
                    None => return Err(syntax(line, raw.len() + 1, "expected a block name x<i>")),
                };
                if dims[b].is_some() {
                    return Err(syntax(line, toks[1].col, format!("duplicate block x{}", b + 1)));
                }
                dims[b] = Some(int_at(2, "dimension")?);
                no_more(3)?;
            }
            "player" => {
                let n = n_players.ok_or_else(|| syntax(line, first.col, "`player` before `players`"))?;
                if layout.is_none() {
                    let mut d = Vec::with_capacity(n);
                    for (b, v) in dims.iter().enumerate() {
                        d.push(v.ok_or_else(|| syntax(line, first.col, format!("block x{} was never declared", b + 1)))?);
                    }
                    layout = Some(BlockLayout::new(d)?);
                }
                let i = int_at(1, "player index")?;
                if i > n {
                    return Err(syntax(line, toks[1].col, format!("player {i} exceeds the player count {n}")));
                }
                no_more(2)?;
                if players[i - 1].is_some() {
                    return Err(syntax(line, toks[1].col, format!("duplicate player {i} section")));
                }
                players[i - 1] = Some(PlayerProblem::new(Polynomial::zero(), Vec::new()));
                current = Some(i - 1);
            }
            "objective" | "constraint" => {
                let i = current.ok_or_else(|| syntax(line, first.col, format!("`{kw}` outside a player section")))?;
                if toks.get(1).map(|s| &s.tok) != Some(&Tok::Colon) {
                    let col = toks.get(1).map(|s| s.col).unwrap_or(raw.len() + 1);
                    return Err(syntax(line, col, format!("expected `:` after `{kw}`")));
                }
                let lay = layout.as_ref().expect("layout is fixed by the player line");
                let mut p = ExprParser { toks: &toks[2..], pos: 0, layout: lay, line, eol: raw.len() + 1 };
                let player = players[i].as_mut().expect("current player exists");
                if kw == "objective" {
                    player.objective = p.expr()?;
                    if !p.finished() {
                        return Err(p.err("unexpected trailing input"));
                    }
                } else {
                    let mut lhs = p.expr()?;
                    let mut any = false;
                    while let Some(rel) = p.peek().cloned() {
                        if !matches!(rel, Tok::Geq | Tok::Leq | Tok::EqEq) {
                            return Err(p.err("expected `>=`, `<=` or `==`"));
                        }
                        p.pos += 1;
                        let rhs = p.expr()?;
                        let c = match rel {
                            Tok::Geq => Constraint::geq(&lhs - &rhs),
                            Tok::Leq => Constraint::geq(&rhs - &lhs),
                            _ => Constraint::eq(&lhs - &rhs),
                        };
                        player.constraints.push(c);
                        lhs = rhs;
                        any = true;
                    }
                    if !any {
                        return Err(p.err("constraint needs a relation `>=`, `<=` or `==`"));
                    }
                }
            }
            other => return Err(syntax(line, first.col, format!("unknown keyword `{other}`"))),
        }
    }

    let n = n_players.ok_or_else(|| syntax(1, 1, "missing `players` line"))?;
    let layout = match layout {
        Some(l) => l,
        None => return Err(syntax(text.lines().count().max(1), 1, "no player sections")),
    };
    let mut out = Vec::with_capacity(n);
    for (i, p) in players.into_iter().enumerate() {
        out.push(p.ok_or_else(|| syntax(text.lines().count().max(1), 1, format!("player {} has no section", i + 1)))?);
    }
    GneppInstance::new(name.unwrap_or_else(|| "unnamed".into()), layout, out)
}

/// Canonical text form; every constraint is one-sided. Coefficients are
/// printed with full precision so the result parses back exactly.
pub fn serialize_instance(inst: &GneppInstance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "name {}", inst.name);
    let _ = writeln!(s, "players {}", inst.num_players());
    for (b, n) in inst.layout.dims().iter().enumerate() {
        let _ = writeln!(s, "block x{} {}", b + 1, n);
    }
    for (i, p) in inst.players.iter().enumerate() {
        let _ = writeln!(s, "player {}", i + 1);
        let _ = writeln!(s, "objective: {}", p.objective);
        for c in &p.constraints {
            let rel = match c.rel {
                Relation::Geq => ">=",
                Relation::Eq => "==",
            };
            let _ = writeln!(s, "constraint: {} {rel} 0", c.poly);
        }
    }
    s
}

// ---------------------------------------------------------------------------
// built-in examples

/// A built-in instance together with its default start point and τ settings.
#[derive(Clone, Debug)]
pub struct Builtin {
    pub instance: GneppInstance,
    pub x0: Vec<f64>,
    pub tau0: f64,
    pub tau_rule: TauRule,
}

/// Canonical builtin names; `builtin` also accepts the aliases listed in
/// [`builtin_aliases`].
pub const BUILTIN_NAMES: &[&str] = &[
    "intro-1.4",
    "pollution",
    "ex3.1",
    "ex3.2-cycle",
    "ex3.3-limit",
    "ex4.3",
    "ex4.4",
    "ex4.5",
    "ex4.6",
    "ex5.3",
    "ex5.4",
    "ex5.5",
    "ex5.6",
    "ex5.8-nonconvex",
    "internet",
    "internet-a1",
    "internet-a1-neg",
    "a17",
];

/// `(alias, canonical name)` pairs.
pub fn builtin_aliases() -> &'static [(&'static str, &'static str)] {
    &[
        ("ex5.1", "pollution"),
        ("ex5.2i", "ex4.3"),
        ("ex5.2ii", "ex4.4"),
        ("ex5.2iii", "ex4.5"),
        ("ex5.2iv", "ex4.6"),
        ("ex5.8", "ex5.8-nonconvex"),
        ("ex5.9", "internet"),
        ("ex5.10", "internet-a1"),
        ("ex5.11", "internet-a1-neg"),
    ]
}

fn canonical(name: &str) -> Option<&'static str> {
    BUILTIN_NAMES
        .iter()
        .copied()
        .find(|&n| n == name)
        .or_else(|| builtin_aliases().iter().find(|(a, _)| *a == name).map(|(_, n)| *n))
}

pub fn builtin(name: &str) -> Result<GneppInstance> {
    Ok(builtin_setup(name)?.instance)
}

/// Builds a named example with its default start point and τ settings.
pub fn builtin_setup(name: &str) -> Result<Builtin> {
    let Some(canon) = canonical(name) else {
        return Err(Error::UnknownBuiltin(name.to_string()));
    };
    let fixed = TauRule::Fixed;
    let adaptive = TauRule::Adaptive;
    let (inst, x0, tau0, rule) = match canon {
        "intro-1.4" => (intro(), vec![1.5, 0.5], 0.02, fixed),
        "pollution" => (pollution(), vec![0.5; 6], 0.1, adaptive),
        "ex3.1" => (ex3_1(), vec![0.0, 1.0], 0.05, fixed),
        "ex3.2-cycle" => (ex3_2_cycle(), vec![1.0, 1.0], 0.001, fixed),
        "ex3.3-limit" => (intro(), vec![1.5, 0.5], 0.02, fixed),
        "ex4.3" => (ex4_3(), vec![3.0, 2.0], 0.02, fixed),
        "ex4.4" => (ex4_4(), vec![1.0, 0.125], 0.02, fixed),
        "ex4.5" => (ex4_5(), vec![1.0, 1.0, 2.0], 0.02, fixed),
        "ex4.6" => (ex4_6(), vec![0.2, 0.3], 0.02, fixed),
        "ex5.3" => (ex5_3(), vec![0.2, 0.3, 0.2, 0.3], 0.02, fixed),
        "ex5.4" => (ex5_4(), vec![0.25; 4], 0.1, adaptive),
        "ex5.5" => (ex5_5(), vec![0.5, 0.5, -0.6, 0.6], 0.1, adaptive),
        "ex5.6" => (ex5_6(), vec![0.0, 1.0, 2.0], 0.1, fixed),
        "ex5.8-nonconvex" => (ex5_8(), vec![0.5, 0.5, 0.6, 0.6], 0.02, fixed),
        "internet" => (internet(Variant::Plain), internet_start(0.4), 0.1, adaptive),
        "internet-a1" => (internet(Variant::A1), internet_start(0.3), 0.1, adaptive),
        "internet-a1-neg" => (internet(Variant::A1Neg), internet_start(0.3), 0.1, adaptive),
        "a17" => (a17(), vec![1.0; 3], 0.001, adaptive),
        _ => unreachable!("every canonical name has a constructor"),
    };
    let mut instance = inst;
    instance.name = canon.to_string();
    Ok(Builtin { instance, x0, tau0, tau_rule: rule })
}

fn v(b: usize, c: usize) -> Polynomial {
    Polynomial::var(Var::new(b, c))
}

fn build(dims: Vec<usize>, players: Vec<PlayerProblem>) -> GneppInstance {
    let layout = BlockLayout::new(dims).expect("builtin layouts are valid");
    GneppInstance::new("builtin", layout, players).expect("builtin instances are valid")
}

fn geq(p: Polynomial) -> Constraint {
    Constraint::geq(p)
}

fn eq(p: Polynomial) -> Constraint {
    Constraint::eq(p)
}

fn player(f: Polynomial, cons: Vec<Constraint>) -> PlayerProblem {
    PlayerProblem::new(f, cons)
}

fn intro() -> GneppInstance {
    let (x1, x2) = (v(0, 0), v(1, 0));
    build(
        vec![1, 1],
        vec![
            player(x1.clone(), vec![geq(&x2 * (&x1 - &x2 - 1.0)), geq(x1.clone())]),
            player(x2.pow(2) - (&x1 - 1.0) * &x2, vec![geq(3.0 - x1.pow(2) - x2.pow(2)), geq(x2.clone())]),
        ],
    )
}

fn pollution() -> GneppInstance {
    let n = 2;
    let b = [2.0, 2.0];
    let e = [1.0, 1.0];
    // gamma[i][j] = γ_{i+1, j+1}
    let gamma = [[0.7, 0.9], [0.8, 0.8]];
    // x_{i,j}: block i, coordinate j, with j = 0 the gross emission
    let x = |i: usize, j: usize| v(i, j);
    let net = |k: usize| (0..n).fold(x(k, 0), |acc, j| acc - gamma[j][k] * x(j, k + 1));
    let accounted = |i: usize| (0..n).fold(x(i, 0), |acc, j| acc - gamma[i][j] * x(i, j + 1));
    let product = (0..n).fold(Polynomial::constant(1.0), |acc, k| acc * net(k));
    let players = (0..n)
        .map(|i| {
            let revenue = x(i, 0) * (b[i] - 0.5 * x(i, 0));
            let invest = (1..=n).fold(Polynomial::zero(), |acc, j| acc + x(i, j));
            let damage = net(i) + 2.0 * &product;
            let mut cons: Vec<Constraint> = (0..=n).map(|j| geq(x(i, j))).collect();
            cons.push(geq(e[i] - accounted(i)));
            cons.extend((0..n).map(|k| geq(net(k))));
            player(-revenue + invest + damage, cons)
        })
        .collect();
    build(vec![n + 1; n], players)
}

fn ex3_1() -> GneppInstance {
    let (x1, x2) = (v(0, 0), v(1, 0));
    build(
        vec![1, 1],
        vec![
            player(-&x1 - &x2, vec![geq(x1.clone()), geq(2.0 - &x1)]),
            player(&x1 * &x2, vec![geq(1.0 - &x1 - x2.pow(2))]),
        ],
    )
}

fn ex3_2_cycle() -> GneppInstance {
    let (x1, x2) = (v(0, 0), v(1, 0));
    build(
        vec![1, 1],
        vec![player(x1.clone(), vec![geq(&x1 - &x2)]), player(&x1 * &x2, vec![eq(x1.pow(2) + x2.pow(2) - 2.0)])],
    )
}

fn ex4_3() -> GneppInstance {
    let (x1, x2) = (v(0, 0), v(1, 0));
    let shared = vec![geq(&x1 - 1.0), geq(10.0 - &x1), geq(&x2 - 1.0), geq(10.0 - &x2), geq(&x1 - &x2)];
    build(vec![1, 1], vec![player(&x1 + &x2, shared.clone()), player(-(&x1 * &x2), shared)])
}

fn ex4_4() -> GneppInstance {
    let (x1, x2) = (v(0, 0), v(1, 0));
    let shared = vec![geq(2.0 - x1.pow(3) - x2.pow(3)), geq(&x1 - 6.0 * &x2)];
    let f1 = x1.pow(2) * &x2 + x2.pow(2) * &x1 - 4.0 * x1.pow(4);
    let f2 = &x1 * &x2 - 3.0 * x2.pow(2);
    let mut c1 = shared.clone();
    c1.push(geq(x1.clone()));
    let mut c2 = shared;
    c2.push(geq(&x2 - 0.125));
    build(vec![1, 1], vec![player(f1, c1), player(f2, c2)])
}

fn ex4_5() -> GneppInstance {
    let (x11, x12, x2) = (v(0, 0), v(0, 1), v(1, 0));
    let s = &x11 + &x12;
    let shared =
        vec![geq(&x11 - 0.5), geq(&x12 - 0.5), geq(&x2 - 0.5), geq(&s - &x2 + 0.3), geq(&x2 + 0.3 - &s)];
    let mut c1 = shared.clone();
    c1.push(eq(x11.pow(2) + x12.pow(2) - 2.0));
    build(vec![2, 1], vec![player(&s * &x2, c1), player(&x11 * &x12 * &x2, shared)])
}

fn ex4_6() -> GneppInstance {
    let (x1, x2) = (v(0, 0), v(1, 0));
    let ball = geq(1.0 - x1.pow(2) - x2.pow(2));
    build(
        vec![1, 1],
        vec![
            player(2.0 * &x2 - &x1, vec![ball.clone(), geq(x1.clone())]),
            player(x1.pow(2) - 2.0 * &x1 * &x2 - x2.pow(2), vec![ball, geq(x2.clone())]),
        ],
    )
}

fn ex5_3() -> GneppInstance {
    let (x11, x12, x21, x22) = (v(0, 0), v(0, 1), v(1, 0), v(1, 1));
    let simplex = eq(&x11 + &x12 + &x21 + &x22 - 1.0);
    let f1 = &x11 * (&x12 + 2.0 * &x21 + 2.0 * &x22) + &x12 * (&x21 + &x22) + 2.0 * &x21 * &x22;
    let f2 = x11.pow(2) + x12.pow(2) - x21.pow(2) - x22.pow(2);
    build(
        vec![2, 2],
        vec![
            player(f1, vec![simplex.clone(), geq(x11.clone()), geq(x12.clone())]),
            player(f2, vec![simplex, geq(x21.clone()), geq(x22.clone())]),
        ],
    )
}

fn ex5_4() -> GneppInstance {
    let (x11, x12, x21, x22) = (v(0, 0), v(0, 1), v(1, 0), v(1, 1));
    let simplex = eq(&x11 + &x12 + &x21 + &x22 - 1.0);
    let f1 = -2.0 * x12.pow(2) + &x21 * &x12 + &x11 * &x21;
    let f2 = x21.pow(2) - 2.0 * &x12 * &x22 - 2.0 * &x11 * &x22 + x22.pow(2);
    build(
        vec![2, 2],
        vec![
            player(f1, vec![simplex.clone(), geq(&x11 - 0.1), geq(&x12 - 0.1)]),
            player(f2, vec![simplex, geq(&x21 - 0.1), geq(&x22 - 0.1)]),
        ],
    )
}

fn ex5_5() -> GneppInstance {
    let (x11, x12, x21, x22) = (v(0, 0), v(0, 1), v(1, 0), v(1, 1));
    let ball = geq(1.0 - x11.pow(2) - x12.pow(2) - x21.pow(2) - x22.pow(2));
    let f1 = x11.pow(2) + x12.pow(2) + &x11 + &x12;
    let f2 = x22.pow(2) - &x21 * &x22;
    build(
        vec![2, 2],
        vec![
            player(f1, vec![ball.clone(), geq(x11.clone()), geq(0.5 - &x12)]),
            player(f2, vec![ball, geq(-&x21), geq(&x22 - 0.3), geq(0.8 - &x22)]),
        ],
    )
}

fn ex5_6() -> GneppInstance {
    let (x1, x2, x3) = (v(0, 0), v(1, 0), v(2, 0));
    build(
        vec![1, 1, 1],
        vec![
            player((&x1 - &x2).pow(2), vec![geq(10.0 - x1.pow(2) - x2.pow(2) - x3.pow(2))]),
            player((&x2 - &x3).pow(2), vec![geq(3.0 - &x2)]),
            player((&x3 - &x1).pow(2), vec![geq(6.0 - &x1 - &x2 - &x3)]),
        ],
    )
}

fn ex5_8() -> GneppInstance {
    let (x11, x12, x21, x22) = (v(0, 0), v(0, 1), v(1, 0), v(1, 1));
    let f1 = x11.pow(3) + &x12 * &x21 + &x11 * &x12 + &x22;
    let f2 = -x21.pow(4) + &x11 * x22.pow(2);
    let r2 = x21.pow(2) + x22.pow(2);
    build(
        vec![2, 2],
        vec![
            player(f1, vec![geq(1.0 - x11.pow(2) - x12.pow(2))]),
            player(f2, vec![geq(&r2 - &x11), geq(1.0 - &r2)]),
        ],
    )
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Variant {
    Plain,
    A1,
    A1Neg,
}

const INTERNET_N: usize = 10;

/// Player `i` owns `(x_i, y_i)` where `y_i` lifts `1 / (x_1 + ... + x_N)`.
fn internet(variant: Variant) -> GneppInstance {
    let n = INTERNET_N;
    let cap = 1.0;
    let total = (0..n).fold(Polynomial::zero(), |acc, i| acc + v(i, 0));
    let sign = if variant == Variant::A1Neg { 1.0 } else { -1.0 };
    let players = (0..n)
        .map(|i| {
            let (x, y) = (v(i, 0), v(i, 1));
            let f = sign * &x * &y * (1.0 - total.scale(1.0 / cap));
            let lift = eq(&total * &y - 1.0);
            let cons = match (variant, i) {
                (Variant::Plain, _) => vec![geq(x.clone()), geq(cap - &total), lift],
                (_, 0) => vec![geq(&x - 0.3), geq(0.5 - &x), lift],
                _ => vec![geq(cap - &total), geq(&x - 0.001), lift],
            };
            player(f, cons)
        })
        .collect();
    build(vec![2; n], players)
}

fn internet_start(first: f64) -> Vec<f64> {
    let total = first + 0.01 * (INTERNET_N - 1) as f64;
    let mut x0 = Vec::with_capacity(2 * INTERNET_N);
    for i in 0..INTERNET_N {
        x0.push(if i == 0 { first } else { 0.01 });
        x0.push(1.0 / total);
    }
    x0
}

fn a17() -> GneppInstance {
    let (x11, x12, x21) = (v(0, 0), v(0, 1), v(1, 0));
    let s = &x11 + &x12;
    let shared = vec![geq(14.0 - &x11 - 2.0 * &x12 + &x21), geq(30.0 - 3.0 * &x11 - 2.0 * &x12 - &x21)];
    let f1 = (x11.pow(2) + &x11 * &x12 + x12.pow(2)).scale(1.0 / 38.0) + &s * &x21 - x11.scale(25.0 / 38.0) - &x12;
    let f2 = (&s * &x21).scale(1.0 / 25.0) + x21.pow(2).scale(1.0 / 25.0) - &x21;
    let mut c1 = shared.clone();
    c1.extend([geq(x11.clone()), geq(x12.clone())]);
    let mut c2 = shared;
    c2.push(geq(x21.clone()));
    build(vec![2, 1], vec![player(f1, c1), player(f2, c2)])
}

// ---------------------------------------------------------------------------
// random instances

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RandomConstraint {
    /// `sum_{i,j} x_{i,j} = 1`, `x_{i,j} >= 0`.
    Simplex,
    /// `||x_1||^2 + ... + ||x_N||^2 <= 1`.
    Ball,
}

impl RandomConstraint {
    /// Feasible start: the barycenter of the simplex or the center of the ball.
    pub fn start_point(self, layout: &BlockLayout) -> Vec<f64> {
        let n = layout.total_dim();
        match self {
            RandomConstraint::Simplex => vec![1.0 / n as f64; n],
            RandomConstraint::Ball => vec![0.0; n],
        }
    }
}

impl std::str::FromStr for RandomConstraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simplex" => Ok(RandomConstraint::Simplex),
            "ball" => Ok(RandomConstraint::Ball),
            _ => Err(Error::Input(format!("unknown constraint kind `{s}`, expected simplex or ball"))),
        }
    }
}

/// Random GNEPP with dense objectives of degree `degree` over all variables,
/// coefficients uniform on `[-1, 1]` scaled to a largest magnitude of 1, and
/// the joint simplex or ball constraint.
pub fn random_instance(
    dims: &[usize],
    degree: u32,
    constraint: RandomConstraint,
    seed: u64,
) -> Result<GneppInstance> {
    if dims.len() < 2 {
        return Err(Error::Input("a random instance needs at least two players".into()));
    }
    if degree == 0 {
        return Err(Error::Input("objective degree must be at least 1".into()));
    }
    let layout = BlockLayout::new(dims.to_vec())?;
    let vars = layout.all_vars();
    let monos: Vec<Monomial> = basis(&vars, degree);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared: Vec<Constraint> = match constraint {
        RandomConstraint::Simplex => {
            let total = vars.iter().fold(Polynomial::zero(), |acc, &x| acc + Polynomial::var(x));
            let mut c: Vec<Constraint> = vars.iter().map(|&x| Constraint::geq(Polynomial::var(x))).collect();
            c.push(Constraint::eq(total - 1.0));
            c
        }
        RandomConstraint::Ball => {
            let norm2 = vars.iter().fold(Polynomial::zero(), |acc, &x| acc + Polynomial::var(x).pow(2));
            vec![Constraint::geq(1.0 - norm2)]
        }
    };
    let players = (0..dims.len())
        .map(|_| {
            let coeffs: Vec<f64> = monos.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            let f = Polynomial::from_terms(monos.iter().cloned().zip(coeffs.iter().map(|c| c / scale)));
            PlayerProblem::new(f, shared.clone())
        })
        .collect();
    let kind = match constraint {
        RandomConstraint::Simplex => "simplex",
        RandomConstraint::Ball => "ball",
    };
    let dims_s = dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x");
    GneppInstance::new(format!("random-{kind}-{dims_s}-d{degree}-seed{seed}"), layout, players)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INTRO: &str = "\
# the running example
name intro
players 2
block x1 1
block x2 1
player 1
objective: x1_1
constraint: x2_1*(x1_1 - x2_1 - 1) >= 0
constraint: x1_1 >= 0
player 2
objective: x2_1^2 - (x1_1 - 1)*x2_1
constraint: x1_1^2 + x2_1^2 <= 3
constraint: x2_1 >= 0
";

    fn stitched_eval(a: &GneppInstance, b: &GneppInstance, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let x: Vec<f64> = (0..a.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for (p, q) in a.players.iter().zip(&b.players) {
                let fa = p.objective.eval_flat(&a.layout, &x).unwrap();
                let fb = q.objective.eval_flat(&b.layout, &x).unwrap();
                assert!((fa - fb).abs() <= 1e-12 * (1.0 + fa.abs()));
                assert_eq!(p.constraints.len(), q.constraints.len());
                for (c, d) in p.constraints.iter().zip(&q.constraints) {
                    assert_eq!(c.rel, d.rel);
                    let (ca, cb) = (c.poly.eval_flat(&a.layout, &x).unwrap(), d.poly.eval_flat(&b.layout, &x).unwrap());
                    assert!((ca - cb).abs() <= 1e-12 * (1.0 + ca.abs()));
                }
            }
        }
    }

    #[test]
    fn parses_the_running_example() {
        let inst = parse_instance(INTRO).unwrap();
        assert_eq!(inst.num_players(), 2);
        assert_eq!(inst.layout.dims(), &[1, 1]);
        assert_eq!(inst.players[0].objective, v(0, 0));
        assert_eq!(inst.name, "intro");
        stitched_eval(&inst, &builtin("intro-1.4").unwrap(), 3);
    }

    #[test]
    fn unconstrained_player() {
        let inst = parse_instance("players 2\nblock x1 1\nblock x2 2\nplayer 1\nobjective: x1_1^2\nplayer 2\nobjective: x2_1 + x2_2\n").unwrap();
        assert!(inst.players[0].constraints.is_empty());
        assert!(inst.is_feasible(&[7.0, -1.0, 3.0], FEASTOL).unwrap());
    }

    #[test]
    fn malformed_variable_reports_position() {
        let text = "players 1\nblock x1 1\nplayer 1\nobjective: 2*x1_ + 1\n";
        match parse_instance(text) {
            Err(Error::Syntax { line, col, .. }) => assert_eq!((line, col), (4, 14)),
            other => panic!("expected a syntax error, got {other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        let dup = "players 1\nblock x1 1\nplayer 1\nobjective: x1_1\nplayer 1\nobjective: x1_1\n";
        assert!(matches!(parse_instance(dup), Err(Error::Syntax { line: 5, .. })));
        let unknown = "players 1\nblock x1 1\nplayer 1\nobjective: x2_1\n";
        assert!(matches!(parse_instance(unknown), Err(Error::Syntax { line: 4, col: 12, .. })));
        let no_rel = "players 1\nblock x1 1\nplayer 1\nobjective: x1_1\nconstraint: x1_1\n";
        assert!(matches!(parse_instance(no_rel), Err(Error::Syntax { line: 5, .. })));
        let missing = "players 2\nblock x1 1\nblock x2 1\nplayer 1\nobjective: x1_1\n";
        assert!(parse_instance(missing).is_err());
        let big = "players 1\nblock x1 1\nplayer 1\nobjective: (x1_1^40)^2\n";
        assert!(matches!(parse_instance(big), Err(Error::Degree(_))));
        let frac = "players 1\nblock x1 1\nplayer 1\nobjective: x1_1^1.5\n";
        assert!(matches!(parse_instance(frac), Err(Error::Syntax { .. })));
    }

    #[test]
    fn relations_division_and_chains() {
        let text = "players 1\nblock x1 1\nplayer 1\nobjective: x1_1/4 - 1e-1\nconstraint: 0.3 <= x1_1 <= 0.5\nconstraint: x1_1^2 == 2*x1_1\n";
        let inst = parse_instance(text).unwrap();
        let p = &inst.players[0];
        assert_eq!(p.objective, 0.25 * v(0, 0) - 0.1);
        assert_eq!(p.constraints.len(), 3);
        assert_eq!(p.constraints[0], Constraint::geq(v(0, 0) - 0.3));
        assert_eq!(p.constraints[1], Constraint::geq(0.5 - v(0, 0)));
        assert_eq!(p.constraints[2], Constraint::eq(v(0, 0).pow(2) - 2.0 * v(0, 0)));
        assert!(parse_instance("players 1\nblock x1 1\nplayer 1\nobjective: x1_1/x1_1\n").is_err());
    }

    #[test]
    fn intro_residuals() {
        let inst = builtin("intro-1.4").unwrap();
        let r = inst.feasibility_residual(&[0.0, 0.0]).unwrap();
        assert_eq!(r, vec![vec![0.0, 0.0], vec![3.0, 0.0]]);
        assert!(inst.is_feasible(&[0.0, 0.0], FEASTOL).unwrap());
        let r = inst.feasibility_residual(&[0.0, 1.0]).unwrap();
        assert_eq!(r[0][0], -2.0);
        assert!(!inst.is_feasible(&[0.0, 1.0], FEASTOL).unwrap());
        assert!(inst.feasibility_residual(&[0.0]).is_err());
    }

    #[test]
    fn constant_constraints_are_feasible_everywhere() {
        let layout = BlockLayout::new(vec![1, 1]).unwrap();
        let one = Constraint::geq(Polynomial::constant(1.0));
        let p = PlayerProblem::new(v(0, 0), vec![one.clone()]);
        let q = PlayerProblem::new(v(1, 0), vec![one]);
        let inst = GneppInstance::new("ones", layout, vec![p, q]).unwrap();
        assert!(inst.is_feasible(&[-5.0, 9.0], FEASTOL).unwrap());
    }

    #[test]
    fn builtins_match_the_printed_problems() {
        let cyc = builtin("ex3.2-cycle").unwrap();
        let (x1, x2) = (v(0, 0), v(1, 0));
        assert_eq!(cyc.players[0].constraints, vec![Constraint::geq(&x1 - &x2)]);
        assert_eq!(cyc.players[1].constraints, vec![Constraint::eq(x1.pow(2) + x2.pow(2) - 2.0)]);

        let nc = builtin("ex5.8-nonconvex").unwrap();
        let r2 = v(1, 0).pow(2) + v(1, 1).pow(2);
        assert_eq!(nc.players[1].constraints, vec![Constraint::geq(&r2 - v(0, 0)), Constraint::geq(1.0 - &r2)]);

        assert!(matches!(builtin("nope"), Err(Error::UnknownBuiltin(_))));
        assert_eq!(builtin("ex5.2i").unwrap().name, "ex4.3");
    }

    #[test]
    fn builtin_start_points_fit_their_instances() {
        for name in BUILTIN_NAMES {
            let b = builtin_setup(name).unwrap();
            assert_eq!(b.x0.len(), b.instance.dim(), "{name}");
            // ex5.3 and the internet models start slightly off the lifted equality
            if ["ex3.1", "ex3.2-cycle", "intro-1.4", "ex3.3-limit", "ex4.3", "ex4.4", "ex4.5", "ex4.6", "ex5.4", "ex5.6", "a17"]
                .contains(name)
            {
                assert!(b.instance.is_feasible(&b.x0, 1e-12).unwrap(), "{name}");
            }
        }
    }

    #[test]
    fn pollution_reported_point() {
        let inst = builtin("pollution").unwrap();
        assert_eq!(inst.layout.dims(), &[3, 3]);
        let x = [0.9999, 0.0, 0.0, 0.75, 0.0, 0.9375];
        assert!(inst.max_violation(&x).unwrap() <= 1e-12);
        // second country's net emission is exactly zero there
        assert!(inst.feasibility_residual(&x).unwrap()[0][5].abs() < 1e-12);
    }

    #[test]
    fn roundtrip_preserves_every_builtin() {
        for (k, name) in BUILTIN_NAMES.iter().enumerate() {
            let inst = builtin(name).unwrap();
            let back = parse_instance(&serialize_instance(&inst)).unwrap();
            assert_eq!(back.layout, inst.layout);
            assert_eq!(back.name, inst.name);
            stitched_eval(&inst, &back, k as u64);
        }
    }

    #[test]
    fn random_shapes_and_determinism() {
        let a = random_instance(&[2, 2, 2], 3, RandomConstraint::Simplex, 7).unwrap();
        assert_eq!(a.dim(), 6);
        assert!(a.players.iter().all(|p| p.constraints.len() == 7));
        assert!(a.players.iter().all(|p| (p.objective.max_abs_coeff() - 1.0).abs() < 1e-15));
        let b = random_instance(&[4, 3], 4, RandomConstraint::Ball, 1).unwrap();
        assert_eq!(b.dim(), 7);
        assert!(b.players.iter().all(|p| p.constraints.len() == 1));
        assert_eq!(b.players[0].objective.degree(), 4);
        let again = random_instance(&[2, 2, 2], 3, RandomConstraint::Simplex, 7).unwrap();
        assert_eq!(serialize_instance(&a), serialize_instance(&again));
        let other = random_instance(&[2, 2, 2], 3, RandomConstraint::Simplex, 8).unwrap();
        assert_ne!(serialize_instance(&a), serialize_instance(&other));
        assert!(a.is_feasible(&RandomConstraint::Simplex.start_point(&a.layout), 1e-12).unwrap());
    }

    #[test]
    fn shared_constraint_screening() {
        assert!(builtin("ex4.6").unwrap().shared_constraint_warnings().is_empty());
        assert!(builtin("ex5.3").unwrap().shared_constraint_warnings().is_empty());
        assert!(!builtin("intro-1.4").unwrap().shared_constraint_warnings().is_empty());
    }

    #[test]
    fn ball_is_added_per_block() {
        let inst = builtin("ex3.2-cycle").unwrap().with_ball(2.0);
        assert_eq!(inst.players[0].constraints.last().unwrap(), &Constraint::geq(4.0 - v(0, 0).pow(2)));
    }
}
