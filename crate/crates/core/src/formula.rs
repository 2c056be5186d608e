//! Sentence syntax, parsing, printing, normalization and direct evaluation.
//!
//! Sentences are implicit existential closures of a disjunction of
//! conjunctions of literals; literals are (possibly negated) linear equations
//! and divisibility constraints. Normalization eliminates plain divisibility
//! and the negations in favour of the four normal atom shapes, distributing
//! into disjunctive normal form.

use std::collections::BTreeMap;
use std::fmt;

use crate::fraction::FieldElem;
use crate::places::{Place, RingSpec};
use crate::scalar::{Base, PolyFp, Scalar};

pub const MAX_VARS: usize = 10_000;

/// Linear polynomial over the base ring: a coefficient per variable plus a
/// constant. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct LinTerm {
    base: Base,
    coeffs: BTreeMap<usize, Scalar>,
    constant: Scalar,
}

impl LinTerm {
    pub fn constant(c: Scalar) -> LinTerm {
        let base = c.base();
        LinTerm { base, coeffs: BTreeMap::new(), constant: c }
    }

    pub fn zero(base: Base) -> LinTerm {
        LinTerm::constant(Scalar::zero(base))
    }

    pub fn var(base: Base, idx: usize) -> LinTerm {
        LinTerm::zero(base).plus_monomial(idx, Scalar::one(base))
    }

    pub fn monomial(idx: usize, coeff: Scalar) -> LinTerm {
        let base = coeff.base();
        LinTerm::zero(base).plus_monomial(idx, coeff)
    }

    pub fn plus_monomial(mut self, idx: usize, coeff: Scalar) -> LinTerm {
        debug_assert_eq!(coeff.base(), self.base);
        let entry = match self.coeffs.remove(&idx) {
            Some(old) => old.add(&coeff),
            None => coeff,
        };
        if !entry.is_zero() {
            self.coeffs.insert(idx, entry);
        }
        self
    }

    pub fn plus_constant(mut self, c: &Scalar) -> LinTerm {
        self.constant = self.constant.add(c);
        self
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn coeffs(&self) -> &BTreeMap<usize, Scalar> {
        &self.coeffs
    }

    pub fn constant_part(&self) -> &Scalar {
        &self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &LinTerm) -> LinTerm {
        let mut result = self.clone();
        for (&i, c) in &other.coeffs {
            result = result.plus_monomial(i, c.clone());
        }
        result.plus_constant(&other.constant)
    }

    pub fn neg(&self) -> LinTerm {
        LinTerm {
            base: self.base,
            coeffs: self.coeffs.iter().map(|(&i, c)| (i, c.neg())).collect(),
            constant: self.constant.neg(),
        }
    }

    pub fn sub(&self, other: &LinTerm) -> LinTerm {
        self.add(&other.neg())
    }

    pub fn max_var(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    /// Value at a point of the fraction field.
    pub fn eval(&self, assignment: &[FieldElem]) -> FieldElem {
        let mut acc = FieldElem::from_scalar(self.constant.clone());
        for (&i, c) in &self.coeffs {
            acc = acc.add(&assignment[i].mul_scalar(c));
        }
        acc
    }
}

/// An atomic or negated-atomic constraint of the input language.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Literal {
    /// `l = 0`
    Eq(LinTerm),
    /// `l1 | l2`
    Div(LinTerm, LinTerm),
    /// `l != 0`
    NegEq(LinTerm),
    /// `!(l1 | l2)`
    NegDiv(LinTerm, LinTerm),
}

/// Existential sentence: a disjunction of conjunctions of literals over
/// `var_count` variables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Sentence {
    var_count: usize,
    matrix: Vec<Vec<Literal>>,
}

impl Sentence {
    pub fn new(var_count: usize, matrix: Vec<Vec<Literal>>) -> Sentence {
        for clause in &matrix {
            for lit in clause {
                for term in literal_terms(lit) {
                    if let Some(v) = term.max_var() {
                        assert!(v < var_count, "variable index out of range");
                    }
                }
            }
        }
        Sentence { var_count, matrix }
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn matrix(&self) -> &[Vec<Literal>] {
        &self.matrix
    }
}

fn literal_terms(lit: &Literal) -> Vec<&LinTerm> {
    match lit {
        Literal::Eq(l) | Literal::NegEq(l) => vec![l],
        Literal::Div(a, b) | Literal::NegDiv(a, b) => vec![a, b],
    }
}

/// Atom of the normalized language.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum NormalAtom {
    /// `l1 || l2`: divisibility with nonzero right side.
    DivBar(LinTerm, LinTerm),
    /// `l = 0`
    Eq0(LinTerm),
    /// `l != 0`
    Neq0(LinTerm),
    /// `o_j(l1, l2)`: `l1 != 0` and the order of `l1` exceeds that of `l2`
    /// at the j-th excluded place.
    OrdGt { place_idx: usize, lhs: LinTerm, rhs: LinTerm },
}

/// Conjunction of normal atoms. Zero atoms denote truth.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NormalSystem {
    pub atoms: Vec<NormalAtom>,
}

/// Disjunction of normal systems. Zero disjuncts denote falsity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NormalForm {
    pub var_count: usize,
    pub systems: Vec<NormalSystem>,
}

/// Rewrite a sentence into normal form relative to the excluded places `T`:
/// `x|y` becomes `y=0 or x||y`; `!(x|y)` becomes `(x=0 and y!=0)` or one of
/// the per-place order comparisons; negated equations become disequations;
/// the result is distributed into a disjunction of conjunctions.
pub fn normalize(s: &Sentence, t: &[Place]) -> NormalForm {
    assert!(!t.is_empty(), "place list must be nonempty");
    let mut systems = Vec::new();
    for clause in &s.matrix {
        // Per-literal lists of alternative atom groups.
        let alternatives: Vec<Vec<Vec<NormalAtom>>> = clause
            .iter()
            .map(|lit| match lit {
                Literal::Eq(l) => vec![vec![NormalAtom::Eq0(l.clone())]],
                Literal::NegEq(l) => vec![vec![NormalAtom::Neq0(l.clone())]],
                Literal::Div(a, b) => vec![
                    vec![NormalAtom::Eq0(b.clone())],
                    vec![NormalAtom::DivBar(a.clone(), b.clone())],
                ],
                Literal::NegDiv(a, b) => {
                    let mut opts = vec![vec![
                        NormalAtom::Eq0(a.clone()),
                        NormalAtom::Neq0(b.clone()),
                    ]];
                    for j in 0..t.len() {
                        opts.push(vec![NormalAtom::OrdGt {
                            place_idx: j,
                            lhs: a.clone(),
                            rhs: b.clone(),
                        }]);
                    }
                    opts
                }
            })
            .collect();
        distribute(&alternatives, 0, &mut Vec::new(), &mut systems);
    }
    NormalForm { var_count: s.var_count, systems }
}

fn distribute(
    alternatives: &[Vec<Vec<NormalAtom>>],
    idx: usize,
    current: &mut Vec<NormalAtom>,
    out: &mut Vec<NormalSystem>,
) {
    if idx == alternatives.len() {
        out.push(NormalSystem { atoms: current.clone() });
        return;
    }
    for option in &alternatives[idx] {
        let before = current.len();
        current.extend(option.iter().cloned());
        distribute(alternatives, idx + 1, current, out);
        current.truncate(before);
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum EvalError {
    WrongArity { expected: usize, got: usize },
    OutsideRing { index: usize },
    PlaceIndex { index: usize },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::WrongArity { expected, got } => {
                write!(f, "expected {} assignment entries, got {}", expected, got)
            }
            EvalError::OutsideRing { index } => {
                write!(f, "assignment entry {} lies outside the ring", index + 1)
            }
            EvalError::PlaceIndex { index } => write!(f, "place index {} out of range", index),
        }
    }
}

impl std::error::Error for EvalError {}

/// Truth value of a sentence at a ring point.
pub fn eval_sentence(
    s: &Sentence,
    assignment: &[FieldElem],
    ring: &RingSpec,
) -> Result<bool, EvalError> {
    check_assignment(s.var_count, assignment, ring)?;
    Ok(eval_sentence_unchecked(s, assignment, ring))
}

/// Truth value of a normal system at a ring point, with `o_j` read off the
/// ring's excluded-place list.
pub fn eval_normal_system(
    ns: &NormalSystem,
    assignment: &[FieldElem],
    ring: &RingSpec,
) -> Result<bool, EvalError> {
    let t = ring.t_places();
    for atom in &ns.atoms {
        if let NormalAtom::OrdGt { place_idx, .. } = atom {
            if *place_idx >= t.len() {
                return Err(EvalError::PlaceIndex { index: *place_idx });
            }
        }
    }
    let max = ns
        .atoms
        .iter()
        .flat_map(atom_terms)
        .filter_map(LinTerm::max_var)
        .max();
    check_assignment(max.map_or(0, |v| v + 1), assignment, ring)?;
    Ok(eval_system_unchecked(ns, assignment, ring))
}

fn check_assignment(
    var_count: usize,
    assignment: &[FieldElem],
    ring: &RingSpec,
) -> Result<(), EvalError> {
    if assignment.len() < var_count {
        return Err(EvalError::WrongArity { expected: var_count, got: assignment.len() });
    }
    for (i, x) in assignment.iter().enumerate() {
        if !ring.is_member(x) {
            return Err(EvalError::OutsideRing { index: i });
        }
    }
    Ok(())
}

fn atom_terms(atom: &NormalAtom) -> Vec<&LinTerm> {
    match atom {
        NormalAtom::Eq0(l) | NormalAtom::Neq0(l) => vec![l],
        NormalAtom::DivBar(a, b) => vec![a, b],
        NormalAtom::OrdGt { lhs, rhs, .. } => vec![lhs, rhs],
    }
}

pub(crate) fn eval_sentence_unchecked(
    s: &Sentence,
    assignment: &[FieldElem],
    ring: &RingSpec,
) -> bool {
    s.matrix.iter().any(|clause| {
        clause.iter().all(|lit| eval_literal(lit, assignment, ring))
    })
}

pub(crate) fn eval_literal(lit: &Literal, assignment: &[FieldElem], ring: &RingSpec) -> bool {
    match lit {
        Literal::Eq(l) => l.eval(assignment).is_zero(),
        Literal::NegEq(l) => !l.eval(assignment).is_zero(),
        Literal::Div(a, b) => ring.divides(&a.eval(assignment), &b.eval(assignment)),
        Literal::NegDiv(a, b) => !ring.divides(&a.eval(assignment), &b.eval(assignment)),
    }
}

pub(crate) fn eval_system_unchecked(
    ns: &NormalSystem,
    assignment: &[FieldElem],
    ring: &RingSpec,
) -> bool {
    ns.atoms.iter().all(|atom| eval_atom(atom, assignment, ring))
}

pub(crate) fn eval_atom(atom: &NormalAtom, assignment: &[FieldElem], ring: &RingSpec) -> bool {
    match atom {
        NormalAtom::Eq0(l) => l.eval(assignment).is_zero(),
        NormalAtom::Neq0(l) => !l.eval(assignment).is_zero(),
        NormalAtom::DivBar(a, b) => {
            let bv = b.eval(assignment);
            !bv.is_zero() && ring.divides(&a.eval(assignment), &bv)
        }
        NormalAtom::OrdGt { place_idx, lhs, rhs } => {
            let place = &ring.t_places()[*place_idx];
            let lv = lhs.eval(assignment);
            let rv = rhs.eval(assignment);
            !lv.is_zero() && place.ord(&lv) > place.ord(&rv)
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at {}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    Int(String),
    Dot,
    Amp,
    Pipe,
    Bang,
    Eq,
    Star,
    Plus,
    Minus,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn lex(text: &str) -> Result<Lexer, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, co) = (line, col);
        let bump = |chars: &mut std::iter::Peekable<std::str::Chars>, col: &mut usize| {
            chars.next();
            *col += 1;
        };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => bump(&mut chars, &mut col),
            '.' => {
                toks.push((Tok::Dot, l, co));
                bump(&mut chars, &mut col);
            }
            '&' => {
                toks.push((Tok::Amp, l, co));
                bump(&mut chars, &mut col);
            }
            '|' => {
                toks.push((Tok::Pipe, l, co));
                bump(&mut chars, &mut col);
            }
            '!' => {
                toks.push((Tok::Bang, l, co));
                bump(&mut chars, &mut col);
            }
            '=' => {
                toks.push((Tok::Eq, l, co));
                bump(&mut chars, &mut col);
            }
            '*' => {
                toks.push((Tok::Star, l, co));
                bump(&mut chars, &mut col);
            }
            '+' => {
                toks.push((Tok::Plus, l, co));
                bump(&mut chars, &mut col);
            }
            '-' => {
                toks.push((Tok::Minus, l, co));
                bump(&mut chars, &mut col);
            }
            '^' => {
                toks.push((Tok::Caret, l, co));
                bump(&mut chars, &mut col);
            }
            '(' => {
                toks.push((Tok::LParen, l, co));
                bump(&mut chars, &mut col);
            }
            ')' => {
                toks.push((Tok::RParen, l, co));
                bump(&mut chars, &mut col);
            }
            ',' => {
                toks.push((Tok::Comma, l, co));
                bump(&mut chars, &mut col);
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        s.push(d);
                        bump(&mut chars, &mut col);
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Int(s), l, co));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        bump(&mut chars, &mut col);
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(s), l, co));
            }
            other => {
                return Err(ParseError {
                    line: l,
                    col: co,
                    message: format!("unexpected character `{}`", other),
                })
            }
        }
    }
    Ok(Lexer { toks, pos: 0 })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn next_tok(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|&(_, l, c)| (l, c))
            .unwrap_or((1, 1))
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError { line, col, message: message.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {}", what)))
        }
    }
}

struct Parser {
    lx: Lexer,
    base: Base,
    vars: Vec<String>,
}

/// Parse the ASCII sentence grammar over the given base ring.
pub fn parse(text: &str, base: Base) -> Result<Sentence, ParseError> {
    let mut parser = Parser { lx: lex(text)?, base, vars: Vec::new() };
    let s = parser.sentence()?;
    if parser.lx.peek().is_some() {
        return Err(parser.lx.err("trailing input after sentence"));
    }
    Ok(s)
}

impl Parser {
    fn sentence(&mut self) -> Result<Sentence, ParseError> {
        match self.lx.peek() {
            Some(Tok::Ident(s)) if s == "FALSE" => {
                self.lx.next_tok();
                return Ok(Sentence::new(0, Vec::new()));
            }
            Some(Tok::Ident(s)) if s == "E" => {
                self.lx.next_tok();
            }
            _ => return Err(self.lx.err("expected `E` or `FALSE`")),
        }
        loop {
            match self.lx.peek() {
                Some(Tok::Dot) => {
                    self.lx.next_tok();
                    break;
                }
                Some(Tok::Comma) => {
                    self.lx.next_tok();
                }
                Some(Tok::Ident(name)) => {
                    let name = name.clone();
                    if name == "t" || name == "E" || name == "div" || name == "FALSE" || name == "TRUE" {
                        return Err(self.lx.err(format!("reserved word `{}` cannot be a variable", name)));
                    }
                    if self.vars.contains(&name) {
                        return Err(self.lx.err(format!("duplicate variable `{}`", name)));
                    }
                    if self.vars.len() >= MAX_VARS {
                        return Err(self.lx.err("too many variables"));
                    }
                    self.vars.push(name);
                    self.lx.next_tok();
                }
                _ => return Err(self.lx.err("expected variable name or `.`")),
            }
        }
        if self.lx.peek() == Some(&Tok::Ident("FALSE".into())) {
            self.lx.next_tok();
            return Ok(Sentence::new(self.vars.len(), Vec::new()));
        }
        let mut matrix = vec![self.clause()?];
        while self.lx.peek() == Some(&Tok::Pipe) {
            self.lx.next_tok();
            matrix.push(self.clause()?);
        }
        Ok(Sentence::new(self.vars.len(), matrix))
    }

    fn clause(&mut self) -> Result<Vec<Literal>, ParseError> {
        if self.lx.peek() == Some(&Tok::Ident("TRUE".into())) {
            self.lx.next_tok();
            return Ok(Vec::new());
        }
        let mut lits = vec![self.literal()?];
        while self.lx.peek() == Some(&Tok::Amp) {
            self.lx.next_tok();
            lits.push(self.literal()?);
        }
        Ok(lits)
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        if self.lx.peek() == Some(&Tok::Bang) {
            self.lx.next_tok();
            let parens = self.lx.peek() == Some(&Tok::LParen);
            if parens {
                self.lx.next_tok();
            }
            let atom = self.atom()?;
            if parens {
                self.lx.expect(Tok::RParen, "`)`")?;
            }
            return Ok(match atom {
                Literal::Eq(l) => Literal::NegEq(l),
                Literal::Div(a, b) => Literal::NegDiv(a, b),
                other => other,
            });
        }
        if self.lx.peek() == Some(&Tok::LParen) {
            self.lx.next_tok();
            let atom = self.atom()?;
            self.lx.expect(Tok::RParen, "`)`")?;
            return Ok(atom);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Literal, ParseError> {
        let lhs = self.term()?;
        match self.lx.next_tok() {
            Some(Tok::Eq) => {
                let rhs = self.term()?;
                Ok(Literal::Eq(lhs.sub(&rhs)))
            }
            Some(Tok::Pipe) => {
                let rhs = self.term()?;
                Ok(Literal::Div(lhs, rhs))
            }
            Some(Tok::Ident(s)) if s == "div" => {
                let rhs = self.term()?;
                Ok(Literal::Div(lhs, rhs))
            }
            _ => Err(self.lx.err("expected `=`, `|` or `div` in literal")),
        }
    }

    fn term(&mut self) -> Result<LinTerm, ParseError> {
        let mut term = LinTerm::zero(self.base);
        let mut negate = false;
        if self.lx.peek() == Some(&Tok::Minus) {
            self.lx.next_tok();
            negate = true;
        }
        loop {
            let addend = self.addend()?;
            term = if negate { term.sub(&addend) } else { term.add(&addend) };
            match self.lx.peek() {
                Some(Tok::Plus) => {
                    self.lx.next_tok();
                    negate = false;
                }
                Some(Tok::Minus) => {
                    self.lx.next_tok();
                    negate = true;
                }
                _ => break,
            }
        }
        Ok(term)
    }

    /// One addend: `coeff`, `coeff*var`, `var`, or a `t`-monomial (times a
    /// variable) over a polynomial base.
    fn addend(&mut self) -> Result<LinTerm, ParseError> {
        let coeff = match self.lx.peek().cloned() {
            Some(Tok::Int(digits)) => {
                self.lx.next_tok();
                let mut c = self.scalar_from_digits(&digits)?;
                // An immediately following `t` continues the monomial.
                if let Some(Tok::Ident(id)) = self.lx.peek() {
                    if id == "t" {
                        let tpow = self.t_monomial()?;
                        c = c.mul(&tpow);
                    }
                }
                Some(c)
            }
            Some(Tok::Ident(id)) if id == "t" => Some(self.t_monomial()?),
            _ => None,
        };
        match (coeff, self.lx.peek().cloned()) {
            (Some(c), Some(Tok::Star)) => {
                self.lx.next_tok();
                let v = self.variable()?;
                Ok(LinTerm::monomial(v, c))
            }
            (Some(c), _) => Ok(LinTerm::constant(c)),
            (None, Some(Tok::Ident(_))) => {
                let v = self.variable()?;
                Ok(LinTerm::var(self.base, v))
            }
            _ => Err(self.lx.err("expected coefficient, variable or constant")),
        }
    }

    fn t_monomial(&mut self) -> Result<Scalar, ParseError> {
        match self.base {
            Base::Poly { p } => {
                self.lx.next_tok(); // consume `t`
                let deg = if self.lx.peek() == Some(&Tok::Caret) {
                    self.lx.next_tok();
                    match self.lx.next_tok() {
                        Some(Tok::Int(d)) => d
                            .parse::<usize>()
                            .map_err(|_| self.lx.err("exponent out of range"))?,
                        _ => return Err(self.lx.err("expected exponent after `^`")),
                    }
                } else {
                    1
                };
                Ok(Scalar::Poly(PolyFp::monomial(p, 1, deg)))
            }
            Base::Int => Err(self.lx.err("`t` is only available over a polynomial base")),
        }
    }

    fn scalar_from_digits(&self, digits: &str) -> Result<Scalar, ParseError> {
        match self.base {
            Base::Int => digits
                .parse::<num_bigint::BigInt>()
                .map(Scalar::Int)
                .map_err(|_| self.lx.err("bad integer literal")),
            Base::Poly { p } => {
                let v = digits
                    .parse::<u64>()
                    .map_err(|_| self.lx.err("coefficient literal too large"))?;
                Ok(Scalar::Poly(PolyFp::constant(p, v % p)))
            }
        }
    }

    fn variable(&mut self) -> Result<usize, ParseError> {
        match self.lx.next_tok() {
            Some(Tok::Ident(name)) => self
                .vars
                .iter()
                .position(|v| *v == name)
                .ok_or_else(|| self.lx.err(format!("unknown variable `{}`", name))),
            _ => Err(self.lx.err("expected variable name")),
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Canonical printing; the output re-parses to an equal sentence.
pub fn render(s: &Sentence) -> String {
    if s.matrix.is_empty() && s.var_count == 0 {
        return "FALSE".to_string();
    }
    let vars: Vec<String> = (1..=s.var_count).map(|i| format!("x{}", i)).collect();
    let header = if vars.is_empty() {
        "E .".to_string()
    } else {
        format!("E {} .", vars.join(" "))
    };
    if s.matrix.is_empty() {
        return format!("{} FALSE", header);
    }
    let body = s
        .matrix
        .iter()
        .map(|clause| {
            if clause.is_empty() {
                "TRUE".to_string()
            } else {
                clause.iter().map(render_literal).collect::<Vec<_>>().join(" & ")
            }
        })
        .collect::<Vec<_>>()
        .join(" | ");
    format!("{} {}", header, body)
}

fn render_literal(lit: &Literal) -> String {
    match lit {
        Literal::Eq(l) => format!("{} = 0", render_term(l)),
        Literal::NegEq(l) => format!("!({} = 0)", render_term(l)),
        Literal::Div(a, b) => format!("{} div {}", render_term(a), render_term(b)),
        Literal::NegDiv(a, b) => format!("!({} div {})", render_term(a), render_term(b)),
    }
}

/// Renders a linear term as a sum of monomial addends; polynomial
/// coefficients are decomposed into `t`-monomials so the output stays within
/// the grammar.
pub fn render_term(l: &LinTerm) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (&i, c) in l.coeffs() {
        let var = format!("x{}", i + 1);
        match c {
            Scalar::Int(v) => {
                if v.to_string() == "1" {
                    parts.push(format!("+{}", var));
                } else if v.to_string() == "-1" {
                    parts.push(format!("-{}", var));
                } else if v.to_string().starts_with('-') {
                    parts.push(format!("-{}*{}", v.magnitude(), var));
                } else {
                    parts.push(format!("+{}*{}", v, var));
                }
            }
            Scalar::Poly(q) => {
                for (deg, &coeff) in q.coeffs().iter().enumerate() {
                    if coeff == 0 {
                        continue;
                    }
                    let mono = mono_string(coeff, deg);
                    if mono == "1" {
                        parts.push(format!("+{}", var));
                    } else {
                        parts.push(format!("+{}*{}", mono, var));
                    }
                }
            }
        }
    }
    match l.constant_part() {
        Scalar::Int(v) => {
            if !num_traits::Zero::is_zero(v) {
                if v.to_string().starts_with('-') {
                    parts.push(format!("-{}", v.magnitude()));
                } else {
                    parts.push(format!("+{}", v));
                }
            }
        }
        Scalar::Poly(q) => {
            for (deg, &coeff) in q.coeffs().iter().enumerate() {
                if coeff != 0 {
                    parts.push(format!("+{}", mono_string(coeff, deg)));
                }
            }
        }
    }
    if parts.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, p) in parts.iter().enumerate() {
        if i == 0 {
            if let Some(rest) = p.strip_prefix('+') {
                out.push_str(rest);
            } else {
                out.push_str(p);
            }
        } else {
            out.push_str(p);
        }
    }
    out
}

fn mono_string(coeff: u64, deg: usize) -> String {
    match (coeff, deg) {
        (c, 0) => format!("{}", c),
        (1, 1) => "t".to_string(),
        (c, 1) => format!("{}t", c),
        (1, d) => format!("t^{}", d),
        (c, d) => format!("{}t^{}", c, d),
    }
}

impl fmt::Display for NormalAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalAtom::DivBar(a, b) => write!(f, "{} || {}", render_term(a), render_term(b)),
            NormalAtom::Eq0(l) => write!(f, "{} = 0", render_term(l)),
            NormalAtom::Neq0(l) => write!(f, "{} != 0", render_term(l)),
            NormalAtom::OrdGt { place_idx, lhs, rhs } => write!(
                f,
                "o{}({}, {})",
                place_idx + 1,
                render_term(lhs),
                render_term(rhs)
            ),
        }
    }
}

impl fmt::Display for NormalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "TRUE");
        }
        let parts: Vec<String> = self.atoms.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join(" & "))
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.systems.is_empty() {
            return write!(f, "FALSE");
        }
        for (i, sys) in self.systems.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}", sys)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::places::Place;

    fn zbase() -> Base {
        Base::Int
    }

    fn ring2() -> RingSpec {
        RingSpec::cofinite(Base::Int, vec![Place::prime(2).unwrap()]).unwrap()
    }

    fn fe(n: i64) -> FieldElem {
        FieldElem::from_i64(Base::Int, n)
    }

    #[test]
    fn parse_examples() {
        let s = parse("E x1 . 2*x1 | x1 + 1", zbase()).unwrap();
        assert_eq!(s.var_count(), 1);
        let expected = Literal::Div(
            LinTerm::monomial(0, Scalar::int(2)),
            LinTerm::var(zbase(), 0).plus_constant(&Scalar::int(1)),
        );
        assert_eq!(s.matrix(), &[vec![expected]]);

        let s = parse("E x1 . x1 = 0 & !(x1 | 1)", zbase()).unwrap();
        assert_eq!(
            s.matrix(),
            &[vec![
                Literal::Eq(LinTerm::var(zbase(), 0)),
                Literal::NegDiv(
                    LinTerm::var(zbase(), 0),
                    LinTerm::constant(Scalar::int(1))
                ),
            ]]
        );

        let f3 = Base::Poly { p: 3 };
        let s = parse("E x1 . t*x1 | 1", f3).unwrap();
        assert_eq!(
            s.matrix(),
            &[vec![Literal::Div(
                LinTerm::monomial(0, Scalar::Poly(PolyFp::t(3))),
                LinTerm::constant(Scalar::one(f3))
            )]]
        );
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse("E x1 . x1", zbase()).is_err());
        assert!(parse("E x1 . t*x1 = 0", zbase()).is_err());
        assert!(parse("x1 = 0", zbase()).is_err());
        assert!(parse("E x1 . x1 = 0 extra", zbase()).is_err());
        assert!(parse("E x1 x1 . x1 = 0", zbase()).is_err());
        assert!(parse("E x1 . y = 0", zbase()).is_err());
    }

    #[test]
    fn render_examples() {
        let s = Sentence::new(1, vec![vec![Literal::Eq(LinTerm::var(zbase(), 0))]]);
        assert_eq!(render(&s), "E x1 . x1 = 0");
        assert_eq!(render(&Sentence::new(0, vec![])), "FALSE");
        assert_eq!(render(&Sentence::new(2, vec![])), "E x1 x2 . FALSE");
    }

    #[test]
    fn roundtrip_blocks() {
        let cases = [
            "E x1 . 2*x1 | x1 + 1",
            "E x1 x2 . x1 + x2 = 1 & 2 div x1 | !(x2 = 0)",
            "E x1 . -3*x1 - 5 = 0",
        ];
        for text in cases {
            let s = parse(text, zbase()).unwrap();
            let rendered = render(&s);
            let s2 = parse(&rendered, zbase()).unwrap();
            assert_eq!(s, s2, "roundtrip failed for `{}` -> `{}`", text, rendered);
        }
        let f3 = Base::Poly { p: 3 };
        let s = parse("E x1 . t^2*x1 + 2t*x1 + t + 2 = 0", f3).unwrap();
        let s2 = parse(&render(&s), f3).unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn normalize_div_per_rewrite() {
        let t = vec![Place::prime(2).unwrap()];
        let s = parse("E x1 x2 . x1 | x2", zbase()).unwrap();
        let nf = normalize(&s, &t);
        assert_eq!(nf.systems.len(), 2);
        assert_eq!(
            nf.systems[0].atoms,
            vec![NormalAtom::Eq0(LinTerm::var(zbase(), 1))]
        );
        assert_eq!(
            nf.systems[1].atoms,
            vec![NormalAtom::DivBar(
                LinTerm::var(zbase(), 0),
                LinTerm::var(zbase(), 1)
            )]
        );
    }

    #[test]
    fn normalize_negdiv_per_rewrite() {
        let t = vec![Place::prime(2).unwrap(), Place::prime(3).unwrap()];
        let s = parse("E x1 x2 . !(x1 | x2)", zbase()).unwrap();
        let nf = normalize(&s, &t);
        assert_eq!(nf.systems.len(), 3);
        assert_eq!(
            nf.systems[0].atoms,
            vec![
                NormalAtom::Eq0(LinTerm::var(zbase(), 0)),
                NormalAtom::Neq0(LinTerm::var(zbase(), 1)),
            ]
        );
        for (j, sys) in nf.systems[1..].iter().enumerate() {
            assert_eq!(
                sys.atoms,
                vec![NormalAtom::OrdGt {
                    place_idx: j,
                    lhs: LinTerm::var(zbase(), 0),
                    rhs: LinTerm::var(zbase(), 1),
                }]
            );
        }
    }

    #[test]
    fn normalize_negeq() {
        let t = vec![Place::prime(2).unwrap()];
        let s = parse("E x1 . !(x1 = 0)", zbase()).unwrap();
        let nf = normalize(&s, &t);
        assert_eq!(nf.systems.len(), 1);
        assert_eq!(nf.systems[0].atoms, vec![NormalAtom::Neq0(LinTerm::var(zbase(), 0))]);
    }

    #[test]
    fn eval_examples() {
        let ring = ring2();
        let s = parse("E x1 . 2 | x1", zbase()).unwrap();
        assert!(eval_sentence(&s, &[fe(6)], &ring).unwrap());
        let s = parse("E x1 . x1 | 1", zbase()).unwrap();
        // 3 is a unit of the ring integral at 2.
        assert!(eval_sentence(&s, &[fe(3)], &ring).unwrap());
        let atom = NormalAtom::OrdGt {
            place_idx: 0,
            lhs: LinTerm::var(zbase(), 0),
            rhs: LinTerm::constant(Scalar::int(1)),
        };
        let ns = NormalSystem { atoms: vec![atom] };
        assert!(eval_normal_system(&ns, &[fe(4)], &ring).unwrap());
        assert!(!eval_normal_system(&ns, &[fe(3)], &ring).unwrap());
    }

    #[test]
    fn eval_rejects_outside_ring() {
        let ring = ring2();
        let s = parse("E x1 . x1 = 0", zbase()).unwrap();
        let half = FieldElem::new(Scalar::int(1), Scalar::int(2));
        assert_eq!(
            eval_sentence(&s, &[half], &ring).unwrap_err(),
            EvalError::OutsideRing { index: 0 }
        );
    }
}
