//! Concrete syntax for programs, states and instance files.
//!
//! ```text
//! #domain term.
//! #functors a/0, b/0, s/1.
//! l1: p(X) :- {X = a}.
//! p(s(Y)) :- {true}, q(Y).
//! q(W) :- {W = a}.
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::constraint::{Constraint, ConstraintAtom, LinRel, State};
use crate::error::{Error, Result};
use crate::program::{Program, Rule};
use crate::term::{Atom, Domain, Signature, Term, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Num(u64),
    Hash,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Colon,
    Neck,
    Slash,
    Plus,
    Minus,
    Rel(LinRel),
    And,
    Or,
    Not,
    Eof,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, msg: String| Error::Parse { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let adv = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            adv(1, &mut i, &mut col);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let next = chars.get(i + 1).copied();
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                adv(1, &mut i, &mut col);
            }
            let word: String = chars[start..i].iter().collect();
            let tok = if c.is_ascii_uppercase() || c == '_' { Tok::Var(word) } else { Tok::Ident(word) };
            out.push(Spanned { tok, line: l0, col: c0 });
            continue;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                adv(1, &mut i, &mut col);
            }
            let word: String = chars[start..i].iter().collect();
            let n = word.parse::<u64>().map_err(|_| err(l0, c0, format!("numeral `{word}` out of range")))?;
            out.push(Spanned { tok: Tok::Num(n), line: l0, col: c0 });
            continue;
        } else {
            match (c, next) {
                (':', Some('-')) => (Tok::Neck, 2),
                ('=', Some('<')) => (Tok::Rel(LinRel::Le), 2),
                ('<', Some('=')) => (Tok::Rel(LinRel::Le), 2),
                ('>', Some('=')) => (Tok::Rel(LinRel::Ge), 2),
                ('\\', Some('=')) => (Tok::Rel(LinRel::Neq), 2),
                ('/', Some('\\')) => (Tok::And, 2),
                ('\\', Some('/')) => (Tok::Or, 2),
                ('=', _) => (Tok::Rel(LinRel::Eq), 1),
                ('<', _) => (Tok::Rel(LinRel::Lt), 1),
                ('>', _) => (Tok::Rel(LinRel::Gt), 1),
                ('≠', _) => (Tok::Rel(LinRel::Neq), 1),
                ('≤', _) => (Tok::Rel(LinRel::Le), 1),
                ('≥', _) => (Tok::Rel(LinRel::Ge), 1),
                ('∧', _) => (Tok::And, 1),
                ('∨', _) => (Tok::Or, 1),
                ('¬', _) | ('~', _) => (Tok::Not, 1),
                ('#', _) => (Tok::Hash, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBracket, 1),
                (']', _) => (Tok::RBracket, 1),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', _) => (Tok::Dot, 1),
                (':', _) => (Tok::Colon, 1),
                ('/', _) => (Tok::Slash, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                _ => return Err(err(l0, c0, format!("unexpected character `{c}`"))),
            }
        };
        let (tok, n) = tok;
        adv(n, &mut i, &mut col);
        out.push(Spanned { tok, line: l0, col: c0 });
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Var(s) => format!("`{s}`"),
        Tok::Num(n) => format!("`{n}`"),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    sig: Signature,
    scope: BTreeMap<String, Var>,
    scope_index: u32,
    anon: usize,
    arities: BTreeMap<String, usize>,
}

impl Parser {
    fn new(src: &str, sig: Signature) -> Result<Parser> {
        Ok(Parser { toks: lex(src)?, pos: 0, sig, scope: BTreeMap::new(), scope_index: 0, anon: 0, arities: BTreeMap::new() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn line(&self) -> usize {
        self.toks[self.pos].line
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        let t = &self.toks[self.pos];
        Error::Parse { line: t.line, col: t.col, msg: msg.into() }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}, found {}", describe(self.peek()))))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            other => {
                self.pos -= 1;
                Err(self.error(format!("expected {what}, found {}", describe(&other))))
            }
        }
    }

    fn new_scope(&mut self, index: u32) {
        self.scope.clear();
        self.scope_index = index;
    }

    fn var(&mut self, name: &str) -> Var {
        if name == "_" {
            self.anon += 1;
            return Var::with_index(&format!("_G{}", self.anon), self.scope_index);
        }
        let index = self.scope_index;
        self.scope.entry(name.to_string()).or_insert_with(|| Var::with_index(name, index)).clone()
    }

    fn header(&mut self) -> Result<()> {
        let mut domain = None;
        let mut functors: Vec<(String, usize)> = Vec::new();
        let mut predicates: Vec<(String, usize)> = Vec::new();
        while self.peek() == &Tok::Hash {
            self.bump();
            let key = self.ident("directive name")?;
            match key.as_str() {
                "domain" => {
                    let d = self.ident("`term` or `nat`")?;
                    domain = Some(match d.as_str() {
                        "term" => Domain::Term,
                        "nat" => Domain::Nat,
                        _ => return Err(self.error(format!("unknown domain `{d}`"))),
                    });
                }
                "functors" => functors.extend(self.indicators()?),
                "predicates" => predicates.extend(self.indicators()?),
                _ => return Err(self.error(format!("unknown directive `#{key}`"))),
            }
            self.expect(Tok::Dot, "`.` after directive")?;
        }
        let domain = domain.ok_or_else(|| self.error("missing `#domain term.` or `#domain nat.` directive"))?;
        let mut sig = match domain {
            Domain::Term => {
                if !functors.iter().any(|(_, n)| *n == 0) {
                    return Err(self.error("a finite-tree signature needs at least one constant in `#functors`"));
                }
                Signature::term(functors.iter().map(|(f, n)| (f.as_str(), *n)))
            }
            Domain::Nat => {
                if !functors.is_empty() {
                    return Err(self.error("`#functors` is not allowed with `#domain nat.`"));
                }
                Signature::nat()
            }
        };
        sig = sig.with_predicates(predicates.iter().map(|(p, n)| (p.as_str(), *n)));
        for (p, n) in predicates {
            self.arities.insert(p, n);
        }
        self.sig = sig;
        Ok(())
    }

    fn indicators(&mut self) -> Result<Vec<(String, usize)>> {
        let mut out = Vec::new();
        loop {
            let name = match self.bump() {
                Tok::Ident(s) => s,
                Tok::Num(n) => n.to_string(),
                other => {
                    self.pos -= 1;
                    return Err(self.error(format!("expected name/arity, found {}", describe(&other))));
                }
            };
            self.expect(Tok::Slash, "`/`")?;
            let n = match self.bump() {
                Tok::Num(n) => n as usize,
                other => {
                    self.pos -= 1;
                    return Err(self.error(format!("expected arity, found {}", describe(&other))));
                }
            };
            out.push((name, n));
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    fn term(&mut self) -> Result<Term> {
        let mut t = self.primary()?;
        while self.peek() == &Tok::Plus {
            let line = self.line();
            self.bump();
            let r = self.primary()?;
            t = Term::app("+", vec![t, r]);
            self.check_functor("+", 2, line)?;
        }
        Ok(t)
    }

    fn primary(&mut self) -> Result<Term> {
        let line = self.line();
        match self.bump() {
            Tok::Var(name) => Ok(Term::Var(self.var(&name))),
            Tok::Num(n) => {
                self.check_functor(&n.to_string(), 0, line)?;
                Ok(Term::num(n))
            }
            Tok::Ident(f) => {
                let args = self.args()?;
                self.check_functor(&f, args.len(), line)?;
                Ok(Term::App(Arc::from(f.as_str()), args))
            }
            other => {
                self.pos -= 1;
                Err(self.error(format!("expected a term, found {}", describe(&other))))
            }
        }
    }

    fn args(&mut self) -> Result<Vec<Term>> {
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                args.push(self.term()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen, "`)`")?;
        }
        Ok(args)
    }

    fn check_functor(&self, name: &str, arity: usize, line: usize) -> Result<()> {
        if self.sig.has_functor(name, arity) {
            return Ok(());
        }
        if self.sig.domain == Domain::Term {
            if let Some((_, expected)) = self.sig.functors.iter().find(|(f, _)| f.as_ref() == name) {
                return Err(Error::Arity { line, name: name.into(), expected: *expected, found: arity });
            }
        }
        Err(Error::UndeclaredFunctor { line, name: name.into(), arity })
    }

    fn atom(&mut self) -> Result<Atom> {
        let line = self.line();
        let p = self.ident("a predicate name")?;
        let args = self.args()?;
        match self.arities.get(&p) {
            Some(&n) if n != args.len() => return Err(Error::Arity { line, name: p, expected: n, found: args.len() }),
            Some(_) => {}
            None => {
                self.arities.insert(p.clone(), args.len());
            }
        }
        Ok(Atom { predicate: Arc::from(p.as_str()), args })
    }

    /// `disj := conj ('\/' conj)*`
    fn constraint(&mut self, comma_is_and: bool) -> Result<Constraint> {
        let mut parts = vec![self.conj(comma_is_and)?];
        while self.eat(&Tok::Or) {
            parts.push(self.conj(comma_is_and)?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Constraint::Or(parts) })
    }

    fn conj(&mut self, comma_is_and: bool) -> Result<Constraint> {
        let mut parts = vec![self.unary(comma_is_and)?];
        while self.eat(&Tok::And) || (comma_is_and && self.eat(&Tok::Comma)) {
            parts.push(self.unary(comma_is_and)?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Constraint::And(parts) })
    }

    fn unary(&mut self, comma_is_and: bool) -> Result<Constraint> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Constraint::Not(Box::new(self.unary(comma_is_and)?)))
            }
            Tok::LParen => {
                self.bump();
                let c = self.constraint(true)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(c)
            }
            Tok::Ident(w) if (w == "true" || w == "false") && self.peek_at(1) != &Tok::LParen => {
                self.bump();
                Ok(if w == "true" { Constraint::True } else { Constraint::False })
            }
            Tok::Ident(w) if (w == "forall" || w == "exists") && self.peek_at(1) == &Tok::LParen => {
                self.bump();
                self.bump();
                self.expect(Tok::LBracket, "`[`")?;
                let saved = self.scope.clone();
                let mut vars = Vec::new();
                if self.peek() != &Tok::RBracket {
                    loop {
                        match self.bump() {
                            Tok::Var(name) => {
                                let v = Var::with_index(&name, self.scope_index);
                                self.scope.insert(name, v.clone());
                                vars.push(v);
                            }
                            other => {
                                self.pos -= 1;
                                return Err(self.error(format!("expected a variable, found {}", describe(&other))));
                            }
                        }
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBracket, "`]`")?;
                self.expect(Tok::Comma, "`,`")?;
                let body = self.constraint(true)?;
                self.expect(Tok::RParen, "`)`")?;
                for v in &vars {
                    match saved.get(v.name()) {
                        Some(prev) => self.scope.insert(v.name().to_string(), prev.clone()),
                        None => self.scope.remove(v.name()),
                    };
                }
                Ok(if w == "forall" { Constraint::forall(vars, body) } else { Constraint::exists(vars, body) })
            }
            _ => {
                let line = self.line();
                let s = self.term()?;
                let rel = match self.bump() {
                    Tok::Rel(r) => r,
                    other => {
                        self.pos -= 1;
                        return Err(self.error(format!("expected a relation, found {}", describe(&other))));
                    }
                };
                let t = self.term()?;
                Constraint::relation(self.sig.domain, &s, rel, &t).map_err(|e| match e {
                    Error::Domain(msg) => Error::Parse { line, col: 1, msg },
                    other => other,
                })
            }
        }
    }

    /// `{C} A1, ..., An` with the block optional.
    fn state(&mut self) -> Result<State> {
        let constraint = if self.eat(&Tok::LBrace) {
            let c = self.constraint(true)?;
            self.expect(Tok::RBrace, "`}`")?;
            c
        } else {
            Constraint::True
        };
        let mut goal = Vec::new();
        if matches!(self.peek(), Tok::Ident(_)) {
            loop {
                goal.push(self.atom()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        Ok(State::new(constraint, goal))
    }

    fn rule(&mut self, labels: &mut BTreeSet<String>, count: usize) -> Result<Rule> {
        self.new_scope(0);
        let line = self.line();
        let label = match (self.peek().clone(), self.peek_at(1).clone()) {
            (Tok::Ident(l), Tok::Colon) => {
                self.bump();
                self.bump();
                l
            }
            _ => format!("l{}", count + 1),
        };
        if !labels.insert(label.clone()) {
            return Err(Error::DuplicateLabel(label));
        }
        let head = self.atom()?;
        let mut guards = Vec::new();
        let mut body = Vec::new();
        if self.eat(&Tok::Neck) {
            loop {
                if self.eat(&Tok::LBrace) {
                    guards.push(self.constraint(true)?);
                    self.expect(Tok::RBrace, "`}`")?;
                } else if matches!(self.peek(), Tok::Ident(w) if w == "true") && self.peek_at(1) != &Tok::LParen {
                    self.bump();
                } else {
                    body.push(self.atom()?);
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::Dot, "`.` at end of rule")?;
        let guard = if guards.len() == 1 { guards.pop().unwrap() } else { Constraint::conj(guards) };
        Ok(Rule { label: Arc::from(label.as_str()), head, guard, body, line })
    }
}

/// Parses a program. Guard satisfiability is checked by [`Program::check_guards`].
pub fn parse_program_unchecked(src: &str) -> Result<Program> {
    let mut p = Parser::new(src, Signature::nat())?;
    p.header()?;
    let mut labels = BTreeSet::new();
    let mut rules = Vec::new();
    while p.peek() != &Tok::Eof {
        let r = p.rule(&mut labels, rules.len())?;
        rules.push(r);
    }
    let mut sig = p.sig.clone();
    for (name, n) in &p.arities {
        sig.predicates.insert((Arc::from(name.as_str()), *n));
    }
    Ok(Program { signature: sig, rules })
}

/// Parses a program and rejects rules whose guard is unsatisfiable.
pub fn parse_program(src: &str) -> Result<Program> {
    let program = parse_program_unchecked(src)?;
    program.check_guards()?;
    Ok(program)
}

fn parser_for(src: &str, sig: &Signature) -> Result<Parser> {
    let mut p = Parser::new(src, sig.clone())?;
    for (name, n) in &sig.predicates {
        p.arities.insert(name.to_string(), *n);
    }
    Ok(p)
}

/// Parses `{C} A1, ..., An` against a signature.
pub fn parse_state(src: &str, sig: &Signature) -> Result<State> {
    let mut p = parser_for(src, sig)?;
    let s = p.state()?;
    p.eat(&Tok::Dot);
    if p.peek() != &Tok::Eof {
        return Err(p.error(format!("unexpected {} after state", describe(p.peek()))));
    }
    Ok(s)
}

/// Parses a constraint against a signature.
pub fn parse_constraint(src: &str, sig: &Signature) -> Result<Constraint> {
    let mut p = parser_for(src, sig)?;
    let c = p.constraint(true)?;
    if p.peek() != &Tok::Eof {
        return Err(p.error(format!("unexpected {} after constraint", describe(p.peek()))));
    }
    Ok(c)
}

/// Parses a single constraint atom `{C} A`.
pub fn parse_constraint_atom(src: &str, sig: &Signature) -> Result<ConstraintAtom> {
    let s = parse_state(src, sig)?;
    single(s, 1)
}

fn single(s: State, line: usize) -> Result<ConstraintAtom> {
    if s.goal.len() != 1 {
        return Err(Error::Parse { line, col: 1, msg: format!("expected exactly one atom, found {}", s.goal.len()) });
    }
    let mut goal = s.goal;
    Ok(ConstraintAtom::new(s.constraint, goal.pop().unwrap()))
}

/// Sections of an instance file, each a list of constraint atoms with their
/// whitespace-free source text.
#[derive(Clone, Debug)]
pub struct Instance {
    pub signature: Signature,
    pub sections: BTreeMap<String, Vec<(String, ConstraintAtom)>>,
}

impl Instance {
    pub fn section(&self, name: &str) -> &[(String, ConstraintAtom)] {
        self.sections.get(name).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Parses an instance file: a domain header followed by `[Name]` sections
/// of `{C} A.` entries. Sections listed in `shared` use one variable scope;
/// every other entry gets its own.
pub fn parse_instance(src: &str, shared: &[&str]) -> Result<Instance> {
    let mut p = Parser::new(src, Signature::nat())?;
    p.header()?;
    let mut sections: BTreeMap<String, Vec<(String, ConstraintAtom)>> = BTreeMap::new();
    let mut current: Option<String> = None;
    let mut next_scope = 1;
    while p.peek() != &Tok::Eof {
        if p.eat(&Tok::LBracket) {
            let mut name = String::new();
            while p.peek() != &Tok::RBracket && p.peek() != &Tok::Eof {
                name.push_str(&match p.bump() {
                    Tok::Ident(s) | Tok::Var(s) => s,
                    Tok::Plus => "+".into(),
                    Tok::Minus => "-".into(),
                    Tok::Rel(LinRel::Eq) => "=".into(),
                    other => return Err(p.error(format!("unexpected {} in section name", describe(&other)))),
                });
            }
            p.expect(Tok::RBracket, "`]`")?;
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some(name) = current.clone() else { return Err(p.error("entry before the first `[Section]` header")) };
        if shared.contains(&name.as_str()) {
            p.scope_index = 0;
        } else {
            p.new_scope(next_scope);
            next_scope += 1;
        }
        let start = p.pos;
        let line = p.line();
        let s = p.state()?;
        let text: String = source_text(src, &p.toks[start..p.pos]);
        p.expect(Tok::Dot, "`.` after entry")?;
        sections.entry(name).or_default().push((text, single(s, line)?));
    }
    Ok(Instance { signature: p.sig, sections })
}

fn source_text(src: &str, toks: &[Spanned]) -> String {
    let (Some(first), Some(last)) = (toks.first(), toks.last()) else { return String::new() };
    let lines: Vec<&str> = src.lines().collect();
    let mut out = String::new();
    for line in first.line..=last.line.max(first.line) {
        let text = lines.get(line - 1).copied().unwrap_or("");
        let text = text.split('%').next().unwrap_or("");
        out.push_str(text);
    }
    let _ = last;
    out.chars().filter(|c| !c.is_whitespace()).collect::<String>().trim_end_matches('.').to_string()
}
