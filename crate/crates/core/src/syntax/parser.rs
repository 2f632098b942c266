use std::collections::HashMap;
use std::path::Path;

use super::lexer::{tokenize, Spanned, Tok};
use super::{Egd, Program, Query, SyntaxError, Tgd};
use crate::model::{Atom, Symbol, Term};

/// Parses a complete program.
pub fn parse_program(text: &str) -> Result<Program, SyntaxError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, arities: HashMap::new(), anon: 0 };
    p.program()
}

pub fn parse_file(path: &Path) -> Result<Program, SyntaxError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SyntaxError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_program(&text)
}

enum Literal {
    Atom(Atom, usize, usize),
    Neq(Term, Term, usize, usize),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    arities: HashMap<Symbol, (usize, usize)>,
    anon: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn advance(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> SyntaxError {
        let (line, col) = self.here();
        SyntaxError::Parse { line, col, message: message.into() }
    }

    fn error_at(line: usize, col: usize, message: impl Into<String>) -> SyntaxError {
        SyntaxError::Parse { line, col, message: message.into() }
    }

    fn expect(&mut self, want: Tok, context: &str) -> Result<Spanned, SyntaxError> {
        if *self.peek() == want {
            Ok(self.advance())
        } else {
            Err(self.error_here(format!(
                "expected {} {context}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn program(&mut self) -> Result<Program, SyntaxError> {
        let mut prog = Program::default();
        while *self.peek() != Tok::Eof {
            self.statement(&mut prog)?;
        }
        Ok(prog)
    }

    fn statement(&mut self, prog: &mut Program) -> Result<(), SyntaxError> {
        if *self.peek() == Tok::Question {
            let q = self.query()?;
            prog.queries.push(q);
            return Ok(());
        }
        let (line, col) = self.here();
        let body = self.literals()?;
        match self.peek().clone() {
            Tok::Dot => {
                self.advance();
                for lit in body {
                    match lit {
                        Literal::Atom(a, l, c) => {
                            if let Some(v) = a.variables().next() {
                                return Err(Self::error_at(l, c, format!("fact {a} contains variable {v}")));
                            }
                            prog.facts.push(a);
                        }
                        Literal::Neq(_, _, l, c) => {
                            return Err(Self::error_at(l, c, "'!=' is only allowed in TGD bodies"));
                        }
                    }
                }
                Ok(())
            }
            Tok::Arrow => {
                self.advance();
                let (atoms, neq) = Self::split_body(body, line, col)?;
                for (a, l, c) in &atoms {
                    Self::reject_nulls(a, *l, *c)?;
                }
                let atoms: Vec<Atom> = atoms.into_iter().map(|(a, _, _)| a).collect();
                if self.is_equality_head() {
                    if let Some((_, _, l, c)) = neq.first() {
                        return Err(Self::error_at(*l, *c, "'!=' is only allowed in TGD bodies"));
                    }
                    for (lhs, rhs) in self.equalities()? {
                        prog.egds.push(Egd { body: atoms.clone(), lhs, rhs });
                    }
                } else {
                    let head = self.head_atoms()?;
                    let neq = neq.into_iter().map(|(a, b, _, _)| (a, b)).collect();
                    prog.tgds.push(Tgd { body: atoms, neq, head });
                }
                self.expect(Tok::Dot, "to end the rule")?;
                Ok(())
            }
            other => Err(self.error_here(format!("expected ',', '.' or '->', found {}", other.describe()))),
        }
    }

    #[allow(clippy::type_complexity)]
    fn split_body(
        body: Vec<Literal>,
        line: usize,
        col: usize,
    ) -> Result<(Vec<(Atom, usize, usize)>, Vec<(Term, Term, usize, usize)>), SyntaxError> {
        let mut atoms = Vec::new();
        let mut neq = Vec::new();
        for lit in body {
            match lit {
                Literal::Atom(a, l, c) => atoms.push((a, l, c)),
                Literal::Neq(a, b, l, c) => neq.push((a, b, l, c)),
            }
        }
        if atoms.is_empty() {
            return Err(Self::error_at(line, col, "rule body needs at least one atom"));
        }
        Ok((atoms, neq))
    }

    fn reject_nulls(a: &Atom, line: usize, col: usize) -> Result<(), SyntaxError> {
        if a.has_nulls() {
            return Err(Self::error_at(line, col, "labelled nulls may only appear in facts"));
        }
        Ok(())
    }

    fn is_equality_head(&self) -> bool {
        matches!(self.peek(), Tok::Var(_) | Tok::Ident(_) | Tok::Number(_) | Tok::Str(_))
            && *self.peek_at(1) == Tok::Eq
    }

    fn equalities(&mut self) -> Result<Vec<(Term, Term)>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            let (line, col) = self.here();
            let lhs = self.term()?;
            self.expect(Tok::Eq, "in equality")?;
            let rhs = self.term()?;
            match (lhs, rhs) {
                (Term::Const(_), Term::Const(_)) => {
                    return Err(Self::error_at(line, col, format!("EGD equates two constants {lhs} = {rhs}")));
                }
                (a, b) if a == b => {
                    return Err(Self::error_at(line, col, format!("EGD equates {a} with itself")));
                }
                (Term::Var(_), Term::Var(_)) => out.push((lhs, rhs)),
                _ => {
                    return Err(Self::error_at(line, col, "EGD sides must be variables"));
                }
            }
            if *self.peek() == Tok::Comma {
                self.advance();
            } else {
                return Ok(out);
            }
        }
    }

    fn head_atoms(&mut self) -> Result<Vec<Atom>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            let (line, col) = self.here();
            if *self.peek() == Tok::Neq || matches!(self.peek_at(1), Tok::Neq) {
                return Err(self.error_here("'!=' is only allowed in TGD bodies"));
            }
            let a = self.atom()?;
            Self::reject_nulls(&a, line, col)?;
            out.push(a);
            if *self.peek() == Tok::Comma {
                self.advance();
            } else {
                return Ok(out);
            }
        }
    }

    fn query(&mut self) -> Result<Query, SyntaxError> {
        self.expect(Tok::Question, "to start a query")?;
        let mut output = Vec::new();
        if *self.peek() == Tok::LParen {
            self.advance();
            if *self.peek() != Tok::RParen {
                loop {
                    let t = self.advance();
                    match t.tok {
                        Tok::Var(name) => output.push(Term::var(&name)),
                        other => {
                            return Err(Self::error_at(
                                t.line,
                                t.col,
                                format!("query outputs must be variables, found {}", other.describe()),
                            ))
                        }
                    }
                    if *self.peek() == Tok::Comma {
                        self.advance();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "to close the query outputs")?;
        }
        let (line, col) = self.here();
        let body = self.literals()?;
        let mut atoms = Vec::new();
        for lit in body {
            match lit {
                Literal::Atom(a, l, c) => {
                    Self::reject_nulls(&a, l, c)?;
                    atoms.push(a);
                }
                Literal::Neq(_, _, l, c) => {
                    return Err(Self::error_at(l, c, "'!=' is only allowed in TGD bodies"));
                }
            }
        }
        if atoms.is_empty() {
            return Err(Self::error_at(line, col, "query body needs at least one atom"));
        }
        for v in &output {
            if !atoms.iter().any(|a| a.args.contains(v)) {
                return Err(Self::error_at(line, col, format!("output variable {v} does not occur in the query body")));
            }
        }
        self.expect(Tok::Dot, "to end the query")?;
        Ok(Query { output, body: atoms })
    }

    fn literals(&mut self) -> Result<Vec<Literal>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            let (line, col) = self.here();
            if *self.peek_at(1) == Tok::Neq {
                let a = self.term()?;
                self.advance();
                let b = self.term()?;
                out.push(Literal::Neq(a, b, line, col));
            } else {
                out.push(Literal::Atom(self.atom()?, line, col));
            }
            if *self.peek() == Tok::Comma {
                self.advance();
            } else {
                return Ok(out);
            }
        }
    }

    fn atom(&mut self) -> Result<Atom, SyntaxError> {
        let t = self.advance();
        let name = match t.tok {
            Tok::Ident(name) => name,
            other => {
                return Err(Self::error_at(
                    t.line,
                    t.col,
                    format!("expected a predicate name, found {}", other.describe()),
                ))
            }
        };
        let open = self.expect(Tok::LParen, &format!("after predicate {name}"))?;
        let mut args = Vec::new();
        loop {
            args.push(self.term()?);
            match self.peek() {
                Tok::Comma => {
                    self.advance();
                }
                Tok::RParen => {
                    self.advance();
                    break;
                }
                other => {
                    return Err(self.error_here(format!(
                        "unclosed '(' of {name} opened at {}:{}: expected ',' or ')', found {}",
                        open.line,
                        open.col,
                        other.describe()
                    )))
                }
            }
        }
        let pred = Symbol::intern(&name);
        match self.arities.get(&pred) {
            Some(&(arity, first_line)) if arity != args.len() => {
                return Err(SyntaxError::ArityConflict {
                    pred: name,
                    first_line,
                    first_arity: arity,
                    line: t.line,
                    arity: args.len(),
                });
            }
            Some(_) => {}
            None => {
                self.arities.insert(pred, (args.len(), t.line));
            }
        }
        Ok(Atom { pred, args })
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        let t = self.advance();
        Ok(match t.tok {
            Tok::Var(name) if name == "_" => {
                self.anon += 1;
                Term::var(&format!("_{}", self.anon))
            }
            Tok::Var(name) => Term::var(&name),
            Tok::Ident(name) | Tok::Number(name) | Tok::Str(name) => Term::constant(&name),
            Tok::Null(id) => Term::null(id),
            other => {
                return Err(Self::error_at(t.line, t.col, format!("expected a term, found {}", other.describe())))
            }
        })
    }
}
