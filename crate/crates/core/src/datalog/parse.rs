//! Recursive-descent parser for the Datalog text grammar.
//!
//! Facts are `atom(arg, ...).`; rules are `head :- b1, ..., bn.`.
//! Identifiers start lowercase, variables start uppercase (or `_`),
//! quoted atoms `'...'` carry arbitrary constants, `%` starts a comment.
//! Ground compound arguments are allowed and flatten to canonical text.

use thiserror::Error;

use super::ast::{GroundAtom, Pattern, Program, Rule, Term};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("rule {label} violates range restriction: head variable {var} not bound in body")]
    RangeRestriction { label: String, var: String },
    #[error("fact at line {line} contains variable {var}")]
    VariableInFact { line: usize, var: String },
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut parser = Parser::new(text);
    let mut program = Program::default();
    loop {
        parser.skip_ws();
        if parser.at_end() {
            break;
        }
        let clause_line = parser.line;
        let head = parser.pattern()?;
        parser.skip_ws();
        if parser.eat_str(":-") {
            let mut body = vec![parser.pattern()?];
            loop {
                parser.skip_ws();
                if parser.eat(',') {
                    body.push(parser.pattern()?);
                } else {
                    break;
                }
            }
            parser.expect('.')?;
            let label = format!("R{}", program.rules.len() + 1);
            let rule = Rule { label, head, body };
            check_range_restriction(&rule)?;
            program.rules.push(rule);
        } else {
            parser.expect('.')?;
            let atom = ground(&head).map_err(|var| ParseError::VariableInFact {
                line: clause_line,
                var,
            })?;
            program.facts.push(atom);
        }
    }
    Ok(program)
}

fn ground(pattern: &Pattern) -> Result<GroundAtom, String> {
    let mut args = Vec::with_capacity(pattern.args.len());
    for term in &pattern.args {
        match term {
            Term::Const(c) => args.push(c.clone()),
            Term::Var(v) => return Err(v.clone()),
            Term::Anon => return Err("_".to_string()),
        }
    }
    Ok(GroundAtom::new(pattern.pred.clone(), args))
}

fn check_range_restriction(rule: &Rule) -> Result<(), ParseError> {
    for term in &rule.head.args {
        if let Term::Var(v) = term {
            let bound = rule
                .body
                .iter()
                .any(|p| p.args.iter().any(|t| matches!(t, Term::Var(b) if b == v)));
            if !bound {
                return Err(ParseError::RangeRestriction {
                    label: rule.label.clone(),
                    var: v.clone(),
                });
            }
        }
    }
    Ok(())
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'%') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c as u8) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(s.as_bytes()) {
            for _ in 0..s.len() {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{c}`")))
        }
    }

    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col,
            msg: msg.to_string(),
        }
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        self.skip_ws();
        let pred = self.identifier()?;
        let mut args = Vec::new();
        if self.eat('(') {
            loop {
                args.push(self.term()?);
                self.skip_ws();
                if self.eat(',') {
                    continue;
                }
                self.expect(')')?;
                break;
            }
        }
        Ok(Pattern { pred, args })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'\'') => Ok(Term::Const(self.quoted()?)),
            Some(b) if b.is_ascii_digit() => Ok(Term::Const(self.number())),
            Some(b'_') => {
                self.bump();
                // `_` alone is anonymous; `_x`-style names are variables
                let rest = self.ident_tail();
                if rest.is_empty() {
                    Ok(Term::Anon)
                } else {
                    Ok(Term::Var(format!("_{rest}")))
                }
            }
            Some(b) if b.is_ascii_uppercase() => {
                let name = self.ident_tail();
                Ok(Term::Var(name))
            }
            Some(b) if b.is_ascii_lowercase() => {
                let name = self.ident_tail();
                if self.peek() == Some(b'(') {
                    // ground compound argument, flattened to canonical text
                    self.bump();
                    let mut inner = Vec::new();
                    loop {
                        match self.term()? {
                            Term::Const(c) => inner.push(c),
                            Term::Var(v) => {
                                return Err(self.err(&format!(
                                    "variable {v} not allowed inside compound argument"
                                )))
                            }
                            Term::Anon => {
                                return Err(self
                                    .err("`_` not allowed inside compound argument"))
                            }
                        }
                        self.skip_ws();
                        if self.eat(',') {
                            continue;
                        }
                        self.expect(')')?;
                        break;
                    }
                    Ok(Term::Const(
                        GroundAtom::new(name, inner).canonical(),
                    ))
                } else {
                    Ok(Term::Const(name))
                }
            }
            _ => Err(self.err("expected term")),
        }
    }

    fn identifier(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b) if b.is_ascii_lowercase() => Ok(self.ident_tail()),
            _ => Err(self.err("expected identifier")),
        }
    }

    fn ident_tail(&mut self) -> String {
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_alphanumeric() || b == b'_' {
                self.bump();
            } else {
                break;
            }
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> String {
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_digit() {
                self.bump();
            } else {
                break;
            }
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn quoted(&mut self) -> Result<String, ParseError> {
        self.bump(); // opening quote
        let start = self.pos;
        loop {
            match self.peek() {
                Some(b'\'') => {
                    let value = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                    self.bump();
                    return Ok(value);
                }
                Some(_) => {
                    self.bump();
                }
                None => return Err(self.err("unterminated quoted atom")),
            }
        }
    }
}
