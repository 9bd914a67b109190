//! Recursive-descent parser for the textual policy syntax.
//!
//! Precedence from loosest to tightest: `+ - (-)`, then `pov dov`, then `&&`,
//! then `.`, then the prefix forms `~`, `det` and `guard :`. Every binary
//! operator associates to the left.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{BinOp, Policy};
use crate::schema::{atom_to_set, is_key_char, Atom, AttributeSchema, Guard, GuardBox, Predicate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Parses a closed policy and checks every constraint against the schema.
pub fn parse_policy(text: &str, schema: &AttributeSchema) -> Result<Policy, ParseError> {
    Parser::new(text, Some(schema), false).parse_all()
}

/// Parses a policy pattern whose identifiers (such as `P1`) are metavariables.
/// Guards are checked against the schema when one is given.
pub fn parse_pattern(text: &str, schema: Option<&AttributeSchema>) -> Result<Policy, ParseError> {
    Parser::new(text, schema, true).parse_all()
}

const KEYWORDS: [&str; 9] = ["eps", "det", "pov", "dov", "none", "or", "in", "matches", "not"];

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    schema: Option<&'a AttributeSchema>,
    allow_vars: bool,
}

fn is_value_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, ',' | '{' | '}' | '<' | '>' | '=' | '!' | '"' | '#')
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, schema: Option<&'a AttributeSchema>, allow_vars: bool) -> Self {
        Parser {
            src,
            pos: 0,
            schema,
            allow_vars,
        }
    }

    fn location(&self, pos: usize) -> (usize, usize) {
        let before = &self.src[..pos];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    }

    fn error_at(&self, pos: usize, message: impl Into<String>) -> ParseError {
        let (line, col) = self.location(pos);
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        self.error_at(self.pos, message)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with('#') {
                let end = trimmed.find('\n').unwrap_or(trimmed.len());
                self.pos += end;
            } else {
                return;
            }
        }
    }

    fn peek_char(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    /// Consumes `tok` if the input continues with it.
    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{tok}`, found {}", self.describe_next())))
        }
    }

    fn describe_next(&self) -> String {
        let rest = self.rest().trim_start();
        if rest.is_empty() {
            return "end of input".to_string();
        }
        let tok: String = rest.chars().take_while(|c| !c.is_whitespace()).take(12).collect();
        format!("`{tok}`")
    }

    /// Peeks an identifier-like word at the cursor without consuming it.
    fn peek_word(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if is_ident_start(c) => {}
            _ => return None,
        }
        let end = chars
            .find(|&(_, c)| !is_ident_char(c))
            .map_or(rest.len(), |(i, _)| i);
        Some(&rest[..end])
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_word() == Some(kw) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn parse_all(mut self) -> Result<Policy, ParseError> {
        let p = self.policy()?;
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(self.error(format!("unexpected {}", self.describe_next())));
        }
        Ok(p)
    }

    fn policy(&mut self) -> Result<Policy, ParseError> {
        let mut left = self.prio()?;
        loop {
            let op = if self.eat("(-)") {
                BinOp::Ominus
            } else if self.eat("+") {
                BinOp::Choice
            } else if self.eat("-") {
                BinOp::Minus
            } else {
                return Ok(left);
            };
            let right = self.prio()?;
            left = Policy::bin(op, left, right);
        }
    }

    fn prio(&mut self) -> Result<Policy, ParseError> {
        let mut left = self.par()?;
        loop {
            let op = if self.eat_keyword("pov") {
                BinOp::Pov
            } else if self.eat_keyword("dov") {
                BinOp::Dov
            } else {
                return Ok(left);
            };
            let right = self.par()?;
            left = Policy::bin(op, left, right);
        }
    }

    fn par(&mut self) -> Result<Policy, ParseError> {
        let mut left = self.seq()?;
        while self.eat("&&") {
            let right = self.seq()?;
            left = Policy::par(left, right);
        }
        Ok(left)
    }

    fn seq(&mut self) -> Result<Policy, ParseError> {
        let mut left = self.unary()?;
        while self.eat(".") {
            let right = self.unary()?;
            left = Policy::seq(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Policy, ParseError> {
        if self.eat("~") {
            return Ok(Policy::neg(self.unary()?));
        }
        if self.eat_keyword("det") {
            return Ok(Policy::det(self.unary()?));
        }
        if self.peek_char() == Some('{') || self.peek_word() == Some("none") {
            let g = self.guard()?;
            self.expect(":")?;
            return Ok(Policy::scope(g, self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Policy, ParseError> {
        let start = {
            self.skip_ws();
            self.pos
        };
        if self.eat("(") {
            let p = self.policy()?;
            self.expect(")")?;
            return Ok(p);
        }
        if self.eat("<") {
            let accept = self.guard()?;
            self.expect(",")?;
            let deny = self.guard()?;
            self.expect(">")?;
            return Ok(Policy::rule(accept, deny));
        }
        if let Some(c) = self.peek_char() {
            if c == '0' || c == '1' {
                let next = self.rest()[1..].chars().next();
                if !next.is_some_and(|n| n.is_ascii_alphanumeric() || n == '_') {
                    self.pos += 1;
                    return Ok(if c == '0' { Policy::Zero } else { Policy::One });
                }
            }
        }
        if let Some(word) = self.peek_word() {
            if word == "eps" {
                self.pos += word.len();
                return Ok(Policy::Empty);
            }
            if KEYWORDS.contains(&word) {
                return Err(self.error(format!("unexpected keyword `{word}`")));
            }
            if self.allow_vars {
                self.pos += word.len();
                return Ok(Policy::var(word));
            }
            return Err(self.error_at(start, format!("unknown identifier `{word}`")));
        }
        Err(self.error(format!("expected a policy, found {}", self.describe_next())))
    }

    fn guard(&mut self) -> Result<Guard, ParseError> {
        if self.eat_keyword("none") {
            return Ok(Guard::bottom());
        }
        let mut boxes = vec![self.guard_box()?];
        while self.eat_keyword("or") {
            boxes.push(self.guard_box()?);
        }
        Ok(Guard { boxes })
    }

    fn guard_box(&mut self) -> Result<GuardBox, ParseError> {
        self.expect("{")?;
        let mut atoms = BTreeMap::new();
        if self.eat("}") {
            return Ok(GuardBox { atoms });
        }
        loop {
            self.skip_ws();
            let start = self.pos;
            let atom = self.constraint()?;
            if atoms.contains_key(&atom.key) {
                return Err(self.error_at(start, format!("attribute `{}` constrained twice in one box", atom.key)));
            }
            if let Some(schema) = self.schema {
                atom_to_set(&atom, schema).map_err(|e| self.error_at(start, e.to_string()))?;
            }
            atoms.insert(atom.key.clone(), atom);
            if self.eat("}") {
                return Ok(GuardBox { atoms });
            }
            self.expect(",")?;
        }
    }

    fn key(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest.find(|c: char| !is_key_char(c)).unwrap_or(rest.len());
        if end == 0 {
            return Err(self.error(format!("expected an attribute key, found {}", self.describe_next())));
        }
        self.pos += end;
        Ok(rest[..end].to_string())
    }

    /// A value: a bare word, or a double-quoted string in which only `\"` and
    /// `\\` are escapes, so regular expressions keep their backslashes.
    /// Returns the text and whether it was quoted.
    fn value(&mut self) -> Result<(String, bool), ParseError> {
        self.skip_ws();
        let rest = self.rest();
        if let Some(body) = rest.strip_prefix('"') {
            let mut out = String::new();
            let mut chars = body.char_indices();
            while let Some((i, c)) = chars.next() {
                match c {
                    '"' => {
                        self.pos += i + 2;
                        return Ok((out, true));
                    }
                    '\\' => match chars.next() {
                        Some((_, e @ ('"' | '\\'))) => out.push(e),
                        Some((_, e)) => {
                            out.push('\\');
                            out.push(e);
                        }
                        None => break,
                    },
                    c => out.push(c),
                }
            }
            return Err(self.error("unterminated string"));
        }
        let end = rest.find(|c: char| !is_value_char(c)).unwrap_or(rest.len());
        if end == 0 {
            return Err(self.error(format!("expected a value, found {}", self.describe_next())));
        }
        self.pos += end;
        Ok((rest[..end].to_string(), false))
    }

    fn int_value(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let (v, _) = self.value()?;
        v.parse()
            .map_err(|_| self.error_at(start, format!("expected an integer, found `{v}`")))
    }

    fn constraint(&mut self) -> Result<Atom, ParseError> {
        let key = self.key()?;
        let pred = if self.eat_keyword("in") {
            self.expect("{")?;
            let mut values = Vec::new();
            if !self.eat("}") {
                loop {
                    values.push(self.value()?.0);
                    if self.eat("}") {
                        break;
                    }
                    self.expect(",")?;
                }
            }
            Predicate::InSet(values)
        } else if self.eat_keyword("matches") {
            self.skip_ws();
            if !self.rest().starts_with('"') {
                return Err(self.error("expected a quoted regular expression"));
            }
            Predicate::Regexp(self.value()?.0)
        } else if self.eat("!=") {
            match self.value()? {
                (v, false) if v == "*" => Predicate::None,
                (v, _) => Predicate::Neq(v),
            }
        } else if self.eat(">=") {
            Predicate::Ge(self.int_value()?)
        } else if self.eat("<=") {
            Predicate::Le(self.int_value()?)
        } else if self.eat(">") {
            Predicate::Gt(self.int_value()?)
        } else if self.eat("<") {
            Predicate::Lt(self.int_value()?)
        } else if self.eat("=") {
            match self.value()? {
                (v, false) if v == "*" => Predicate::Any,
                (v, _) => Predicate::Eq(v),
            }
        } else {
            return Err(self.error(format!(
                "expected `=`, `!=`, `<`, `<=`, `>`, `>=`, `in` or `matches`, found {}",
                self.describe_next()
            )));
        };
        Ok(Atom::new(key, pred))
    }
}
