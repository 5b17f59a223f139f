use std::fmt;

use super::lexer::{Lexer, Pos, Tok};
use super::{Condition, Config, ControllerSpec, RuleDecl, TermDecl, VariableDecl, KEYWORDS};
use crate::fuzzy::MembershipFunction;

/// First lexical or syntax error in a config text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn at(pos: Pos, message: impl Into<String>) -> Self {
        Self { line: pos.line, column: pos.column, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

pub fn parse_config(text: &str) -> Result<Config, ParseError> {
    let mut p = Parser::new(text)?;
    let mut cfg = Config::default();
    loop {
        match &p.tok {
            Tok::Eof => return Ok(cfg),
            Tok::Word(w) if w == "variable" => cfg.variables.push(p.variable()?),
            Tok::Word(w) if w == "controller" => cfg.controllers.push(p.controller()?),
            other => {
                return Err(ParseError::at(
                    p.pos,
                    format!("expected `variable` or `controller`, found {}", other.describe()),
                ))
            }
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    pos: Pos,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(text);
        let (tok, pos) = lexer.next_token()?;
        Ok(Self { lexer, tok, pos })
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, pos) = self.lexer.next_token()?;
        self.tok = tok;
        self.pos = pos;
        Ok(())
    }

    fn unexpected(&self, what: &str) -> ParseError {
        ParseError::at(self.pos, format!("expected {what}, found {}", self.tok.describe()))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.tok == tok {
            self.advance()
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.tok, Tok::Word(w) if w == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.advance()
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match &self.tok {
            Tok::Word(w) if KEYWORDS.contains(&w.as_str()) => Err(ParseError::at(
                self.pos,
                format!("expected identifier, found keyword `{w}`"),
            )),
            Tok::Word(w) => {
                let w = w.clone();
                self.advance()?;
                Ok(w)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.tok {
            Tok::Num(n) => {
                self.advance()?;
                Ok(n)
            }
            _ => Err(self.unexpected("number")),
        }
    }

    fn variable(&mut self) -> Result<VariableDecl, ParseError> {
        self.keyword("variable")?;
        let name = self.ident()?;
        let universe_pos = self.pos;
        self.keyword("universe")?;
        let lo = self.number()?;
        let hi = self.number()?;
        if lo >= hi {
            return Err(ParseError::at(
                universe_pos,
                format!("universe lo ≥ hi ({lo} ≥ {hi}) in variable `{name}`"),
            ));
        }
        self.expect(Tok::LBrace)?;
        let mut terms = vec![self.term()?];
        while self.at_keyword("term") {
            terms.push(self.term()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(VariableDecl { name, lo, hi, terms })
    }

    fn term(&mut self) -> Result<TermDecl, ParseError> {
        self.keyword("term")?;
        let name = self.ident()?;
        let shape_pos = self.pos;
        let kind = match &self.tok {
            Tok::Word(w) if matches!(w.as_str(), "tri" | "trap" | "crisp") => w.clone(),
            _ => return Err(self.unexpected("`tri`, `trap` or `crisp`")),
        };
        self.advance()?;
        let arity = match kind.as_str() {
            "tri" => 3,
            "trap" => 4,
            _ => 2,
        };
        let mut p = Vec::with_capacity(arity);
        for _ in 0..arity {
            p.push(self.number()?);
        }
        let shape = match arity {
            3 => MembershipFunction::triangular(p[0], p[1], p[2]),
            4 => MembershipFunction::trapezoidal(p[0], p[1], p[2], p[3]),
            _ => MembershipFunction::crisp(p[0], p[1]),
        }
        .map_err(|e| ParseError::at(shape_pos, format!("term `{name}`: {e}")))?;
        self.expect(Tok::Semi)?;
        Ok(TermDecl { name, shape })
    }

    fn controller(&mut self) -> Result<ControllerSpec, ParseError> {
        self.keyword("controller")?;
        let name = self.ident()?;
        self.keyword("inputs")?;
        self.expect(Tok::LParen)?;
        let mut inputs = vec![self.ident()?];
        while self.tok == Tok::Comma {
            self.advance()?;
            inputs.push(self.ident()?);
        }
        self.expect(Tok::RParen)?;
        self.keyword("output")?;
        let output = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut rules = vec![self.rule()?];
        while self.at_keyword("rule") {
            rules.push(self.rule()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(ControllerSpec { name, inputs, output, rules })
    }

    fn condition(&mut self) -> Result<Condition, ParseError> {
        let variable = self.ident()?;
        self.keyword("IS")?;
        let term = self.ident()?;
        Ok(Condition { variable, term })
    }

    fn rule(&mut self) -> Result<RuleDecl, ParseError> {
        self.keyword("rule")?;
        self.keyword("IF")?;
        let mut antecedents = vec![self.condition()?];
        while self.at_keyword("AND") {
            self.advance()?;
            antecedents.push(self.condition()?);
        }
        self.keyword("THEN")?;
        let consequent = self.condition()?;
        self.expect(Tok::Semi)?;
        Ok(RuleDecl { antecedents, consequent })
    }
}
