use super::parser::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Word(String),
    Num(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Num(n) => format!("number {n}"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub column: usize,
}

pub(crate) struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self { chars: text.chars().peekable(), line: 1, column: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, column: self.column }
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    pub(crate) fn next_token(&mut self) -> Result<(Tok, Pos), ParseError> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(&c) = self.chars.peek() else {
            return Ok((Tok::Eof, pos));
        };
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = single {
            self.bump();
            return Ok((tok, pos));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(&c) = self.chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            return Ok((Tok::Word(word), pos));
        }
        if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
            return self.number(pos);
        }
        Err(ParseError::at(pos, format!("unexpected character {c:?}")))
    }

    fn number(&mut self, pos: Pos) -> Result<(Tok, Pos), ParseError> {
        let mut text = String::new();
        if let Some(&s) = self.chars.peek() {
            if s == '-' || s == '+' {
                text.push(s);
                self.bump();
            }
        }
        let mut digits = 0;
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_digit() {
                digits += 1;
            } else if c != '.' {
                break;
            }
            text.push(c);
            self.bump();
        }
        if let Some(&e) = self.chars.peek() {
            if digits > 0 && (e == 'e' || e == 'E') {
                text.push(e);
                self.bump();
                if let Some(&s) = self.chars.peek() {
                    if s == '-' || s == '+' {
                        text.push(s);
                        self.bump();
                    }
                }
                while let Some(&c) = self.chars.peek() {
                    if !c.is_ascii_digit() {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
            }
        }
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() && digits > 0 => Ok((Tok::Num(v), pos)),
            Ok(_) => Err(ParseError::at(pos, format!("number `{text}` is out of range"))),
            Err(_) => Err(ParseError::at(pos, format!("malformed number `{text}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        let mut lx = Lexer::new(s);
        let mut out = vec![];
        loop {
            let (t, _) = lx.next_token().unwrap();
            if t == Tok::Eof {
                return out;
            }
            out.push(t);
        }
    }

    #[test]
    fn numbers() {
        assert_eq!(
            toks("0 -3 2.5 .5 1e3 -1.25E-2"),
            vec![
                Tok::Num(0.0),
                Tok::Num(-3.0),
                Tok::Num(2.5),
                Tok::Num(0.5),
                Tok::Num(1000.0),
                Tok::Num(-0.0125)
            ]
        );
        assert!(Lexer::new("1e999").next_token().is_err());
        assert!(Lexer::new("-").next_token().is_err());
        assert!(Lexer::new("1.2.3").next_token().is_err());
    }

    #[test]
    fn comments_and_positions() {
        let mut lx = Lexer::new("# header\n  term_1 ;");
        let (t, p) = lx.next_token().unwrap();
        assert_eq!(t, Tok::Word("term_1".into()));
        assert_eq!(p, Pos { line: 2, column: 3 });
        let (t, p) = lx.next_token().unwrap();
        assert_eq!(t, Tok::Semi);
        assert_eq!(p, Pos { line: 2, column: 10 });
    }

    #[test]
    fn bad_character() {
        let err = Lexer::new("\n  @").next_token().unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
    }
}
