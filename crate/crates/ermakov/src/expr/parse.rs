//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 't' | 'pi' | 'e' | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Whitespace is insignificant. `^` is right-associative and binds tighter
//! than unary minus, so `-t^2` parses as `-(t^2)` while the exponent slot
//! itself admits a sign: `t^-2`. Numeric literals are decimal with an
//! optional exponent; `2e3` is a single literal, while Euler's constant
//! must be separated as in `2*e`.

use std::sync::Arc;

use thiserror::Error;

use super::{BinOp, Expr, Function};

/// Parse failure with the byte offset into the source text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unexpected character `{ch}` at byte {offset}")]
    UnexpectedChar { offset: usize, ch: char },
    #[error("invalid numeric literal `{text}` at byte {offset}")]
    InvalidNumber { offset: usize, text: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("{name} takes 1 argument, found {found} at byte {offset}")]
    ArityMismatch { offset: usize, name: String, found: usize },
    #[error("expected {expected} at byte {offset}")]
    Expected { offset: usize, expected: &'static str },
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected trailing input at byte {offset}")]
    TrailingInput { offset: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Token)>, ParseError> {
        let mut lexer = Lexer { src: src.as_bytes(), pos: 0 };
        let mut out = Vec::new();
        while let Some((offset, token)) = lexer.next_token()? {
            out.push((offset, token));
        }
        Ok(out)
    }

    fn next_token(&mut self) -> Result<Option<(usize, Token)>, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let byte = self.src[start];
        let token = match byte {
            b'+' => {
                self.pos += 1;
                Token::Plus
            }
            b'-' => {
                self.pos += 1;
                Token::Minus
            }
            b'*' => {
                self.pos += 1;
                Token::Star
            }
            b'/' => {
                self.pos += 1;
                Token::Slash
            }
            b'^' => {
                self.pos += 1;
                Token::Caret
            }
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            b',' => {
                self.pos += 1;
                Token::Comma
            }
            b'0'..=b'9' => self.number(start)?,
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => self.ident(start),
            _ => {
                let ch = std::str::from_utf8(&self.src[start..])
                    .ok()
                    .and_then(|s| s.chars().next())
                    .unwrap_or(char::REPLACEMENT_CHARACTER);
                return Err(ParseError::UnexpectedChar { offset: start, ch });
            }
        };
        Ok(Some((start, token)))
    }

    fn number(&mut self, start: usize) -> Result<Token, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        // Take an exponent only when digits follow; otherwise the `e` is a
        // separate identifier token and the juxtaposition is a syntax error.
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let mut probe = self.pos + 1;
            if probe < self.src.len() && matches!(self.src[probe], b'+' | b'-') {
                probe += 1;
            }
            if probe < self.src.len() && self.src[probe].is_ascii_digit() {
                self.pos = probe;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Token::Number(v)),
            _ => Err(ParseError::InvalidNumber { offset: start, text: text.to_owned() }),
        }
    }

    fn ident(&mut self, start: usize) -> Token {
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii ident");
        Token::Ident(text.to_owned())
    }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    index: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.index).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.index).map_or(self.len, |(o, _)| *o)
    }

    fn advance(&mut self) -> Option<(usize, Token)> {
        let item = self.tokens.get(self.index).cloned();
        if item.is_some() {
            self.index += 1;
        }
        item
    }

    fn eat(&mut self, token: &Token) -> bool {
        if self.peek() == Some(token) {
            self.index += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&Token::Plus) {
                let rhs = self.term()?;
                lhs = Expr::Bin(BinOp::Add, Arc::new(lhs), Arc::new(rhs));
            } else if self.eat(&Token::Minus) {
                let rhs = self.term()?;
                lhs = Expr::Bin(BinOp::Sub, Arc::new(lhs), Arc::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&Token::Star) {
                let rhs = self.unary()?;
                lhs = Expr::Bin(BinOp::Mul, Arc::new(lhs), Arc::new(rhs));
            } else if self.eat(&Token::Slash) {
                let rhs = self.unary()?;
                lhs = Expr::Bin(BinOp::Div, Arc::new(lhs), Arc::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&Token::Minus) {
            let inner = self.unary()?;
            return Ok(Expr::Neg(Arc::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(&Token::Caret) {
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Arc::new(base), Arc::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.advance() {
            Some((_, Token::Number(v))) => Ok(Expr::Const(v)),
            Some((_, Token::LParen)) => {
                let inner = self.expr()?;
                if self.eat(&Token::RParen) {
                    Ok(inner)
                } else {
                    Err(self.expected(")"))
                }
            }
            Some((_, Token::Ident(name))) => match name.as_str() {
                "t" => Ok(Expr::Time),
                "pi" => Ok(Expr::Pi),
                "e" => Ok(Expr::E),
                _ => {
                    let Some(func) = Function::from_name(&name) else {
                        return Err(ParseError::UnknownIdentifier { offset, name });
                    };
                    if !self.eat(&Token::LParen) {
                        return Err(self.expected("( after function name"));
                    }
                    let mut args = vec![self.expr()?];
                    while self.eat(&Token::Comma) {
                        args.push(self.expr()?);
                    }
                    if !self.eat(&Token::RParen) {
                        return Err(self.expected(")"));
                    }
                    if args.len() != 1 {
                        return Err(ParseError::ArityMismatch {
                            offset,
                            name,
                            found: args.len(),
                        });
                    }
                    Ok(Expr::Call(func, Arc::new(args.pop().expect("one argument"))))
                }
            },
            Some(_) => Err(ParseError::Expected { offset, expected: "a value" }),
            None => Err(ParseError::UnexpectedEnd),
        }
    }

    fn expected(&self, what: &'static str) -> ParseError {
        if self.index >= self.tokens.len() {
            ParseError::UnexpectedEnd
        } else {
            ParseError::Expected { offset: self.offset(), expected: what }
        }
    }
}

/// Parses source text into an [`Expr`].
///
/// The only variable is `t`; any other bare identifier is rejected, so
/// multi-variable input fails at parse time rather than at evaluation.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let tokens = Lexer::tokens(src)?;
    let mut parser = Parser { tokens, index: 0, len: src.len() };
    let expr = parser.expr()?;
    if parser.index != parser.tokens.len() {
        return Err(ParseError::TrailingInput { offset: parser.offset() });
    }
    Ok(expr)
}
