//! Textual notation for Laurent vector fields.
//!
//! A field is a signed sum of terms. Each term multiplies rational literals
//! and variable powers with exactly one derivative factor `d/d<var>`:
//!
//! ```text
//! field  := ['-'] term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := number | var ['^' ['-'] integer] | 'd/d' var
//! number := digits ['.' digits]
//! ```
//!
//! `/` divides the following literal or variable factor (`k/x^3*d/dv` means
//! `k * x^-3 * d/dv`); dividing by a `d/d` factor is an error. The letter
//! sequence `d/d` is reserved for derivative factors, so a variable named `d`
//! cannot be divided by a variable whose name starts with `d`.

use num::{BigInt, BigRational, ToPrimitive, Zero};

use super::{LaurentPoly, LieError, VarSet, VectorField, MAX_EXPONENT};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    DDir(String),
    Star,
    Slash,
    Caret,
    Plus,
    Minus,
}

fn err(offset: usize, message: impl Into<String>) -> LieError {
    LieError::Notation { offset, message: message.into() }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, LieError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos] as char;
        if !c.is_ascii() {
            return Err(err(pos, "non-ASCII input"));
        }
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let single = match c {
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            _ => None,
        };
        if let Some(tok) = single {
            tokens.push((tok, pos));
            pos += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            let mut frac_len = 0usize;
            if pos < bytes.len() && bytes[pos] == b'.' {
                let dot = pos;
                pos += 1;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                    frac_len += 1;
                }
                if frac_len == 0 {
                    return Err(err(dot, "expected digits after decimal point"));
                }
            }
            let text = &src[start..pos];
            let digits: String = text.chars().filter(|c| *c != '.').collect();
            let numer: BigInt = digits.parse().map_err(|_| err(start, "invalid number"))?;
            let denom = BigInt::from(10u32).pow(frac_len as u32);
            tokens.push((Tok::Num(BigRational::new(numer, denom)), start));
            continue;
        }
        if is_ident_start(c) {
            let start = pos;
            // `d/d` followed by an identifier is a derivative factor.
            if src[pos..].starts_with("d/d")
                && src[pos + 3..].chars().next().is_some_and(is_ident_start)
            {
                pos += 3;
                let name_start = pos;
                while pos < bytes.len() && is_ident_continue(bytes[pos] as char) {
                    pos += 1;
                }
                tokens.push((Tok::DDir(src[name_start..pos].to_owned()), start));
                continue;
            }
            while pos < bytes.len() && is_ident_continue(bytes[pos] as char) {
                pos += 1;
            }
            tokens.push((Tok::Ident(src[start..pos].to_owned()), start));
            continue;
        }
        return Err(err(pos, format!("unexpected character `{c}`")));
    }
    Ok(tokens)
}

/// Parses an exact rational literal: `3/2`, `-0.25`, `7`.
pub fn parse_rational(src: &str) -> Result<BigRational, LieError> {
    let tokens = lex(src)?;
    let mut pos = 0;
    let mut sign = BigRational::from_integer(BigInt::from(1));
    if let Some((Tok::Minus, _)) = tokens.get(pos) {
        sign = -sign;
        pos += 1;
    }
    let Some((Tok::Num(numer), _)) = tokens.get(pos) else {
        return Err(err(0, "expected a number"));
    };
    pos += 1;
    let mut value = numer.clone();
    if let Some((Tok::Slash, slash_at)) = tokens.get(pos) {
        pos += 1;
        let Some((Tok::Num(denom), at)) = tokens.get(pos) else {
            return Err(err(*slash_at, "expected a denominator after `/`"));
        };
        if denom.is_zero() {
            return Err(err(*at, "division by zero"));
        }
        value /= denom;
        pos += 1;
    }
    if let Some((_, at)) = tokens.get(pos) {
        return Err(err(*at, "trailing input after rational literal"));
    }
    Ok(sign * value)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a VarSet,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |(_, at)| *at)
    }

    /// One term: accumulated coefficient, exponent vector, and the direction
    /// (phase variable index) of its single `d/d` factor.
    fn term(&mut self, negated: bool) -> Result<(usize, BigRational, Vec<i32>), LieError> {
        let mut coeff = BigRational::from_integer(BigInt::from(if negated { -1 } else { 1 }));
        let mut exps = vec![0i64; self.vars.total()];
        let mut direction: Option<usize> = None;
        let mut divide = false;
        loop {
            let at = self.offset();
            match self.next() {
                Some((Tok::Num(q), num_at)) => {
                    if divide && q.is_zero() {
                        return Err(err(num_at, "division by zero"));
                    }
                    coeff = if divide { coeff / q } else { coeff * q };
                }
                Some((Tok::Ident(name), ident_at)) => {
                    let Some(index) = self.vars.index(&name) else {
                        return Err(err(ident_at, format!("unknown variable `{name}`")));
                    };
                    let e = self.optional_exponent()?;
                    exps[index] += if divide { -e } else { e };
                }
                Some((Tok::DDir(name), ddir_at)) => {
                    if divide {
                        return Err(err(ddir_at, "cannot divide by a derivative factor"));
                    }
                    if direction.is_some() {
                        return Err(err(ddir_at, "more than one derivative factor in a term"));
                    }
                    let Some(index) = self.vars.index(&name) else {
                        return Err(err(ddir_at, format!("unknown variable `{name}`")));
                    };
                    if !self.vars.is_phase(index) {
                        return Err(err(
                            ddir_at,
                            format!("`{name}` is a formal parameter, not a phase variable"),
                        ));
                    }
                    direction = Some(index);
                }
                _ => return Err(err(at, "expected a number, variable, or derivative factor")),
            }
            match self.peek() {
                Some((Tok::Star, _)) => {
                    self.pos += 1;
                    divide = false;
                }
                Some((Tok::Slash, _)) => {
                    self.pos += 1;
                    divide = true;
                }
                _ => break,
            }
        }
        let Some(direction) = direction else {
            return Err(err(self.offset(), "term is missing a derivative factor"));
        };
        let mut out = Vec::with_capacity(exps.len());
        for (i, e) in exps.into_iter().enumerate() {
            if e.unsigned_abs() > MAX_EXPONENT as u64 {
                return Err(LieError::ExponentBound {
                    variable: self.vars.name(i).to_owned(),
                    exponent: e,
                });
            }
            out.push(e as i32);
        }
        Ok((direction, coeff, out))
    }

    fn optional_exponent(&mut self) -> Result<i64, LieError> {
        if !matches!(self.peek(), Some((Tok::Caret, _))) {
            return Ok(1);
        }
        self.pos += 1;
        let mut negative = false;
        if matches!(self.peek(), Some((Tok::Minus, _))) {
            negative = true;
            self.pos += 1;
        }
        let at = self.offset();
        let Some((Tok::Num(q), _)) = self.next() else {
            return Err(err(at, "expected an integer exponent after `^`"));
        };
        if !q.is_integer() {
            return Err(err(at, "exponent must be an integer"));
        }
        let Some(e) = q.to_integer().to_i64() else {
            return Err(err(at, "exponent out of range"));
        };
        if e.unsigned_abs() > MAX_EXPONENT as u64 {
            return Err(err(at, format!("exponent exceeds the bound |e| <= {MAX_EXPONENT}")));
        }
        Ok(if negative { -e } else { e })
    }
}

pub(super) fn parse_field(src: &str, vars: &VarSet) -> Result<VectorField, LieError> {
    let tokens = lex(src)?;
    if tokens.is_empty() {
        return Err(err(0, "empty field expression"));
    }
    let mut parser = Parser { tokens, pos: 0, vars, end: src.len() };
    let mut components: Vec<LaurentPoly> =
        (0..vars.phase_count()).map(|_| LaurentPoly::zero(vars.total())).collect();

    let mut negated = false;
    if matches!(parser.peek(), Some((Tok::Minus, _))) {
        parser.pos += 1;
        negated = true;
    }
    loop {
        let (direction, coeff, exps) = parser.term(negated)?;
        let term = LaurentPoly::term(vars.total(), coeff, exps)?;
        components[direction] = components[direction].add(&term);
        match parser.next() {
            None => break,
            Some((Tok::Plus, _)) => negated = false,
            Some((Tok::Minus, _)) => negated = true,
            Some((_, at)) => return Err(err(at, "expected `+` or `-` between terms")),
        }
    }
    VectorField::new(vars, components)
}
