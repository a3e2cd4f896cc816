//! Recursive-descent parser for the profile-function grammar:
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := ("-")? power
//! power  := atom ("^" factor)?
//! atom   := number | "s" | "pi" | "e" | ident "(" expr ")" | "(" expr ")"
//! ```

use thiserror::Error;

use super::{BinOp, Constant, Expr, Func};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    EmptyInput,
    UnbalancedParen,
    UnknownIdentifier(String),
    EmptyArgument,
    /// A function name not followed by `(`.
    MissingCallParen(String),
    TrailingInput,
    /// Two atoms side by side, e.g. `2s`.
    ImplicitMultiplication,
    UnexpectedToken(String),
    UnexpectedEnd,
    InvalidNumber(String),
}

/// Syntax error with the byte offset where it was detected.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{kind:?} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn err(kind: ParseErrorKind, offset: usize) -> ParseError {
    ParseError { kind, offset }
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // Exponent only when followed by digits, so `2e` stays `2` then `e`.
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit
                .parse()
                .map_err(|_| err(ParseErrorKind::InvalidNumber(lit.to_string()), start))?;
            if !v.is_finite() {
                return Err(err(ParseErrorKind::InvalidNumber(lit.to_string()), start));
            }
            out.push(Token {
                tok: Tok::Num(v),
                offset: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        let tok = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(err(ParseErrorKind::UnexpectedToken(ch.to_string()), start));
            }
        };
        out.push(Token { tok, offset: start });
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Tok::Op(c)) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.factor()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op(&['-']).is_some() {
            Ok(Expr::Neg(Box::new(self.power()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.factor()?;
            return Ok(Expr::binary(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return Err(err(ParseErrorKind::UnexpectedEnd, offset));
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                if matches!(self.peek(), Some(Tok::RParen)) {
                    return Err(err(ParseErrorKind::EmptyArgument, self.offset()));
                }
                let inner = self.expr()?;
                self.close_paren(offset)?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "s" => Ok(Expr::Var),
                "pi" => Ok(Expr::Const(Constant::Pi)),
                "e" => Ok(Expr::Const(Constant::E)),
                _ => {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(err(ParseErrorKind::UnknownIdentifier(name), offset));
                    };
                    if !matches!(self.peek(), Some(Tok::LParen)) {
                        return Err(err(ParseErrorKind::MissingCallParen(name), self.offset()));
                    }
                    let open = self.offset();
                    self.pos += 1;
                    if matches!(self.peek(), Some(Tok::RParen) | None) {
                        if self.peek().is_none() {
                            return Err(err(ParseErrorKind::UnbalancedParen, open));
                        }
                        return Err(err(ParseErrorKind::EmptyArgument, self.offset()));
                    }
                    let arg = self.expr()?;
                    self.close_paren(open)?;
                    Ok(Expr::call(func, arg))
                }
            },
            Tok::RParen => Err(err(ParseErrorKind::UnbalancedParen, offset)),
            Tok::Op(c) => Err(err(ParseErrorKind::UnexpectedToken(c.to_string()), offset)),
        }
    }

    fn close_paren(&mut self, open: usize) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            None => Err(err(ParseErrorKind::UnbalancedParen, open)),
            Some(_) => Err(self.trailing()),
        }
    }

    fn trailing(&self) -> ParseError {
        let offset = self.offset();
        match self.peek() {
            Some(Tok::Num(_) | Tok::Ident(_) | Tok::LParen) => err(ParseErrorKind::ImplicitMultiplication, offset),
            Some(Tok::RParen) => err(ParseErrorKind::UnbalancedParen, offset),
            _ => err(ParseErrorKind::TrailingInput, offset),
        }
    }
}

/// Parses `text` into an [`Expr`].
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(err(ParseErrorKind::EmptyInput, 0));
    }
    let mut parser = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let expr = parser.expr()?;
    if parser.pos < parser.toks.len() {
        return Err(parser.trailing());
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(text: &str) -> (ParseErrorKind, usize) {
        let e = parse(text).unwrap_err();
        (e.kind, e.offset)
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("1 - 2 - 3").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), -4.0);
        let e = parse("2^3^2").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 512.0);
        let e = parse("-s^2").unwrap();
        assert_eq!(e.eval(3.0).unwrap(), -9.0);
        let e = parse("2*-s").unwrap();
        assert_eq!(e.eval(3.0).unwrap(), -6.0);
        let e = parse("8/2/2").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 2.0);
        let e = parse("2^-1").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 0.5);
    }

    #[test]
    fn numbers() {
        assert_eq!(parse("1.5e-3").unwrap(), Expr::Num(1.5e-3));
        assert_eq!(parse(".25").unwrap(), Expr::Num(0.25));
        assert_eq!(parse("2E2").unwrap(), Expr::Num(200.0));
        assert_eq!(kind("1.2.3").0, ParseErrorKind::InvalidNumber("1.2.3".into()));
        assert!(matches!(kind("1e999").0, ParseErrorKind::InvalidNumber(_)));
    }

    #[test]
    fn whitespace_is_insignificant() {
        assert_eq!(parse(" s ^ 3 -s ").unwrap(), parse("s^3-s").unwrap());
    }

    #[test]
    fn error_offsets() {
        assert_eq!(kind(""), (ParseErrorKind::EmptyInput, 0));
        assert_eq!(kind("   "), (ParseErrorKind::EmptyInput, 0));
        assert_eq!(kind("(s + 1"), (ParseErrorKind::UnbalancedParen, 0));
        assert_eq!(kind("s + 1)"), (ParseErrorKind::UnbalancedParen, 5));
        assert_eq!(kind("sin(s"), (ParseErrorKind::UnbalancedParen, 3));
        assert_eq!(kind("foo(s)"), (ParseErrorKind::UnknownIdentifier("foo".into()), 0));
        assert_eq!(kind("s + x"), (ParseErrorKind::UnknownIdentifier("x".into()), 4));
        assert_eq!(kind("cos()"), (ParseErrorKind::EmptyArgument, 4));
        assert_eq!(kind("()"), (ParseErrorKind::EmptyArgument, 1));
        assert_eq!(kind("2s"), (ParseErrorKind::ImplicitMultiplication, 1));
        assert_eq!(kind("2 (s)"), (ParseErrorKind::ImplicitMultiplication, 2));
        assert_eq!(kind("cos s"), (ParseErrorKind::MissingCallParen("cos".into()), 4));
        assert_eq!(kind("s +"), (ParseErrorKind::UnexpectedEnd, 3));
        assert_eq!(kind("s * * s"), (ParseErrorKind::UnexpectedToken("*".into()), 4));
        assert_eq!(kind("--s"), (ParseErrorKind::UnexpectedToken("-".into()), 1));
        assert_eq!(kind("s # 2"), (ParseErrorKind::UnexpectedToken("#".into()), 2));
    }

    #[test]
    fn exponent_needs_digits() {
        // `2e` is the literal 2 followed by the constant e.
        assert_eq!(kind("2e"), (ParseErrorKind::ImplicitMultiplication, 1));
        assert_eq!(parse("2*e").unwrap().eval(0.0).unwrap(), 2.0 * std::f64::consts::E);
    }
}
