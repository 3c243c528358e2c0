//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr    := term (('+'|'-') term)*
//! term    := factor (('*'|'/') factor)*
//! factor  := unary ('^' factor)?
//! unary   := '-'? primary
//! primary := number | 'x' | 'y' | 'pi' | 'e' | ident '(' expr ')' | '(' expr ')'
//! ```

use std::sync::Arc;

use thiserror::Error;

use super::{Expr, Func, Var};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdent { pos: usize, name: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<Option<(usize, Tok)>, ParseError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                let mut seen_dot = false;
                while end < self.src.len() {
                    match self.src[end] {
                        b'0'..=b'9' => end += 1,
                        b'.' if !seen_dot => {
                            seen_dot = true;
                            end += 1;
                        }
                        // exponent part: e/E followed by optional sign + digits
                        b'e' | b'E'
                            if end + 1 < self.src.len()
                                && (self.src[end + 1].is_ascii_digit()
                                    || ((self.src[end + 1] == b'+' || self.src[end + 1] == b'-')
                                        && end + 2 < self.src.len()
                                        && self.src[end + 2].is_ascii_digit())) =>
                        {
                            end += 2;
                            while end < self.src.len() && self.src[end].is_ascii_digit() {
                                end += 1;
                            }
                            break;
                        }
                        _ => break,
                    }
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: format!("invalid number literal `{text}`"),
                })?;
                self.pos = end;
                Tok::Num(value)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let name = std::str::from_utf8(&self.src[self.pos..end]).unwrap().to_string();
                self.pos = end;
                Tok::Ident(name)
            }
            other => {
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{}`", other as char),
                })
            }
        };
        Ok(Some((start, tok)))
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    end: usize,
    radial: bool,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.idx).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.idx).cloned();
        self.idx += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        match self.bump() {
            Some((_, t)) if t == tok => Ok(()),
            Some((p, t)) => Err(ParseError::Syntax {
                pos: p,
                msg: format!("expected {what}, found {t:?}"),
            }),
            None => Err(ParseError::Syntax {
                pos: self.end,
                msg: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Arc<Expr>, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Arc::new(Expr::Add(lhs, rhs));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Arc::new(Expr::Sub(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Expr>, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = Arc::new(Expr::Mul(lhs, rhs));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = Arc::new(Expr::Div(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Arc<Expr>, ParseError> {
        let base = self.unary()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            let exp = self.factor()?;
            return Ok(Arc::new(Expr::Pow(base, exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Arc<Expr>, ParseError> {
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            let inner = self.primary()?;
            return Ok(Arc::new(Expr::Neg(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Arc<Expr>, ParseError> {
        match self.bump() {
            Some((_, Tok::Num(v))) => Ok(Arc::new(Expr::Num(v))),
            Some((_, Tok::LParen)) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some((pos, Tok::Ident(name))) => self.ident(pos, name),
            Some((pos, t)) => Err(ParseError::Syntax {
                pos,
                msg: format!("expected a value, found {t:?}"),
            }),
            None => Err(ParseError::Syntax {
                pos: self.end,
                msg: "expected a value, found end of input".into(),
            }),
        }
    }

    fn ident(&mut self, pos: usize, name: String) -> Result<Arc<Expr>, ParseError> {
        match name.as_str() {
            "x" => return Ok(Arc::new(Expr::Var(Var::X))),
            "y" => return Ok(Arc::new(Expr::Var(Var::Y))),
            "pi" => return Ok(Arc::new(Expr::Num(std::f64::consts::PI))),
            "e" => return Ok(Arc::new(Expr::Num(std::f64::consts::E))),
            "rho" | "r" if self.radial => return Ok(Arc::new(Expr::Var(Var::X))),
            _ => {}
        }
        if let Some(func) = Func::from_name(&name) {
            self.expect(Tok::LParen, "`(` after function name")?;
            let arg = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Arc::new(Expr::Call(func, arg)));
        }
        Err(ParseError::UnknownIdent { pos, name })
    }
}

pub(super) fn parse(text: &str, radial: bool) -> Result<Arc<Expr>, ParseError> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(t) = lexer.next()? {
        toks.push(t);
    }
    let mut parser = Parser {
        toks,
        idx: 0,
        end: text.len(),
        radial,
    };
    let ast = parser.expr()?;
    if parser.idx != parser.toks.len() {
        return Err(ParseError::Syntax {
            pos: parser.pos(),
            msg: "trailing input after expression".into(),
        });
    }
    Ok(ast)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_error_position() {
        let err = parse("1+(2*", false).unwrap_err();
        match err {
            ParseError::Syntax { pos, .. } => assert_eq!(pos, 5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        let err = parse("foo(x)", false).unwrap_err();
        match err {
            ParseError::UnknownIdent { pos, name } => {
                assert_eq!(pos, 0);
                assert_eq!(name, "foo");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rho_rejected_outside_radial_mode() {
        assert!(parse("rho^2", false).is_err());
        assert!(parse("rho^2", true).is_ok());
    }

    #[test]
    fn power_is_right_associative() {
        // 2^3^2 = 2^(3^2) = 512
        let ast = parse("2^3^2", false).unwrap();
        assert_eq!(ast.eval_test(), 512.0);
    }

    impl Expr {
        fn eval_test(&self) -> f64 {
            match self {
                Expr::Num(c) => *c,
                Expr::Pow(a, b) => a.eval_test().powf(b.eval_test()),
                _ => panic!("constants only"),
            }
        }
    }
}
