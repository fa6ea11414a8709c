//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | atom ("^" UINT)?
//! atom   := RATIONAL | IDENT | "d(" IDENT ")" | "dd(" IDENT ")" | "(" expr ")"
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`.

use num::{BigInt, BigRational, Zero};

use super::expr::Expr;
use super::table::SymbolTable;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol `{name}` at byte {offset}")]
    UnknownSymbol { offset: usize, name: String },
    #[error("zero denominator at byte {offset}")]
    ZeroDenominator { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownSymbol { offset, .. }
            | ParseError::ZeroDenominator { offset } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(text: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer {
            src: text.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        loop {
            while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_whitespace() {
                lx.pos += 1;
            }
            let start = lx.pos;
            let Some(&c) = lx.src.get(lx.pos) else {
                out.push((Tok::End, start));
                return Ok(out);
            };
            let tok = match c {
                b'+' => Tok::Plus,
                b'-' => Tok::Minus,
                b'*' => Tok::Star,
                b'/' => Tok::Slash,
                b'^' => Tok::Caret,
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'0'..=b'9' => {
                    while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_digit() {
                        lx.pos += 1;
                    }
                    let s = std::str::from_utf8(&lx.src[start..lx.pos]).unwrap();
                    out.push((Tok::Int(s.parse().unwrap()), start));
                    continue;
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    while lx.pos < lx.src.len()
                        && (lx.src[lx.pos].is_ascii_alphanumeric() || lx.src[lx.pos] == b'_')
                    {
                        lx.pos += 1;
                    }
                    let s = std::str::from_utf8(&lx.src[start..lx.pos]).unwrap();
                    out.push((Tok::Ident(s.to_string()), start));
                    continue;
                }
                _ => {
                    return Err(ParseError::Syntax {
                        offset: start,
                        message: format!("unexpected character `{}`", c as char),
                    })
                }
            };
            lx.pos += 1;
            out.push((tok, start));
        }
    }
}

struct Parser<'t> {
    toks: Vec<(Tok, usize)>,
    i: usize,
    table: &'t SymbolTable,
}

/// Parses `text` into normal form against the symbols registered in `table`.
pub fn parse_expr(text: &str, table: &SymbolTable) -> Result<Expr, ParseError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, i: 0, table };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        _ => Err(p.unexpected("end of input")),
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn offset(&self) -> usize {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            t => format!("{t:?}"),
        };
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor(false)?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = &acc * &self.factor(false)?;
                }
                Tok::Slash => {
                    self.bump();
                    let at = self.offset();
                    let d = self.factor(true)?;
                    acc = acc
                        .checked_div(&d)
                        .ok_or(ParseError::ZeroDenominator { offset: at })?;
                }
                _ => return Ok(acc),
            }
        }
    }

    /// `after_slash` disables the `INT/UINT` literal so that `x/2/3` keeps
    /// left associativity.
    fn factor(&mut self, after_slash: bool) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(-self.factor(after_slash)?);
        }
        let base = self.atom(after_slash)?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let Tok::Int(n) = self.peek().clone() else {
                return Err(self.unexpected("unsigned integer exponent"));
            };
            let e: u32 = n.try_into().map_err(|_| ParseError::Syntax {
                offset: self.offset(),
                message: "exponent too large".into(),
            })?;
            self.bump();
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self, after_slash: bool) -> Result<Expr, ParseError> {
        let at = self.offset();
        let i0 = self.i;
        match self.bump() {
            Tok::Int(n) => {
                let lit_den = !after_slash
                    && self.peek() == &Tok::Slash
                    && matches!(self.toks.get(self.i + 1), Some((Tok::Int(_), _)));
                if lit_den {
                    self.bump();
                    let doff = self.offset();
                    let Tok::Int(d) = self.bump() else { unreachable!() };
                    if d.is_zero() {
                        return Err(ParseError::ZeroDenominator { offset: doff });
                    }
                    return Ok(Expr::constant(BigRational::new(n, d)));
                }
                Ok(Expr::constant(BigRational::from_integer(n)))
            }
            Tok::Ident(name) => {
                if (name == "d" || name == "dd") && *self.peek() == Tok::LParen {
                    self.bump();
                    let inner_at = self.offset();
                    let Tok::Ident(inner) = self.peek().clone() else {
                        return Err(self.unexpected("identifier"));
                    };
                    self.bump();
                    if *self.peek() != Tok::RParen {
                        return Err(self.unexpected("`)`"));
                    }
                    self.bump();
                    let full = format!("{name}({inner})");
                    return self.lookup(&full, inner_at);
                }
                self.lookup(&name, at)
            }
            Tok::LParen => {
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump();
                Ok(e)
            }
            _ => {
                self.i = i0;
                Err(self.unexpected("number, identifier or `(`"))
            }
        }
    }

    fn lookup(&self, name: &str, offset: usize) -> Result<Expr, ParseError> {
        self.table
            .get(name)
            .map(Expr::var)
            .ok_or_else(|| ParseError::UnknownSymbol {
                offset,
                name: name.to_string(),
            })
    }
}
