//! Expression grammar.
//!
//! ASCII syntax: integers and rationals (`3`, `3/4` — the slash doubles as
//! division and folds on constants), identifiers as coordinates, `+ - * / ^`
//! with the usual precedence, unary minus, parentheses. Opaque functions are
//! applied as `f(expr)`, with formal derivatives written `f'''(expr)` or
//! `D[f,3](expr)`. Partials of a declared multivariate opaque function are
//! written `G_pp` (underscore followed by argument letters).

use super::{Expr, Sym};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::Zero;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input at which the problem was noticed.
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Declarations visible to the parser: multivariate opaque functions and the
/// coordinates they depend on (needed to resolve `G_pp`-style tokens).
#[derive(Debug, Clone, Default)]
pub struct ParseContext {
    opaque: BTreeMap<Sym, Arc<[Sym]>>,
}

impl ParseContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_opaque(&mut self, name: &str, args: &[&str]) -> &mut Self {
        let args: Vec<Sym> = args.iter().map(|a| Sym::new(a)).collect();
        self.opaque.insert(Sym::new(name), args.into());
        self
    }
}

/// Parses with an empty declaration context.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, &ParseContext::default())
}

pub fn parse_with(text: &str, ctx: &ParseContext) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        ctx,
        input_len: text.len(),
    };
    let e = p.expr(0)?;
    match p.peek() {
        Some(t) => Err(p.error_at(t.offset, "unexpected trailing input")),
        None => Ok(e),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Quotes(u32),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
            }
            '0'..='9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: BigInt = text[start..i].parse().unwrap();
                out.push(Token {
                    tok: Tok::Int(n),
                    offset: start,
                });
            }
            'a'..='z' | 'A'..='Z' => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(text[start..i].to_string()),
                    offset: start,
                });
            }
            '\'' => {
                let mut k = 0u32;
                while i < bytes.len() && bytes[i] == b'\'' {
                    k += 1;
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Quotes(k),
                    offset: start,
                });
            }
            '+' => {
                out.push(Token { tok: Tok::Plus, offset: start });
                i += 1;
            }
            '-' => {
                out.push(Token { tok: Tok::Minus, offset: start });
                i += 1;
            }
            '*' => {
                out.push(Token { tok: Tok::Star, offset: start });
                i += 1;
            }
            '/' => {
                out.push(Token { tok: Tok::Slash, offset: start });
                i += 1;
            }
            '^' => {
                out.push(Token { tok: Tok::Caret, offset: start });
                i += 1;
            }
            '(' => {
                out.push(Token { tok: Tok::LParen, offset: start });
                i += 1;
            }
            ')' => {
                out.push(Token { tok: Tok::RParen, offset: start });
                i += 1;
            }
            '[' => {
                out.push(Token { tok: Tok::LBracket, offset: start });
                i += 1;
            }
            ']' => {
                out.push(Token { tok: Tok::RBracket, offset: start });
                i += 1;
            }
            ',' => {
                out.push(Token { tok: Tok::Comma, offset: start });
                i += 1;
            }
            _ => {
                return Err(ParseError {
                    offset: start,
                    message: format!("unknown token {c:?}"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    ctx: &'a ParseContext,
    input_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, offset: usize, msg: &str) -> ParseError {
        ParseError {
            offset,
            message: msg.to_string(),
        }
    }

    fn error_eof(&self, msg: &str) -> ParseError {
        ParseError {
            offset: self.input_len,
            message: msg.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<usize, ParseError> {
        match self.next() {
            Some(t) if t.tok == tok => Ok(t.offset),
            Some(t) => Err(self.error_at(t.offset, &format!("expected {what}"))),
            None => Err(self.error_eof(&format!("expected {what}"))),
        }
    }

    /// Pratt loop. Binding powers: `+ -` (1,2), `* /` (3,4), prefix `-` 5,
    /// `^` (8,7) so powers bind tightest and associate right.
    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let (l_bp, r_bp, tok) = match self.peek().map(|t| &t.tok) {
                Some(Tok::Plus) => (1, 2, Tok::Plus),
                Some(Tok::Minus) => (1, 2, Tok::Minus),
                Some(Tok::Star) => (3, 4, Tok::Star),
                Some(Tok::Slash) => (3, 4, Tok::Slash),
                Some(Tok::Caret) => (8, 7, Tok::Caret),
                _ => break,
            };
            if l_bp < min_bp {
                break;
            }
            let op_offset = self.next().unwrap().offset;
            if tok == Tok::Caret {
                let exp = self.integer_exponent()?;
                lhs = Expr::pow(lhs, exp);
                let _ = r_bp;
                continue;
            }
            let rhs = self.expr(r_bp)?;
            lhs = match tok {
                Tok::Plus => lhs + rhs,
                Tok::Minus => lhs - rhs,
                Tok::Star => lhs * rhs,
                Tok::Slash => {
                    if rhs.is_zero_literal() {
                        return Err(self.error_at(op_offset, "division by zero constant"));
                    }
                    Expr::div(lhs, rhs)
                }
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn integer_exponent(&mut self) -> Result<i64, ParseError> {
        let mut neg = false;
        let mut parens = false;
        if matches!(self.peek().map(|t| &t.tok), Some(Tok::LParen)) {
            self.next();
            parens = true;
        }
        if matches!(self.peek().map(|t| &t.tok), Some(Tok::Minus)) {
            self.next();
            neg = true;
        }
        let (n, offset) = match self.next() {
            Some(Token { tok: Tok::Int(n), offset }) => (n, offset),
            Some(t) => return Err(self.error_at(t.offset, "exponent must be an integer")),
            None => return Err(self.error_eof("exponent must be an integer")),
        };
        if parens {
            self.expect(Tok::RParen, "`)` after exponent")?;
        }
        let n: i64 = n
            .try_into()
            .map_err(|_| self.error_at(offset, "exponent out of range"))?;
        Ok(if neg { -n } else { n })
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        match self.next() {
            Some(Token { tok: Tok::Minus, .. }) => {
                let e = self.expr(5)?;
                Ok(e.neg())
            }
            Some(Token { tok: Tok::Int(n), .. }) => {
                Ok(Expr::rat_value(BigRational::from_integer(n)))
            }
            Some(Token { tok: Tok::LParen, .. }) => {
                let e = self.expr(0)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Token { tok: Tok::Ident(name), offset }) => self.ident(name, offset),
            Some(t) => Err(self.error_at(t.offset, "expected an expression")),
            None => Err(self.error_eof("expected an expression")),
        }
    }

    fn ident(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        // D[f,k](expr) — explicit derivative-order application.
        if name == "D" && matches!(self.peek().map(|t| &t.tok), Some(Tok::LBracket)) {
            self.next();
            let fname = match self.next() {
                Some(Token { tok: Tok::Ident(n), .. }) => n,
                Some(t) => return Err(self.error_at(t.offset, "expected function name")),
                None => return Err(self.error_eof("expected function name")),
            };
            self.expect(Tok::Comma, "`,`")?;
            let (order, oofs) = match self.next() {
                Some(Token { tok: Tok::Int(n), offset }) => (n, offset),
                Some(t) => return Err(self.error_at(t.offset, "expected derivative order")),
                None => return Err(self.error_eof("expected derivative order")),
            };
            let order: u32 = order
                .try_into()
                .map_err(|_| self.error_at(oofs, "derivative order out of range"))?;
            self.expect(Tok::RBracket, "`]`")?;
            self.expect(Tok::LParen, "`(`")?;
            let arg = self.expr(0)?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Expr::func(fname.as_str(), order, arg));
        }

        // Partial of a declared multivariate opaque function: `G` or `G_pp`.
        if let Some(split) = name.find('_') {
            let head = &name[..split];
            if let Some(args) = self.ctx.opaque.get(&Sym::new(head)) {
                let mut orders: BTreeMap<Sym, u32> = BTreeMap::new();
                for ch in name[split + 1..].chars() {
                    let coord = Sym::new(&ch.to_string());
                    if !args.contains(&coord) {
                        return Err(self.error_at(
                            offset,
                            &format!("{head} has no argument named {ch}"),
                        ));
                    }
                    *orders.entry(coord).or_insert(0) += 1;
                }
                if orders.values().all(|k| k.is_zero()) {
                    return Err(self.error_at(offset, "empty partial-derivative suffix"));
                }
                return Ok(Expr::partial(head, args, &orders));
            }
            // Fall through: the whole token is an ordinary coordinate name.
        } else if let Some(args) = self.ctx.opaque.get(&Sym::new(&name)) {
            if matches!(self.peek().map(|t| &t.tok), Some(Tok::LParen | Tok::Quotes(_))) {
                return Err(self.error_at(
                    offset,
                    "declared multivariate function cannot be applied to explicit arguments",
                ));
            }
            return Ok(Expr::partial(name.as_str(), args, &BTreeMap::new()));
        }

        // Derivative quotes and/or single-argument application.
        let mut order = 0u32;
        if let Some(Tok::Quotes(k)) = self.peek().map(|t| &t.tok) {
            order = *k;
            self.next();
        }
        if matches!(self.peek().map(|t| &t.tok), Some(Tok::LParen)) {
            self.next();
            let arg = self.expr(0)?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Expr::func(name.as_str(), order, arg));
        }
        if order > 0 {
            return Err(self.error_at(
                offset,
                "derivative quotes must be followed by an argument list",
            ));
        }
        Ok(Expr::var(name.as_str()))
    }
}
