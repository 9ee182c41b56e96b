//! Arithmetic expressions over the radial coordinate, used for initial
//! data in config files.
//!
//! Grammar: decimal numbers, the constant `pi`, the variable `rho`
//! (distance from the root), parentheses, unary minus, the binary
//! operators `+ - * /` with the usual precedence, right-associative `^`
//! binding tightest, and the functions `sin`, `cos`, `exp`.

use crate::error::{Error, Result};

/// Parsed expression tree. Built by [`parse_expr`], evaluated pointwise
/// with [`Expr::eval`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Rho,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, rho: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Rho => rho,
            Expr::Neg(a) => -a.eval(rho),
            Expr::Add(a, b) => a.eval(rho) + b.eval(rho),
            Expr::Sub(a, b) => a.eval(rho) - b.eval(rho),
            Expr::Mul(a, b) => a.eval(rho) * b.eval(rho),
            Expr::Div(a, b) => a.eval(rho) / b.eval(rho),
            Expr::Pow(a, b) => a.eval(rho).powf(b.eval(rho)),
            Expr::Sin(a) => a.eval(rho).sin(),
            Expr::Cos(a) => a.eval(rho).cos(),
            Expr::Exp(a) => a.eval(rho).exp(),
        }
    }

    /// Whether the variable appears anywhere; constant expressions can be
    /// evaluated without a rooted graph.
    pub fn uses_rho(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Rho => true,
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.uses_rho(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.uses_rho() || b.uses_rho(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
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

/// Tokens paired with their 1-based column, for error messages.
fn tokenize(src: &str) -> Result<Vec<(usize, Token)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let col = i + 1;
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                out.push((
                    col,
                    match c {
                        '+' => Token::Plus,
                        '-' => Token::Minus,
                        '*' => Token::Star,
                        '/' => Token::Slash,
                        '^' => Token::Caret,
                        '(' => Token::LParen,
                        _ => Token::RParen,
                    },
                ));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = text.parse::<f64>().map_err(|_| {
                    Error::invalid(format!("bad number '{text}' at column {col} of '{src}'"))
                })?;
                out.push((col, Token::Num(value)));
            }
            _ if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((col, Token::Ident(chars[start..i].iter().collect())));
            }
            _ => {
                return Err(Error::invalid(format!(
                    "unexpected character '{c}' at column {col} of '{src}'"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<(usize, Token)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn next(&mut self) -> Option<(usize, Token)> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat(&mut self, want: Token, what: &str) -> Result<()> {
        match self.next() {
            Some((_, t)) if t == want => Ok(()),
            Some((col, _)) => Err(Error::invalid(format!(
                "expected {what} at column {col} of '{}'",
                self.src
            ))),
            None => Err(Error::invalid(format!(
                "expected {what} at the end of '{}'",
                self.src
            ))),
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut acc = self.product()?;
        while let Some(op) = self.peek() {
            let op = match op {
                Token::Plus => Expr::Add as fn(_, _) -> _,
                Token::Minus => Expr::Sub as fn(_, _) -> _,
                _ => break,
            };
            self.pos += 1;
            acc = op(Box::new(acc), Box::new(self.product()?));
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        while let Some(op) = self.peek() {
            let op = match op {
                Token::Star => Expr::Mul as fn(_, _) -> _,
                Token::Slash => Expr::Div as fn(_, _) -> _,
                _ => break,
            };
            self.pos += 1;
            acc = op(Box::new(acc), Box::new(self.unary()?));
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.next() {
            Some((_, Token::Num(v))) => Ok(Expr::Const(v)),
            Some((_, Token::LParen)) => {
                let inner = self.sum()?;
                self.eat(Token::RParen, "')'")?;
                Ok(inner)
            }
            Some((col, Token::Ident(name))) => match name.as_str() {
                "rho" => Ok(Expr::Rho),
                "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                "sin" | "cos" | "exp" => {
                    self.eat(Token::LParen, "'(' after a function name")?;
                    let arg = Box::new(self.sum()?);
                    self.eat(Token::RParen, "')'")?;
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        _ => Expr::Exp(arg),
                    })
                }
                _ => Err(Error::invalid(format!(
                    "unknown name '{name}' at column {col} of '{}'",
                    self.src
                ))),
            },
            Some((col, _)) => Err(Error::invalid(format!(
                "expected a value at column {col} of '{}'",
                self.src
            ))),
            None => Err(Error::invalid(format!(
                "expression ends early: '{}'",
                self.src
            ))),
        }
    }
}

/// Parses one expression, consuming the whole string.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let tokens = tokenize(src)?;
    let mut p = Parser { src, tokens, pos: 0 };
    let expr = p.sum()?;
    if let Some((col, _)) = p.tokens.get(p.pos) {
        return Err(Error::invalid(format!(
            "trailing input at column {col} of '{src}'"
        )));
    }
    Ok(expr)
}
