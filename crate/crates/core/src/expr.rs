//! A small arithmetic expression language in one complex variable `z`.
//!
//! Grammar: numbers, `z`, `i`, `pi`, `e`, binary `+ - * / ^`, unary minus,
//! parentheses and the functions `log`, `exp`, `sqrt`, `sin`, `cos`. Powers
//! with a constant integer exponent are exact; all other powers use the
//! principal branch `exp(p log w)`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    Exp,
    Sqrt,
    Sin,
    Cos,
}

impl Func {
    fn name(&self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "log" | "ln" => Func::Log,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }

    fn apply(&self, w: Complex64) -> Complex64 {
        match self {
            Func::Log => w.ln(),
            Func::Exp => w.exp(),
            Func::Sqrt => w.sqrt(),
            Func::Sin => w.sin(),
            Func::Cos => w.cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Complex64),
    Z,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Principal power `w^p`, exact for integer `p`.
pub fn cpow(w: Complex64, p: Complex64) -> Complex64 {
    if p.im == 0.0 && p.re.fract() == 0.0 && p.re.abs() <= i32::MAX as f64 {
        return w.powi(p.re as i32);
    }
    if w.norm() == 0.0 {
        return if p.re > 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(f64::INFINITY, 0.0)
        };
    }
    (p * w.ln()).exp()
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expression(format!(
                "unexpected token {:?} in {text:?}",
                p.tokens[p.pos]
            )));
        }
        Ok(e)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Z => z,
            Expr::Neg(a) => -a.eval(z),
            Expr::Add(a, b) => a.eval(z) + b.eval(z),
            Expr::Sub(a, b) => a.eval(z) - b.eval(z),
            Expr::Mul(a, b) => a.eval(z) * b.eval(z),
            Expr::Div(a, b) => a.eval(z) / b.eval(z),
            Expr::Pow(a, b) => cpow(a.eval(z), b.eval(z)),
            Expr::Call(f, a) => f.apply(a.eval(z)),
        }
    }

    /// The value if the expression does not depend on `z`.
    pub fn constant(&self) -> Option<Complex64> {
        match self {
            Expr::Num(c) => Some(*c),
            Expr::Z => None,
            Expr::Neg(a) => a.constant().map(|x| -x),
            Expr::Add(a, b) => Some(a.constant()? + b.constant()?),
            Expr::Sub(a, b) => Some(a.constant()? - b.constant()?),
            Expr::Mul(a, b) => Some(a.constant()? * b.constant()?),
            Expr::Div(a, b) => Some(a.constant()? / b.constant()?),
            Expr::Pow(a, b) => Some(cpow(a.constant()?, b.constant()?)),
            Expr::Call(f, a) => Some(f.apply(a.constant()?)),
        }
    }
}

fn fmt_num(c: Complex64) -> String {
    let r = |x: f64| format!("{x:?}");
    match (c.re == 0.0, c.im == 0.0) {
        (_, true) if c.re >= 0.0 => r(c.re),
        (_, true) => format!("({})", r(c.re)),
        (true, false) => format!("({}*i)", r(c.im)),
        (false, false) => format!("({}+{}*i)", r(c.re), r(c.im)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => f.write_str(&fmt_num(*c)),
            Expr::Z => f.write_str("z"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/({b})"),
            Expr::Pow(a, b) => write!(f, "({a})^({b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
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
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| Error::Expression(format!("bad number {s:?}")))?;
            out.push(Token::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else if c == '(' {
            out.push(Token::LParen);
            i += 1;
        } else if c == ')' {
            out.push(Token::RParen);
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Expr::Num(Complex64::new(v, 0.0))),
            Some(Token::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(e),
                    _ => Err(Error::Expression("missing ')'".into())),
                }
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "z" => Ok(Expr::Z),
                "i" => Ok(Expr::Num(Complex64::new(0.0, 1.0))),
                "pi" => Ok(Expr::Num(Complex64::new(std::f64::consts::PI, 0.0))),
                "e" => Ok(Expr::Num(Complex64::new(std::f64::consts::E, 0.0))),
                other => {
                    let func = Func::from_name(other)
                        .ok_or_else(|| Error::Expression(format!("unknown identifier {other:?}")))?;
                    match self.next() {
                        Some(Token::LParen) => {}
                        _ => return Err(Error::Expression(format!("expected '(' after {other}"))),
                    }
                    let arg = self.expr()?;
                    match self.next() {
                        Some(Token::RParen) => Ok(Expr::Call(func, Box::new(arg))),
                        _ => Err(Error::Expression("missing ')'".into())),
                    }
                }
            },
            Some(t) => Err(Error::Expression(format!("unexpected token {t:?}"))),
            None => Err(Error::Expression("unexpected end of expression".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 + 2*z^2^1 - z/4").unwrap();
        let z = c(3.0, 0.0);
        assert!((e.eval(z) - c(1.0 + 18.0 - 0.75, 0.0)).norm() < 1e-14);
        let e = Expr::parse("-z^2").unwrap();
        assert_eq!(e.eval(c(2.0, 0.0)), c(-4.0, 0.0));
        let e = Expr::parse("2^-1").unwrap();
        assert_eq!(e.eval(z), c(0.5, 0.0));
    }

    #[test]
    fn functions_and_constants() {
        let e = Expr::parse("exp(i*pi) + sqrt(z) + log(e)").unwrap();
        let v = e.eval(c(4.0, 0.0));
        assert!((v - c(2.0, 0.0)).norm() < 1e-14);
        let e = Expr::parse("z^(1/2)").unwrap();
        let v = e.eval(c(0.0, 1.0));
        let expected = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert!((v - expected).norm() < 1e-15);
    }

    #[test]
    fn display_round_trips() {
        for text in ["(1+z)/(3-z)", "z*(1-exp((pi*i/log(2))*log(-z^2)))", "1/log(-z^2)", "-2.5e-3*z^3"] {
            let e = Expr::parse(text).unwrap();
            let back = Expr::parse(&e.to_string()).unwrap();
            for z in [c(0.3, 1.7), c(-2.0, 0.5), c(0.0, -0.25)] {
                let (x, y) = (e.eval(z), back.eval(z));
                assert!((x - y).norm() <= 1e-14 * x.norm().max(1.0), "{text}");
            }
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("z +").is_err());
        assert!(Expr::parse("foo(z)").is_err());
        assert!(Expr::parse("(z").is_err());
        assert!(Expr::parse("z $ 2").is_err());
    }
}
