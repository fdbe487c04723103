//! Expression language for functions of one complex variable `z`.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' int)?
//! base   := 'z' | number | '(' expr ')' | 'exp' '(' expr ')'
//! ```
//!
//! Numbers are decimal with an optional `i` suffix (`2.5i`). Printing
//! produces the canonical form, i.e. `parse(print(e)) == e` for every tree
//! that `parse` can return.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var,
    Const(Complex64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Neg(Box<Expr>),
    Exp(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token and the byte offset where it starts.
    fn next(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start).map(|t| (t, start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
            return Ok((Tok::Ident(name.to_string()), start));
        }
        if b"+-*/^()".contains(&c) {
            self.pos += 1;
            return Ok((Tok::Sym(c as char), start));
        }
        Err(Error::Syntax {
            pos: start,
            msg: format!("unexpected character '{}'", c as char),
        })
    }

    fn digits(&mut self) -> usize {
        let s = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.pos - s
    }

    fn number(&mut self, start: usize) -> Result<Tok> {
        let mut n = self.digits();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += self.digits();
        }
        if n == 0 {
            return Err(Error::Syntax {
                pos: start,
                msg: "malformed number".into(),
            });
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                // `2exp(z)` style juxtaposition is not part of the grammar,
                // but keep the 'e' for the identifier error that follows
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let v: f64 = text.parse().map_err(|_| Error::Syntax {
            pos: start,
            msg: format!("malformed number '{text}'"),
        })?;
        let imag = self.src.get(self.pos) == Some(&b'i')
            && !self
                .src
                .get(self.pos + 1)
                .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_');
        if imag {
            self.pos += 1;
        }
        Ok(Tok::Num(v, imag))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<()> {
        let (t, p) = self.lex.next()?;
        self.tok = t;
        self.at = p;
        Ok(())
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.tok == Tok::Sym(c) {
            self.bump()
        } else {
            Err(Error::Syntax {
                pos: self.at,
                msg: format!("expected '{c}'"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Sym('+') => {
                    self.bump()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Sym('-') => {
                    self.bump()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.tok {
                Tok::Sym('*') => {
                    self.bump()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Sym('/') => {
                    self.bump()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.tok == Tok::Sym('-') {
            self.bump()?;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.tok != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump()?;
        let neg = self.tok == Tok::Sym('-');
        if neg {
            self.bump()?;
        }
        let pos = self.at;
        let text = &self.lex.src[pos..self.lex.pos];
        let n = match self.tok {
            Tok::Num(v, false) if text.iter().all(u8::is_ascii_digit) && v <= i32::MAX as f64 => {
                v as i32
            }
            _ => {
                return Err(Error::Syntax {
                    pos,
                    msg: "exponent must be an integer".into(),
                })
            }
        };
        self.bump()?;
        Ok(Expr::Pow(Box::new(base), if neg { -n } else { n }))
    }

    fn base(&mut self) -> Result<Expr> {
        let pos = self.at;
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(v, imag) => {
                self.bump()?;
                Ok(Expr::Const(if imag {
                    Complex64::new(0.0, v)
                } else {
                    Complex64::new(v, 0.0)
                }))
            }
            Tok::Ident(name) => match name.as_str() {
                "z" => {
                    self.bump()?;
                    Ok(Expr::Var)
                }
                "exp" => {
                    self.bump()?;
                    self.expect('(')?;
                    let e = self.expr()?;
                    self.expect(')')?;
                    Ok(Expr::Exp(Box::new(e)))
                }
                _ => Err(Error::UnknownIdentifier { pos, name }),
            },
            Tok::Sym('(') => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::End => Err(Error::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            }),
            Tok::Sym(c) => Err(Error::Syntax {
                pos,
                msg: format!("unexpected '{c}'"),
            }),
        }
    }
}

/// Parse an expression in `z`.
pub fn parse(src: &str) -> Result<Expr> {
    let mut p = Parser {
        lex: Lexer {
            src: src.as_bytes(),
            pos: 0,
        },
        tok: Tok::End,
        at: 0,
    };
    p.bump()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(Error::Syntax {
            pos: p.at,
            msg: "trailing input".into(),
        });
    }
    Ok(e)
}

impl Expr {
    pub fn constant(re: f64) -> Expr {
        Expr::Const(Complex64::new(re, 0.0))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Expr::Var => z,
            Expr::Const(c) => *c,
            Expr::Add(a, b) => a.eval(z) + b.eval(z),
            Expr::Sub(a, b) => a.eval(z) - b.eval(z),
            Expr::Mul(a, b) => a.eval(z) * b.eval(z),
            Expr::Div(a, b) => a.eval(z) / b.eval(z),
            Expr::Pow(a, n) => a.eval(z).powi(*n),
            Expr::Neg(a) => -a.eval(z),
            Expr::Exp(a) => a.eval(z).exp(),
        }
    }

    /// Symbolic derivative in `z` (unsimplified).
    pub fn derivative(&self) -> Expr {
        use Expr::*;
        let b = |e: Expr| Box::new(e);
        match self {
            Var => Expr::constant(1.0),
            Const(_) => Expr::constant(0.0),
            Add(p, q) => Add(b(p.derivative()), b(q.derivative())),
            Sub(p, q) => Sub(b(p.derivative()), b(q.derivative())),
            Mul(p, q) => Add(
                b(Mul(b(p.derivative()), q.clone())),
                b(Mul(p.clone(), b(q.derivative()))),
            ),
            Div(p, q) => Div(
                b(Sub(
                    b(Mul(b(p.derivative()), q.clone())),
                    b(Mul(p.clone(), b(q.derivative()))),
                )),
                b(Pow(q.clone(), 2)),
            ),
            Pow(_, 0) => Expr::constant(0.0),
            Pow(p, n) => Mul(
                b(Mul(b(Expr::constant(*n as f64)), b(Pow(p.clone(), n - 1)))),
                b(p.derivative()),
            ),
            Neg(p) => Neg(b(p.derivative())),
            Exp(p) => Mul(b(self.clone()), b(p.derivative())),
        }
    }

    /// Subexpressions that appear in a denominator: right operands of
    /// divisions and bases raised to negative powers.
    pub fn denominators(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_denominators(&mut out);
        out
    }

    fn collect_denominators<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::Var | Expr::Const(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_denominators(out);
                b.collect_denominators(out);
            }
            Expr::Div(a, b) => {
                a.collect_denominators(out);
                b.collect_denominators(out);
                out.push(b);
            }
            Expr::Pow(a, n) => {
                a.collect_denominators(out);
                if *n < 0 {
                    out.push(a);
                }
            }
            Expr::Neg(a) | Expr::Exp(a) => a.collect_denominators(out),
        }
    }

    /// `true` when the tree is invariant under `z ↦ z̄` up to conjugation,
    /// i.e. every constant is real.
    pub fn is_real(&self) -> bool {
        match self {
            Expr::Var => true,
            Expr::Const(c) => c.im == 0.0,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_real() && b.is_real()
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Exp(a) => a.is_real(),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if !is_literal(*c) => {
                if c.re == 0.0 || c.im == 0.0 {
                    3
                } else {
                    1
                }
            }
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Var => write!(f, "z"),
            Expr::Const(c) => write_const(f, *c),
            Expr::Add(a, b) => {
                a.write_at(f, 1)?;
                write!(f, "+")?;
                b.write_at(f, 2)
            }
            Expr::Sub(a, b) => {
                a.write_at(f, 1)?;
                write!(f, "-")?;
                b.write_at(f, 2)
            }
            Expr::Mul(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "*")?;
                b.write_at(f, 3)
            }
            Expr::Div(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "/")?;
                b.write_at(f, 5)
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 4)
            }
            Expr::Pow(a, n) => {
                a.write_at(f, 5)?;
                write!(f, "^{n}")
            }
            Expr::Exp(a) => {
                write!(f, "exp(")?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

/// Constants the grammar can spell as a single literal.
fn is_literal(c: Complex64) -> bool {
    (c.im == 0.0 && c.re >= 0.0 && c.re.is_sign_positive())
        || (c.re == 0.0 && c.re.is_sign_positive() && c.im > 0.0)
}

fn write_const(f: &mut fmt::Formatter<'_>, c: Complex64) -> fmt::Result {
    if c.im == 0.0 && c.re.is_sign_positive() {
        return write!(f, "{}", c.re);
    }
    if c.re == 0.0 && c.re.is_sign_positive() && c.im > 0.0 {
        return write!(f, "{}i", c.im);
    }
    // not a literal: spell it as a negation or a sum, which parse to an
    // equal value
    if c.im == 0.0 {
        return write!(f, "-{}", -c.re);
    }
    if c.re == 0.0 {
        return write!(f, "-{}i", -c.im);
    }
    let re = if c.re < 0.0 || c.re.is_sign_negative() {
        format!("-{}", -c.re)
    } else {
        format!("{}", c.re)
    };
    if c.im < 0.0 {
        write!(f, "{re}-{}i", -c.im)
    } else {
        write!(f, "{re}+{}i", c.im)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parses_reference_functions() {
        let e = parse("exp(-0.5*z)").unwrap();
        assert_eq!(
            e,
            Expr::Exp(Box::new(Expr::Mul(
                Box::new(Expr::Neg(Box::new(Expr::constant(0.5)))),
                Box::new(Expr::Var)
            )))
        );
        let r = parse("1/((z+1.5)^2)").unwrap();
        let z = c(0.3, -2.0);
        assert!((r.eval(z) - 1.0 / ((z + 1.5) * (z + 1.5))).norm() < 1e-15);
        for s in [
            "2/((z+1.5)^3)",
            "exp(-0.5*z)",
            "1/((z+1)^2)",
            "-z",
            "2.5i*z-3",
        ] {
            assert_eq!(parse(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn reports_errors_with_positions() {
        assert_eq!(
            parse("1/(w+1)"),
            Err(Error::UnknownIdentifier {
                pos: 3,
                name: "w".into()
            })
        );
        assert!(matches!(parse("1/(z+1"), Err(Error::Syntax { pos: 6, .. })));
        assert!(matches!(parse("z^1.5"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(parse("z $ 2"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(parse(""), Err(Error::Syntax { pos: 0, .. })));
        assert!(matches!(parse("z z"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(parse("i"), Err(Error::UnknownIdentifier { .. })));
    }

    #[test]
    fn numbers_and_powers() {
        assert_eq!(parse("1e-3").unwrap(), Expr::constant(1e-3));
        assert_eq!(parse("2i").unwrap(), Expr::Const(c(0.0, 2.0)));
        assert_eq!(parse("z^-2").unwrap(), Expr::Pow(Box::new(Expr::Var), -2));
        assert_eq!(parse("-2^2").unwrap().eval(c(0.0, 0.0)), c(-4.0, 0.0));
        assert_eq!(
            parse("2^3^1"),
            Err(Error::Syntax {
                pos: 3,
                msg: "trailing input".into()
            })
        );
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let e = parse("exp(-0.5*z)*(z+2)^3/(z*z+1.5)-z^-2").unwrap();
        let d = e.derivative();
        let z = c(0.7, 0.4);
        let h = 1e-6;
        let fd = (e.eval(z + h) - e.eval(z - h)) / (2.0 * h);
        assert!((d.eval(z) - fd).norm() < 1e-6 * fd.norm().max(1.0));
    }

    #[test]
    fn denominators_are_collected() {
        let e = parse("1/(z+1)+z^-2*exp(1/(z-3))").unwrap();
        let d: Vec<String> = e.denominators().iter().map(|d| d.to_string()).collect();
        assert_eq!(d, ["z+1", "z", "z-3"]);
    }

    #[test]
    fn noncanonical_constants_print_as_equal_values() {
        let z = c(0.2, 0.9);
        for k in [c(-1.5, 2.0), c(-1.5, 0.0), c(0.0, -2.0), c(3.0, -1.0)] {
            let e = Expr::Mul(Box::new(Expr::Const(k)), Box::new(Expr::Var));
            let back = parse(&e.to_string()).unwrap();
            assert!((back.eval(z) - e.eval(z)).norm() < 1e-15, "{e}");
        }
    }
}
