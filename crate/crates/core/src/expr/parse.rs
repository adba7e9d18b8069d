//! Recursive-descent parser for the infix expression / pattern language.
//!
//! Precedence, loosest first: `+ -`, `* /`, unary minus, `^ ** |**|`,
//! function application. All binary operators are left-associative.
//! Error positions are character offsets into the input.

use thiserror::Error;

use super::{BinOp, Dialect, Expr, FnSpec, Pattern};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{symbol}` at {pos}")]
    UnknownSymbol { pos: usize, symbol: String },
    #[error("`{name}` at {pos} takes {expected} argument(s), got {got}")]
    Arity {
        pos: usize,
        name: String,
        expected: usize,
        got: usize,
    },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownSymbol { pos, .. }
            | ParseError::Arity { pos, .. } => *pos,
        }
    }

    /// Shift the reported position by `offset` characters.
    pub fn offset(self, offset: usize) -> ParseError {
        match self {
            ParseError::Syntax { pos, msg } => ParseError::Syntax { pos: pos + offset, msg },
            ParseError::UnknownSymbol { pos, symbol } => ParseError::UnknownSymbol {
                pos: pos + offset,
                symbol,
            },
            ParseError::Arity {
                pos,
                name,
                expected,
                got,
            } => ParseError::Arity {
                pos: pos + offset,
                name,
                expected,
                got,
            },
        }
    }
}

/// A parsed model and, in literal-extraction mode, the initial parameter values.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed {
    pub expr: Expr,
    pub params: Vec<f64>,
}

/// Parse a model. With `extract_literals`, every numeric literal becomes a
/// parameter numbered in encounter order and its value is returned in
/// [`Parsed::params`]; otherwise literals are constants and parameter tokens
/// (`t0`, `p1`, ...) refer to externally supplied values.
pub fn parse_expression(
    text: &str,
    dialect: &Dialect,
    extract_literals: bool,
) -> Result<Parsed, ParseError> {
    let mut p = Parser::new(text, dialect, false, extract_literals)?;
    let tree = p.parse_all()?;
    let expr = tree.to_expr().expect("holes are rejected in expression mode");
    Ok(Parsed {
        expr,
        params: p.literals.unwrap_or_default(),
    })
}

/// Parse a query pattern; `v_i` are pattern variables.
pub fn parse_pattern(text: &str) -> Result<Pattern, ParseError> {
    Parser::new(text, &Dialect::GENERIC, true, false)?.parse_all()
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Pow,
    PowAbs,
    LParen,
    RParen,
    Comma,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Pow => "`^`".into(),
            Tok::PowAbs => "`|**|`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let v = lit.parse::<f64>().map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("malformed number `{lit}`"),
            })?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '/' => Tok::Slash,
            '^' => Tok::Pow,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '*' if chars.get(i + 1) == Some(&'*') => {
                i += 1;
                Tok::Pow
            }
            '*' => Tok::Star,
            '|' if chars[i..].starts_with(&['|', '*', '*', '|']) => {
                i += 3;
                Tok::PowAbs
            }
            _ => {
                return Err(ParseError::UnknownSymbol {
                    pos: start,
                    symbol: c.to_string(),
                })
            }
        };
        i += 1;
        out.push((tok, start));
    }
    Ok(out)
}

struct Parser<'d> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
    dialect: &'d Dialect,
    allow_holes: bool,
    literals: Option<Vec<f64>>,
}

impl<'d> Parser<'d> {
    fn new(
        text: &str,
        dialect: &'d Dialect,
        allow_holes: bool,
        extract: bool,
    ) -> Result<Self, ParseError> {
        let toks = tokenize(text)?;
        if toks.is_empty() {
            return Err(ParseError::Syntax {
                pos: 0,
                msg: "empty input".into(),
            });
        }
        Ok(Parser {
            toks,
            at: 0,
            end: text.chars().count(),
            dialect,
            allow_holes,
            literals: extract.then(Vec::new),
        })
    }

    fn parse_all(&mut self) -> Result<Pattern, ParseError> {
        let e = self.sum()?;
        if let Some((t, pos)) = self.toks.get(self.at) {
            return Err(ParseError::Syntax {
                pos: *pos,
                msg: format!("unexpected {}", t.describe()),
            });
        }
        Ok(e)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.at + k).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.bump() {
            Some((t, _)) if t == want => Ok(()),
            Some((t, pos)) => Err(ParseError::Syntax {
                pos,
                msg: format!("expected {}, found {}", want.describe(), t.describe()),
            }),
            None => Err(ParseError::Syntax {
                pos: self.end,
                msg: format!("expected {}, found end of input", want.describe()),
            }),
        }
    }

    fn sum(&mut self) -> Result<Pattern, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.at += 1;
            let rhs = self.product()?;
            lhs = Pattern::bin(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Pattern, ParseError> {
        let mut lhs = self.signed()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.at += 1;
            let rhs = self.signed()?;
            lhs = Pattern::bin(op, lhs, rhs);
        }
    }

    fn is_pow_op(t: Option<&Tok>) -> bool {
        matches!(t, Some(Tok::Pow | Tok::PowAbs))
    }

    fn signed(&mut self) -> Result<Pattern, ParseError> {
        match self.peek() {
            Some(Tok::Plus) => {
                self.at += 1;
                self.signed()
            }
            Some(Tok::Minus) => {
                if let Some(Tok::Num(v)) = self.peek_at(1) {
                    if !Self::is_pow_op(self.peek_at(2)) {
                        let v = -*v;
                        self.at += 2;
                        return Ok(self.literal(v));
                    }
                }
                self.at += 1;
                let inner = self.signed()?;
                Ok(Pattern::bin(BinOp::Mul, Pattern::Const(-1.0), inner))
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Pattern, ParseError> {
        let mut lhs = self.primary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Pow) => BinOp::Pow,
                Some(Tok::PowAbs) => BinOp::PowAbs,
                _ => return Ok(lhs),
            };
            self.at += 1;
            let rhs = self.exponent()?;
            lhs = Pattern::bin(op, lhs, rhs);
        }
    }

    fn exponent(&mut self) -> Result<Pattern, ParseError> {
        if let Some(Tok::Minus) = self.peek() {
            if let Some(Tok::Num(v)) = self.peek_at(1) {
                let v = -*v;
                self.at += 2;
                return Ok(self.literal(v));
            }
            self.at += 1;
            let inner = self.exponent()?;
            return Ok(Pattern::bin(BinOp::Mul, Pattern::Const(-1.0), inner));
        }
        self.primary()
    }

    fn literal(&mut self, v: f64) -> Pattern {
        match &mut self.literals {
            Some(vals) => {
                vals.push(v);
                Pattern::Param(vals.len() as u32 - 1)
            }
            None => Pattern::Const(v),
        }
    }

    fn primary(&mut self) -> Result<Pattern, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some((Tok::Num(v), _)) => Ok(self.literal(v)),
            Some((Tok::LParen, _)) => {
                let e = self.sum()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some((Tok::Ident(name), _)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.call(&name, pos)
                } else {
                    self.terminal(&name, pos)
                }
            }
            Some((t, _)) => Err(ParseError::Syntax {
                pos,
                msg: format!("unexpected {}", t.describe()),
            }),
            None => Err(ParseError::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            }),
        }
    }

    fn terminal(&mut self, name: &str, pos: usize) -> Result<Pattern, ParseError> {
        if let Some(i) = super::dialect::indexed(name, "v") {
            if self.allow_holes {
                return Ok(Pattern::Hole(i));
            }
            return Err(ParseError::Syntax {
                pos,
                msg: format!("pattern variable `{name}` is not allowed in an expression"),
            });
        }
        if let Some(i) = self.dialect.variable(name) {
            return Ok(Pattern::Var(i));
        }
        if let Some(k) = self.dialect.parameter(name) {
            if self.literals.is_some() {
                return Err(ParseError::Syntax {
                    pos,
                    msg: format!("parameter `{name}` in literal-extraction mode"),
                });
            }
            return Ok(Pattern::Param(k));
        }
        Err(ParseError::UnknownSymbol {
            pos,
            symbol: name.to_string(),
        })
    }

    fn call(&mut self, name: &str, pos: usize) -> Result<Pattern, ParseError> {
        let spec = self
            .dialect
            .function(name)
            .ok_or_else(|| ParseError::UnknownSymbol {
                pos,
                symbol: name.to_string(),
            })?;
        self.expect(Tok::LParen)?;
        let mut args = vec![self.sum()?];
        while self.peek() == Some(&Tok::Comma) {
            self.at += 1;
            args.push(self.sum()?);
        }
        self.expect(Tok::RParen)?;
        if args.len() != spec.arity() {
            return Err(ParseError::Arity {
                pos,
                name: name.to_string(),
                expected: spec.arity(),
                got: args.len(),
            });
        }
        let mut args = args.into_iter();
        let a = args.next().unwrap();
        Ok(match spec {
            FnSpec::Unary(op) => Pattern::un(op, a),
            FnSpec::Binary(op) => Pattern::bin(op, a, args.next().unwrap()),
            FnSpec::Square => Pattern::bin(BinOp::Pow, a, Pattern::Const(2.0)),
            FnSpec::Cube => Pattern::bin(BinOp::Pow, a, Pattern::Const(3.0)),
            FnSpec::Neg => Pattern::bin(BinOp::Mul, Pattern::Const(-1.0), a),
            FnSpec::Inv => Pattern::bin(BinOp::Div, Pattern::Const(1.0), a),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::UnOp;

    fn expr(s: &str) -> Expr {
        parse_expression(s, &Dialect::GENERIC, false).unwrap().expr
    }

    #[test]
    fn csv_row_expression_with_supplied_params() {
        let got = parse_expression("x0^p0 + p1*x1", &Dialect::GENERIC, false).unwrap();
        let want = Expr::bin(
            BinOp::Add,
            Expr::bin(BinOp::Pow, Expr::Var(0), Expr::Param(0)),
            Expr::bin(BinOp::Mul, Expr::Param(1), Expr::Var(1)),
        );
        assert_eq!(got.expr, want);
        assert!(got.params.is_empty());
        assert_eq!(got.expr.size(), 7);
    }

    #[test]
    fn single_variable() {
        let got = parse_expression("x0", &Dialect::GENERIC, true).unwrap();
        assert_eq!(got.expr, Expr::Var(0));
        assert!(got.params.is_empty());
    }

    #[test]
    fn literal_extraction_in_encounter_order() {
        let got = parse_expression("2.5*x0 + 1.0", &Dialect::GENERIC, true).unwrap();
        assert_eq!(got.expr, expr("t0 * x0 + t1"));
        assert_eq!(got.params, vec![2.5, 1.0]);
    }

    #[test]
    fn negative_literals_fold() {
        let got = parse_expression("x0 * -3 - -2e-1", &Dialect::GENERIC, true).unwrap();
        assert_eq!(got.params, vec![-3.0, -0.2]);
        assert_eq!(expr("-x0"), Expr::bin(BinOp::Mul, Expr::Const(-1.0), Expr::Var(0)));
        // unary minus binds looser than power
        assert_eq!(
            expr("-2^2"),
            Expr::bin(
                BinOp::Mul,
                Expr::Const(-1.0),
                Expr::bin(BinOp::Pow, Expr::Const(2.0), Expr::Const(2.0))
            )
        );
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(expr("x0 + x1 * x2"), expr("x0 + (x1 * x2)"));
        assert_eq!(expr("x0 - x1 - x2"), expr("(x0 - x1) - x2"));
        assert_eq!(expr("x0 ^ x1 ^ x2"), expr("(x0 ^ x1) ^ x2"));
        assert_eq!(expr("x0 * x1 ^ 2"), expr("x0 * (x1 ^ 2)"));
        assert_eq!(expr("x0 ** 2"), expr("x0 ^ 2"));
        assert_eq!(expr("pow(x0, 2)"), expr("x0 ^ 2"));
    }

    #[test]
    fn protected_power_token() {
        assert_eq!(
            expr("sqrt(x0 |**| t0)"),
            Expr::un(UnOp::Sqrt, Expr::bin(BinOp::PowAbs, Expr::Var(0), Expr::Param(0)))
        );
    }

    #[test]
    fn patterns() {
        assert_eq!(
            parse_pattern("v0 + v0").unwrap(),
            Pattern::bin(BinOp::Add, Pattern::Hole(0), Pattern::Hole(0))
        );
        assert_eq!(parse_pattern("v0").unwrap(), Pattern::Hole(0));
        assert_eq!(
            parse_pattern("v0 + sin(t0 + x0)").unwrap(),
            Pattern::bin(
                BinOp::Add,
                Pattern::Hole(0),
                Pattern::un(
                    UnOp::Sin,
                    Pattern::bin(BinOp::Add, Pattern::Param(0), Pattern::Var(0))
                )
            )
        );
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_expression("x0 + ", &Dialect::GENERIC, false).unwrap_err();
        assert_eq!(e.position(), 5);
        let e = parse_expression("x0 + foo", &Dialect::GENERIC, false).unwrap_err();
        assert!(matches!(e, ParseError::UnknownSymbol { pos: 5, .. }));
        let e = parse_expression("sin(x0, x1)", &Dialect::GENERIC, false).unwrap_err();
        assert!(matches!(e, ParseError::Arity { expected: 1, got: 2, .. }));
        let e = parse_expression("x0 $ x1", &Dialect::GENERIC, false).unwrap_err();
        assert_eq!(e.position(), 3);
        let e = parse_expression("(x0 + x1", &Dialect::GENERIC, false).unwrap_err();
        assert_eq!(e.position(), 8);
        assert!(parse_expression("v0 + x1", &Dialect::GENERIC, false).is_err());
        assert!(parse_expression("", &Dialect::GENERIC, false).is_err());
        assert!(parse_expression("t0 * 2", &Dialect::GENERIC, true).is_err());
    }

    #[test]
    fn operon_dialect() {
        let got = parse_expression("(X1 * 2.5) + square(X2)", &Dialect::OPERON, true).unwrap();
        assert_eq!(
            got.expr,
            Expr::bin(
                BinOp::Add,
                Expr::bin(BinOp::Mul, Expr::Var(0), Expr::Param(0)),
                Expr::bin(BinOp::Pow, Expr::Var(1), Expr::Const(2.0)),
            )
        );
        assert_eq!(got.params, vec![2.5]);
    }
}
