//! Expression and pattern trees.
//!
//! [`Expr`] is a concrete model: variables `x_i`, adjustable parameters `t_i`,
//! numeric constants and the operators of [`UnOp`] / [`BinOp`]. [`Pattern`]
//! extends it with pattern variables `v_i` that match any sub-expression.
//!
//! Text goes through [`parse_expression`] / [`parse_pattern`] and comes back
//! out through the [`Display`](std::fmt::Display) impls, which print a fully
//! parenthesized form that reparses to the same tree.

mod dialect;
mod parse;
mod render;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use dialect::{Dialect, FnSpec, DIALECTS};
pub use parse::{parse_expression, parse_pattern, ParseError, Parsed};
pub use render::RenderWith;

/// Unary operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnOp {
    Sin,
    Cos,
    Exp,
    /// `log|x|`
    Log,
    /// `sqrt|x|`
    Sqrt,
    Abs,
}

/// Binary operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    /// Protected power `|x|^y`, written `|**|`.
    PowAbs,
}

impl UnOp {
    pub const ALL: [UnOp; 6] = [UnOp::Sin, UnOp::Cos, UnOp::Exp, UnOp::Log, UnOp::Sqrt, UnOp::Abs];

    pub fn name(self) -> &'static str {
        match self {
            UnOp::Sin => "sin",
            UnOp::Cos => "cos",
            UnOp::Exp => "exp",
            UnOp::Log => "log",
            UnOp::Sqrt => "sqrt",
            UnOp::Abs => "abs",
        }
    }

    /// Protected evaluation.
    pub fn apply(self, x: f64) -> f64 {
        match self {
            UnOp::Sin => x.sin(),
            UnOp::Cos => x.cos(),
            UnOp::Exp => x.exp(),
            UnOp::Log => x.abs().ln(),
            UnOp::Sqrt => x.abs().sqrt(),
            UnOp::Abs => x.abs(),
        }
    }

    /// Derivative of [`UnOp::apply`] at `x`.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            UnOp::Sin => x.cos(),
            UnOp::Cos => -x.sin(),
            UnOp::Exp => x.exp(),
            UnOp::Log => 1.0 / x,
            UnOp::Sqrt => x.signum() / (2.0 * x.abs().sqrt()),
            UnOp::Abs => x.signum(),
        }
    }
}

impl BinOp {
    pub const ALL: [BinOp; 6] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Pow,
        BinOp::PowAbs,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
            BinOp::PowAbs => "|**|",
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Mul)
    }

    /// Protected evaluation.
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
            BinOp::Pow => a.powf(b),
            BinOp::PowAbs => pow_abs(a, b),
        }
    }

    /// Partial derivatives `(d/da, d/db)` of [`BinOp::apply`].
    ///
    /// The `d/db` partial of a power is only meaningful where the base is
    /// positive; callers skip it when the exponent is not differentiated.
    pub fn partials(self, a: f64, b: f64) -> (f64, f64) {
        match self {
            BinOp::Add => (1.0, 1.0),
            BinOp::Sub => (1.0, -1.0),
            BinOp::Mul => (b, a),
            BinOp::Div => (1.0 / b, -a / (b * b)),
            BinOp::Pow => (b * a.powf(b - 1.0), a.powf(b) * a.ln()),
            BinOp::PowAbs => {
                let m = a.abs();
                if m == 0.0 {
                    (0.0, 0.0)
                } else {
                    (b * m.powf(b - 1.0) * a.signum(), m.powf(b) * m.ln())
                }
            }
        }
    }
}

/// `|a|^b`, with `0^b = 0` for `b > 0` and NaN for `b <= 0`.
pub fn pow_abs(a: f64, b: f64) -> f64 {
    let m = a.abs();
    if m == 0.0 {
        if b > 0.0 {
            0.0
        } else {
            f64::NAN
        }
    } else {
        m.powf(b)
    }
}

/// A concrete symbolic regression model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Var(u32),
    Param(u32),
    Const(f64),
    Un(UnOp, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

/// A query tree; `Hole(i)` is the pattern variable `v_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Pattern {
    Hole(u32),
    Var(u32),
    Param(u32),
    Const(f64),
    Un(UnOp, Box<Pattern>),
    Bin(BinOp, Box<Pattern>, Box<Pattern>),
}

/// Node weight used by [`Expr::cost`]: 1 per leaf, 2 per binary, 3 per unary node.
pub const LEAF_COST: u32 = 1;
pub const BINARY_COST: u32 = 2;
pub const UNARY_COST: u32 = 3;

impl Expr {
    pub fn un(op: UnOp, a: Expr) -> Expr {
        Expr::Un(op, Box::new(a))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// Total node count.
    pub fn size(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::Param(_) | Expr::Const(_) => 1,
            Expr::Un(_, a) => 1 + a.size(),
            Expr::Bin(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Default node-weight cost.
    pub fn cost(&self) -> u32 {
        match self {
            Expr::Var(_) | Expr::Param(_) | Expr::Const(_) => LEAF_COST,
            Expr::Un(_, a) => UNARY_COST + a.cost(),
            Expr::Bin(_, a, b) => BINARY_COST + a.cost() + b.cost(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::Param(_) | Expr::Const(_) => 1,
            Expr::Un(_, a) => 1 + a.height(),
            Expr::Bin(_, a, b) => 1 + a.height().max(b.height()),
        }
    }

    /// Distinct parameter indices, ascending.
    pub fn param_indices(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Param(k) = e {
                out.insert(*k);
            }
        });
        out
    }

    /// Number of parameter slots needed to evaluate (max index + 1).
    pub fn param_slots(&self) -> usize {
        self.param_indices().last().map_or(0, |k| *k as usize + 1)
    }

    /// Largest variable index + 1.
    pub fn var_slots(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |e| {
            if let Expr::Var(i) = e {
                n = n.max(*i as usize + 1);
            }
        });
        n
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Un(_, a) => a.visit(f),
            Expr::Bin(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    /// Renumber parameters to `0..p` in first-occurrence order, returning the
    /// old index of each new slot. Repeated indices stay shared.
    pub fn compact_params(&self) -> (Expr, Vec<u32>) {
        let mut order: Vec<u32> = Vec::new();
        let out = self.map_params(&mut |k| match order.iter().position(|&o| o == k) {
            Some(p) => p as u32,
            None => {
                order.push(k);
                order.len() as u32 - 1
            }
        });
        (out, order)
    }

    /// Give every parameter occurrence its own fresh index, in pre-order.
    /// Returns the new tree and the old index for each new slot.
    pub fn fresh_params(&self) -> (Expr, Vec<u32>) {
        let mut order = Vec::new();
        let out = self.map_params(&mut |k| {
            order.push(k);
            order.len() as u32 - 1
        });
        (out, order)
    }

    fn map_params(&self, f: &mut impl FnMut(u32) -> u32) -> Expr {
        match self {
            Expr::Param(k) => Expr::Param(f(*k)),
            Expr::Var(_) | Expr::Const(_) => self.clone(),
            Expr::Un(op, a) => Expr::un(*op, a.map_params(f)),
            Expr::Bin(op, a, b) => {
                let a = a.map_params(f);
                let b = b.map_params(f);
                Expr::bin(*op, a, b)
            }
        }
    }

    /// Point evaluation with protected semantics. Missing parameters or
    /// variables evaluate to NaN.
    pub fn eval(&self, vars: &[f64], params: &[f64]) -> f64 {
        match self {
            Expr::Var(i) => vars.get(*i as usize).copied().unwrap_or(f64::NAN),
            Expr::Param(k) => params.get(*k as usize).copied().unwrap_or(f64::NAN),
            Expr::Const(c) => *c,
            Expr::Un(op, a) => op.apply(a.eval(vars, params)),
            Expr::Bin(op, a, b) => op.apply(a.eval(vars, params), b.eval(vars, params)),
        }
    }

    pub fn to_pattern(&self) -> Pattern {
        match self {
            Expr::Var(i) => Pattern::Var(*i),
            Expr::Param(k) => Pattern::Param(*k),
            Expr::Const(c) => Pattern::Const(*c),
            Expr::Un(op, a) => Pattern::Un(*op, Box::new(a.to_pattern())),
            Expr::Bin(op, a, b) => {
                Pattern::Bin(*op, Box::new(a.to_pattern()), Box::new(b.to_pattern()))
            }
        }
    }

    /// Direct children, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Un(_, a) => vec![a],
            Expr::Bin(_, a, b) => vec![a, b],
            _ => vec![],
        }
    }
}

impl Pattern {
    pub fn un(op: UnOp, a: Pattern) -> Pattern {
        Pattern::Un(op, Box::new(a))
    }

    pub fn bin(op: BinOp, a: Pattern, b: Pattern) -> Pattern {
        Pattern::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn size(&self) -> usize {
        match self {
            Pattern::Hole(_) | Pattern::Var(_) | Pattern::Param(_) | Pattern::Const(_) => 1,
            Pattern::Un(_, a) => 1 + a.size(),
            Pattern::Bin(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Distinct pattern-variable indices.
    pub fn holes(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.collect_holes(&mut out);
        out
    }

    fn collect_holes(&self, out: &mut BTreeSet<u32>) {
        match self {
            Pattern::Hole(i) => {
                out.insert(*i);
            }
            Pattern::Un(_, a) => a.collect_holes(out),
            Pattern::Bin(_, a, b) => {
                a.collect_holes(out);
                b.collect_holes(out);
            }
            _ => {}
        }
    }

    /// The concrete expression, if the pattern has no holes.
    pub fn to_expr(&self) -> Option<Expr> {
        Some(match self {
            Pattern::Hole(_) => return None,
            Pattern::Var(i) => Expr::Var(*i),
            Pattern::Param(k) => Expr::Param(*k),
            Pattern::Const(c) => Expr::Const(*c),
            Pattern::Un(op, a) => Expr::un(*op, a.to_expr()?),
            Pattern::Bin(op, a, b) => Expr::bin(*op, a.to_expr()?, b.to_expr()?),
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        render::write_expr(f, self, None)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        render::write_pattern(f, self)
    }
}
