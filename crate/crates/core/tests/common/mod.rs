#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use srx::expr::{BinOp, Expr, Pattern, UnOp};

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Gen {
    pub vars: u32,
    pub params: u32,
    pub consts: Vec<f64>,
    pub unops: Vec<UnOp>,
    pub binops: Vec<BinOp>,
}

impl Default for Gen {
    fn default() -> Self {
        Gen {
            vars: 3,
            params: 2,
            consts: vec![1.0, 2.0],
            unops: UnOp::ALL.to_vec(),
            binops: BinOp::ALL.to_vec(),
        }
    }
}

impl Gen {
    /// Random tree with exactly `size` nodes.
    pub fn expr(&self, r: &mut TestRng, size: usize) -> Expr {
        assert!(size >= 1);
        if size == 1 {
            return self.leaf(r);
        }
        if size == 2 || r.gen_bool(0.25) {
            let op = *self.unops.choose(r).unwrap();
            return Expr::un(op, self.expr(r, size - 1));
        }
        let left = r.gen_range(1..=size - 2);
        let op = *self.binops.choose(r).unwrap();
        Expr::bin(op, self.expr(r, left), self.expr(r, size - 1 - left))
    }

    pub fn leaf(&self, r: &mut TestRng) -> Expr {
        match r.gen_range(0..10) {
            0..=5 => Expr::Var(r.gen_range(0..self.vars)),
            6..=7 if self.params > 0 => Expr::Param(r.gen_range(0..self.params)),
            _ if !self.consts.is_empty() => Expr::Const(*self.consts.choose(r).unwrap()),
            _ => Expr::Var(r.gen_range(0..self.vars)),
        }
    }

    pub fn expr_up_to(&self, r: &mut TestRng, max: usize) -> Expr {
        let n = r.gen_range(1..=max);
        self.expr(r, n)
    }

    /// Random pattern of at most `max` nodes; holes drawn from `v0..v2`.
    pub fn pattern(&self, r: &mut TestRng, max: usize) -> Pattern {
        let n = r.gen_range(1..=max);
        self.pattern_sized(r, n)
    }

    fn pattern_sized(&self, r: &mut TestRng, size: usize) -> Pattern {
        if size == 1 {
            return if r.gen_bool(0.5) {
                Pattern::Hole(r.gen_range(0..3))
            } else {
                self.leaf(r).to_pattern()
            };
        }
        if size == 2 || r.gen_bool(0.25) {
            let op = *self.unops.choose(r).unwrap();
            return Pattern::un(op, self.pattern_sized(r, size - 1));
        }
        let left = r.gen_range(1..=size - 2);
        let op = *self.binops.choose(r).unwrap();
        Pattern::bin(op, self.pattern_sized(r, left), self.pattern_sized(r, size - 1 - left))
    }
}

/// A pattern cut from `e`: random subtrees replaced by holes, keeping at most
/// `max` nodes.
pub fn pattern_from(r: &mut TestRng, e: &Expr, max: usize) -> Pattern {
    let subs = subtrees(e);
    let t = subs.choose(r).unwrap();
    abstract_tree(r, t, max)
}

fn abstract_tree(r: &mut TestRng, e: &Expr, budget: usize) -> Pattern {
    if budget <= 1 || r.gen_bool(0.3) {
        return match e {
            Expr::Var(_) | Expr::Param(_) | Expr::Const(_) if r.gen_bool(0.5) => e.to_pattern(),
            _ => Pattern::Hole(r.gen_range(0..2)),
        };
    }
    match e {
        Expr::Un(op, a) => Pattern::un(*op, abstract_tree(r, a, budget - 1)),
        Expr::Bin(op, a, b) => {
            let rest = budget - 1;
            let l = abstract_tree(r, a, rest.saturating_sub(1).max(1));
            let used = l.size();
            if used >= rest {
                return Pattern::Hole(r.gen_range(0..2));
            }
            let rt = abstract_tree(r, b, rest - used);
            Pattern::bin(*op, l, rt)
        }
        leaf => leaf.to_pattern(),
    }
}

/// Every subtree, pre-order, duplicates included.
pub fn subtrees(e: &Expr) -> Vec<&Expr> {
    let mut out = Vec::new();
    e.visit(&mut |t| out.push(t));
    out
}

/// Structural key with the children of `+` and `*` sorted.
pub fn canon(e: &Expr) -> String {
    match e {
        Expr::Var(i) => format!("x{i}"),
        Expr::Param(k) => format!("t{k}"),
        Expr::Const(c) => format!("{:?}", if *c == 0.0 { 0.0 } else { *c }),
        Expr::Un(op, a) => format!("{}({})", op.name(), canon(a)),
        Expr::Bin(op, a, b) => {
            let (mut x, mut y) = (canon(a), canon(b));
            if op.is_commutative() && y < x {
                std::mem::swap(&mut x, &mut y);
            }
            format!("({x} {} {y})", op.symbol())
        }
    }
}

pub type Binding = BTreeMap<u32, String>;

/// All hole bindings under which `p` matches `e` at its root. Commutative
/// operators may match in either child order.
pub fn tree_match(p: &Pattern, e: &Expr) -> Vec<Binding> {
    let mut out = Vec::new();
    go(p, e, Binding::new(), &mut out);
    out
}

fn go(p: &Pattern, e: &Expr, b: Binding, out: &mut Vec<Binding>) {
    match (p, e) {
        (Pattern::Hole(i), _) => {
            let key = canon(e);
            let mut b = b;
            match b.get(i) {
                Some(k) if *k != key => {}
                Some(_) => out.push(b),
                None => {
                    b.insert(*i, key);
                    out.push(b);
                }
            }
        }
        (Pattern::Var(i), Expr::Var(j)) if i == j => out.push(b),
        (Pattern::Param(_), Expr::Param(_)) => out.push(b),
        (Pattern::Const(c), Expr::Const(d)) if c == d => out.push(b),
        (Pattern::Un(op, pa), Expr::Un(eop, ea)) if op == eop => go(pa, ea, b, out),
        (Pattern::Bin(op, pa, pb), Expr::Bin(eop, ea, eb)) if op == eop => {
            let mut orders = vec![(ea, eb)];
            if op.is_commutative() {
                orders.push((eb, ea));
            }
            for (x, y) in orders {
                let mut mid = Vec::new();
                go(pa, x, b.clone(), &mut mid);
                for m in mid {
                    go(pb, y, m, out);
                }
            }
        }
        _ => {}
    }
}

pub fn matches_anywhere(p: &Pattern, e: &Expr) -> bool {
    subtrees(e).into_iter().any(|t| !tree_match(p, t).is_empty())
}

/// Distinct subterms (by [`canon`]) across a corpus.
pub fn distinct_subterms(corpus: &[Expr]) -> BTreeMap<String, Expr> {
    let mut out = BTreeMap::new();
    for e in corpus {
        for t in subtrees(e) {
            out.entry(canon(t)).or_insert_with(|| t.clone());
        }
    }
    out
}

/// `(root, bindings)` keys of every match of `p` in the corpus.
pub fn oracle_matches(p: &Pattern, terms: &BTreeMap<String, Expr>) -> BTreeSet<(String, Binding)> {
    let mut out = BTreeSet::new();
    for (k, t) in terms {
        for b in tree_match(p, t) {
            out.insert((k.clone(), b));
        }
    }
    out
}

/// Number of distinct subterms containing a match anywhere.
pub fn oracle_count(p: &Pattern, terms: &BTreeMap<String, Expr>) -> usize {
    terms.values().filter(|t| matches_anywhere(p, t)).count()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}
