//! Trie-indexed pattern database and relational e-matching.
//!
//! For every token the database keeps a trie `class -> child_1 -> ... -> child_k`
//! over the canonical e-nodes carrying that token. A pattern compiles to one
//! atom per operator/terminal position, visited in pre-order; each atom walks
//! its token's trie, binding unbound variables from trie keys and intersecting
//! bound ones with a single lookup. This is a generic-join evaluation of the
//! conjunctive query with pattern pre-order as the variable order.
//!
//! Pattern conventions: `v_i` matches any class and repeated indices must bind
//! the same class; `x_i` and constants match only that exact leaf; `t_k`
//! matches any parameter leaf. Commutative operators are tried in both child
//! orders.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::egraph::{EGraph, ENode, Id, Sym};
use crate::expr::Pattern;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trie {
    pub next: BTreeMap<Id, Trie>,
}

impl Trie {
    fn insert(&mut self, path: &[Id]) {
        if let Some((head, rest)) = path.split_first() {
            self.next.entry(*head).or_default().insert(rest);
        }
    }

    /// Number of complete paths.
    pub fn len(&self) -> usize {
        if self.next.is_empty() {
            return 1;
        }
        self.next.values().map(Trie::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.next.is_empty()
    }
}

/// Token -> trie over `(class, children...)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PatternDb {
    tries: BTreeMap<Sym, Trie>,
}

impl PatternDb {
    pub fn insert(&mut self, node: &ENode, class: Id) {
        let mut path = Vec::with_capacity(node.children.len() + 1);
        path.push(class);
        path.extend_from_slice(&node.children);
        self.tries.entry(node.sym).or_default().insert(&path);
    }

    /// Index every canonical node of `g`.
    pub fn from_graph(g: &EGraph) -> PatternDb {
        let mut db = PatternDb::default();
        for class in g.classes() {
            for node in &class.nodes {
                db.insert(node, class.id);
            }
        }
        db
    }

    pub fn trie(&self, sym: &Sym) -> Option<&Trie> {
        self.tries.get(sym)
    }

    /// Classes holding at least one node with `sym`.
    pub fn classes_with(&self, sym: &Sym) -> impl Iterator<Item = Id> + '_ {
        self.tries.get(sym).into_iter().flat_map(|t| t.next.keys().copied())
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Sym> {
        self.tries.keys()
    }

    fn params(&self) -> impl Iterator<Item = (&Sym, &Trie)> {
        self.tries.iter().filter(|(s, _)| matches!(s, Sym::Param(_)))
    }
}

/// Bindings produced by one match.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Subst {
    /// Pattern variable index -> class.
    pub holes: BTreeMap<u32, Id>,
    /// Class bound to each operator/terminal position, in pattern pre-order.
    pub nodes: Vec<Id>,
}

impl Subst {
    pub fn hole(&self, i: u32) -> Option<Id> {
        self.holes.get(&i).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Match {
    pub root: Id,
    pub subst: Subst,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("pattern variable v{0} is not bound")]
    Unbound(u32),
}

#[derive(Clone, Copy, Debug)]
enum AtomSym {
    Exact(Sym),
    AnyParam,
}

#[derive(Debug)]
struct Atom {
    sym: AtomSym,
    class_var: usize,
    children: Vec<usize>,
    commutative: bool,
}

#[derive(Debug)]
struct Program {
    atoms: Vec<Atom>,
    var_count: usize,
    holes: BTreeMap<u32, usize>,
}

impl Program {
    fn compile(p: &Pattern) -> Program {
        let mut prog = Program {
            atoms: Vec::new(),
            var_count: 0,
            holes: BTreeMap::new(),
        };
        let root = prog.fresh();
        prog.visit(p, root);
        prog
    }

    fn fresh(&mut self) -> usize {
        self.var_count += 1;
        self.var_count - 1
    }

    fn var_for(&mut self, p: &Pattern) -> usize {
        match p {
            Pattern::Hole(i) => match self.holes.get(i) {
                Some(v) => *v,
                None => {
                    let v = self.fresh();
                    self.holes.insert(*i, v);
                    v
                }
            },
            _ => self.fresh(),
        }
    }

    fn visit(&mut self, p: &Pattern, class_var: usize) {
        let (sym, kids): (AtomSym, Vec<&Pattern>) = match p {
            Pattern::Hole(i) => {
                self.holes.insert(*i, class_var);
                return;
            }
            Pattern::Var(i) => (AtomSym::Exact(Sym::Var(*i)), vec![]),
            Pattern::Param(_) => (AtomSym::AnyParam, vec![]),
            Pattern::Const(c) => (AtomSym::Exact(Sym::constant(*c)), vec![]),
            Pattern::Un(op, a) => (AtomSym::Exact(Sym::Un(*op)), vec![a]),
            Pattern::Bin(op, a, b) => (AtomSym::Exact(Sym::Bin(*op)), vec![a, b]),
        };
        let commutative = matches!(sym, AtomSym::Exact(s) if s.is_commutative());
        let at = self.atoms.len();
        self.atoms.push(Atom {
            sym,
            class_var,
            children: vec![],
            commutative,
        });
        // child variables are allocated before descending so pre-order holds
        let vars: Vec<usize> = kids.iter().map(|k| self.var_for(k)).collect();
        self.atoms[at].children = vars.clone();
        for (k, v) in kids.into_iter().zip(vars) {
            if !matches!(k, Pattern::Hole(_)) {
                self.visit(k, v);
            }
        }
    }
}

struct Search<'a> {
    db: &'a PatternDb,
    prog: &'a Program,
    bind: Vec<Option<Id>>,
    out: BTreeSet<Match>,
}

impl Search<'_> {
    fn run(&mut self, i: usize) {
        if i == self.prog.atoms.len() {
            self.emit();
            return;
        }
        let db = self.db;
        match self.prog.atoms[i].sym {
            AtomSym::Exact(sym) => {
                if let Some(trie) = db.trie(&sym) {
                    self.enter(i, trie);
                }
            }
            AtomSym::AnyParam => {
                for (_, trie) in db.params() {
                    self.enter(i, trie);
                }
            }
        }
    }

    fn enter(&mut self, i: usize, trie: &Trie) {
        const STRAIGHT: &[usize] = &[0, 1];
        const SWAPPED: &[usize] = &[1, 0];
        let prog = self.prog;
        let atom = &prog.atoms[i];
        let perms: &[&[usize]] = if atom.commutative { &[STRAIGHT, SWAPPED] } else { &[STRAIGHT] };
        let arity = atom.children.len();
        let cv = atom.class_var;
        for perm in perms {
            match self.bind[cv] {
                Some(c) => {
                    if let Some(sub) = trie.next.get(&c) {
                        self.walk(i, perm, 0, arity, sub);
                    }
                }
                None => {
                    for (c, sub) in &trie.next {
                        self.bind[cv] = Some(*c);
                        self.walk(i, perm, 0, arity, sub);
                    }
                    self.bind[cv] = None;
                }
            }
        }
    }

    fn walk(&mut self, i: usize, perm: &[usize], k: usize, arity: usize, trie: &Trie) {
        if k == arity {
            self.run(i + 1);
            return;
        }
        let v = self.prog.atoms[i].children[perm[k]];
        match self.bind[v] {
            Some(c) => {
                if let Some(sub) = trie.next.get(&c) {
                    self.walk(i, perm, k + 1, arity, sub);
                }
            }
            None => {
                for (c, sub) in &trie.next {
                    self.bind[v] = Some(*c);
                    self.walk(i, perm, k + 1, arity, sub);
                }
                self.bind[v] = None;
            }
        }
    }

    fn emit(&mut self) {
        let holes = self
            .prog
            .holes
            .iter()
            .map(|(h, v)| (*h, self.bind[*v].expect("bound")))
            .collect();
        let nodes = self
            .prog
            .atoms
            .iter()
            .map(|a| self.bind[a.class_var].expect("bound"))
            .collect();
        self.out.insert(Match {
            root: self.bind[0].expect("root bound"),
            subst: Subst { holes, nodes },
        });
    }
}

/// All matches of `p`, one per distinct binding, sorted.
///
/// The graph must be rebuilt; the database is read as-is.
pub fn match_pattern(g: &EGraph, p: &Pattern) -> Vec<Match> {
    debug_assert!(!g.is_dirty(), "match on a graph that needs rebuild");
    if let Pattern::Hole(i) = p {
        return g
            .classes()
            .map(|c| Match {
                root: c.id,
                subst: Subst {
                    holes: BTreeMap::from([(*i, c.id)]),
                    nodes: vec![],
                },
            })
            .collect();
    }
    let prog = Program::compile(p);
    let mut s = Search {
        db: g.db(),
        prog: &prog,
        bind: vec![None; prog.var_count],
        out: BTreeSet::new(),
    };
    s.run(0);
    s.out.into_iter().collect()
}

/// Distinct classes at which `p` matches.
pub fn match_roots(g: &EGraph, p: &Pattern) -> BTreeSet<Id> {
    match_pattern(g, p).into_iter().map(|m| m.root).collect()
}

/// `ids` plus every class reachable through parent links.
pub fn closure_of_matches(g: &EGraph, ids: impl IntoIterator<Item = Id>) -> BTreeSet<Id> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    for id in ids {
        let id = g.find(id);
        if seen.insert(id) {
            queue.push_back(id);
        }
    }
    while let Some(id) = queue.pop_front() {
        for (_, parent) in &g.class(id).parents {
            let p = g.find(*parent);
            if seen.insert(p) {
                queue.push_back(p);
            }
        }
    }
    seen
}

/// Insert `p` with its variables replaced by `s` and return the root class.
pub fn instantiate(g: &mut EGraph, p: &Pattern, s: &Subst) -> Result<Id, MatchError> {
    let node = match p {
        Pattern::Hole(i) => return s.hole(*i).map(|id| g.find(id)).ok_or(MatchError::Unbound(*i)),
        Pattern::Var(i) => ENode::leaf(Sym::Var(*i)),
        Pattern::Param(k) => ENode::leaf(Sym::Param(*k)),
        Pattern::Const(c) => ENode::leaf(Sym::constant(*c)),
        Pattern::Un(op, a) => ENode::new(Sym::Un(*op), &[instantiate(g, a, s)?]),
        Pattern::Bin(op, a, b) => {
            let a = instantiate(g, a, s)?;
            let b = instantiate(g, b, s)?;
            ENode::new(Sym::Bin(*op), &[a, b])
        }
    };
    Ok(g.add_enode(node).expect("children come from the graph"))
}
