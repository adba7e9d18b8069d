//! Hash-consed e-graph with a union-find canonical map.
//!
//! Nodes are keyed by `(symbol, canonical children)`; children of `+` and `*`
//! are sorted so `a + b` and `b + a` land in the same e-class without
//! rewriting. Associativity is not canonicalized.
//!
//! Mutation follows the usual deferred-repair scheme: [`EGraph::union`]
//! records parents that need re-canonicalization and [`EGraph::rebuild`]
//! restores congruence, e-class data and the pattern database.

use std::collections::HashMap;
use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::expr::{BinOp, Expr, UnOp, BINARY_COST, LEAF_COST, UNARY_COST};
use crate::matchdb::PatternDb;

/// E-class identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Id(pub u32);

impl Id {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The token stored in an e-node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sym {
    Var(u32),
    Param(u32),
    Const(OrderedFloat<f64>),
    Un(UnOp),
    Bin(BinOp),
}

impl Sym {
    pub fn constant(v: f64) -> Sym {
        // one key for 0.0 and -0.0
        Sym::Const(OrderedFloat(if v == 0.0 { 0.0 } else { v }))
    }

    pub fn arity(self) -> usize {
        match self {
            Sym::Var(_) | Sym::Param(_) | Sym::Const(_) => 0,
            Sym::Un(_) => 1,
            Sym::Bin(_) => 2,
        }
    }

    pub fn weight(self) -> u32 {
        match self {
            Sym::Var(_) | Sym::Param(_) | Sym::Const(_) => LEAF_COST,
            Sym::Un(_) => UNARY_COST,
            Sym::Bin(_) => BINARY_COST,
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, Sym::Bin(op) if op.is_commutative())
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::Var(i) => write!(f, "x{i}"),
            Sym::Param(k) => write!(f, "t{k}"),
            Sym::Const(c) => write!(f, "{}", c.0),
            Sym::Un(op) => f.write_str(op.name()),
            Sym::Bin(op) => f.write_str(op.symbol()),
        }
    }
}

/// An operator applied to e-classes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ENode {
    pub sym: Sym,
    pub children: SmallVec<[Id; 2]>,
}

impl ENode {
    pub fn leaf(sym: Sym) -> ENode {
        ENode {
            sym,
            children: SmallVec::new(),
        }
    }

    pub fn new(sym: Sym, children: &[Id]) -> ENode {
        ENode {
            sym,
            children: SmallVec::from_slice(children),
        }
    }
}

/// Per-class analysis data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassData {
    /// 1 for leaves; otherwise 1 + the smallest max-child-height over member nodes.
    pub height: u32,
    /// Cost of the cheapest expression derivable from the class.
    pub cost: u32,
    pub is_const: bool,
    /// Node achieving `cost`.
    pub best: ENode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EClass {
    pub id: Id,
    pub nodes: Vec<ENode>,
    /// `(parent node, class containing it)` for every node that uses this class.
    #[serde(skip)]
    pub parents: Vec<(ENode, Id)>,
    pub data: ClassData,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EGraphError {
    #[error("unknown e-class id {0}")]
    UnknownId(Id),
    #[error("`{sym}` expects {expected} children, got {got}")]
    Arity { sym: String, expected: usize, got: usize },
    #[error("e-class {0} has no finite-cost expression")]
    NotExtractable(Id),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn make_set(&mut self) -> Id {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        self.size.push(1);
        Id(id)
    }

    fn len(&self) -> usize {
        self.parent.len()
    }

    fn find(&self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            x = self.parent[x as usize];
        }
        x
    }

    fn find_mut(&mut self, x: u32) -> u32 {
        let root = self.find(x);
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Union by size, ties toward the smaller id. Returns `(root, absorbed)`.
    fn union_roots(&mut self, a: u32, b: u32) -> (u32, u32) {
        let (sa, sb) = (self.size[a as usize], self.size[b as usize]);
        let (root, child) = if sa > sb || (sa == sb && a < b) { (a, b) } else { (b, a) };
        self.parent[child as usize] = root;
        self.size[root as usize] += self.size[child as usize];
        (root, child)
    }
}

/// The e-graph.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EGraph {
    uf: UnionFind,
    classes: Vec<Option<EClass>>,
    #[serde(skip)]
    memo: HashMap<ENode, Id>,
    #[serde(skip)]
    pending: Vec<(ENode, Id)>,
    #[serde(skip)]
    analysis_pending: Vec<(ENode, Id)>,
    #[serde(skip)]
    unions: Vec<(Id, Id)>,
    #[serde(skip)]
    db: PatternDb,
    #[serde(skip)]
    dirty: bool,
}

impl EGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of ids ever allocated.
    pub fn id_bound(&self) -> usize {
        self.uf.len()
    }

    pub fn contains(&self, id: Id) -> bool {
        id.index() < self.uf.len()
    }

    pub fn find(&self, id: Id) -> Id {
        Id(self.uf.find(id.0))
    }

    fn find_mut(&mut self, id: Id) -> Id {
        Id(self.uf.find_mut(id.0))
    }

    /// Number of canonical e-classes.
    pub fn class_count(&self) -> usize {
        self.classes.iter().filter(|c| c.is_some()).count()
    }

    /// Total e-nodes over all canonical classes.
    pub fn node_count(&self) -> usize {
        self.classes.iter().flatten().map(|c| c.nodes.len()).sum()
    }

    /// Canonical classes in ascending id order.
    pub fn classes(&self) -> impl Iterator<Item = &EClass> {
        self.classes.iter().flatten()
    }

    /// The canonical class for `id`.
    pub fn class(&self, id: Id) -> &EClass {
        self.classes[self.find(id).index()]
            .as_ref()
            .expect("canonical id has a class")
    }

    pub fn data(&self, id: Id) -> &ClassData {
        &self.class(id).data
    }

    pub fn db(&self) -> &PatternDb {
        &self.db
    }

    /// True when unions are waiting for [`EGraph::rebuild`].
    pub fn is_dirty(&self) -> bool {
        self.dirty || !self.pending.is_empty() || !self.analysis_pending.is_empty()
    }

    /// Drain the log of `(root, absorbed)` unions performed since the last call.
    pub fn take_unions(&mut self) -> Vec<(Id, Id)> {
        std::mem::take(&mut self.unions)
    }

    pub fn canonicalize(&self, node: &ENode) -> ENode {
        let mut out = node.clone();
        for c in out.children.iter_mut() {
            *c = self.find(*c);
        }
        if node.sym.is_commutative() {
            out.children.sort_unstable();
        }
        out
    }

    /// Class holding `node`, if present.
    pub fn lookup(&self, node: &ENode) -> Option<Id> {
        if node.children.iter().any(|c| !self.contains(*c)) {
            return None;
        }
        self.memo.get(&self.canonicalize(node)).map(|id| self.find(*id))
    }

    /// Class holding `expr`, if every subterm is already present.
    pub fn lookup_expr(&self, expr: &Expr) -> Option<Id> {
        let node = match expr {
            Expr::Var(i) => ENode::leaf(Sym::Var(*i)),
            Expr::Param(k) => ENode::leaf(Sym::Param(*k)),
            Expr::Const(c) => ENode::leaf(Sym::constant(*c)),
            Expr::Un(op, a) => ENode::new(Sym::Un(*op), &[self.lookup_expr(a)?]),
            Expr::Bin(op, a, b) => {
                ENode::new(Sym::Bin(*op), &[self.lookup_expr(a)?, self.lookup_expr(b)?])
            }
        };
        self.lookup(&node)
    }

    /// Insert a node, returning the existing class if it is already present.
    pub fn add_enode(&mut self, node: ENode) -> Result<Id, EGraphError> {
        if node.children.len() != node.sym.arity() {
            return Err(EGraphError::Arity {
                sym: node.sym.to_string(),
                expected: node.sym.arity(),
                got: node.children.len(),
            });
        }
        if let Some(c) = node.children.iter().find(|c| !self.contains(**c)) {
            return Err(EGraphError::UnknownId(*c));
        }
        let node = self.canonicalize(&node);
        if let Some(id) = self.memo.get(&node) {
            return Ok(self.find(*id));
        }
        let id = self.uf.make_set();
        let data = self.make_data(&node);
        let mut seen: SmallVec<[Id; 2]> = SmallVec::new();
        for &c in &node.children {
            if !seen.contains(&c) {
                seen.push(c);
                self.classes[c.index()]
                    .as_mut()
                    .expect("canonical child")
                    .parents
                    .push((node.clone(), id));
            }
        }
        self.db.insert(&node, id);
        self.memo.insert(node.clone(), id);
        self.classes.push(Some(EClass {
            id,
            nodes: vec![node],
            parents: Vec::new(),
            data,
        }));
        Ok(id)
    }

    /// Insert every subtree of `expr` bottom-up and return the root class.
    pub fn add_expr(&mut self, expr: &Expr) -> Id {
        let node = match expr {
            Expr::Var(i) => ENode::leaf(Sym::Var(*i)),
            Expr::Param(k) => ENode::leaf(Sym::Param(*k)),
            Expr::Const(c) => ENode::leaf(Sym::constant(*c)),
            Expr::Un(op, a) => {
                let a = self.add_expr(a);
                ENode::new(Sym::Un(*op), &[a])
            }
            Expr::Bin(op, a, b) => {
                let a = self.add_expr(a);
                let b = self.add_expr(b);
                ENode::new(Sym::Bin(*op), &[a, b])
            }
        };
        self.add_enode(node).expect("children were just inserted")
    }

    fn make_data(&self, node: &ENode) -> ClassData {
        let mut cost = node.sym.weight();
        let mut height = 0;
        let mut is_const = matches!(node.sym, Sym::Const(_) | Sym::Param(_));
        if !node.children.is_empty() {
            is_const = true;
        }
        for &c in &node.children {
            let d = &self.classes[self.find(c).index()].as_ref().unwrap().data;
            cost = cost.saturating_add(d.cost);
            height = height.max(d.height);
            is_const &= d.is_const;
        }
        ClassData {
            height: height + 1,
            cost,
            is_const,
            best: node.clone(),
        }
    }

    /// Merge `into` with `from`'s data. Returns `(into changed, from changed)`.
    fn join_data(into: &mut ClassData, from: ClassData) -> (bool, bool) {
        let before = into.clone();
        let from_differs = from.cost > into.cost
            || from.height > into.height
            || (into.is_const && !from.is_const);
        if from.cost < into.cost || (from.cost == into.cost && from.best < into.best) {
            into.cost = from.cost;
            into.best = from.best;
        }
        into.height = into.height.min(from.height);
        into.is_const |= from.is_const;
        (*into != before, from_differs)
    }

    /// Declare two classes equal. Congruence is restored by [`EGraph::rebuild`].
    pub fn union(&mut self, a: Id, b: Id) -> Id {
        let (a, b) = (self.find_mut(a), self.find_mut(b));
        if a == b {
            return a;
        }
        let (root, absorbed) = self.uf.union_roots(a.0, b.0);
        let (root, absorbed) = (Id(root), Id(absorbed));
        let gone = self.classes[absorbed.index()].take().expect("canonical class");
        self.pending.extend(gone.parents.iter().cloned());
        let class = self.classes[root.index()].as_mut().expect("canonical class");
        let (root_changed, absorbed_changed) = Self::join_data(&mut class.data, gone.data);
        if root_changed {
            self.analysis_pending.extend(class.parents.iter().cloned());
        }
        if absorbed_changed {
            self.analysis_pending.extend(gone.parents.iter().cloned());
        }
        class.nodes.extend(gone.nodes);
        class.parents.extend(gone.parents);
        self.unions.push((root, absorbed));
        self.dirty = true;
        root
    }

    /// Restore congruence, class data, the hashcons and the pattern database.
    /// Returns the number of unions performed while repairing.
    pub fn rebuild(&mut self) -> usize {
        let before = self.unions.len();
        while !self.pending.is_empty() || !self.analysis_pending.is_empty() {
            while let Some((node, class)) = self.pending.pop() {
                let node = self.canonicalize(&node);
                let class = self.find_mut(class);
                if let Some(other) = self.memo.insert(node, class) {
                    self.union(other, class);
                }
            }
            while let Some((node, class)) = self.analysis_pending.pop() {
                let node = self.canonicalize(&node);
                let class = self.find_mut(class);
                let data = self.make_data(&node);
                let slot = self.classes[class.index()].as_mut().expect("canonical class");
                let (changed, _) = Self::join_data(&mut slot.data, data);
                if changed {
                    self.analysis_pending.extend(slot.parents.iter().cloned());
                }
            }
        }
        if self.dirty {
            self.normalize();
            self.dirty = false;
        }
        self.unions.len() - before
    }

    /// Canonicalize and dedup class contents; re-derive parents, memo and db.
    fn normalize(&mut self) {
        let uf = &self.uf;
        let canon = |n: &ENode| {
            let mut out = n.clone();
            for c in out.children.iter_mut() {
                *c = Id(uf.find(c.0));
            }
            if n.sym.is_commutative() {
                out.children.sort_unstable();
            }
            out
        };
        for class in self.classes.iter_mut().flatten() {
            let mut nodes: Vec<ENode> = class.nodes.iter().map(canon).collect();
            nodes.sort_unstable();
            nodes.dedup();
            class.nodes = nodes;
            class.data.best = canon(&class.data.best);
            class.parents.clear();
        }
        self.memo.clear();
        let mut links = Vec::new();
        for class in self.classes.iter().flatten() {
            for node in &class.nodes {
                self.memo.insert(node.clone(), class.id);
                let mut seen: SmallVec<[Id; 2]> = SmallVec::new();
                for &c in &node.children {
                    if !seen.contains(&c) {
                        seen.push(c);
                        links.push((c, node.clone(), class.id));
                    }
                }
            }
        }
        for (child, node, parent) in links {
            self.classes[child.index()]
                .as_mut()
                .expect("canonical child")
                .parents
                .push((node, parent));
        }
        self.db = PatternDb::from_graph(self);
    }

    /// Re-derive the skipped fields after deserialization.
    pub fn restore(&mut self) {
        self.pending.clear();
        self.analysis_pending.clear();
        self.unions.clear();
        self.normalize();
        self.dirty = false;
    }

    /// Cheapest expression in the class.
    pub fn extract_best(&self, id: Id) -> Result<Expr, EGraphError> {
        if !self.contains(id) {
            return Err(EGraphError::UnknownId(id));
        }
        self.extract_rec(self.find(id), 0)
    }

    fn extract_rec(&self, id: Id, depth: usize) -> Result<Expr, EGraphError> {
        let data = self.data(id);
        if data.cost == u32::MAX || depth > self.uf.len() {
            return Err(EGraphError::NotExtractable(id));
        }
        let node = &data.best;
        Ok(match node.sym {
            Sym::Var(i) => Expr::Var(i),
            Sym::Param(k) => Expr::Param(k),
            Sym::Const(c) => Expr::Const(c.0),
            Sym::Un(op) => Expr::un(op, self.extract_rec(self.find(node.children[0]), depth + 1)?),
            Sym::Bin(op) => Expr::bin(
                op,
                self.extract_rec(self.find(node.children[0]), depth + 1)?,
                self.extract_rec(self.find(node.children[1]), depth + 1)?,
            ),
        })
    }
}
