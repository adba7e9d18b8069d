//! Building blocks: root-anchored syntactic patterns of stored expressions,
//! their frequency and average fitness, and `count-pattern`.
//!
//! Every node contributes the bare pattern variable plus its own token applied
//! to every combination of its children's blocks. Constants and parameters
//! both become anonymous `t` leaves. Blocks are syntactic, so `(a + b) + c`
//! and `a + (b + c)` are different blocks.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, Cmp};
use crate::egraph::EGraph;
use crate::expr::{BinOp, Expr, Pattern, UnOp};
use crate::matchdb::{closure_of_matches, match_roots};

/// Largest block size `distribution` will mine.
pub const MAX_BLOCK_SIZE: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BlocksError {
    #[error("block size bound {0} exceeds the limit of {MAX_BLOCK_SIZE}")]
    SizeBound(usize),
}

/// Handle into a [`BlockArena`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum BNode {
    Hole,
    Var(u32),
    Param,
    Un(UnOp, BlockId),
    Bin(BinOp, BlockId, BlockId),
}

/// Hash-consed block store.
#[derive(Debug, Default)]
pub struct BlockArena {
    nodes: Vec<(BNode, u32)>,
    memo: HashMap<BNode, BlockId>,
}

impl BlockArena {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn intern(&mut self, n: BNode) -> BlockId {
        if let Some(id) = self.memo.get(&n) {
            return *id;
        }
        let size = match n {
            BNode::Hole | BNode::Var(_) | BNode::Param => 1,
            BNode::Un(_, a) => 1 + self.size(a),
            BNode::Bin(_, a, b) => 1 + self.size(a) + self.size(b),
        };
        let id = BlockId(self.nodes.len() as u32);
        self.nodes.push((n, size as u32));
        self.memo.insert(n, id);
        id
    }

    pub fn size(&self, b: BlockId) -> usize {
        self.nodes[b.0 as usize].1 as usize
    }

    /// The block as a pattern, holes and parameters numbered left to right.
    pub fn to_pattern(&self, b: BlockId) -> Pattern {
        let mut holes = 0;
        let mut params = 0;
        self.build(b, &mut holes, &mut params)
    }

    fn build(&self, b: BlockId, holes: &mut u32, params: &mut u32) -> Pattern {
        match self.nodes[b.0 as usize].0 {
            BNode::Hole => {
                *holes += 1;
                Pattern::Hole(*holes - 1)
            }
            BNode::Param => {
                *params += 1;
                Pattern::Param(*params - 1)
            }
            BNode::Var(i) => Pattern::Var(i),
            BNode::Un(op, a) => Pattern::un(op, self.build(a, holes, params)),
            BNode::Bin(op, a, c) => {
                let l = self.build(a, holes, params);
                Pattern::bin(op, l, self.build(c, holes, params))
            }
        }
    }

    /// Blocks rooted at `e` with at most `cap` nodes (`None` = unbounded).
    pub fn get_patterns(&mut self, e: &Expr, cap: Option<usize>) -> Vec<BlockId> {
        let cap = cap.unwrap_or(usize::MAX);
        let mut out = self.mine(e, cap);
        out.sort_by_key(|b| (self.size(*b), *b));
        out
    }

    // Returned lists are sorted by size so the cross product can stop early.
    fn mine(&mut self, e: &Expr, cap: usize) -> Vec<BlockId> {
        let hole = self.intern(BNode::Hole);
        if cap == 0 {
            return vec![];
        }
        let mut out = vec![hole];
        match e {
            Expr::Var(i) => out.push(self.intern(BNode::Var(*i))),
            Expr::Param(_) | Expr::Const(_) => out.push(self.intern(BNode::Param)),
            Expr::Un(op, a) if cap >= 2 => {
                for p in self.mine(a, cap - 1) {
                    out.push(self.intern(BNode::Un(*op, p)));
                }
            }
            Expr::Bin(op, a, b) if cap >= 3 => {
                let left = self.mine(a, cap - 2);
                let right = if a == b { left.clone() } else { self.mine(b, cap - 2) };
                let min_r = right.first().map_or(usize::MAX, |r| self.size(*r));
                for &l in &left {
                    let sl = self.size(l);
                    if 1 + sl + min_r > cap {
                        break;
                    }
                    for &r in &right {
                        if 1 + sl + self.size(r) > cap {
                            break;
                        }
                        out.push(self.intern(BNode::Bin(*op, l, r)));
                    }
                }
            }
            _ => {}
        }
        out.sort_by_key(|b| self.size(*b));
        out
    }
}

/// Frequency and summed fitness per block.
#[derive(Debug, Default)]
pub struct BlockStats {
    pub arena: BlockArena,
    pub counts: HashMap<BlockId, (u64, f64)>,
}

impl BlockStats {
    pub fn add_expression(&mut self, e: &Expr, fitness: f64, cap: Option<usize>) {
        for b in self.arena.get_patterns(e, cap) {
            let c = self.counts.entry(b).or_insert((0, 0.0));
            c.0 += 1;
            c.1 += fitness;
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistOrder {
    #[default]
    Count,
    Fitness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionQuery {
    /// Block size constraint; `None` means up to [`MAX_BLOCK_SIZE`].
    pub size: Option<(Cmp, usize)>,
    pub limit: Option<usize>,
    pub order: DistOrder,
    pub min_count: u64,
    pub from_top: Option<usize>,
}

impl Default for DistributionQuery {
    fn default() -> Self {
        DistributionQuery {
            size: None,
            limit: None,
            order: DistOrder::Count,
            min_count: 1,
            from_top: None,
        }
    }
}

impl DistributionQuery {
    /// Largest block size that can satisfy the constraint.
    pub fn cap(&self) -> Result<usize, BlocksError> {
        let cap = match self.size {
            None => MAX_BLOCK_SIZE,
            Some((Cmp::Lt, m)) => m.saturating_sub(1),
            Some((Cmp::Le | Cmp::Eq, m)) => m,
            Some((Cmp::Gt | Cmp::Ge, _)) => MAX_BLOCK_SIZE,
        };
        if cap > MAX_BLOCK_SIZE {
            return Err(BlocksError::SizeBound(cap));
        }
        Ok(cap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub pattern: String,
    pub count: u64,
    pub avg_fitness: f64,
}

/// Aggregate blocks of the `from_top` fittest catalog entries.
pub fn distribution(catalog: &Catalog, q: &DistributionQuery) -> Result<Vec<DistributionRow>, BlocksError> {
    let cap = q.cap()?;
    let mut stats = BlockStats::default();
    let take = q.from_top.unwrap_or(usize::MAX);
    for id in catalog.by_fitness().take(take) {
        let entry = catalog.get(id).expect("indexed ids are registered");
        stats.add_expression(&entry.expr, entry.record.fitness, Some(cap));
    }
    Ok(rank(&stats, q))
}

/// Filter, order and cut aggregated stats.
pub fn rank(stats: &BlockStats, q: &DistributionQuery) -> Vec<DistributionRow> {
    let mut rows: Vec<(String, u64, f64)> = stats
        .counts
        .iter()
        .filter(|(b, (c, _))| {
            *c >= q.min_count
                && q.size.is_none_or(|(cmp, m)| cmp.holds(stats.arena.size(**b) as i64, m as i64))
        })
        .map(|(b, (c, s))| (stats.arena.to_pattern(*b).to_string(), *c, s / *c as f64))
        .collect();
    match q.order {
        DistOrder::Count => rows.sort_by(|a, b| {
            b.1.cmp(&a.1).then(b.2.total_cmp(&a.2)).then_with(|| a.0.cmp(&b.0))
        }),
        DistOrder::Fitness => rows.sort_by(|a, b| {
            b.2.total_cmp(&a.2).then(b.1.cmp(&a.1)).then_with(|| a.0.cmp(&b.0))
        }),
    }
    rows.truncate(q.limit.unwrap_or(usize::MAX));
    rows.into_iter()
        .map(|(pattern, count, avg_fitness)| DistributionRow { pattern, count, avg_fitness })
        .collect()
}

/// Number of e-classes that contain a match of `p` anywhere.
pub fn count_pattern(g: &EGraph, p: &Pattern) -> usize {
    closure_of_matches(g, match_roots(g, p)).len()
}

/// Per-expression block multiset as rendered strings; handy for tests.
pub fn block_strings(e: &Expr, cap: Option<usize>) -> BTreeMap<String, u64> {
    let mut arena = BlockArena::new();
    let mut out = BTreeMap::new();
    for b in arena.get_patterns(e, cap) {
        *out.entry(arena.to_pattern(b).to_string()).or_insert(0) += 1;
    }
    out
}

/// Complete binary tree of `+` with `levels` levels and distinct leaves.
pub fn complete_tree(levels: u32) -> Expr {
    fn go(levels: u32, next: &mut u32) -> Expr {
        if levels <= 1 {
            *next += 1;
            return Expr::Var(*next - 1);
        }
        let l = go(levels - 1, next);
        Expr::bin(BinOp::Add, l, go(levels - 1, next))
    }
    go(levels, &mut 0)
}
