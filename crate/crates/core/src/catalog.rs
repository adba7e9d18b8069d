//! Score-ordered indices over evaluated e-classes, `top` and `pareto`.
//!
//! Ordering is total: fitness descending (or DL ascending), then smaller size,
//! then smaller id.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::egraph::{EGraph, Id};
use crate::expr::{Expr, Pattern};
use crate::fitdata::FitRecord;
use crate::matchdb::{closure_of_matches, match_roots};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("expression {0} has a non-finite fitness")]
    NonFinite(Id),
    #[error("no expression has a description length yet; start with --calculate-dl or run `report ID`")]
    NoDl,
    #[error("unknown expression id {0}")]
    UnknownId(Id),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    #[default]
    Fitness,
    Dl,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Fitness => "fitness",
            Criterion::Dl => "dl",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    Size,
    Cost,
    Parameters,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Gt,
    Ge,
}

impl Cmp {
    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
            Cmp::Eq => a == b,
            Cmp::Gt => a > b,
            Cmp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterAtom {
    pub field: Field,
    pub cmp: Cmp,
    pub bound: i64,
}

/// Conjunction of atoms; empty means "everything".
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filter(pub Vec<FilterAtom>);

impl Filter {
    pub fn accepts(&self, g: &EGraph, id: Id, rec: &FitRecord) -> bool {
        self.0.iter().all(|a| {
            let v = match a.field {
                Field::Size => rec.size as i64,
                Field::Parameters => rec.n_params as i64,
                Field::Cost => g.data(id).cost as i64,
            };
            a.cmp.holds(v, a.bound)
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternConstraint {
    pub pattern: Pattern,
    pub negated: bool,
    pub root_only: bool,
}

impl PatternConstraint {
    /// Classes matching the pattern at their root, plus (unless `root_only`)
    /// every class containing such a match.
    pub fn matched(&self, g: &EGraph) -> BTreeSet<Id> {
        let roots = match_roots(g, &self.pattern);
        if self.root_only {
            roots
        } else {
            closure_of_matches(g, roots)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub expr: Expr,
    pub record: FitRecord,
}

/// One output row; also the JSON shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub id: u32,
    pub expression: String,
    pub fitness: f64,
    pub parameters: Vec<f64>,
    pub size: usize,
    pub dl: Option<f64>,
}

impl Row {
    pub fn new(id: Id, e: &Entry) -> Row {
        Row {
            id: id.0,
            expression: e.expr.to_string(),
            fitness: e.record.fitness,
            parameters: e.record.params.clone(),
            size: e.record.size,
            dl: e.record.dl,
        }
    }
}

type FitKey = (OrderedFloat<f64>, usize, Id);
type DlKey = (OrderedFloat<f64>, usize, Id);

fn fit_key(id: Id, r: &FitRecord) -> FitKey {
    (OrderedFloat(-r.fitness), r.size, id)
}

fn dl_key(id: Id, r: &FitRecord) -> Option<DlKey> {
    r.dl.map(|d| (OrderedFloat(d), r.size, id))
}

/// `a` strictly better than `b`: higher fitness, then smaller DL.
pub fn better(a: &FitRecord, b: &FitRecord) -> bool {
    if a.fitness != b.fitness {
        return a.fitness > b.fitness;
    }
    match (a.dl, b.dl) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => true,
        _ => false,
    }
}

#[derive(Clone, Debug, Default)]
struct Bucket {
    fitness: BTreeSet<FitKey>,
    dl: BTreeSet<DlKey>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(from = "BTreeMap<Id, Entry>", into = "BTreeMap<Id, Entry>")]
pub struct Catalog {
    registry: BTreeMap<Id, Entry>,
    by_fitness: BTreeSet<FitKey>,
    by_dl: BTreeSet<DlKey>,
    buckets: Vec<Bucket>,
}

impl From<BTreeMap<Id, Entry>> for Catalog {
    fn from(registry: BTreeMap<Id, Entry>) -> Self {
        let mut c = Catalog::default();
        for (id, e) in registry {
            c.index(id, &e.record);
            c.registry.insert(id, e);
        }
        c
    }
}

impl From<Catalog> for BTreeMap<Id, Entry> {
    fn from(c: Catalog) -> Self {
        c.registry
    }
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.registry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registry.is_empty()
    }

    pub fn get(&self, id: Id) -> Option<&Entry> {
        self.registry.get(&id)
    }

    pub fn contains(&self, id: Id) -> bool {
        self.registry.contains_key(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = Id> + '_ {
        self.registry.keys().copied()
    }

    pub fn has_dl(&self) -> bool {
        !self.by_dl.is_empty()
    }

    /// Ids in fitness order.
    pub fn by_fitness(&self) -> impl Iterator<Item = Id> + '_ {
        self.by_fitness.iter().map(|k| k.2)
    }

    pub fn by_dl(&self) -> impl Iterator<Item = Id> + '_ {
        self.by_dl.iter().map(|k| k.2)
    }

    fn index(&mut self, id: Id, r: &FitRecord) {
        self.by_fitness.insert(fit_key(id, r));
        if self.buckets.len() <= r.size {
            self.buckets.resize_with(r.size + 1, Bucket::default);
        }
        self.buckets[r.size].fitness.insert(fit_key(id, r));
        if let Some(k) = dl_key(id, r) {
            self.by_dl.insert(k);
            self.buckets[r.size].dl.insert(k);
        }
    }

    fn unindex(&mut self, id: Id, r: &FitRecord) {
        self.by_fitness.remove(&fit_key(id, r));
        self.buckets[r.size].fitness.remove(&fit_key(id, r));
        if let Some(k) = dl_key(id, r) {
            self.by_dl.remove(&k);
            self.buckets[r.size].dl.remove(&k);
        }
    }

    /// Register or improve the record of `id`. Returns whether the stored
    /// entry changed.
    pub fn register(&mut self, id: Id, expr: Expr, record: FitRecord) -> Result<bool, CatalogError> {
        if !record.fitness.is_finite() {
            return Err(CatalogError::NonFinite(id));
        }
        if let Some(old) = self.registry.get(&id) {
            if !better(&record, &old.record) {
                return Ok(false);
            }
            let old = self.registry.remove(&id).expect("present");
            self.unindex(id, &old.record);
        }
        self.index(id, &record);
        self.registry.insert(id, Entry { expr, record });
        Ok(true)
    }

    /// Store a DL value for an already registered id.
    pub fn set_dl(&mut self, id: Id, dl: f64) -> Result<(), CatalogError> {
        let mut e = self.registry.remove(&id).ok_or(CatalogError::UnknownId(id))?;
        self.unindex(id, &e.record);
        e.record.dl = Some(dl);
        self.index(id, &e.record);
        self.registry.insert(id, e);
        Ok(())
    }

    pub fn remove(&mut self, id: Id) -> Option<Entry> {
        let e = self.registry.remove(&id)?;
        self.unindex(id, &e.record);
        Some(e)
    }

    /// React to `absorbed` being merged into `root`.
    pub fn on_union(&mut self, root: Id, absorbed: Id) {
        if let Some(e) = self.remove(absorbed) {
            let _ = self.register(root, e.expr, e.record);
        }
    }

    /// Re-key every entry by its canonical id.
    pub fn reconcile(&mut self, g: &EGraph) {
        let stale: Vec<Id> = self.ids().filter(|id| g.find(*id) != *id).collect();
        for id in stale {
            self.on_union(g.find(id), id);
        }
    }

    pub fn row(&self, id: Id) -> Option<Row> {
        self.get(id).map(|e| Row::new(id, e))
    }

    /// The first `n` ids in `criterion` order passing `filter` and, if given,
    /// the membership test against `matched` (inverted when `negated`).
    pub fn top(
        &self,
        g: &EGraph,
        n: usize,
        filter: &Filter,
        criterion: Criterion,
        matched: Option<(&BTreeSet<Id>, bool)>,
    ) -> Result<Vec<Id>, CatalogError> {
        if criterion == Criterion::Dl && !self.has_dl() && !self.is_empty() {
            return Err(CatalogError::NoDl);
        }
        let order: Box<dyn Iterator<Item = Id>> = match criterion {
            Criterion::Fitness => Box::new(self.by_fitness()),
            Criterion::Dl => Box::new(self.by_dl()),
        };
        Ok(order
            .filter(|id| filter.accepts(g, *id, &self.registry[id].record))
            .filter(|id| match matched {
                None => true,
                Some((set, negated)) => set.contains(&g.find(*id)) != negated,
            })
            .take(n)
            .collect())
    }

    /// Per-size bucket bests that strictly improve on every smaller size.
    pub fn pareto(&self, criterion: Criterion) -> Result<Vec<Id>, CatalogError> {
        if criterion == Criterion::Dl && !self.has_dl() && !self.is_empty() {
            return Err(CatalogError::NoDl);
        }
        let mut out = Vec::new();
        let mut best: Option<f64> = None;
        for b in &self.buckets {
            let head = match criterion {
                Criterion::Fitness => b.fitness.first().map(|k| (k.0 .0, k.2)),
                Criterion::Dl => b.dl.first().map(|k| (k.0 .0, k.2)),
            };
            // both keys are "smaller is better"
            if let Some((v, id)) = head {
                if best.is_none_or(|bv| v < bv) {
                    best = Some(v);
                    out.push(id);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, parse_pattern, Dialect};
    use crate::fitdata::LossKind;

    fn e(s: &str) -> Expr {
        parse_expression(s, &Dialect::GENERIC, false).unwrap().expr
    }

    fn rec(expr: &Expr, fitness: f64) -> FitRecord {
        FitRecord::new(expr, vec![1.0; expr.param_slots()], fitness, LossKind::Mse)
    }

    fn setup(items: &[(&str, f64)]) -> (EGraph, Catalog, Vec<Id>) {
        let mut g = EGraph::new();
        let mut c = Catalog::new();
        let ids = items
            .iter()
            .map(|(s, f)| {
                let x = e(s);
                let id = g.add_expr(&x);
                c.register(id, x.clone(), rec(&x, *f)).unwrap();
                id
            })
            .collect();
        g.rebuild();
        (g, c, ids)
    }

    #[test]
    fn register_orders_by_fitness() {
        let (g, c, ids) = setup(&[("x0", -3.0), ("x1", -1.0), ("x0 + x1", -2.0)]);
        let top = c.top(&g, 10, &Filter::default(), Criterion::Fitness, None).unwrap();
        assert_eq!(top, vec![ids[1], ids[2], ids[0]]);
        assert!(c.top(&g, 0, &Filter::default(), Criterion::Fitness, None).unwrap().is_empty());
    }

    #[test]
    fn worse_reregistration_is_ignored() {
        let (_, mut c, ids) = setup(&[("x0", -3.0), ("x1", -1.0)]);
        let x = e("x0");
        assert!(!c.register(ids[0], x.clone(), rec(&x, -5.0)).unwrap());
        assert_eq!(c.get(ids[0]).unwrap().record.fitness, -3.0);
        assert!(c.register(ids[0], x.clone(), rec(&x, -0.5)).unwrap());
        assert_eq!(c.by_fitness().next(), Some(ids[0]));
        assert_eq!(
            c.register(ids[0], x.clone(), rec(&x, f64::NAN)),
            Err(CatalogError::NonFinite(ids[0]))
        );
    }

    #[test]
    fn union_keeps_better_record() {
        let (mut g, mut c, ids) = setup(&[("x0 * 1", -3.0), ("x0", -1.0)]);
        g.union(ids[0], ids[1]);
        g.rebuild();
        for (root, absorbed) in g.take_unions() {
            c.on_union(root, absorbed);
        }
        assert_eq!(c.len(), 1);
        let root = g.find(ids[0]);
        assert_eq!(c.get(root).unwrap().record.fitness, -1.0);
    }

    #[test]
    fn filters() {
        let (g, c, ids) = setup(&[("x0", -3.0), ("t0 * x1", -1.0), ("t0 * x0 + t1", -2.0), ("sin(x0)", -0.5)]);
        let f = Filter(vec![FilterAtom { field: Field::Size, cmp: Cmp::Lt, bound: 5 }]);
        assert_eq!(
            c.top(&g, 3, &f, Criterion::Fitness, None).unwrap(),
            vec![ids[3], ids[1], ids[0]]
        );
        let f = Filter(vec![FilterAtom { field: Field::Parameters, cmp: Cmp::Gt, bound: 1 }]);
        assert_eq!(c.top(&g, 3, &f, Criterion::Fitness, None).unwrap(), vec![ids[2]]);
        // sin(x0) costs 4, t0 * x1 costs 4, x0 costs 1
        let f = Filter(vec![FilterAtom { field: Field::Cost, cmp: Cmp::Le, bound: 3 }]);
        assert_eq!(c.top(&g, 3, &f, Criterion::Fitness, None).unwrap(), vec![ids[0]]);
    }

    #[test]
    fn pattern_membership() {
        let (g, c, ids) = setup(&[("x0 + x0", -3.0), ("sin(x1 + x1)", -1.0), ("x0 + x1", -2.0)]);
        let pc = PatternConstraint { pattern: parse_pattern("v0 + v0").unwrap(), negated: false, root_only: false };
        let m = pc.matched(&g);
        let got = c.top(&g, 10, &Filter::default(), Criterion::Fitness, Some((&m, false))).unwrap();
        assert_eq!(got, vec![ids[1], ids[0]]);
        let got = c.top(&g, 10, &Filter::default(), Criterion::Fitness, Some((&m, true))).unwrap();
        assert_eq!(got, vec![ids[2]]);
        let root = PatternConstraint { root_only: true, ..pc };
        let m = root.matched(&g);
        let got = c.top(&g, 10, &Filter::default(), Criterion::Fitness, Some((&m, false))).unwrap();
        assert_eq!(got, vec![ids[0]]);
    }

    #[test]
    fn dl_criterion() {
        let (g, mut c, ids) = setup(&[("x0", -3.0), ("x1", -1.0)]);
        assert_eq!(c.top(&g, 3, &Filter::default(), Criterion::Dl, None), Err(CatalogError::NoDl));
        c.set_dl(ids[0], 5.0).unwrap();
        assert_eq!(c.top(&g, 3, &Filter::default(), Criterion::Dl, None).unwrap(), vec![ids[0]]);
        assert_eq!(c.pareto(Criterion::Dl).unwrap(), vec![ids[0]]);
    }

    #[test]
    fn pareto_sweep() {
        let (_, c, ids) = setup(&[("x0", -3.0)]);
        assert_eq!(c.pareto(Criterion::Fitness).unwrap(), vec![ids[0]]);
        let (_, c, ids) = setup(&[("x0", -3.0), ("x1", -1.0), ("x0 + x1", -2.0), ("x0 * x1", -0.5)]);
        assert_eq!(c.pareto(Criterion::Fitness).unwrap(), vec![ids[1], ids[3]]);
    }

    #[test]
    fn serde_rebuilds_indices() {
        let (g, c, _) = setup(&[("x0", -3.0), ("x1", -1.0), ("x0 + x1", -2.0)]);
        let bytes = bincode::serialize(&c).unwrap();
        let back: Catalog = bincode::deserialize(&bytes).unwrap();
        let f = Filter::default();
        assert_eq!(
            back.top(&g, 5, &f, Criterion::Fitness, None).unwrap(),
            c.top(&g, 5, &f, Criterion::Fitness, None).unwrap()
        );
        assert_eq!(back.pareto(Criterion::Fitness), c.pareto(Criterion::Fitness));
    }
}
