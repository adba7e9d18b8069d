//! Interactive session: command dispatch, model evaluation, import and
//! persistence over one e-graph and its catalog.
//!
//! Parameters are renumbered to `t0..t{p-1}` in first-occurrence order before
//! insertion, so `t3 * x0` and `t0 * x0` are the same stored expression.
//! Repeated parameter tokens denote one shared value unless the session was
//! created with `fresh_params`.

mod command;
mod output;
pub mod snapshot;

use std::collections::VecDeque;
use std::path::Path;

use thiserror::Error;

pub use command::{Command, CommandError, TopQuery};
pub use output::{fmt_num, render_table, Output, PartitionReport, Report, BLOCK_COLUMNS, ROW_COLUMNS};

use crate::blocks::{self, BlocksError, DistributionQuery, DistributionRow};
use crate::catalog::{Catalog, CatalogError, Criterion, Row};
use crate::egraph::{EGraph, Id};
use crate::eqsat::{default_rules, simplify_expr, Budget};
use crate::expr::{parse_expression, Dialect, Expr, Pattern};
use crate::fitdata::{
    description_length, fit_params, metrics, DataError, Dataset, EvalError, FitOptions, FitRecord, LossKind,
};
use snapshot::{Meta, SnapshotError};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Command(#[from] CommandError),
    #[error("unknown expression id {0}")]
    UnknownId(u32),
    #[error("expression {0} is stored but has not been evaluated")]
    NotEvaluated(u32),
    #[error("this command needs a dataset (start with --dataset)")]
    NoDataset,
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Blocks(#[from] BlocksError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SessionError {
    /// Character offset of a syntax error in the command line.
    pub fn position(&self) -> Option<usize> {
        match self {
            SessionError::Command(e) => Some(e.position()),
            _ => None,
        }
    }

    pub fn is_not_found(&self) -> bool {
        matches!(
            self,
            SessionError::UnknownId(_) | SessionError::NotEvaluated(_) | SessionError::Catalog(CatalogError::UnknownId(_))
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionConfig {
    pub loss: LossKind,
    pub calculate_dl: bool,
    /// Default for `import` when the flag is omitted.
    pub parse_parameters: bool,
    pub fresh_params: bool,
    pub seed: u64,
    pub optimize_restarts: usize,
    pub simplify_budget: Budget,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            loss: LossKind::Mse,
            calculate_dl: false,
            parse_parameters: false,
            fresh_params: false,
            seed: 0,
            optimize_restarts: 10,
            simplify_budget: Budget {
                max_iterations: 30,
                max_nodes: 100_000,
            },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ImportSummary {
    pub imported: usize,
    /// `(1-based line, message)`.
    pub errors: Vec<(usize, String)>,
}

pub struct Session {
    graph: EGraph,
    catalog: Catalog,
    train: Option<Dataset>,
    test: Option<Dataset>,
    config: SessionConfig,
    fits: u64,
}

impl Session {
    pub fn new(config: SessionConfig) -> Self {
        Session {
            graph: EGraph::new(),
            catalog: Catalog::new(),
            train: None,
            test: None,
            config,
            fits: 0,
        }
    }

    pub fn with_data(config: SessionConfig, train: Dataset, test: Option<Dataset>) -> Result<Self, SessionError> {
        let mut s = Session::new(config);
        s.set_data(train, test)?;
        Ok(s)
    }

    pub fn set_data(&mut self, train: Dataset, test: Option<Dataset>) -> Result<(), SessionError> {
        if let Some(t) = &test {
            train.check_compatible(t)?;
        }
        self.train = Some(train);
        self.test = test;
        Ok(())
    }

    pub fn graph(&self) -> &EGraph {
        &self.graph
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn train(&self) -> Option<&Dataset> {
        self.train.as_ref()
    }

    /// Parse and execute one command line.
    pub fn run(&mut self, text: &str) -> Result<Output, SessionError> {
        let cmd = Command::parse(text)?;
        self.execute(cmd)
    }

    pub fn execute(&mut self, cmd: Command) -> Result<Output, SessionError> {
        match cmd {
            Command::Top(q) => Ok(Output::Rows { rows: self.top(&q)? }),
            Command::Report(id) => Ok(Output::Report { report: Box::new(self.report(id)?) }),
            Command::Subtrees(id) => Ok(Output::Rows { rows: self.subtrees(id)? }),
            Command::Simplify(id) => self.simplify(id),
            Command::Optimize { id, restarts } => {
                let restarts = restarts.unwrap_or(self.config.optimize_restarts);
                Ok(Output::Rows { rows: vec![self.optimize(id, restarts)?] })
            }
            Command::Insert(e) => Ok(Output::Rows { rows: vec![self.insert(&e)?] }),
            Command::Pareto(c) => Ok(Output::Rows { rows: self.pareto(c)? }),
            Command::CountPattern(p) => Ok(Output::Count { count: self.count_pattern(&p) }),
            Command::Distribution(q) => Ok(Output::Blocks { rows: self.distribution(&q)? }),
            Command::Save(path) => {
                let bytes = self.snapshot_bytes()?;
                std::fs::write(&path, &bytes).map_err(|source| SessionError::Io { path: path.clone(), source })?;
                Ok(Output::Ack {
                    message: format!("saved {} expressions to {path} ({} bytes)", self.catalog.len(), bytes.len()),
                })
            }
            Command::Load(path) => {
                let bytes = std::fs::read(&path).map_err(|source| SessionError::Io { path: path.clone(), source })?;
                self.restore_bytes(&bytes)?;
                Ok(Output::Ack {
                    message: format!("loaded {} expressions from {path}", self.catalog.len()),
                })
            }
            Command::Import { path, parse_parameters } => {
                let extract = parse_parameters.unwrap_or(self.config.parse_parameters);
                let (dialect, known) = Dialect::for_path(Path::new(&path));
                let text = std::fs::read_to_string(&path).map_err(|source| SessionError::Io { path: path.clone(), source })?;
                let had_fitted = !self.catalog.is_empty();
                let summary = self.import_text(&text, dialect, extract);
                let mut message = format!(
                    "imported {} expressions from {path} ({} dialect)",
                    summary.imported, dialect.name
                );
                if !known {
                    message.push_str("\nwarning: unknown file extension, used the generic dialect");
                }
                if had_fitted && summary.imported > 0 {
                    message.push_str("\nwarning: imported fitness values are stored as given; make sure they use the same loss as the existing ones");
                }
                for (line, err) in &summary.errors {
                    message.push_str(&format!("\nline {line}: {err}"));
                }
                Ok(Output::Ack { message })
            }
        }
    }

    fn resolve(&self, id: u32) -> Result<Id, SessionError> {
        let raw = Id(id);
        if !self.graph.contains(raw) {
            return Err(SessionError::UnknownId(id));
        }
        let id = self.graph.find(raw);
        if !self.catalog.contains(id) {
            return Err(SessionError::NotEvaluated(id.0));
        }
        Ok(id)
    }

    fn next_seed(&mut self) -> u64 {
        let s = self.config.seed ^ self.fits.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        self.fits += 1;
        s
    }

    fn dataset(&self) -> Result<&Dataset, SessionError> {
        self.train.as_ref().ok_or(SessionError::NoDataset)
    }

    fn canonical_form(&self, e: &Expr) -> Expr {
        let e = if self.config.fresh_params { e.fresh_params().0 } else { e.clone() };
        e.compact_params().0
    }

    fn add(&mut self, e: &Expr) -> Id {
        let id = self.graph.add_expr(e);
        self.graph.rebuild();
        for (root, absorbed) in self.graph.take_unions() {
            self.catalog.on_union(root, absorbed);
        }
        self.graph.find(id)
    }

    /// Fit `e` with the training data and the next seed.
    fn fit(&mut self, e: &Expr, restarts: usize) -> Result<FitRecord, SessionError> {
        let seed = self.next_seed();
        let d = self.dataset()?;
        let loss = self.config.loss;
        let out = fit_params(e, d, loss, FitOptions { restarts, seed, ..Default::default() })?;
        let mut rec = FitRecord::new(e, out.params, out.fitness, loss);
        if self.config.calculate_dl {
            rec.dl = description_length(e, &rec.params, d).ok();
        }
        Ok(rec)
    }

    fn row(&self, id: Id) -> Row {
        self.catalog.row(id).expect("registered")
    }

    pub fn top(&self, q: &TopQuery) -> Result<Vec<Row>, SessionError> {
        let matched = q.pattern.as_ref().map(|p| (p.matched(&self.graph), p.negated));
        let ids = self.catalog.top(
            &self.graph,
            q.n,
            &q.filter,
            q.criterion,
            matched.as_ref().map(|(m, neg)| (m, *neg)),
        )?;
        Ok(ids.into_iter().map(|id| self.row(id)).collect())
    }

    pub fn pareto(&self, c: Criterion) -> Result<Vec<Row>, SessionError> {
        Ok(self.catalog.pareto(c)?.into_iter().map(|id| self.row(id)).collect())
    }

    pub fn count_pattern(&self, p: &Pattern) -> usize {
        blocks::count_pattern(&self.graph, p)
    }

    pub fn distribution(&self, q: &DistributionQuery) -> Result<Vec<DistributionRow>, SessionError> {
        Ok(blocks::distribution(&self.catalog, q)?)
    }

    /// Insert, fit and register a model. An already evaluated expression is
    /// reported as stored.
    pub fn insert(&mut self, e: &Expr) -> Result<Row, SessionError> {
        let e = self.canonical_form(e);
        let id = self.add(&e);
        if self.catalog.contains(id) {
            return Ok(self.row(id));
        }
        let rec = self.fit(&e, 1)?;
        self.catalog.register(id, e, rec)?;
        Ok(self.row(id))
    }

    pub fn insert_text(&mut self, text: &str) -> Result<Row, SessionError> {
        let parsed = parse_expression(text, &Dialect::GENERIC, false).map_err(CommandError::from)?;
        self.insert(&parsed.expr)
    }

    /// Metrics on train and test; stores the training DL if it was missing.
    pub fn report(&mut self, id: u32) -> Result<Report, SessionError> {
        let id = self.resolve(id)?;
        let entry = self.catalog.get(id).expect("resolved").clone();
        let cost = self.graph.data(id).cost;
        let mut note = None;
        let mut part = |d: Option<&Dataset>| -> Option<PartitionReport> {
            let d = d?;
            match metrics(&entry.expr, &entry.record.params, d) {
                Ok(m) => Some(PartitionReport::new(m, description_length(&entry.expr, &entry.record.params, d).ok())),
                Err(e) => {
                    note = Some(e.to_string());
                    None
                }
            }
        };
        let train = part(self.train.as_ref());
        let test = part(self.test.as_ref());
        if self.train.is_none() {
            note = Some("no dataset loaded".into());
        }
        if let (None, Some(dl)) = (entry.record.dl, train.as_ref().and_then(|t| t.dl)) {
            self.catalog.set_dl(id, dl)?;
        }
        Ok(Report {
            row: self.row(id),
            cost,
            train,
            test,
            note,
        })
    }

    /// Distinct proper subtrees in breadth-first order (the expression itself
    /// when it is a leaf), each inserted and fitted once.
    pub fn subtrees(&mut self, id: u32) -> Result<Vec<Row>, SessionError> {
        let id = self.resolve(id)?;
        let root = self.catalog.get(id).expect("resolved").expr.clone();
        let mut found: Vec<Expr> = Vec::new();
        let mut queue: VecDeque<&Expr> = root.children().into_iter().collect();
        if queue.is_empty() {
            queue.push_back(&root);
        }
        while let Some(t) = queue.pop_front() {
            let t2 = t.compact_params().0;
            if !found.contains(&t2) {
                found.push(t2);
            }
            queue.extend(t.children());
        }
        let mut rows = Vec::with_capacity(found.len());
        for t in found {
            let sid = self.add(&t);
            if !self.catalog.contains(sid) {
                let rec = self.fit(&t, 1)?;
                self.catalog.register(sid, t, rec)?;
            }
            rows.push(self.row(self.graph.find(sid)));
        }
        Ok(rows)
    }

    /// Refit from fresh starting points; keep the result only if strictly better.
    pub fn optimize(&mut self, id: u32, restarts: usize) -> Result<Row, SessionError> {
        let id = self.resolve(id)?;
        let entry = self.catalog.get(id).expect("resolved").clone();
        let mut rec = self.fit(&entry.expr, restarts)?;
        if rec.fitness > entry.record.fitness {
            if rec.dl.is_none() && entry.record.dl.is_some() {
                rec.dl = description_length(&entry.expr, &rec.params, self.dataset()?).ok();
            }
            self.catalog.remove(id);
            self.catalog.register(id, entry.expr, rec)?;
        }
        Ok(self.row(id))
    }

    fn simplify(&mut self, id: u32) -> Result<Output, SessionError> {
        let id = self.resolve(id)?;
        let e = &self.catalog.get(id).expect("resolved").expr;
        let out = simplify_expr(e, &default_rules(), self.config.simplify_budget);
        Ok(Output::Ack {
            message: format!("{out}  (cost {} -> {})", e.cost(), out.cost()),
        })
    }

    /// Compute missing DL values for every registered expression.
    pub fn compute_all_dl(&mut self) -> Result<usize, SessionError> {
        let d = self.dataset()?;
        let todo: Vec<(Id, f64)> = self
            .catalog
            .ids()
            .filter_map(|id| {
                let e = self.catalog.get(id)?;
                if e.record.dl.is_some() {
                    return None;
                }
                description_length(&e.expr, &e.record.params, d).ok().map(|dl| (id, dl))
            })
            .collect();
        for (id, dl) in &todo {
            self.catalog.set_dl(*id, *dl)?;
        }
        Ok(todo.len())
    }

    /// Import rows `expression,t0;t1;...,fitness`. Bad rows are reported and
    /// skipped.
    pub fn import_text(&mut self, text: &str, dialect: &Dialect, extract: bool) -> ImportSummary {
        let mut summary = ImportSummary::default();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        for rec in rdr.records() {
            let rec = match rec {
                Ok(r) => r,
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line() as usize);
                    summary.errors.push((line, e.to_string()));
                    continue;
                }
            };
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.iter().all(str::is_empty) {
                continue;
            }
            if line == 1 && matches!(rec.get(0).map(str::to_ascii_lowercase).as_deref(), Some("expression" | "model")) {
                continue;
            }
            match self.import_row(&rec, dialect, extract) {
                Ok(()) => summary.imported += 1,
                Err(msg) => summary.errors.push((line, msg)),
            }
        }
        self.graph.rebuild();
        self.catalog.reconcile(&self.graph);
        summary
    }

    fn import_row(&mut self, rec: &csv::StringRecord, dialect: &Dialect, extract: bool) -> Result<(), String> {
        if rec.len() != 3 {
            return Err(format!("expected 3 columns (expression, parameters, fitness), found {}", rec.len()));
        }
        let parsed = parse_expression(&rec[0], dialect, extract).map_err(|e| e.to_string())?;
        let theta: Vec<f64> = if extract {
            parsed.params
        } else {
            rec[1]
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| format!("parameter `{s}` is not a number")))
                .collect::<Result<_, _>>()?
        };
        let slots = parsed.expr.param_slots();
        if theta.len() < slots {
            return Err(format!("expression uses {slots} parameters but the row provides {}", theta.len()));
        }
        let fitness: f64 = rec[2].parse().map_err(|_| format!("fitness `{}` is not a number", &rec[2]))?;
        if !fitness.is_finite() {
            return Err("fitness is not finite".into());
        }
        let (e, order) = parsed.expr.compact_params();
        let params: Vec<f64> = order.iter().map(|k| theta[*k as usize]).collect();
        let mut record = FitRecord::new(&e, params, fitness, self.config.loss);
        if self.config.calculate_dl {
            if let Some(d) = &self.train {
                record.dl = description_length(&e, &record.params, d).ok();
            }
        }
        let id = self.graph.add_expr(&e);
        let id = self.graph.find(id);
        self.catalog.register(id, e, record).map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn snapshot_bytes(&self) -> Result<Vec<u8>, SessionError> {
        let meta = Meta {
            seed: self.config.seed,
            fits: self.fits,
        };
        Ok(snapshot::encode(&self.graph, &self.catalog, &meta)?)
    }

    /// Replace the graph, catalog and seed state with a snapshot.
    pub fn restore_bytes(&mut self, bytes: &[u8]) -> Result<(), SessionError> {
        let (g, c, meta) = snapshot::decode(bytes)?;
        self.graph = g;
        self.catalog = c;
        self.config.seed = meta.seed;
        self.fits = meta.fits;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![0.1 * i as f64 + 0.5, (i % 7) as f64]).collect();
        let y = rows.iter().map(|r| 2.0 * r[0].sqrt() + 3.0 * r[1]).collect();
        Dataset::from_rows(&rows, y)
    }

    fn session() -> Session {
        Session::with_data(SessionConfig::default(), data(), None).unwrap()
    }

    fn rows(o: Output) -> Vec<Row> {
        match o {
            Output::Rows { rows } => rows,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn insert_fits_and_registers() {
        let mut s = session();
        let r = rows(s.run("insert t0 * sqrt(x0) + t1 * x1").unwrap());
        assert_eq!(r.len(), 1);
        assert!(r[0].fitness > -1e-12, "{r:?}");
        assert_eq!(s.catalog().len(), 1);
        let again = rows(s.run("insert t5 * sqrt(x0) + t2 * x1").unwrap());
        assert_eq!(again, r);
        assert_eq!(s.catalog().len(), 1);
    }

    #[test]
    fn shared_parameter_convention() {
        let mut s = session();
        let r = rows(s.run("insert t0 * sqrt(x0) + t0 * x4").unwrap_or_else(|_| Output::Rows { rows: vec![] }));
        assert!(r.is_empty(), "x4 is not in the dataset");
        let r = rows(s.run("insert t0 * sqrt(x0) + t0 * x1").unwrap());
        assert_eq!(r[0].parameters.len(), 1);
    }

    #[test]
    fn report_stores_dl() {
        let mut s = session();
        s.run("insert t0 * x0").unwrap();
        assert!(s.run("top 3 by dl").is_err());
        let id = s.catalog().ids().next().unwrap().0;
        let Output::Report { report } = s.run(&format!("report {id}")).unwrap() else { panic!() };
        assert!(report.train.as_ref().unwrap().dl.is_some());
        assert!(report.test.is_none());
        assert_eq!(rows(s.run("top 3 by dl").unwrap()).len(), 1);
    }

    #[test]
    fn perfect_fit_report() {
        let mut s = session();
        let r = rows(s.run("insert t0 * sqrt(x0) + t1 * x1").unwrap());
        let rep = s.report(r[0].id).unwrap();
        assert!((rep.train.unwrap().r2.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn subtrees_of_linear_model() {
        let mut s = session();
        let r = rows(s.run("insert t0 * x0 + t1 * x1").unwrap());
        let sub = rows(s.run(&format!("subtrees {}", r[0].id)).unwrap());
        let exprs: Vec<&str> = sub.iter().map(|r| r.expression.as_str()).collect();
        assert_eq!(exprs, vec!["(t0 * x0)", "(t0 * x1)", "t0", "x0", "x1"]);
        let leaf = sub.iter().find(|r| r.expression == "x0").unwrap().id;
        assert_eq!(rows(s.run(&format!("subtrees {leaf}")).unwrap()).len(), 1);
    }

    #[test]
    fn optimize_never_worsens() {
        let mut s = session();
        let r = rows(s.run("insert sin(t0 * x0) * t1 + t2").unwrap());
        let mut last = r[0].fitness;
        for _ in 0..3 {
            let o = rows(s.run(&format!("optimize {} 3", r[0].id)).unwrap());
            assert!(o[0].fitness >= last);
            last = o[0].fitness;
        }
    }

    #[test]
    fn unknown_ids() {
        let mut s = session();
        assert!(matches!(s.run("report 99"), Err(SessionError::UnknownId(99))));
        assert!(s.run("report 99").unwrap_err().is_not_found());
        assert_eq!(s.run("top -1").unwrap_err().position(), Some(4));
    }

    #[test]
    fn import_example_row() {
        let mut s = Session::new(SessionConfig::default());
        let sum = s.import_text("x0^p0 + p1*x1,0.2;3.1,0.89\n", &Dialect::GENERIC, false);
        assert_eq!(sum, ImportSummary { imported: 1, errors: vec![] });
        let id = s.catalog().ids().next().unwrap();
        let e = s.catalog().get(id).unwrap();
        assert_eq!(e.record.params, vec![0.2, 3.1]);
        assert_eq!(e.record.fitness, 0.89);
        assert_eq!(e.record.size, 7);
    }

    #[test]
    fn import_collects_errors() {
        let mut s = Session::new(SessionConfig::default());
        let text = "expression,theta,fitness\nx0 +,,1\nt0*x0,,2\nx0*2.5,,3\nx1,,nan\n";
        let sum = s.import_text(text, &Dialect::GENERIC, false);
        assert_eq!(sum.imported, 1);
        assert_eq!(sum.errors.iter().map(|e| e.0).collect::<Vec<_>>(), vec![2, 3, 5]);
        let sum = s.import_text("x0*2.5,,3\n", &Dialect::GENERIC, true);
        assert_eq!(sum.imported, 1);
        assert_eq!(s.import_text("", &Dialect::GENERIC, false), ImportSummary::default());
    }

    #[test]
    fn snapshot_round_trip() {
        let mut s = session();
        s.run("insert t0 * x0").unwrap();
        s.run("insert sin(x1) * t0").unwrap();
        let bytes = s.snapshot_bytes().unwrap();
        let mut t = session();
        t.restore_bytes(&bytes).unwrap();
        for cmd in ["top 5", "pareto", "insert x0 + t0", "count-pattern v0 * v1"] {
            assert_eq!(s.run(cmd).unwrap(), t.run(cmd).unwrap(), "{cmd}");
        }
    }
}
