//! Datasets, model evaluation, fit metrics, parameter fitting and
//! description length.
//!
//! Fitness is always "larger is better": `-mse` or `-nll`. The Gaussian
//! likelihood uses the plug-in variance `sigma^2 = SSR / n`, so both loss kinds
//! are minimized by the same least-squares fit.
//!
//! Description length (nats):
//!
//! ```text
//! DL = NLL(theta) + k ln|A| + sum_j [ ln(I_jj) / 2 + ln|theta_j| ] - (p / 2) ln 3
//! ```
//!
//! with `k` the node count, `|A|` the alphabet size (operators + variables +
//! the parameter token), `I` the Gauss-Newton observed information
//! `J^T J / sigma^2` and `p` the number of non-zero parameters. Zero-valued
//! parameters are dropped from the sum.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{BinOp, Expr, UnOp};

/// Floor for the plug-in variance and for diagonal information entries.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("reading dataset: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset has no rows")]
    Empty,
    #[error("dataset needs a target and at least one column")]
    NoColumns,
    #[error("unknown target column `{0}`")]
    UnknownTarget(String),
    #[error("row {row}: `{value}` is not a number")]
    NotNumber { row: usize, value: String },
    #[error("row {row} has {got} fields, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("test set has {got} predictors, training set has {expected}")]
    SchemaMismatch { got: usize, expected: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("variable x{index} not in dataset ({columns} columns)")]
    MissingVariable { index: u32, columns: usize },
    #[error("parameter t{0} has no value")]
    MissingParameter(u32),
    #[error("{rows} row(s) evaluate to a non-finite value")]
    NonFinite { rows: usize },
    #[error("every restart produced non-finite predictions")]
    AllRestartsFailed,
    #[error("dataset has no rows")]
    EmptyDataset,
}

/// Column-major predictors `x0..x{d-1}` and a target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub target_name: String,
}

impl Dataset {
    pub fn new(columns: Vec<Vec<f64>>, target: Vec<f64>) -> Self {
        let names = (0..columns.len()).map(|i| format!("x{i}")).collect();
        Dataset {
            names,
            columns,
            target,
            target_name: "y".into(),
        }
    }

    /// Build from rows of predictors.
    pub fn from_rows(rows: &[Vec<f64>], target: Vec<f64>) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let columns = (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Dataset::new(columns, target)
    }

    pub fn rows(&self) -> usize {
        self.target.len()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// CSV with a header row. The target is the last column unless named.
    pub fn from_csv<R: Read>(reader: R, target: Option<&str>) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.len() < 2 {
            return Err(DataError::NoColumns);
        }
        let t = match target {
            Some(name) => header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| DataError::UnknownTarget(name.to_string()))?,
            None => header.len() - 1,
        };
        let mut columns = vec![Vec::new(); header.len() - 1];
        let mut y = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(DataError::Ragged {
                    row: r + 1,
                    got: rec.len(),
                    expected: header.len(),
                });
            }
            let mut j = 0;
            for (c, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| DataError::NotNumber {
                    row: r + 1,
                    value: field.to_string(),
                })?;
                if c == t {
                    y.push(v);
                } else {
                    columns[j].push(v);
                    j += 1;
                }
            }
        }
        if y.is_empty() {
            return Err(DataError::Empty);
        }
        let mut names = header.clone();
        let target_name = names.remove(t);
        Ok(Dataset {
            names,
            columns,
            target: y,
            target_name,
        })
    }

    pub fn from_path(path: &Path, target: Option<&str>) -> Result<Self, DataError> {
        let file = std::fs::File::open(path).map_err(csv::Error::from)?;
        Self::from_csv(file, target)
    }

    /// Check that `other` can serve as a test partition.
    pub fn check_compatible(&self, other: &Dataset) -> Result<(), DataError> {
        if self.width() != other.width() {
            return Err(DataError::SchemaMismatch {
                got: other.width(),
                expected: self.width(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    #[default]
    Mse,
    Gaussian,
}

impl LossKind {
    pub fn parse(s: &str) -> Option<LossKind> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Some(LossKind::Mse),
            "gaussian" | "nll" => Some(LossKind::Gaussian),
            _ => None,
        }
    }
}

/// Evaluation results stored per model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub params: Vec<f64>,
    pub fitness: f64,
    pub dl: Option<f64>,
    pub size: usize,
    pub n_params: usize,
    pub loss: LossKind,
}

impl FitRecord {
    pub fn new(expr: &Expr, params: Vec<f64>, fitness: f64, loss: LossKind) -> Self {
        FitRecord {
            params,
            fitness,
            dl: None,
            size: expr.size(),
            n_params: expr.param_indices().len(),
            loss,
        }
    }
}

fn check_inputs(e: &Expr, theta: &[f64], d: &Dataset) -> Result<(), EvalError> {
    if d.rows() == 0 {
        return Err(EvalError::EmptyDataset);
    }
    let mut err = None;
    e.visit(&mut |n| match n {
        Expr::Var(i) if *i as usize >= d.width() && err.is_none() => {
            err = Some(EvalError::MissingVariable {
                index: *i,
                columns: d.width(),
            })
        }
        Expr::Param(k) if *k as usize >= theta.len() && err.is_none() => {
            err = Some(EvalError::MissingParameter(*k))
        }
        _ => {}
    });
    err.map_or(Ok(()), Err)
}

fn eval_rec(e: &Expr, theta: &[f64], d: &Dataset) -> Vec<f64> {
    let n = d.rows();
    match e {
        Expr::Var(i) => d.columns[*i as usize].clone(),
        Expr::Param(k) => vec![theta[*k as usize]; n],
        Expr::Const(c) => vec![*c; n],
        Expr::Un(op, a) => {
            let mut v = eval_rec(a, theta, d);
            v.iter_mut().for_each(|x| *x = op.apply(*x));
            v
        }
        Expr::Bin(op, a, b) => {
            let mut va = eval_rec(a, theta, d);
            let vb = eval_rec(b, theta, d);
            va.iter_mut().zip(&vb).for_each(|(x, y)| *x = op.apply(*x, *y));
            va
        }
    }
}

/// Row-wise predictions. Non-finite rows are kept; see [`count_non_finite`].
pub fn evaluate(e: &Expr, theta: &[f64], d: &Dataset) -> Result<Vec<f64>, EvalError> {
    check_inputs(e, theta, d)?;
    Ok(eval_rec(e, theta, d))
}

pub fn count_non_finite(pred: &[f64]) -> usize {
    pred.iter().filter(|v| !v.is_finite()).count()
}

/// Values and `d value / d theta_j` per row. `None` derivatives are zero.
struct Dual {
    val: Vec<f64>,
    grad: Vec<Option<Vec<f64>>>,
}

fn dual_rec(e: &Expr, theta: &[f64], d: &Dataset) -> Dual {
    let n = d.rows();
    let p = theta.len();
    match e {
        Expr::Var(_) | Expr::Const(_) => Dual {
            val: eval_rec(e, theta, d),
            grad: vec![None; p],
        },
        Expr::Param(k) => {
            let mut grad = vec![None; p];
            grad[*k as usize] = Some(vec![1.0; n]);
            Dual {
                val: vec![theta[*k as usize]; n],
                grad,
            }
        }
        Expr::Un(op, a) => {
            let a = dual_rec(a, theta, d);
            let dv: Vec<f64> = a.val.iter().map(|x| op.derivative(*x)).collect();
            let grad = a
                .grad
                .into_iter()
                .map(|g| g.map(|g| g.iter().zip(&dv).map(|(g, s)| g * s).collect()))
                .collect();
            Dual {
                val: a.val.iter().map(|x| op.apply(*x)).collect(),
                grad,
            }
        }
        Expr::Bin(op, a, b) => {
            let a = dual_rec(a, theta, d);
            let b = dual_rec(b, theta, d);
            let parts: Vec<(f64, f64)> =
                a.val.iter().zip(&b.val).map(|(x, y)| op.partials(*x, *y)).collect();
            let grad = a
                .grad
                .into_iter()
                .zip(b.grad)
                .map(|(ga, gb)| match (ga, gb) {
                    (None, None) => None,
                    (ga, gb) => Some(
                        (0..n)
                            .map(|i| {
                                let mut s = 0.0;
                                if let Some(ga) = &ga {
                                    s += ga[i] * parts[i].0;
                                }
                                if let Some(gb) = &gb {
                                    s += gb[i] * parts[i].1;
                                }
                                s
                            })
                            .collect(),
                    ),
                })
                .collect();
            Dual {
                val: a.val.iter().zip(&b.val).map(|(x, y)| op.apply(*x, *y)).collect(),
                grad,
            }
        }
    }
}

/// Predictions and the Jacobian `J[row][j] = d pred_row / d theta_j`.
pub fn jacobian(e: &Expr, theta: &[f64], d: &Dataset) -> Result<(Vec<f64>, DMatrix<f64>), EvalError> {
    check_inputs(e, theta, d)?;
    let dual = dual_rec(e, theta, d);
    let mut j = DMatrix::zeros(d.rows(), theta.len());
    for (c, g) in dual.grad.iter().enumerate() {
        if let Some(g) = g {
            for (r, v) in g.iter().enumerate() {
                j[(r, c)] = *v;
            }
        }
    }
    Ok((dual.val, j))
}

/// Gradient of the mean squared error with respect to `theta`.
pub fn mse_gradient(e: &Expr, theta: &[f64], d: &Dataset) -> Result<Vec<f64>, EvalError> {
    let (pred, j) = jacobian(e, theta, d)?;
    let n = d.rows() as f64;
    let r = DVector::from_iterator(pred.len(), pred.iter().zip(&d.target).map(|(p, y)| p - y));
    Ok((j.transpose() * r * (2.0 / n)).iter().copied().collect())
}

fn ssr(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum()
}

/// Gaussian negative log-likelihood with plug-in variance `ssr / n`.
pub fn gaussian_nll(ssr: f64, n: usize) -> f64 {
    let n = n as f64;
    let var = (ssr / n).max(VARIANCE_FLOOR);
    0.5 * n * ((2.0 * std::f64::consts::PI * var).ln() + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    /// `None` when the target is constant.
    pub r2: Option<f64>,
    pub nll: f64,
}

pub fn metrics(e: &Expr, theta: &[f64], d: &Dataset) -> Result<Metrics, EvalError> {
    let pred = evaluate(e, theta, d)?;
    let bad = count_non_finite(&pred);
    if bad > 0 {
        return Err(EvalError::NonFinite { rows: bad });
    }
    Ok(metrics_of(&pred, &d.target))
}

fn metrics_of(pred: &[f64], y: &[f64]) -> Metrics {
    let n = y.len();
    let s = ssr(pred, y);
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    Metrics {
        mse: s / n as f64,
        r2: (sst > 0.0).then(|| 1.0 - s / sst),
        nll: gaussian_nll(s, n),
    }
}

fn fitness_of(m: &Metrics, loss: LossKind) -> f64 {
    match loss {
        LossKind::Mse => -m.mse,
        LossKind::Gaussian => -m.nll,
    }
}

/// `-mse` or `-nll`; non-finite predictions are an error.
pub fn fitness(e: &Expr, theta: &[f64], d: &Dataset, loss: LossKind) -> Result<f64, EvalError> {
    let m = metrics(e, theta, d)?;
    let f = fitness_of(&m, loss);
    if f.is_finite() {
        Ok(f)
    } else {
        Err(EvalError::NonFinite { rows: d.rows() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FitOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 1,
            seed: 0,
            max_iterations: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOutcome {
    pub params: Vec<f64>,
    pub fitness: f64,
}

/// Fit parameters by Levenberg-Marquardt on the squared residuals from
/// `restarts` starting points drawn uniformly from `[-2, 2]`, keeping the best.
///
/// Parameter slots follow the expression's indices; slots with no occurrence
/// are left at zero. The same seed reproduces the same result bit for bit.
pub fn fit_params(e: &Expr, d: &Dataset, loss: LossKind, opts: FitOptions) -> Result<FitOutcome, EvalError> {
    let slots = e.param_slots();
    check_inputs(e, &vec![0.0; slots], d)?;
    if slots == 0 {
        let f = fitness(e, &[], d, loss)?;
        return Ok(FitOutcome {
            params: vec![],
            fitness: f,
        });
    }
    let used = e.param_indices();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let init = Uniform::new_inclusive(-2.0, 2.0);
    let mut best: Option<FitOutcome> = None;
    for _ in 0..opts.restarts.max(1) {
        let start: Vec<f64> = (0..slots)
            .map(|k| {
                let v = init.sample(&mut rng);
                if used.contains(&(k as u32)) {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        let Some(theta) = levenberg_marquardt(e, d, start, opts.max_iterations) else {
            continue;
        };
        let Ok(f) = fitness(e, &theta, d, loss) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| f > b.fitness) {
            best = Some(FitOutcome {
                params: theta,
                fitness: f,
            });
        }
    }
    best.ok_or(EvalError::AllRestartsFailed)
}

fn finite_ssr(e: &Expr, theta: &[f64], d: &Dataset) -> Option<f64> {
    let pred = eval_rec(e, theta, d);
    let s = ssr(&pred, &d.target);
    s.is_finite().then_some(s)
}

fn levenberg_marquardt(e: &Expr, d: &Dataset, mut theta: Vec<f64>, max_iter: usize) -> Option<Vec<f64>> {
    let p = theta.len();
    let mut cost = finite_ssr(e, &theta, d)?;
    let mut lambda = 1e-3;
    for _ in 0..max_iter {
        let dual = dual_rec(e, &theta, d);
        let n = d.rows();
        let mut jtj = DMatrix::<f64>::zeros(p, p);
        let mut jtr = DVector::<f64>::zeros(p);
        let resid: Vec<f64> = dual.val.iter().zip(&d.target).map(|(a, b)| a - b).collect();
        for a in 0..p {
            let Some(ga) = &dual.grad[a] else { continue };
            jtr[a] = (0..n).map(|i| ga[i] * resid[i]).sum();
            for b in a..p {
                let Some(gb) = &dual.grad[b] else { continue };
                let v: f64 = (0..n).map(|i| ga[i] * gb[i]).sum();
                jtj[(a, b)] = v;
                jtj[(b, a)] = v;
            }
        }
        if !jtj.iter().all(|v| v.is_finite()) || !jtr.iter().all(|v| v.is_finite()) {
            break;
        }
        if jtr.amax() <= 1e-15 * (1.0 + cost) {
            break;
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..p {
                a[(k, k)] += lambda * (jtj[(k, k)] + 1e-12);
            }
            let step = match a.clone().cholesky() {
                Some(ch) => ch.solve(&(-&jtr)),
                None => match a.lu().solve(&(-&jtr)) {
                    Some(s) => s,
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                },
            };
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            match finite_ssr(e, &cand, d) {
                Some(c) if c < cost => {
                    let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                    let small_step = step.amax() <= 1e-14 * (1.0 + theta.iter().fold(0.0f64, |m, t| m.max(t.abs())));
                    theta = cand;
                    cost = c;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = !(rel < 1e-16 || small_step);
                    break;
                }
                _ => lambda *= 4.0,
            }
        }
        if !improved {
            break;
        }
    }
    theta.iter().all(|t| t.is_finite()).then_some(theta)
}

/// Alphabet size for a dataset with `width` predictors.
pub fn alphabet_size(width: usize) -> usize {
    UnOp::ALL.len() + BinOp::ALL.len() + width + 1
}

/// Description length of a fitted model, in nats.
pub fn description_length(e: &Expr, theta: &[f64], d: &Dataset) -> Result<f64, EvalError> {
    let (pred, j) = jacobian(e, theta, d)?;
    let bad = count_non_finite(&pred);
    if bad > 0 {
        return Err(EvalError::NonFinite { rows: bad });
    }
    let n = d.rows();
    let s = ssr(&pred, &d.target);
    let var = (s / n as f64).max(VARIANCE_FLOOR);
    let mut dl = gaussian_nll(s, n) + e.size() as f64 * (alphabet_size(d.width()) as f64).ln();
    for k in e.param_indices() {
        let t = theta[k as usize];
        if t == 0.0 {
            continue;
        }
        let col = j.column(k as usize);
        let info = (col.dot(&col) / var).max(VARIANCE_FLOOR);
        dl += 0.5 * info.ln() + t.abs().ln() - 0.5 * 3f64.ln();
    }
    Ok(dl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, Dialect};

    fn e(s: &str) -> Expr {
        parse_expression(s, &Dialect::GENERIC, false).unwrap().expr
    }

    fn linear_data() -> Dataset {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5 - 3.0).collect();
        let y = xs.iter().map(|x| 2.0 * x + 5.0).collect();
        Dataset::new(vec![xs], y)
    }

    #[test]
    fn csv_loading() {
        let text = "a,b,y\n1,2,3\n4,5,6\n";
        let d = Dataset::from_csv(text.as_bytes(), None).unwrap();
        assert_eq!(d.names, vec!["a", "b"]);
        assert_eq!(d.columns, vec![vec![1.0, 4.0], vec![2.0, 5.0]]);
        assert_eq!(d.target, vec![3.0, 6.0]);
        let d = Dataset::from_csv(text.as_bytes(), Some("a")).unwrap();
        assert_eq!(d.target, vec![1.0, 4.0]);
        assert_eq!(d.columns[1], vec![3.0, 6.0]);
        assert!(matches!(
            Dataset::from_csv(text.as_bytes(), Some("q")),
            Err(DataError::UnknownTarget(_))
        ));
        assert!(matches!(
            Dataset::from_csv("a,y\n1,x\n".as_bytes(), None),
            Err(DataError::NotNumber { .. })
        ));
        assert!(matches!(Dataset::from_csv("a,y\n".as_bytes(), None), Err(DataError::Empty)));
    }

    #[test]
    fn constant_and_sum_evaluation() {
        let d = Dataset::new(vec![vec![0.0; 5]], vec![0.0; 5]);
        assert_eq!(evaluate(&e("t0"), &[2.0], &d).unwrap(), vec![2.0; 5]);
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], vec![0.0, 0.0]);
        assert_eq!(evaluate(&e("x0 + x1"), &[], &d).unwrap(), vec![3.0, 7.0]);
        assert_eq!(
            evaluate(&e("x2"), &[], &d),
            Err(EvalError::MissingVariable { index: 2, columns: 2 })
        );
        assert_eq!(evaluate(&e("t1"), &[0.0], &d), Err(EvalError::MissingParameter(1)));
    }

    #[test]
    fn metric_definitions() {
        let d = linear_data();
        let m = metrics(&e("t0 * x0 + t1"), &[2.0, 5.0], &d).unwrap();
        assert_eq!(m.mse, 0.0);
        assert_eq!(m.r2, Some(1.0));
        assert!(m.nll.is_finite());
        let mean = d.target.iter().sum::<f64>() / d.rows() as f64;
        let m = metrics(&e("t0"), &[mean], &d).unwrap();
        assert!(m.r2.unwrap().abs() < 1e-12);
        let flat = Dataset::new(vec![vec![1.0, 2.0]], vec![3.0, 3.0]);
        assert_eq!(metrics(&e("x0"), &[], &flat).unwrap().r2, None);
    }

    #[test]
    fn fitness_is_negated_loss() {
        let d = Dataset::new(vec![vec![0.0, 0.0]], vec![2.0, -2.0]);
        assert_eq!(fitness(&e("x0"), &[], &d, LossKind::Mse).unwrap(), -4.0);
        let better = fitness(&e("x0 + 1"), &[], &d, LossKind::Mse).unwrap();
        assert!(better < -4.0);
    }

    #[test]
    fn linear_recovery() {
        let d = linear_data();
        for seed in 0..5 {
            let out = fit_params(&e("t0 * x0 + t1"), &d, LossKind::Mse, FitOptions { seed, ..Default::default() })
                .unwrap();
            assert!((out.params[0] - 2.0).abs() < 1e-6, "{:?}", out.params);
            assert!((out.params[1] - 5.0).abs() < 1e-6, "{:?}", out.params);
        }
    }

    #[test]
    fn zero_parameter_fit() {
        let d = linear_data();
        let out = fit_params(&e("x0"), &d, LossKind::Mse, FitOptions::default()).unwrap();
        assert!(out.params.is_empty());
        assert_eq!(out.fitness, fitness(&e("x0"), &[], &d, LossKind::Mse).unwrap());
    }

    #[test]
    fn restarts_are_reproducible() {
        let d = linear_data();
        let opts = FitOptions { restarts: 3, seed: 9, ..Default::default() };
        let a = fit_params(&e("sin(t0 * x0) + t1"), &d, LossKind::Mse, opts).unwrap();
        let b = fit_params(&e("sin(t0 * x0) + t1"), &d, LossKind::Mse, opts).unwrap();
        assert_eq!(a.params.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   b.params.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn gaussian_nll_closed_form() {
        let d = linear_data();
        let theta = [1.5, 4.0];
        let m = metrics(&e("t0 * x0 + t1"), &theta, &d).unwrap();
        let n = d.rows() as f64;
        let ssr = m.mse * n;
        let want = n / 2.0 * ((2.0 * std::f64::consts::PI * ssr / n).ln() + 1.0);
        assert!((m.nll - want).abs() < 1e-9 * want.abs());
    }

    #[test]
    fn dl_without_parameters() {
        let d = linear_data();
        let model = e("x0 + x0");
        let m = metrics(&model, &[], &d).unwrap();
        let want = m.nll + 3.0 * (alphabet_size(1) as f64).ln();
        assert!((description_length(&model, &[], &d).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn redundant_node_costs_one_symbol() {
        let d = linear_data();
        let a = description_length(&e("t0 * x0 + t1"), &[2.0, 5.0], &d).unwrap();
        let c = description_length(&e("(t0 * x0 + t1) * 1"), &[2.0, 5.0], &d).unwrap();
        let step = (alphabet_size(1) as f64).ln();
        assert!((c - a - 2.0 * step).abs() < 1e-9, "{a} {c}");
    }
}
