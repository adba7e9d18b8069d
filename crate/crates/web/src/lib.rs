//! Browser bindings for the model explorer. Every method returns a JSON
//! string: the command output, or `{"error", "position"}`.

use srx::blocks::{DistOrder, DistributionQuery};
use srx::catalog::{Cmp, Criterion};
use srx::expr::Dialect;
use srx::fitdata::{Dataset, LossKind};
use srx::session::{Output, Session, SessionConfig, SessionError};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Expressions loaded by [`Explorer::demo`].
const DEMO_MODELS: &[&str] = &[
    "t0 * x0 + t1",
    "t0 * x0",
    "t0 * x0 + t1 * sin(x1)",
    "t0 * x0 + t1 + t2 * sin(t3 * x1)",
    "t0 * sqrt(x0) + t1",
    "t0 * exp(t1 * x0)",
    "t0 * log(x0) + t1",
    "t0 + t1 * x1",
    "t0 * x1",
    "t0 * x0 * x0 + t1 * x0 + t2",
    "t0 * x0 + t1 * x1 * x1",
    "t0 * sin(x1) + t1",
    "t0 / x0 + t1 * x0",
    "t0",
];

fn error_json(e: &SessionError) -> String {
    json!({ "error": e.to_string(), "position": e.position() }).to_string()
}

fn respond(out: Result<Value, SessionError>) -> String {
    out.map_or_else(|e| error_json(&e), |v| v.to_string())
}

#[wasm_bindgen]
pub struct Explorer {
    session: Session,
}

#[wasm_bindgen]
impl Explorer {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Explorer {
        let config = SessionConfig { seed: seed.into(), calculate_dl: true, ..Default::default() };
        Explorer { session: Session::new(config) }
    }

    /// A session over `y = 1.5 x0 + 0.8 sin(2 x1) + 0.3` with a few candidate models.
    pub fn demo() -> Explorer {
        let mut ex = Explorer::new(7);
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|i| {
                let i = i as f64;
                vec![0.2 + 0.05 * i, (0.37 * i).sin() * 2.0]
            })
            .collect();
        let y = rows.iter().map(|r| 1.5 * r[0] + 0.8 * (2.0 * r[1]).sin() + 0.3).collect();
        ex.session.set_data(Dataset::from_rows(&rows, y), None).expect("no test set");
        for m in DEMO_MODELS {
            if let Ok(row) = ex.session.insert_text(m) {
                let _ = ex.session.optimize(row.id, 5);
            }
        }
        ex
    }

    /// Replace the training data with CSV text (header row, last column is
    /// the target).
    pub fn load_dataset(&mut self, csv_text: &str) -> String {
        let res = Dataset::from_csv(csv_text.as_bytes(), None)
            .map_err(SessionError::from)
            .and_then(|d| {
                let rows = d.rows();
                self.session.set_data(d, None)?;
                Ok(json!({ "kind": "ack", "message": format!("loaded {rows} rows") }))
            });
        respond(res)
    }

    /// Import `expression,parameters,fitness` rows.
    pub fn import_models(&mut self, csv_text: &str, parse_parameters: bool) -> String {
        let summary = self.session.import_text(csv_text, &Dialect::GENERIC, parse_parameters);
        let errors: Vec<Value> = summary.errors.iter().map(|(l, m)| json!({ "line": l, "error": m })).collect();
        json!({ "kind": "ack", "message": format!("imported {}", summary.imported), "errors": errors }).to_string()
    }

    /// Run one command line.
    pub fn run(&mut self, text: &str) -> String {
        respond(self.session.run(text).map(|o| o.to_json()))
    }

    /// Pareto front rows; `by` is `fitness` or `dl`.
    pub fn pareto(&self, by: &str) -> String {
        let c = if by == "dl" { Criterion::Dl } else { Criterion::Fitness };
        respond(self.session.pareto(c).map(|rows| Output::Rows { rows }.to_json()))
    }

    /// Building-block frequencies up to `max_size` nodes.
    pub fn distribution(&self, max_size: u32, by_fitness: bool, limit: u32) -> String {
        let q = DistributionQuery {
            size: Some((Cmp::Le, max_size as usize)),
            limit: (limit > 0).then_some(limit as usize),
            order: if by_fitness { DistOrder::Fitness } else { DistOrder::Count },
            ..Default::default()
        };
        respond(self.session.distribution(&q).map(|rows| Output::Blocks { rows }.to_json()))
    }

    pub fn model_count(&self) -> u32 {
        self.session.catalog().len() as u32
    }

    pub fn loss(&self) -> String {
        match self.session.config().loss {
            LossKind::Mse => "mse".into(),
            LossKind::Gaussian => "gaussian".into(),
        }
    }
}
