//! Local JSON service.
//!
//! | method | path            | body / query                                   |
//! |--------|-----------------|------------------------------------------------|
//! | POST   | `/command`      | `{"text": "..."}`                              |
//! | GET    | `/pareto`       | `by=fitness\|dl`                               |
//! | GET    | `/distribution` | `by`, `max_size`, `limit`, `at_least`, `from_top` |
//! | GET    | `/expr/{id}`    |                                                |
//! | GET    | `/health`       |                                                |
//!
//! Errors come back as `{"error", "position"}` with status 400, or 404 for
//! unknown ids. All session access goes through one mutex on a blocking
//! thread, so commands never interleave.

use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use srx::blocks::{DistOrder, DistributionQuery};
use srx::catalog::{Cmp, Criterion};
use srx::session::{Command, Output, Session, SessionError};
use serde::Deserialize;
use serde_json::{json, Value};

pub struct AppState {
    session: Mutex<Session>,
    log: Mutex<Vec<String>>,
}

pub type Shared = Arc<AppState>;

impl AppState {
    pub fn new(session: Session) -> Shared {
        Arc::new(AppState {
            session: Mutex::new(session),
            log: Mutex::new(Vec::new()),
        })
    }

    /// Run `f` with exclusive access to the session.
    pub fn with_session<T>(&self, f: impl FnOnce(&mut Session) -> T) -> T {
        let mut s = self.session.lock().unwrap_or_else(|p| p.into_inner());
        f(&mut s)
    }

    /// Mutating commands in the order they were applied.
    pub fn log(&self) -> Vec<String> {
        self.log.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

pub struct ApiError(SessionError);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = if self.0.is_not_found() { StatusCode::NOT_FOUND } else { StatusCode::BAD_REQUEST };
        let body = json!({ "error": self.0.to_string(), "position": self.0.position() });
        (status, Json(body)).into_response()
    }
}

fn bad_request(msg: String) -> Response {
    (StatusCode::BAD_REQUEST, Json(json!({ "error": msg, "position": null }))).into_response()
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/command", post(command))
        .route("/pareto", get(pareto))
        .route("/distribution", get(distribution))
        .route("/expr/{id}", get(expr))
        .route("/health", get(|| async { Json(json!({ "status": "ok" })) }))
        .with_state(state)
}

async fn blocking<T: Send + 'static>(
    state: Shared,
    f: impl FnOnce(&AppState) -> T + Send + 'static,
) -> T {
    tokio::task::spawn_blocking(move || f(&state)).await.expect("session task panicked")
}

#[derive(Deserialize)]
struct CommandBody {
    text: String,
}

async fn command(State(state): State<Shared>, Json(body): Json<CommandBody>) -> Result<Json<Value>, ApiError> {
    let cmd = Command::parse(&body.text).map_err(SessionError::from)?;
    let out = blocking(state, move |st| {
        st.with_session(|s| {
            let mutating = cmd.is_mutating();
            let out = s.execute(cmd);
            if mutating && out.is_ok() {
                st.log.lock().unwrap_or_else(|p| p.into_inner()).push(body.text);
            }
            out
        })
    })
    .await?;
    Ok(Json(out.to_json()))
}

#[derive(Deserialize)]
struct ParetoQuery {
    by: Option<String>,
}

fn criterion(s: Option<&str>) -> Result<Criterion, String> {
    match s.unwrap_or("fitness") {
        "fitness" => Ok(Criterion::Fitness),
        "dl" => Ok(Criterion::Dl),
        other => Err(format!("unknown criterion `{other}` (expected fitness or dl)")),
    }
}

async fn pareto(State(state): State<Shared>, Query(q): Query<ParetoQuery>) -> Response {
    let c = match criterion(q.by.as_deref()) {
        Ok(c) => c,
        Err(msg) => return bad_request(msg),
    };
    let out = blocking(state, move |st| st.with_session(|s| s.pareto(c))).await;
    match out {
        Ok(rows) => Json(Output::Rows { rows }.to_json()).into_response(),
        Err(e) => ApiError(e).into_response(),
    }
}

#[derive(Deserialize)]
struct DistParams {
    by: Option<String>,
    max_size: Option<usize>,
    limit: Option<usize>,
    at_least: Option<u64>,
    from_top: Option<usize>,
}

async fn distribution(State(state): State<Shared>, Query(p): Query<DistParams>) -> Response {
    let order = match p.by.as_deref().unwrap_or("count") {
        "count" => DistOrder::Count,
        "fitness" => DistOrder::Fitness,
        other => return bad_request(format!("unknown order `{other}` (expected count or fitness)")),
    };
    let q = DistributionQuery {
        size: p.max_size.map(|m| (Cmp::Le, m)),
        limit: p.limit,
        order,
        min_count: p.at_least.unwrap_or(1),
        from_top: p.from_top,
    };
    let out = blocking(state, move |st| st.with_session(|s| s.distribution(&q))).await;
    match out {
        Ok(rows) => Json(Output::Blocks { rows }.to_json()).into_response(),
        Err(e) => ApiError(e).into_response(),
    }
}

async fn expr(State(state): State<Shared>, Path(id): Path<u32>) -> Result<Json<Value>, ApiError> {
    let report = blocking(state, move |st| st.with_session(|s| s.report(id))).await?;
    Ok(Json(serde_json::to_value(report).expect("reports serialize")))
}
