//! Command-line front end: launch options, the REPL loop and the local JSON
//! service.

pub mod repl;
pub mod server;

use std::io::Read;
use std::path::{Path, PathBuf};

use clap::Parser;
use srx::fitdata::{DataError, Dataset, LossKind};
use srx::session::snapshot::MAGIC;
use srx::session::{Command, Output, Session, SessionConfig, SessionError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LaunchError {
    #[error("{path}: {source}")]
    Data {
        path: PathBuf,
        #[source]
        source: DataError,
    },
    #[error("unknown loss `{0}` (expected mse or gaussian)")]
    Loss(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Session(#[from] SessionError),
}

/// Explore a library of symbolic regression models stored in an e-graph.
#[derive(Clone, Debug, Parser)]
#[command(name = "srx", version)]
pub struct Args {
    /// Training data (CSV with a header row; the last column is the target).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Test data with the same columns as the training data.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Target column name, overriding the last column.
    #[arg(long)]
    pub target: Option<String>,
    /// Fitness loss: mse or gaussian.
    #[arg(long, default_value = "mse")]
    pub loss: String,
    /// Compute description lengths for every stored model.
    #[arg(long)]
    pub calculate_dl: bool,
    /// Snapshot or model CSV to load at startup.
    #[arg(long)]
    pub load: Option<PathBuf>,
    /// Extract numeric literals as parameters when importing.
    #[arg(long)]
    pub parse_parameters: bool,
    /// Give every parameter occurrence its own value.
    #[arg(long)]
    pub fresh_params: bool,
    /// Base seed for parameter fitting.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Serve the JSON API instead of starting the REPL.
    #[arg(long)]
    pub serve: bool,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

impl Args {
    pub fn config(&self) -> Result<SessionConfig, LaunchError> {
        let loss = LossKind::parse(&self.loss).ok_or_else(|| LaunchError::Loss(self.loss.clone()))?;
        Ok(SessionConfig {
            loss,
            calculate_dl: self.calculate_dl,
            parse_parameters: self.parse_parameters,
            fresh_params: self.fresh_params,
            seed: self.seed,
            ..SessionConfig::default()
        })
    }

    /// Build the session, load data and the initial model set. Returns the
    /// messages produced while loading.
    pub fn session(&self) -> Result<(Session, Vec<String>), LaunchError> {
        let mut s = Session::new(self.config()?);
        let mut notes = Vec::new();
        if let Some(path) = &self.dataset {
            let train = read_dataset(path, self.target.as_deref())?;
            let test = match &self.test {
                Some(p) => Some(read_dataset(p, self.target.as_deref())?),
                None => None,
            };
            s.set_data(train, test)?;
        }
        if let Some(path) = &self.load {
            let text = path.display().to_string();
            let cmd = if is_snapshot(path)? {
                Command::Load(text)
            } else {
                Command::Import { path: text, parse_parameters: None }
            };
            if let Output::Ack { message } = s.execute(cmd)? {
                notes.push(message);
            }
        }
        if self.calculate_dl && s.train().is_some() {
            let n = s.compute_all_dl()?;
            if n > 0 {
                notes.push(format!("computed description length for {n} expressions"));
            }
        }
        Ok((s, notes))
    }
}

fn read_dataset(path: &Path, target: Option<&str>) -> Result<Dataset, LaunchError> {
    Dataset::from_path(path, target).map_err(|source| LaunchError::Data { path: path.into(), source })
}

fn is_snapshot(path: &Path) -> Result<bool, LaunchError> {
    let io = |source| LaunchError::Io { path: path.into(), source };
    let mut head = Vec::with_capacity(MAGIC.len());
    std::fs::File::open(path)
        .map_err(io)?
        .take(MAGIC.len() as u64)
        .read_to_end(&mut head)
        .map_err(io)?;
    Ok(head == MAGIC)
}
