//! Model files, result tables and the command implementations behind the
//! CLI.

pub mod commands;
mod model_file;
mod results;

pub use model_file::{LoadedModel, Metadata, ModelFile, ModelKind, OpinionModel, SCHEMA_VERSION};
pub use results::{
    format_num, parse_manifest, sha256_hex, write_atomic, Cell, Format, Manifest, ResultsFile,
    Table,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dynamics::ModelError;
use crate::linalg::LinalgError;
use crate::sim::SimError;

/// Environment variable naming the default directory for output files.
pub const OUT_DIR_ENV: &str = "GOSSIP_OPINIONS_OUT_DIR";

/// Prefix selecting a bundled fixture instead of a file path.
pub const BUILTIN_PREFIX: &str = "builtin:";

pub const FRIEDKIN_EXAMPLE: &str = include_str!("../../fixtures/friedkin_example.model");
pub const GOSSIP_EXAMPLE: &str = include_str!("../../fixtures/gossip_example.model");

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Sim(SimError),
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for unreadable or malformed input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            IoError::Io { .. } | IoError::Parse(_) => 2,
            _ => 1,
        }
    }
}

impl From<ModelError> for IoError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::AssumptionViolated(msg) => IoError::Assumption(msg),
            other => IoError::Model(other),
        }
    }
}

impl From<LinalgError> for IoError {
    fn from(e: LinalgError) -> Self {
        IoError::Model(ModelError::Linalg(e))
    }
}

impl From<SimError> for IoError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::AssumptionViolated(msg) => IoError::Assumption(msg),
            other => IoError::Sim(other),
        }
    }
}

/// Raw model text and where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSource {
    pub label: String,
    pub text: String,
}

impl ModelSource {
    /// Reads a path, or a bundled fixture named `builtin:<file name>`.
    pub fn read(location: &str) -> Result<Self, IoError> {
        if let Some(name) = location.strip_prefix(BUILTIN_PREFIX) {
            let text = builtin_fixture(name).ok_or_else(|| {
                IoError::io(
                    Path::new(location),
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such bundled fixture"),
                )
            })?;
            return Ok(Self {
                label: location.to_string(),
                text: text.to_string(),
            });
        }
        let text =
            std::fs::read_to_string(location).map_err(|e| IoError::io(Path::new(location), e))?;
        Ok(Self {
            label: location.to_string(),
            text,
        })
    }

    pub fn sha256(&self) -> String {
        sha256_hex(self.text.as_bytes())
    }

    pub fn load(&self, renormalize: bool) -> Result<LoadedModel, IoError> {
        ModelFile::parse(&self.text)?.into_model(renormalize)
    }
}

pub fn builtin_fixture(name: &str) -> Option<&'static str> {
    match name.strip_suffix(".model").unwrap_or(name) {
        "friedkin_example" => Some(FRIEDKIN_EXAMPLE),
        "gossip_example" => Some(GOSSIP_EXAMPLE),
        _ => None,
    }
}

/// Loads a model file from disk.
pub fn load_model(path: impl AsRef<Path>, renormalize: bool) -> Result<LoadedModel, IoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    ModelFile::parse(&text)
        .map_err(|e| match e {
            IoError::Parse(msg) => IoError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })?
        .into_model(renormalize)
}
