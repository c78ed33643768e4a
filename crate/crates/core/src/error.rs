use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("malformed PLY header at line {line}: {reason}")]
    PlyHeader { line: usize, reason: String },

    #[error("unsupported PLY format `{0}` (only ascii and binary_little_endian are read)")]
    PlyUnsupportedFormat(String),

    #[error("PLY vertex count mismatch: header declares {declared}, body holds {found}")]
    PlyVertexCount { declared: usize, found: usize },

    #[error("non-numeric PLY payload at {location}: `{token}`")]
    PlyPayload { location: String, token: String },

    #[error("k = {k} out of range for an index over {len} points")]
    KOutOfRange { k: usize, len: usize },

    #[error("cloud has no {0}")]
    MissingAttribute(&'static str),

    #[error("normal estimation failed at {} point(s): insufficient neighborhood", .0.len())]
    NormalEstimation(Vec<usize>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric `{metric}` is missing configuration: {what}")]
    MissingConfig { metric: &'static str, what: &'static str },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("codec binary not found: {0}")]
    CodecMissing(PathBuf),

    #[error("codec `{stage}` exited with status {status}: {log}")]
    CodecFailed { stage: &'static str, status: String, log: String },

    #[error("decoded geometry differs from input: {0}")]
    LosslessContract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
