//! Error types shared across the library.

use thiserror::Error;

/// Errors from state/operator primitives.
#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid Hilbert layout: {0}")]
    InvalidLayout(String),
    #[error("factor index {index} out of range for layout with {factors} factors")]
    FactorOutOfRange { index: usize, factors: usize },
    #[error("operator is not Hermitian: max |H - H\u{2020}| entry = {defect:.3e}")]
    NotHermitian { defect: f64 },
    #[error("qubit leakage above threshold: population {population:.3e} outside the two lowest qubit levels")]
    Leakage { population: f64 },
}

/// Errors from device-file ingestion and validation.
#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("cannot read device file '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in '{path}' at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("cluster '{name}' has a single mode; intra-cluster spacings are undefined")]
    SingleModeCluster { name: String },
    #[error("unknown cluster '{name}'; available clusters: {available}")]
    UnknownCluster { name: String, available: String },
    #[error("unknown qubit '{name}'; available qubits: {available}")]
    UnknownQubit { name: String, available: String },
}

/// Errors from spectroscopy sweeps and gap extraction.
#[derive(Debug, Error)]
pub enum SpectroscopyError {
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
    #[error("branch index {index} out of range: sweep has {count} lines per grid point")]
    BranchOutOfRange { index: usize, count: usize },
    #[error(
        "inconclusive gap extraction: branch separation minimum at sweep boundary (index {index})"
    )]
    MinimumAtBoundary { index: usize },
}

/// Errors from time-domain simulation grids.
#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error("invalid frequency grid: {0}")]
    InvalidFrequencyGrid(String),
}

/// Errors from readout-error modelling and correction.
#[derive(Debug, Error)]
pub enum ReadoutError {
    #[error("invalid response matrix: {0}")]
    InvalidResponseMatrix(String),
    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),
    #[error("response matrix is numerically singular: |det| = {det:.3e}")]
    Singular { det: f64 },
}
