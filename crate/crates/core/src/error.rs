use thiserror::Error;

use crate::tree::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bucket tree: {}", join_violations(.0))]
    InvalidTree(Vec<Violation>),
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("tree is not in canonical order; unordered measures need the canonical representative")]
    NotCanonical,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("size {n} exceeds the enumeration bound {bound}")]
    EnumerationBound { n: usize, bound: usize },
    #[error("indicial root solver: {0}")]
    Spectral(String),
    #[error("imaginary residue {residue:e} exceeds tolerance at m={m}")]
    ImaginaryResidue { m: i64, residue: f64 },
    #[error("negative attraction weight: {0}")]
    NegativeAttraction(String),
    #[error("urn model inconsistency: {0}")]
    Urn(String),
    #[error("goodness of fit: {0}")]
    Statistics(String),
    #[error("malformed increasing diamond: {0}")]
    Diamond(String),
    #[error("malformed bundled tree: {0}")]
    Bundle(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
