//! Objective evaluators.
//!
//! An [`Evaluator`] maps a canonical genotype to objective values in their
//! natural units (quality maximized, latency in milliseconds minimized).
//! Every implementation must be pure and safe to call concurrently.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::objective::Objective;
use crate::space::{Genotype, SpaceError};

mod cache;
mod external;
mod synthetic;
mod tabular;
mod zdt;

pub use cache::Cached;
pub use external::{serve_protocol, ExternalProcessEvaluator, ProtocolReply, ProtocolRequest};
pub use synthetic::{synthetic_mobilenetv3_oracle, synthetic_transformer_oracle, SyntheticOracle, TemplateParams};
pub use tabular::{dump_table, write_table, TabularOracle};
pub use zdt::{zdt1_ideal_hypervolume, zdt1_space, Zdt1};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("genotype `{0}` is not in the table")]
    MissingKey(String),
    #[error("table {path}, line {line}: {message}")]
    TableFormat { path: String, line: u64, message: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("failed to start evaluator process `{command}`: {reason}")]
    Spawn { command: String, reason: String },
    #[error("evaluator process timed out after {seconds:.1}s on request {request}")]
    Timeout { request: String, seconds: f64 },
    #[error("malformed reply `{reply}` to request {request}: {reason}")]
    MalformedReply { request: String, reply: String, reason: String },
    #[error("reply id {found} does not match request id {expected} ({request})")]
    IdMismatch { request: String, expected: u64, found: u64 },
    #[error("evaluator process exited ({status}) while handling request {request}")]
    ChildExited { request: String, status: String },
    #[error("evaluator returned invalid values for `{genotype}`: {reason}")]
    InvalidValues { genotype: String, reason: String },
}

pub trait Evaluator: Send + Sync {
    /// Objectives produced by [`Evaluator::evaluate`], in output order.
    fn objectives(&self) -> &[Objective];

    fn evaluate(&self, genotype: &Genotype) -> Result<Vec<f64>, EvalError>;
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn objectives(&self) -> &[Objective] {
        (**self).objectives()
    }

    fn evaluate(&self, genotype: &Genotype) -> Result<Vec<f64>, EvalError> {
        (**self).evaluate(genotype)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn objectives(&self) -> &[Objective] {
        (**self).objectives()
    }

    fn evaluate(&self, genotype: &Genotype) -> Result<Vec<f64>, EvalError> {
        (**self).evaluate(genotype)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Arc<E> {
    fn objectives(&self) -> &[Objective] {
        (**self).objectives()
    }

    fn evaluate(&self, genotype: &Genotype) -> Result<Vec<f64>, EvalError> {
        (**self).evaluate(genotype)
    }
}

/// Checks arity and finiteness of an evaluator's output.
pub fn check_values(objectives: &[Objective], genotype: &Genotype, values: &[f64]) -> Result<(), EvalError> {
    if values.len() != objectives.len() {
        return Err(EvalError::InvalidValues {
            genotype: genotype.to_text(),
            reason: format!("expected {} values, got {}", objectives.len(), values.len()),
        });
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(EvalError::InvalidValues { genotype: genotype.to_text(), reason: format!("non-finite value {v}") });
    }
    Ok(())
}

/// Counts calls to the wrapped evaluator.
pub struct Counted<E> {
    inner: E,
    calls: AtomicU64,
}

impl<E: Evaluator> Counted<E> {
    pub fn new(inner: E) -> Self {
        Self { inner, calls: AtomicU64::new(0) }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: Evaluator> Evaluator for Counted<E> {
    fn objectives(&self) -> &[Objective] {
        self.inner.objectives()
    }

    fn evaluate(&self, genotype: &Genotype) -> Result<Vec<f64>, EvalError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(genotype)
    }
}

/// A batch evaluation that stopped at the first failing genotype (in
/// input order). `completed` holds the results before it.
#[derive(Debug)]
pub struct BatchFailure {
    pub completed: Vec<Vec<f64>>,
    pub index: usize,
    pub error: EvalError,
}

impl BatchFailure {
    pub fn into_search_error(self, genotypes: &[Genotype]) -> crate::error::SearchError {
        crate::error::SearchError::Evaluation { genotype: genotypes[self.index].to_text(), source: self.error }
    }
}

/// Evaluates genotypes concurrently; results come back in input order and
/// are checked for arity and finiteness.
pub fn evaluate_batch<E: Evaluator + ?Sized>(evaluator: &E, genotypes: &[Genotype]) -> Result<Vec<Vec<f64>>, BatchFailure> {
    use rayon::prelude::*;

    let results: Vec<Result<Vec<f64>, EvalError>> = genotypes
        .par_iter()
        .map(|g| {
            let values = evaluator.evaluate(g)?;
            check_values(evaluator.objectives(), g, &values)?;
            Ok(values)
        })
        .collect();
    let mut completed = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => completed.push(v),
            Err(error) => return Err(BatchFailure { completed, index, error }),
        }
    }
    Ok(completed)
}
