use thiserror::Error;

use crate::evaluators::EvalError;
use crate::metrics::MetricsError;
use crate::predictors::PredictorError;
use crate::space::SpaceError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("evaluation of `{genotype}` failed: {source}")]
    Evaluation {
        genotype: String,
        #[source]
        source: EvalError,
    },
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot resume: {0}")]
    Checkpoint(String),
}
