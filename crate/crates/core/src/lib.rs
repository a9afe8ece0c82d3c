//! Predictor-guided multi-objective architecture search over discrete
//! design spaces.

pub mod error;
pub mod evaluators;
pub mod history;
pub mod linas;
pub mod metrics;
pub mod moea;
pub mod objective;
pub mod predictors;
pub mod space;

pub use error::SearchError;
pub use history::{HistoryRecord, SearchFailure, SearchHistory};
pub use linas::{run_linas, LinasConfig, LinasOutcome, LinasRun};
pub use objective::{Direction, Objective};
pub use space::{DesignVariable, Genotype, SearchSpace, SpaceError, SpaceKind};
