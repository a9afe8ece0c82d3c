//! NSGA-II and random search over a discrete design space.

mod nsga2;
mod operators;
mod random;
mod sort;

pub use nsga2::{evaluate_into, run_nsga2, select_survivors, GaConfig, Nsga2Outcome};
pub use operators::{crossover_two_point, mutate_random_reset, tournament_select};
pub use random::random_search;
pub use sort::{assign_rank_and_crowding, crowding_distance, dominates, dominates_unchecked, non_dominated_sort, DominanceError};

use serde::{Deserialize, Serialize};

use crate::space::Genotype;

/// A population member. `objectives` are in minimization form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genotype: Genotype,
    pub objectives: Vec<f64>,
    pub rank: usize,
    /// Boundary members carry infinity, which JSON cannot hold as a number.
    #[serde(with = "extended_f64")]
    pub crowding: f64,
}

impl Individual {
    pub fn new(genotype: Genotype, objectives: Vec<f64>) -> Self {
        Self { genotype, objectives, rank: 0, crowding: 0.0 }
    }
}

mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}
