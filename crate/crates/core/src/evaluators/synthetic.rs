//! Closed-form stand-ins for super-network validation.
//!
//! For each active variable with `k` choices at index `i`, the level is
//! `ν = i / (k − 1)` (0 for fixed variables). With `A` the number of active
//! non-fixed variables, `C = Σ ν` and `S = Σ w·ν` (w = cost weight):
//!
//! ```text
//! latency = latency_base + latency_scale · S
//! quality = quality_base + quality_scale · (1 − exp(−(C + A/2) / temperature))
//! ```

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{EvalError, Evaluator};
use crate::objective::Objective;
use crate::space::{Genotype, SearchSpace, SpaceKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemplateParams {
    pub latency_base: f64,
    pub latency_scale: f64,
    pub quality_base: f64,
    pub quality_scale: f64,
    pub temperature: f64,
}

impl TemplateParams {
    pub fn for_space(kind: SpaceKind) -> Self {
        match kind {
            SpaceKind::Transformer => Self {
                latency_base: 40.0,
                latency_scale: 2.0,
                quality_base: 0.0,
                quality_scale: 45.0,
                temperature: 12.0,
            },
            SpaceKind::MobileNetV3 => Self {
                latency_base: 10.0,
                latency_scale: 0.6,
                quality_base: 50.0,
                quality_scale: 30.0,
                temperature: 18.0,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticOracle {
    kind: SpaceKind,
    space: SearchSpace,
    objectives: Vec<Objective>,
    params: TemplateParams,
    noise_sigma: f64,
    noise_seed: u64,
}

impl SyntheticOracle {
    pub fn new(kind: SpaceKind) -> Self {
        Self {
            kind,
            space: kind.space(),
            objectives: kind.objectives(),
            params: TemplateParams::for_space(kind),
            noise_sigma: 0.0,
            noise_seed: 0,
        }
    }

    /// Adds Gaussian noise to the quality output. The perturbation is a
    /// function of `(seed, genotype)`, so the oracle stays pure.
    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.noise_seed = seed;
        self
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    /// Returns `(quality, latency_ms)`.
    pub fn measure(&self, g: &Genotype) -> Result<(f64, f64), EvalError> {
        self.space.validate(g)?;
        let mask = self.space.active_mask(g)?;
        let (mut active, mut levels, mut cost) = (0usize, 0.0, 0.0);
        for ((v, &idx), on) in self.space.variables().iter().zip(g.indices()).zip(mask) {
            if !on || v.is_fixed() {
                continue;
            }
            let level = idx as f64 / (v.cardinality() - 1) as f64;
            active += 1;
            levels += level;
            cost += v.cost_weight * level;
        }
        let p = &self.params;
        let latency = p.latency_base + p.latency_scale * cost;
        let mut quality = p.quality_base + p.quality_scale * (1.0 - (-(levels + 0.5 * active as f64) / p.temperature).exp());
        if self.noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(self.noise_seed, &g.to_text()));
            let z: f64 = StandardNormal.sample(&mut rng);
            quality += self.noise_sigma * z;
        }
        Ok((quality, latency))
    }
}

fn fnv1a(seed: u64, text: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(text.as_bytes()) {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl Evaluator for SyntheticOracle {
    fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    fn evaluate(&self, genotype: &Genotype) -> Result<Vec<f64>, EvalError> {
        let (q, l) = self.measure(genotype)?;
        Ok(vec![q, l])
    }
}

/// `(bleu_like, latency_ms)` on the Transformer space.
pub fn synthetic_transformer_oracle(g: &Genotype) -> Result<(f64, f64), EvalError> {
    static ORACLE: OnceLock<SyntheticOracle> = OnceLock::new();
    ORACLE.get_or_init(|| SyntheticOracle::new(SpaceKind::Transformer)).measure(g)
}

/// `(top1_like, latency_ms)` on the MobileNetV3 space.
pub fn synthetic_mobilenetv3_oracle(g: &Genotype) -> Result<(f64, f64), EvalError> {
    static ORACLE: OnceLock<SyntheticOracle> = OnceLock::new();
    ORACLE.get_or_init(|| SyntheticOracle::new(SpaceKind::MobileNetV3)).measure(g)
}
