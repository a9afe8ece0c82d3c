//! Integer-encoded super-network search spaces.
//!
//! A [`SearchSpace`] is an ordered list of categorical [`DesignVariable`]s.
//! Some variables are gated by a structural variable (a layer or depth
//! count): they only describe the architecture when the controlling count is
//! large enough. A [`Genotype`] picks one choice index per variable; its
//! canonical form resets every inactive position to index 0 so that each
//! architecture has exactly one encoding.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::Objective;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("genotype has {found} positions, space `{space}` has {expected}")]
    LengthMismatch { space: String, expected: usize, found: usize },
    #[error("index {index} at position {position} (`{name}`) exceeds {choices} choices")]
    IndexOutOfRange { position: usize, name: String, index: usize, choices: usize },
    #[error("genotype is not canonical: inactive position {position} (`{name}`) holds index {index}")]
    NonCanonical { position: usize, name: String, index: usize },
    #[error("cannot parse genotype `{text}`: {reason}")]
    Parse { text: String, reason: String },
    #[error("unknown search space `{0}` (valid: transformer, mobilenetv3)")]
    UnknownSpace(String),
    #[error("invalid space definition: {0}")]
    InvalidDefinition(String),
    #[error("space `{space}` cannot supply {requested} more distinct genotypes")]
    Exhausted { space: String, requested: usize },
}

/// Activity condition: the variable is active iff the value chosen for the
/// `controller` variable is at least `min_value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub controller: usize,
    pub min_value: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVariable {
    pub name: String,
    /// Distinct choice values in ascending order.
    pub choices: Vec<i64>,
    /// Semantic tag such as `decoder-layer-2`.
    pub group: String,
    /// Non-negative weight consumed by the synthetic latency oracles.
    pub cost_weight: f64,
    pub gate: Option<Gate>,
}

impl DesignVariable {
    pub fn new(name: impl Into<String>, choices: &[i64], group: impl Into<String>, cost_weight: f64) -> Self {
        Self {
            name: name.into(),
            choices: choices.to_vec(),
            group: group.into(),
            cost_weight,
            gate: None,
        }
    }

    pub fn gated(mut self, controller: usize, min_value: i64) -> Self {
        self.gate = Some(Gate { controller, min_value });
        self
    }

    pub fn cardinality(&self) -> usize {
        self.choices.len()
    }

    pub fn is_fixed(&self) -> bool {
        self.choices.len() == 1
    }
}

/// Fixed-length sequence of choice indices, one per design variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Genotype(Vec<usize>);

impl Genotype {
    pub fn new(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    /// Dash-separated text form, e.g. `0-1-0-3`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl std::ops::Index<usize> for Genotype {
    type Output = usize;

    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{idx}")?;
        }
        Ok(())
    }
}

impl FromStr for Genotype {
    type Err = SpaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        if trimmed.is_empty() {
            return Err(SpaceError::Parse { text: s.to_string(), reason: "empty".into() });
        }
        trimmed
            .split('-')
            .map(|field| {
                field.parse::<usize>().map_err(|e| SpaceError::Parse {
                    text: s.to_string(),
                    reason: format!("field `{field}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Genotype)
    }
}

impl From<Genotype> for String {
    fn from(g: Genotype) -> Self {
        g.to_string()
    }
}

impl TryFrom<String> for Genotype {
    type Error = SpaceError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// The two built-in super-network spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Transformer,
    #[serde(rename = "mobilenetv3")]
    MobileNetV3,
}

impl SpaceKind {
    pub const ALL: [SpaceKind; 2] = [SpaceKind::Transformer, SpaceKind::MobileNetV3];

    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Transformer => "transformer",
            SpaceKind::MobileNetV3 => "mobilenetv3",
        }
    }

    pub fn space(self) -> SearchSpace {
        match self {
            SpaceKind::Transformer => define_transformer_space(),
            SpaceKind::MobileNetV3 => define_mobilenetv3_space(),
        }
    }

    /// Quality objective (maximized) followed by latency in ms (minimized).
    pub fn objectives(self) -> Vec<Objective> {
        match self {
            SpaceKind::Transformer => vec![Objective::maximize("bleu"), Objective::minimize("latency_ms")],
            SpaceKind::MobileNetV3 => vec![Objective::maximize("top1"), Objective::minimize("latency_ms")],
        }
    }

    /// Hypervolume reference point in natural units (quality, latency).
    pub fn reference_point(self) -> Vec<f64> {
        match self {
            SpaceKind::Transformer => vec![20.0, 200.0],
            SpaceKind::MobileNetV3 => vec![70.0, 70.0],
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpaceKind {
    type Err = SpaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "transformer" => Ok(SpaceKind::Transformer),
            "mobilenetv3" => Ok(SpaceKind::MobileNetV3),
            _ => Err(SpaceError::UnknownSpace(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    id: String,
    variables: Vec<DesignVariable>,
}

impl SearchSpace {
    /// Validates choice lists and gates. Gates must point at ungated
    /// variables; nested gating is not supported.
    pub fn new(id: impl Into<String>, variables: Vec<DesignVariable>) -> Result<Self, SpaceError> {
        let id = id.into();
        if variables.is_empty() {
            return Err(SpaceError::InvalidDefinition("no variables".into()));
        }
        for (pos, v) in variables.iter().enumerate() {
            if v.choices.is_empty() {
                return Err(SpaceError::InvalidDefinition(format!("`{}` has no choices", v.name)));
            }
            if v.choices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SpaceError::InvalidDefinition(format!(
                    "`{}` choices must be distinct and ascending",
                    v.name
                )));
            }
            if !(v.cost_weight >= 0.0 && v.cost_weight.is_finite()) {
                return Err(SpaceError::InvalidDefinition(format!("`{}` has invalid cost weight", v.name)));
            }
            if let Some(gate) = v.gate {
                let controller = variables.get(gate.controller).ok_or_else(|| {
                    SpaceError::InvalidDefinition(format!("`{}` gated by missing position {}", v.name, gate.controller))
                })?;
                if controller.gate.is_some() || gate.controller == pos {
                    return Err(SpaceError::InvalidDefinition(format!(
                        "`{}` gated by a gated variable `{}`",
                        v.name, controller.name
                    )));
                }
            }
        }
        Ok(Self { id, variables })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn variables(&self) -> &[DesignVariable] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Positions that gate other variables.
    pub fn structural_positions(&self) -> BTreeSet<usize> {
        self.variables.iter().filter_map(|v| v.gate.map(|g| g.controller)).collect()
    }

    fn check_bounds(&self, g: &Genotype) -> Result<(), SpaceError> {
        if g.len() != self.len() {
            return Err(SpaceError::LengthMismatch {
                space: self.id.clone(),
                expected: self.len(),
                found: g.len(),
            });
        }
        for (position, (&index, v)) in g.indices().iter().zip(&self.variables).enumerate() {
            if index >= v.cardinality() {
                return Err(SpaceError::IndexOutOfRange {
                    position,
                    name: v.name.clone(),
                    index,
                    choices: v.cardinality(),
                });
            }
        }
        Ok(())
    }

    fn active_at(&self, indices: &[usize], position: usize) -> bool {
        match self.variables[position].gate {
            None => true,
            Some(gate) => {
                let controller = &self.variables[gate.controller];
                controller.choices[indices[gate.controller]] >= gate.min_value
            }
        }
    }

    /// Activity mask for a bounds-valid genotype.
    pub fn active_mask(&self, g: &Genotype) -> Result<Vec<bool>, SpaceError> {
        self.check_bounds(g)?;
        Ok((0..self.len()).map(|p| self.active_at(g.indices(), p)).collect())
    }

    /// Resets inactive positions to index 0; active positions are unchanged.
    pub fn canonicalize(&self, g: &Genotype) -> Result<Genotype, SpaceError> {
        self.check_bounds(g)?;
        let indices = g.indices();
        Ok(Genotype(
            (0..self.len())
                .map(|p| if self.active_at(indices, p) { indices[p] } else { 0 })
                .collect(),
        ))
    }

    /// In-place canonicalization of indices already known to be in bounds.
    pub(crate) fn canonicalize_in_place(&self, indices: &mut [usize]) {
        for p in 0..indices.len() {
            if !self.active_at(indices, p) {
                indices[p] = 0;
            }
        }
    }

    /// Bounds check plus canonical-form check.
    pub fn validate(&self, g: &Genotype) -> Result<(), SpaceError> {
        self.check_bounds(g)?;
        for (position, &index) in g.indices().iter().enumerate() {
            if index != 0 && !self.active_at(g.indices(), position) {
                return Err(SpaceError::NonCanonical {
                    position,
                    name: self.variables[position].name.clone(),
                    index,
                });
            }
        }
        Ok(())
    }

    pub fn is_canonical(&self, g: &Genotype) -> bool {
        self.validate(g).is_ok()
    }

    /// Draws one canonical genotype, each index uniform over its choices.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Genotype {
        let mut indices: Vec<usize> = self.variables.iter().map(|v| rng.random_range(0..v.cardinality())).collect();
        self.canonicalize_in_place(&mut indices);
        Genotype(indices)
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Genotype> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// Draws `n` distinct canonical genotypes not contained in `exclude`,
    /// resampling on collisions.
    pub fn sample_distinct<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        exclude: &HashSet<Genotype>,
    ) -> Result<Vec<Genotype>, SpaceError> {
        let available = self.cardinality();
        if available < BigUint::from(exclude.len() + n) {
            return Err(SpaceError::Exhausted { space: self.id.clone(), requested: n });
        }
        let mut seen: HashSet<Genotype> = HashSet::with_capacity(n);
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let g = self.sample_one(rng);
            if !exclude.contains(&g) && seen.insert(g.clone()) {
                out.push(g);
            }
        }
        Ok(out)
    }

    pub fn feature_len(&self) -> usize {
        self.variables.iter().map(DesignVariable::cardinality).sum()
    }

    /// Concatenated one-hot indicator blocks, one block per variable.
    pub fn one_hot_encode(&self, g: &Genotype) -> Result<Vec<f64>, SpaceError> {
        self.validate(g)?;
        let mut features = vec![0.0; self.feature_len()];
        let mut offset = 0;
        for (v, &index) in self.variables.iter().zip(g.indices()) {
            features[offset + index] = 1.0;
            offset += v.cardinality();
        }
        Ok(features)
    }

    /// Exact number of distinct canonical genotypes.
    pub fn cardinality(&self) -> BigUint {
        let structural = self.structural_positions();
        let mut total = BigUint::from(1u32);
        for (pos, v) in self.variables.iter().enumerate() {
            if v.gate.is_none() && !structural.contains(&pos) {
                total *= BigUint::from(v.cardinality());
            }
        }
        for &controller in &structural {
            let mut branches = BigUint::from(0u32);
            for &value in &self.variables[controller].choices {
                let mut branch = BigUint::from(1u32);
                for v in &self.variables {
                    if let Some(gate) = v.gate {
                        if gate.controller == controller && value >= gate.min_value {
                            branch *= BigUint::from(v.cardinality());
                        }
                    }
                }
                branches += branch;
            }
            total *= branches;
        }
        total
    }

    pub fn log10_cardinality(&self) -> f64 {
        let digits = self.cardinality().to_string();
        let lead = &digits[..digits.len().min(17)];
        let mantissa: f64 = lead.parse().expect("decimal digits");
        mantissa.log10() + (digits.len() - lead.len()) as f64
    }
}

const TRANSFORMER_EMBED: [i64; 2] = [512, 640];
const TRANSFORMER_HIDDEN: [i64; 3] = [1024, 2048, 3072];
const TRANSFORMER_HEADS: [i64; 2] = [4, 8];
const TRANSFORMER_SPAN: [i64; 3] = [1, 2, 3];

fn transformer_layout(id: &str, encoder_layers: i64, decoder_layers: &[i64]) -> SearchSpace {
    let max_decoder = *decoder_layers.last().expect("decoder layer choices");
    let mut vars = vec![
        DesignVariable::new("encoder-embed-dim", &TRANSFORMER_EMBED, "embedding", 3.0),
        DesignVariable::new("decoder-embed-dim", &TRANSFORMER_EMBED, "embedding", 3.0),
        DesignVariable::new("encoder-layer-count", &[encoder_layers], "structure", 0.0),
        DesignVariable::new("decoder-layer-count", decoder_layers, "structure", 10.0),
    ];
    let decoder_count = 3;
    for l in 1..=encoder_layers {
        let group = format!("encoder-layer-{l}");
        vars.push(DesignVariable::new(format!("encoder-layer-{l}-hidden-dim"), &TRANSFORMER_HIDDEN, &group, 1.0));
        vars.push(DesignVariable::new(format!("encoder-layer-{l}-self-attn-heads"), &TRANSFORMER_HEADS, &group, 1.0));
    }
    for l in 1..=max_decoder {
        let group = format!("decoder-layer-{l}");
        let gated = |v: DesignVariable| v.gated(decoder_count, l);
        vars.push(gated(DesignVariable::new(format!("decoder-layer-{l}-hidden-dim"), &TRANSFORMER_HIDDEN, &group, 2.0)));
        vars.push(gated(DesignVariable::new(format!("decoder-layer-{l}-self-attn-heads"), &TRANSFORMER_HEADS, &group, 2.0)));
        vars.push(gated(DesignVariable::new(format!("decoder-layer-{l}-cross-attn-heads"), &TRANSFORMER_HEADS, &group, 2.0)));
        vars.push(gated(DesignVariable::new(format!("decoder-layer-{l}-arbitrary-attn"), &TRANSFORMER_SPAN, &group, 2.0)));
    }
    SearchSpace::new(id, vars).expect("transformer layout is well formed")
}

/// The 40-variable Transformer space: 6 fixed encoder layers, 1 to 6
/// decoder layers. Decoder-layer-ℓ variables are active iff ℓ does not
/// exceed the decoder layer count.
pub fn define_transformer_space() -> SearchSpace {
    transformer_layout("transformer", 6, &[1, 2, 3, 4, 5, 6])
}

const MBV3_BLOCKS: usize = 5;
const MBV3_DEPTH: [i64; 3] = [2, 3, 4];
const MBV3_KERNEL: [i64; 3] = [3, 5, 7];
const MBV3_EXPAND: [i64; 3] = [3, 4, 6];

fn mobilenetv3_layout(id: &str, blocks: usize) -> SearchSpace {
    let mut vars = Vec::with_capacity(blocks * 9);
    for b in 1..=blocks {
        let depth_pos = vars.len();
        vars.push(DesignVariable::new(format!("block-{b}-depth"), &MBV3_DEPTH, format!("block-{b}"), 8.0));
        for k in 1..=4i64 {
            let group = format!("block-{b}-layer-{k}");
            vars.push(DesignVariable::new(format!("block-{b}-layer-{k}-kernel"), &MBV3_KERNEL, &group, 1.0).gated(depth_pos, k));
            vars.push(DesignVariable::new(format!("block-{b}-layer-{k}-expand"), &MBV3_EXPAND, &group, 1.5).gated(depth_pos, k));
        }
    }
    SearchSpace::new(id, vars).expect("mobilenetv3 layout is well formed")
}

/// The 45-variable MobileNetV3 space: 5 blocks of depth 2 to 4, each layer
/// slot carrying a kernel size and an expansion ratio.
pub fn define_mobilenetv3_space() -> SearchSpace {
    mobilenetv3_layout("mobilenetv3", MBV3_BLOCKS)
}
