//! Experiment configuration (TOML). Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use linas_core::evaluators::{Evaluator, ExternalProcessEvaluator, SyntheticOracle, TabularOracle};
use linas_core::moea::GaConfig;
use linas_core::predictors::{Gamma, PredictorKind, PredictorParams, SvrParams};
use linas_core::{LinasConfig, SpaceKind};
use serde::{Deserialize, Serialize};

/// Overrides the directory relative output paths are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "LINAS_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Linas,
    Nsga2,
    Random,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Linas => "linas",
            Algorithm::Nsga2 => "nsga2",
            Algorithm::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EvaluatorSpec {
    Synthetic {
        /// Set by the `synthetic-<space>` shorthand; must match the run's space.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        space: Option<String>,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        noise_seed: u64,
    },
    Table {
        path: PathBuf,
    },
    External {
        command: String,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
        #[serde(default = "default_pool")]
        pool: usize,
    },
}

impl EvaluatorSpec {
    /// Parses the one-line form: `synthetic`, `synthetic-<space>`,
    /// `tabular:<path>` or `external:<command>`.
    pub fn parse_short(text: &str) -> Result<Self, String> {
        if let Some(path) = text.strip_prefix("tabular:") {
            return Ok(EvaluatorSpec::Table { path: PathBuf::from(path) });
        }
        if let Some(command) = text.strip_prefix("external:") {
            return Ok(EvaluatorSpec::External {
                command: command.to_string(),
                timeout_secs: default_timeout(),
                pool: default_pool(),
            });
        }
        let space = match text {
            "synthetic" => None,
            _ => match text.strip_prefix("synthetic-") {
                Some(space) => Some(space.to_string()),
                None => {
                    return Err(format!(
                        "unknown evaluator `{text}` (expected synthetic[-<space>], tabular:<path> or external:<command>)"
                    ))
                }
            },
        };
        Ok(EvaluatorSpec::Synthetic { space, noise: 0.0, noise_seed: 0 })
    }
}

fn evaluator_field<'de, D: serde::Deserializer<'de>>(deserializer: D) -> Result<EvaluatorSpec, D::Error> {
    struct Either;

    impl<'de> serde::de::Visitor<'de> for Either {
        type Value = EvaluatorSpec;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("an evaluator string or an [evaluator] table")
        }

        fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<EvaluatorSpec, E> {
            EvaluatorSpec::parse_short(v).map_err(E::custom)
        }

        fn visit_map<A: serde::de::MapAccess<'de>>(self, map: A) -> Result<EvaluatorSpec, A::Error> {
            EvaluatorSpec::deserialize(serde::de::value::MapAccessDeserializer::new(map))
        }
    }

    deserializer.deserialize_any(Either)
}

fn default_timeout() -> f64 {
    60.0
}

fn default_pool() -> usize {
    1
}

impl Default for EvaluatorSpec {
    fn default() -> Self {
        EvaluatorSpec::Synthetic { space: None, noise: 0.0, noise_seed: 0 }
    }
}

impl EvaluatorSpec {
    pub fn build(&self, kind: SpaceKind) -> Result<Box<dyn Evaluator>> {
        Ok(match self {
            EvaluatorSpec::Synthetic { noise, noise_seed, .. } => {
                let oracle = SyntheticOracle::new(kind);
                Box::new(if *noise > 0.0 { oracle.with_noise(*noise, *noise_seed) } else { oracle })
            }
            EvaluatorSpec::Table { path } => Box::new(
                TabularOracle::load(path, kind.objectives()).with_context(|| format!("loading table {}", path.display()))?,
            ),
            EvaluatorSpec::External { command, timeout_secs, pool } => Box::new(
                ExternalProcessEvaluator::from_command_line(
                    command,
                    kind.name(),
                    kind.objectives(),
                    Duration::from_secs_f64(*timeout_secs),
                    *pool,
                )
                .with_context(|| format!("starting evaluator `{command}`"))?,
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaSection {
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_crossover")]
    pub crossover: f64,
    #[serde(default = "default_mutation")]
    pub mutation: f64,
}

fn default_population() -> usize {
    50
}

fn default_crossover() -> f64 {
    0.9
}

fn default_mutation() -> f64 {
    0.02
}

impl Default for GaSection {
    fn default() -> Self {
        Self { population: default_population(), crossover: default_crossover(), mutation: default_mutation() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinasSection {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
    /// One per objective; defaults depend on the space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictors: Option<Vec<PredictorKind>>,
    #[serde(default = "default_alpha")]
    pub ridge_alpha: f64,
    #[serde(default = "default_svr_c")]
    pub svr_c: f64,
    #[serde(default = "default_svr_epsilon")]
    pub svr_epsilon: f64,
    /// RBF width; `scale` heuristic when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svr_gamma: Option<f64>,
}

fn default_iterations() -> usize {
    10
}

fn default_generations() -> usize {
    300
}

fn default_alpha() -> f64 {
    1.0
}

fn default_svr_c() -> f64 {
    1.0
}

fn default_svr_epsilon() -> f64 {
    0.1
}

impl Default for LinasSection {
    fn default() -> Self {
        Self {
            iterations: default_iterations(),
            generations: default_generations(),
            predictors: None,
            ridge_alpha: default_alpha(),
            svr_c: default_svr_c(),
            svr_epsilon: default_svr_epsilon(),
            svr_gamma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: String,
    pub algorithm: Algorithm,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// True evaluations per trial for nsga2 and random; LINAS always
    /// spends population × iterations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, deserialize_with = "evaluator_field")]
    pub evaluator: EvaluatorSpec,
    #[serde(default)]
    pub ga: GaSection,
    #[serde(default)]
    pub linas: LinasSection,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid run configuration")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn space_kind(&self) -> Result<SpaceKind> {
        self.space.parse().map_err(|e| anyhow::anyhow!("space: {e}"))
    }

    /// Fills every defaulted field so the echoed config fully determines
    /// the run, then validates it.
    pub fn resolve(mut self) -> Result<Self> {
        let kind = self.space_kind()?;
        self.space = kind.name().to_string();
        if self.linas.predictors.is_none() {
            self.linas.predictors = Some(LinasConfig::for_space(kind).predictors);
        }
        if self.reference.is_none() {
            self.reference = Some(kind.reference_point());
        }
        if self.budget.is_none() {
            self.budget = Some(self.ga.population * self.linas.iterations);
        }
        if self.output.is_none() {
            self.output = Some(PathBuf::from(format!("runs/{}-{}", self.space, self.algorithm.name())));
        }
        if self.workers.is_none() {
            self.workers = Some(1);
        }
        self.validate(kind)?;
        Ok(self)
    }

    fn validate(&self, kind: SpaceKind) -> Result<()> {
        let ga = &self.ga;
        if ga.population < 2 || ga.population % 2 != 0 {
            bail!("ga.population must be even and at least 2, got {}", ga.population);
        }
        for (field, p) in [("ga.crossover", ga.crossover), ("ga.mutation", ga.mutation)] {
            if !(0.0..=1.0).contains(&p) {
                bail!("{field} must lie in [0, 1], got {p}");
            }
        }
        if self.seeds.is_empty() {
            bail!("seeds must list at least one seed");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            bail!("seeds must be distinct");
        }
        if self.linas.iterations == 0 {
            bail!("linas.iterations must be at least 1");
        }
        let objectives = kind.objectives().len();
        if let Some(p) = &self.linas.predictors {
            if p.len() != objectives {
                bail!("linas.predictors needs {objectives} entries (one per objective), got {}", p.len());
            }
        }
        if let Some(r) = &self.reference {
            if r.len() != objectives {
                bail!("reference needs {objectives} values, got {}", r.len());
            }
        }
        let budget = self.budget.unwrap_or(0);
        if budget == 0 {
            bail!("budget must be positive");
        }
        if self.algorithm == Algorithm::Nsga2 && budget % ga.population != 0 {
            bail!("budget ({budget}) must be a multiple of ga.population ({}) for nsga2", ga.population);
        }
        if self.workers == Some(0) {
            bail!("workers must be at least 1");
        }
        if let EvaluatorSpec::Synthetic { space: Some(named), .. } = &self.evaluator {
            if named != &self.space {
                bail!("evaluator synthetic-{named} does not match space `{}`", self.space);
            }
        }
        if let EvaluatorSpec::Synthetic { noise, .. } = self.evaluator {
            if !(noise >= 0.0 && noise.is_finite()) {
                bail!("evaluator.noise must be finite and >= 0, got {noise}");
            }
        }
        if let EvaluatorSpec::External { timeout_secs, pool, .. } = self.evaluator {
            if !(timeout_secs > 0.0 && timeout_secs.is_finite()) {
                bail!("evaluator.timeout_secs must be positive, got {timeout_secs}");
            }
            if pool == 0 {
                bail!("evaluator.pool must be at least 1");
            }
        }
        Ok(())
    }

    pub fn predictor_params(&self) -> PredictorParams {
        PredictorParams {
            ridge_alpha: self.linas.ridge_alpha,
            svr: SvrParams {
                c: self.linas.svr_c,
                epsilon: self.linas.svr_epsilon,
                gamma: self.linas.svr_gamma.map_or(Gamma::Scale, Gamma::Value),
                ..SvrParams::default()
            },
        }
    }

    pub fn linas_config(&self, kind: SpaceKind, seed: u64) -> LinasConfig {
        LinasConfig {
            population: self.ga.population,
            iterations: self.linas.iterations,
            generations: self.linas.generations,
            crossover: self.ga.crossover,
            mutation: self.ga.mutation,
            predictors: self.linas.predictors.clone().unwrap_or_else(|| LinasConfig::for_space(kind).predictors),
            predictor_params: self.predictor_params(),
            seed,
            reference: self.reference.clone(),
        }
    }

    pub fn nsga2_config(&self, seed: u64) -> GaConfig {
        let budget = self.budget.unwrap_or(self.ga.population * self.linas.iterations);
        GaConfig {
            population: self.ga.population,
            crossover: self.ga.crossover,
            mutation: self.ga.mutation,
            generations: budget / self.ga.population - 1,
            seed,
        }
    }
}

/// Resolves `path` against the output root from the environment.
pub fn output_dir(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if path.is_relative() => PathBuf::from(root).join(path),
        _ => path.to_path_buf(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_table_defaults() {
        let cfg = RunConfig::from_toml("space = \"mobilenetv3\"\nalgorithm = \"nsga2\"\n").unwrap().resolve().unwrap();
        assert_eq!(cfg.ga, GaSection { population: 50, crossover: 0.9, mutation: 0.02 });
        assert_eq!(cfg.budget, Some(500));
        assert_eq!(cfg.reference, Some(vec![70.0, 70.0]));
        assert_eq!(cfg.linas.predictors, Some(vec![PredictorKind::Ridge, PredictorKind::Ridge]));
        assert_eq!(cfg.nsga2_config(3).generations, 9);
        let echoed = cfg.to_toml();
        assert!(echoed.contains("crossover = 0.9") && echoed.contains("mutation = 0.02"));
        assert_eq!(RunConfig::from_toml(&echoed).unwrap().resolve().unwrap(), cfg);
    }

    #[test]
    fn transformer_defaults() {
        let cfg = RunConfig::from_toml("space = \"transformer\"\nalgorithm = \"linas\"\n").unwrap().resolve().unwrap();
        assert_eq!(cfg.reference, Some(vec![20.0, 200.0]));
        assert_eq!(cfg.linas.predictors, Some(vec![PredictorKind::Svr, PredictorKind::Ridge]));
        let lc = cfg.linas_config(SpaceKind::Transformer, 0);
        assert_eq!((lc.population, lc.iterations, lc.generations), (50, 10, 300));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = RunConfig::from_toml("space = \"transformer\"\nalgorithm = \"linas\"\n[ga]\nmutaton = 0.1\n").unwrap_err();
        assert!(format!("{err:#}").contains("mutaton"), "{err:#}");
        let err = RunConfig::from_toml("space = \"transformer\"\nalgorithm = \"linas\"\nseed = 1\n").unwrap_err();
        assert!(format!("{err:#}").contains("seed"));
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad = |extra: &str| {
            let text = format!("space = \"transformer\"\nalgorithm = \"nsga2\"\n{extra}");
            format!("{:#}", RunConfig::from_toml(&text).unwrap().resolve().unwrap_err())
        };
        assert!(bad("[ga]\npopulation = 7\n").contains("ga.population"));
        assert!(bad("[ga]\nmutation = 2.0\n").contains("ga.mutation"));
        assert!(bad("budget = 120\n").contains("budget"));
        assert!(bad("reference = [1.0]\n").contains("reference"));
        assert!(bad("seeds = [1, 1]\n").contains("seeds"));
        let text = "space = \"resnet\"\nalgorithm = \"linas\"\n";
        let msg = format!("{:#}", RunConfig::from_toml(text).unwrap().resolve().unwrap_err());
        assert!(msg.contains("transformer") && msg.contains("mobilenetv3"));
    }

    #[test]
    fn evaluator_sections() {
        let cfg = RunConfig::from_toml(
            "space = \"transformer\"\nalgorithm = \"random\"\n[evaluator]\nkind = \"external\"\ncommand = \"stub\"\n",
        )
        .unwrap();
        assert_eq!(cfg.evaluator, EvaluatorSpec::External { command: "stub".into(), timeout_secs: 60.0, pool: 1 });
        assert!(RunConfig::from_toml("space = \"transformer\"\nalgorithm = \"random\"\n[evaluator]\nkind = \"table\"\n").is_err());
        let short = |e: &str| RunConfig::from_toml(&format!("space = \"transformer\"\nalgorithm = \"random\"\nevaluator = \"{e}\"\n"));
        assert_eq!(short("tabular:runs/t.csv").unwrap().evaluator, EvaluatorSpec::Table { path: "runs/t.csv".into() });
        assert_eq!(
            short("external:python serve.py").unwrap().evaluator,
            EvaluatorSpec::External { command: "python serve.py".into(), timeout_secs: 60.0, pool: 1 }
        );
        assert!(short("synthetic-transformer").unwrap().resolve().is_ok());
        let err = short("synthetic-mobilenetv3").unwrap().resolve().unwrap_err().to_string();
        assert!(err.contains("does not match space"), "{err}");
        assert!(short("oracle").unwrap_err().root_cause().to_string().contains("unknown evaluator"));
    }
}
