use std::collections::BTreeMap;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, ensure, Context, Result};
use linas_core::evaluators::{serve_protocol, Evaluator, SyntheticOracle};
use linas_core::metrics::{aggregate_curves, hv_curve, AggregateCurve, HvCurve};
use linas_core::moea::{random_search, run_nsga2};
use linas_core::predictors::{mape_curve, MapeStat, MapeStudy, PredictorKind, PredictorParams};
use linas_core::linas::IterationReport;
use linas_core::{run_linas, SearchFailure, SearchHistory, SearchSpace, SpaceKind};
use log::{error, info};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{output_dir, Algorithm, RunConfig};
use crate::plot::{line_chart, scatter_chart, Chart, ErrorStyle, Series};
use crate::runlog::TrialLog;

pub fn trial_file_name(algorithm: Algorithm, seed: u64) -> String {
    format!("{}-seed{seed}.csv", algorithm.name())
}

#[derive(Debug, Serialize)]
struct TrialStatus {
    seed: u64,
    file: String,
    evaluations: usize,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    started_unix_secs: u64,
    wall_time_secs: f64,
    trials: Vec<TrialStatus>,
}

#[derive(Debug)]
pub struct SearchOutcome {
    pub output: PathBuf,
    pub trial_files: Vec<PathBuf>,
}

type TrialResult = Result<(SearchHistory, Option<Vec<IterationReport>>), SearchFailure>;

fn run_trial(config: &RunConfig, kind: SpaceKind, space: &SearchSpace, evaluator: &dyn Evaluator, seed: u64) -> TrialResult {
    match config.algorithm {
        Algorithm::Linas => run_linas(space, evaluator, config.linas_config(kind, seed)).map(|o| (o.history, Some(o.progress))),
        Algorithm::Nsga2 => run_nsga2(space, evaluator, &config.nsga2_config(seed)).map(|o| (o.history, None)),
        Algorithm::Random => random_search(space, evaluator, config.budget.unwrap_or(0), seed).map(|h| (h, None)),
    }
}

/// Runs the configured algorithm once per seed and writes one CSV per
/// trial plus `metadata.json` and the resolved `config.toml`. Logs of
/// failed trials keep the evaluations completed before the failure.
pub fn cmd_search(config: RunConfig) -> Result<SearchOutcome> {
    let config = config.resolve()?;
    let kind = config.space_kind()?;
    let space = kind.space();
    let dir = output_dir(config.output.as_deref().expect("resolved"));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let evaluator = config.evaluator.build(kind)?;
    let reference = config.reference.clone().expect("resolved");

    let started_unix_secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.workers.unwrap_or(1)).build()?;
    let results: Vec<(u64, TrialResult)> = pool.install(|| {
        config.seeds.par_iter().map(|&seed| (seed, run_trial(&config, kind, &space, evaluator.as_ref(), seed))).collect()
    });

    let mut trials = Vec::new();
    let mut trial_files = Vec::new();
    let mut failures = Vec::new();
    for (seed, result) in results {
        let (history, progress, err) = match result {
            Ok((h, p)) => (h, p, None),
            Err(f) => (f.partial, None, Some(f.error.to_string())),
        };
        let name = trial_file_name(config.algorithm, seed);
        let path = dir.join(&name);
        if let Some(progress) = progress {
            let progress_path = path.with_extension("progress.json");
            std::fs::write(&progress_path, serde_json::to_string_pretty(&progress)? + "\n")?;
        }
        TrialLog::from_history(seed, &history, &reference)?.write(&path)?;
        info!("seed {seed}: {} evaluations -> {}", history.len(), path.display());
        if let Some(e) = &err {
            error!("seed {seed} failed: {e}");
            failures.push(format!("seed {seed}: {e}"));
        }
        trials.push(TrialStatus { seed, file: name, evaluations: history.len(), error: err });
        trial_files.push(path);
    }

    let meta = Metadata {
        tool: "linas",
        version: env!("CARGO_PKG_VERSION"),
        config: &config,
        started_unix_secs,
        wall_time_secs: clock.elapsed().as_secs_f64(),
        trials,
    };
    std::fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    std::fs::write(dir.join("config.toml"), config.to_toml())?;
    if !failures.is_empty() {
        bail!("{} of {} trials failed (partial logs kept in {}):\n  {}", failures.len(), config.seeds.len(), dir.display(), failures.join("\n  "));
    }
    Ok(SearchOutcome { output: dir, trial_files })
}

/// Run logs named directly, or every `*-seed*.csv` inside a directory.
pub fn collect_logs(inputs: &[PathBuf]) -> Result<Vec<TrialLog>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.extension().is_some_and(|x| x == "csv")
                        && p.file_stem().and_then(|s| s.to_str()).is_some_and(|s| s.contains("-seed"))
                })
                .collect();
            found.sort();
            ensure!(!found.is_empty(), "no run logs in {}", input.display());
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    files.iter().map(|f| TrialLog::read(f)).collect()
}

#[derive(Debug)]
pub struct CompareOutcome {
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub reference: Vec<f64>,
    pub curves: BTreeMap<String, AggregateCurve>,
}

/// Checkpoints every 50 evaluations up to `len`, always ending at `len`.
pub fn default_checkpoints(len: usize) -> Vec<usize> {
    let mut c: Vec<usize> = (1..).map(|k| 50 * k).take_while(|&c| c <= len).collect();
    if c.last() != Some(&len) && len > 0 {
        c.push(len);
    }
    c
}

pub fn cmd_compare(inputs: &[PathBuf], reference: Option<Vec<f64>>, checkpoints: Option<Vec<usize>>, out: &Path) -> Result<CompareOutcome> {
    let logs = collect_logs(inputs)?;
    ensure!(!logs.is_empty(), "no run logs given");
    let space = logs[0].space.clone();
    if let Some(other) = logs.iter().find(|l| l.space != space || l.objective_names != logs[0].objective_names) {
        bail!("cannot compare runs from different spaces or objective sets (`{}` and `{}`)", space, other.space);
    }
    let kind = logs[0].space_kind()?;
    let reference = reference.unwrap_or_else(|| kind.reference_point());
    let shortest = logs.iter().map(|l| l.rows.len()).min().unwrap_or(0);
    let checkpoints = checkpoints.unwrap_or_else(|| default_checkpoints(shortest));

    let mut grouped: BTreeMap<String, Vec<HvCurve>> = BTreeMap::new();
    for log in &logs {
        let curve = hv_curve(&log.history()?, &reference, &checkpoints, log.trial.to_string())
            .with_context(|| format!("{} trial {}", log.algorithm, log.trial))?;
        grouped.entry(log.algorithm.clone()).or_default().push(curve);
    }
    let mut curves = BTreeMap::new();
    for (alg, c) in grouped {
        curves.insert(alg, aggregate_curves(&c)?);
    }

    let out = output_dir(out);
    std::fs::create_dir_all(&out)?;
    let csv_path = out.join("hv_curves.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["algorithm", "checkpoint", "mean_hv", "stderr", "trials"])?;
    for (alg, agg) in &curves {
        for k in 0..agg.checkpoints.len() {
            w.write_record([
                alg.clone(),
                agg.checkpoints[k].to_string(),
                format!("{:?}", agg.mean[k]),
                format!("{:?}", agg.stderr[k]),
                agg.trials.to_string(),
            ])?;
        }
    }
    w.flush()?;
    for (alg, agg) in &curves {
        let mut w = csv::Writer::from_path(out.join(format!("hv_{alg}.csv")))?;
        w.write_record(["checkpoint", "mean_hv", "stderr", "trials"])?;
        for k in 0..agg.checkpoints.len() {
            w.write_record([
                agg.checkpoints[k].to_string(),
                format!("{:?}", agg.mean[k]),
                format!("{:?}", agg.stderr[k]),
                agg.trials.to_string(),
            ])?;
        }
        w.flush()?;
    }

    let series: Vec<Series> = curves
        .iter()
        .map(|(alg, agg)| Series {
            name: format!("{alg} (n={})", agg.trials),
            points: (0..agg.checkpoints.len()).map(|k| (agg.checkpoints[k] as f64, agg.mean[k], agg.stderr[k])).collect(),
        })
        .collect();
    let ref_text = kind.objectives().iter().zip(&reference).map(|(o, r)| format!("{}={r}", o.name)).collect::<Vec<_>>().join(", ");
    let title = format!("{space}: hypervolume vs evaluations (ref {ref_text})");
    let svg = line_chart(&Chart { title: &title, x_label: "evaluations", y_label: "hypervolume" }, &series, ErrorStyle::Band);
    let svg_path = out.join("hv_curves.svg");
    std::fs::write(&svg_path, svg)?;
    Ok(CompareOutcome { csv: csv_path, svg: svg_path, reference, curves })
}

/// Objective-space scatter of the first `c` evaluations for each cutoff.
pub fn cmd_scatter(input: &Path, cutoffs: Option<Vec<usize>>, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let log = TrialLog::read(input)?;
    ensure!(log.objective_names.len() == 2, "scatter needs a bi-objective log");
    let cutoffs = cutoffs.unwrap_or_else(|| vec![log.rows.len()]);
    let out = match out {
        Some(o) => output_dir(o),
        None => input.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    std::fs::create_dir_all(&out)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("log");
    let mut files = Vec::new();
    for c in cutoffs {
        ensure!(c >= 1 && c <= log.rows.len(), "cutoff {c} outside 1..={}", log.rows.len());
        let points: Vec<(f64, f64, usize)> = log.rows[..c].iter().map(|r| (r.values[1], r.values[0], r.step)).collect();
        let group = if log.algorithm == "nsga2" { "generation" } else { "iteration" };
        let title = format!("{} {} (seed {}): first {c} evaluations", log.space, log.algorithm, log.trial);
        let chart = Chart { title: &title, x_label: &log.objective_names[1], y_label: &log.objective_names[0] };
        let path = out.join(format!("scatter-{stem}-{c}.svg"));
        std::fs::write(&path, scatter_chart(&chart, &points, group))?;
        files.push(path);
    }
    Ok(files)
}

#[derive(Debug, Clone)]
pub struct MapeOptions {
    pub spaces: Vec<SpaceKind>,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub holdout: usize,
    pub seed: u64,
}

impl Default for MapeOptions {
    fn default() -> Self {
        Self {
            spaces: SpaceKind::ALL.to_vec(),
            sizes: vec![50, 100, 200, 400, 800, 1600],
            trials: 10,
            holdout: 500,
            seed: 0,
        }
    }
}

/// Quality predictor per space: SVR for the Transformer, ridge for
/// MobileNetV3.
pub fn mape_predictor(kind: SpaceKind) -> PredictorKind {
    match kind {
        SpaceKind::Transformer => PredictorKind::Svr,
        SpaceKind::MobileNetV3 => PredictorKind::Ridge,
    }
}

#[derive(Debug)]
pub struct MapeOutcome {
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub curves: Vec<(SpaceKind, Vec<MapeStat>)>,
}

pub fn cmd_mape_study(options: &MapeOptions, out: &Path) -> Result<MapeOutcome> {
    let curves: Vec<(SpaceKind, Vec<MapeStat>)> = options
        .spaces
        .par_iter()
        .map(|&kind| -> Result<_> {
            let study = MapeStudy {
                sizes: options.sizes.clone(),
                holdout: options.holdout,
                trials: options.trials,
                objective: 0,
                kind: mape_predictor(kind),
                params: PredictorParams::default(),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            let stats = mape_curve(&kind.space(), &SyntheticOracle::new(kind), &study, &mut rng)?;
            Ok((kind, stats))
        })
        .collect::<Result<_>>()?;

    let out = output_dir(out);
    std::fs::create_dir_all(&out)?;
    let csv_path = out.join("mape.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["space", "predictor", "objective", "size", "mean_mape", "stddev", "trials"])?;
    for (kind, stats) in &curves {
        let objective = &kind.objectives()[0].name;
        for s in stats {
            w.write_record([
                kind.name().to_string(),
                mape_predictor(*kind).to_string(),
                objective.clone(),
                s.size.to_string(),
                format!("{:?}", s.mean),
                format!("{:?}", s.stddev),
                s.trials.to_string(),
            ])?;
        }
    }
    w.flush()?;
    let series: Vec<Series> = curves
        .iter()
        .map(|(kind, stats)| Series {
            name: format!("{} {} ({})", kind.name(), kind.objectives()[0].name, mape_predictor(*kind)),
            points: stats.iter().map(|s| (s.size as f64, s.mean, s.stddev)).collect(),
        })
        .collect();
    let chart = Chart { title: "Predictor MAPE vs training examples (±1 std)", x_label: "training examples", y_label: "MAPE (%)" };
    let svg_path = out.join("mape.svg");
    std::fs::write(&svg_path, line_chart(&chart, &series, ErrorStyle::Bars))?;
    Ok(MapeOutcome { csv: csv_path, svg: svg_path, curves })
}

pub fn cmd_spacecheck(name: &str) -> Result<String> {
    let kind: SpaceKind = name.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
    let space = kind.space();
    let mut report = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(report, "{:>3}  {:<36} {:<22} {:>6}  gate", "#", "variable", "choices", "weight");
    for (i, v) in space.variables().iter().enumerate() {
        let choices = v.choices.iter().map(i64::to_string).collect::<Vec<_>>().join(",");
        let gate = match &v.gate {
            Some(g) => format!("{} >= {}", space.variables()[g.controller].name, g.min_value),
            None => "-".into(),
        };
        let _ = writeln!(report, "{i:>3}  {:<36} {:<22} {:>6}  {gate}", v.name, format!("{{{choices}}}"), v.cost_weight);
    }
    let _ = writeln!(report);
    let _ = writeln!(
        report,
        "{}: {} variables, feature length {}, log10 size ≈ {:.2}",
        kind.name(),
        space.len(),
        space.feature_len(),
        space.log10_cardinality()
    );
    let _ = writeln!(report, "exact size: {}", space.cardinality());
    Ok(report)
}

/// Answers line-protocol requests on stdin with the synthetic oracle.
pub fn cmd_serve(kind: SpaceKind, noise: f64, noise_seed: u64) -> Result<()> {
    let oracle = SyntheticOracle::new(kind);
    let oracle = if noise > 0.0 { oracle.with_noise(noise, noise_seed) } else { oracle };
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    serve_protocol(&oracle, kind.name(), BufReader::new(stdin.lock()), stdout.lock())?;
    std::io::stdout().flush()?;
    Ok(())
}
