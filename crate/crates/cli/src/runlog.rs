//! Per-trial CSV logs.
//!
//! Header: `trial,algorithm,step,evaluation,space,genotype,<objectives…>,cumulative_hv`.
//! Floats are written in shortest round-trip form, so re-parsing is exact.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use linas_core::metrics::cumulative_hypervolume;
use linas_core::{Genotype, SearchHistory, SpaceKind};

const FIXED_LEADING: [&str; 6] = ["trial", "algorithm", "step", "evaluation", "space", "genotype"];

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub evaluation: usize,
    pub genotype: Genotype,
    pub values: Vec<f64>,
    pub cumulative_hv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub trial: u64,
    pub algorithm: String,
    pub space: String,
    pub objective_names: Vec<String>,
    pub rows: Vec<LogRow>,
}

impl TrialLog {
    pub fn from_history(trial: u64, history: &SearchHistory, reference: &[f64]) -> Result<Self> {
        let hv = cumulative_hypervolume(history, reference)?;
        let rows = history
            .records
            .iter()
            .zip(hv)
            .map(|(r, h)| LogRow {
                step: r.step,
                evaluation: r.evaluation,
                genotype: r.genotype.clone(),
                values: r.values.clone(),
                cumulative_hv: h,
            })
            .collect();
        Ok(Self {
            trial,
            algorithm: history.algorithm.clone(),
            space: history.space_id.clone(),
            objective_names: history.objectives.iter().map(|o| o.name.clone()).collect(),
            rows,
        })
    }

    pub fn space_kind(&self) -> Result<SpaceKind> {
        self.space.parse().map_err(|e| anyhow::anyhow!("{e}"))
    }

    /// Rebuilds the search history, taking objective directions from the
    /// space definition.
    pub fn history(&self) -> Result<SearchHistory> {
        let kind = self.space_kind()?;
        let objectives = kind.objectives();
        let expected: Vec<&str> = objectives.iter().map(|o| o.name.as_str()).collect();
        ensure!(
            self.objective_names == expected,
            "log objectives {:?} do not match space `{}` ({:?})",
            self.objective_names,
            self.space,
            expected
        );
        let mut h = SearchHistory::new(self.algorithm.clone(), self.space.clone(), objectives);
        for r in &self.rows {
            h.push(r.step, r.genotype.clone(), r.values.clone());
        }
        Ok(h)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        let mut header: Vec<String> = FIXED_LEADING.iter().map(|s| s.to_string()).collect();
        header.extend(self.objective_names.iter().cloned());
        header.push("cumulative_hv".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                self.trial.to_string(),
                self.algorithm.clone(),
                r.step.to_string(),
                r.evaluation.to_string(),
                self.space.clone(),
                r.genotype.to_text(),
            ];
            rec.extend(r.values.iter().map(|v| format!("{v:?}")));
            rec.push(format!("{:?}", r.cumulative_hv));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        ensure!(
            header.len() > FIXED_LEADING.len() + 1
                && header[..FIXED_LEADING.len()] == FIXED_LEADING
                && header.last().map(String::as_str) == Some("cumulative_hv"),
            "{}: not a run log (header {:?})",
            path.display(),
            header
        );
        let objective_names = header[FIXED_LEADING.len()..header.len() - 1].to_vec();
        let mut log: Option<TrialLog> = None;
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.with_context(|| format!("{}:{line}", path.display()))?;
            let field = |k: usize| rec.get(k).unwrap_or("");
            let parse_f = |k: usize| -> Result<f64> {
                field(k).parse::<f64>().with_context(|| format!("{}:{line}: bad number `{}`", path.display(), field(k)))
            };
            let trial: u64 = field(0).parse().with_context(|| format!("{}:{line}: bad trial", path.display()))?;
            let log = log.get_or_insert_with(|| TrialLog {
                trial,
                algorithm: field(1).to_string(),
                space: field(4).to_string(),
                objective_names: objective_names.clone(),
                rows: Vec::new(),
            });
            if trial != log.trial || field(1) != log.algorithm || field(4) != log.space {
                bail!("{}:{line}: one file must hold a single trial of one algorithm and space", path.display());
            }
            let evaluation: usize = field(3).parse().with_context(|| format!("{}:{line}: bad evaluation", path.display()))?;
            if evaluation != log.rows.len() + 1 {
                bail!("{}:{line}: evaluation index {evaluation} is not dense and ascending", path.display());
            }
            let values = (0..objective_names.len()).map(|k| parse_f(FIXED_LEADING.len() + k)).collect::<Result<Vec<_>>>()?;
            log.rows.push(LogRow {
                step: field(2).parse().with_context(|| format!("{}:{line}: bad step", path.display()))?,
                evaluation,
                genotype: field(5).parse().with_context(|| format!("{}:{line}: bad genotype", path.display()))?,
                values,
                cumulative_hv: parse_f(header.len() - 1)?,
            });
        }
        log.with_context(|| format!("{}: log has no rows", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use linas_core::evaluators::SyntheticOracle;
    use linas_core::moea::random_search;

    #[test]
    fn round_trip_is_exact() {
        let kind = SpaceKind::Transformer;
        let h = random_search(&kind.space(), &SyntheticOracle::new(kind).with_noise(0.3, 2), 120, 4).unwrap();
        let log = TrialLog::from_history(4, &h, &kind.reference_point()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        log.write(&path).unwrap();
        let back = TrialLog::read(&path).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.history().unwrap(), h);
    }

    #[test]
    fn rejects_gaps_and_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "trial,algorithm,step,evaluation,space,genotype,bleu,latency_ms,cumulative_hv\n0,random,0,2,transformer,0-0,1.0,2.0,0.0\n").unwrap();
        assert!(format!("{:#}", TrialLog::read(&path).unwrap_err()).contains("dense"));
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(format!("{:#}", TrialLog::read(&path).unwrap_err()).contains("not a run log"));
    }
}
