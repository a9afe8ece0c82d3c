//! Lookup evaluator over a CSV table of `genotype,<objective1>,<objective2>…`.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{evaluate_batch, EvalError, Evaluator};
use crate::objective::Objective;
use crate::space::Genotype;

#[derive(Debug, Clone)]
pub struct TabularOracle {
    objectives: Vec<Objective>,
    table: HashMap<Genotype, Vec<f64>>,
    order: Vec<Genotype>,
}

impl TabularOracle {
    pub fn from_rows(objectives: Vec<Objective>, rows: Vec<(Genotype, Vec<f64>)>) -> Result<Self, EvalError> {
        let mut table = HashMap::with_capacity(rows.len());
        let mut order = Vec::with_capacity(rows.len());
        for (i, (g, v)) in rows.into_iter().enumerate() {
            if v.len() != objectives.len() {
                return Err(EvalError::TableFormat {
                    path: "<rows>".into(),
                    line: i as u64 + 1,
                    message: format!("expected {} values, got {}", objectives.len(), v.len()),
                });
            }
            if table.insert(g.clone(), v).is_some() {
                return Err(EvalError::TableFormat {
                    path: "<rows>".into(),
                    line: i as u64 + 1,
                    message: format!("duplicate genotype `{g}`"),
                });
            }
            order.push(g);
        }
        Ok(Self { objectives, table, order })
    }

    /// Loads a table whose header must be `genotype` followed by the
    /// objective names in order.
    pub fn load(path: impl AsRef<Path>, objectives: Vec<Objective>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let format_err = |line: u64, message: String| EvalError::TableFormat { path: shown.clone(), line, message };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_path(path)
            .map_err(|e| EvalError::Io(format!("{shown}: {e}")))?;
        let header = reader.headers().map_err(|e| format_err(1, e.to_string()))?.clone();
        let expected: Vec<&str> = std::iter::once("genotype").chain(objectives.iter().map(|o| o.name.as_str())).collect();
        let found: Vec<&str> = header.iter().collect();
        if found != expected {
            return Err(format_err(1, format!("header {found:?} does not match {expected:?}")));
        }
        let mut rows = Vec::new();
        let mut seen = HashMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                format_err(line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != expected.len() {
                return Err(format_err(line, format!("expected {} fields, got {}", expected.len(), record.len())));
            }
            let genotype: Genotype = record[0].parse().map_err(|e: crate::space::SpaceError| format_err(line, e.to_string()))?;
            let values = record
                .iter()
                .skip(1)
                .map(|f| f.trim().parse::<f64>().map_err(|e| format_err(line, format!("value `{f}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(first) = seen.insert(genotype.clone(), line) {
                return Err(format_err(line, format!("genotype `{genotype}` already defined on line {first}")));
            }
            rows.push((genotype, values));
        }
        Self::from_rows(objectives, rows)
    }

    pub fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn rows(&self) -> Vec<(Genotype, Vec<f64>)> {
        self.order.iter().map(|g| (g.clone(), self.table[g].clone())).collect()
    }
}

impl Evaluator for TabularOracle {
    fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    fn evaluate(&self, genotype: &Genotype) -> Result<Vec<f64>, EvalError> {
        self.table.get(genotype).cloned().ok_or_else(|| EvalError::MissingKey(genotype.to_text()))
    }
}

/// Writes rows in the table format. Values use the shortest decimal form
/// that round-trips exactly.
pub fn write_table(path: impl AsRef<Path>, objectives: &[Objective], rows: &[(Genotype, Vec<f64>)]) -> Result<(), EvalError> {
    let io = |e: std::io::Error| EvalError::Io(e.to_string());
    let mut out = std::io::BufWriter::new(File::create(path.as_ref()).map_err(io)?);
    write!(out, "genotype").map_err(io)?;
    for o in objectives {
        write!(out, ",{}", o.name).map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    for (g, values) in rows {
        write!(out, "{g}").map_err(io)?;
        for v in values {
            write!(out, ",{v:?}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Evaluates `genotypes` and stores the results as a table.
pub fn dump_table<E: Evaluator + ?Sized>(path: impl AsRef<Path>, evaluator: &E, genotypes: &[Genotype]) -> Result<(), EvalError> {
    let values = evaluate_batch(evaluator, genotypes).map_err(|f| f.error)?;
    let rows: Vec<(Genotype, Vec<f64>)> = genotypes.iter().cloned().zip(values).collect();
    write_table(path, evaluator.objectives(), &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluators::SyntheticOracle;
    use crate::space::SpaceKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lookup_and_missing_key() {
        let objectives = SpaceKind::Transformer.objectives();
        let zero = Genotype::new(vec![0; 40]);
        let t = TabularOracle::from_rows(objectives, vec![(zero.clone(), vec![24.61, 40.0])]).unwrap();
        assert_eq!(t.evaluate(&zero).unwrap(), vec![24.61, 40.0]);
        let mut other = vec![0; 40];
        other[0] = 1;
        let other = Genotype::new(other);
        assert_eq!(t.evaluate(&other), Err(EvalError::MissingKey(other.to_text())));
    }

    #[test]
    fn dump_and_reload_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.csv");
        let oracle = SyntheticOracle::new(SpaceKind::Transformer).with_noise(0.3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gs = oracle.space().sample_distinct(&mut rng, 1000, &Default::default()).unwrap();
        dump_table(&path, &oracle, &gs).unwrap();
        let table = TabularOracle::load(&path, oracle.objectives().to_vec()).unwrap();
        assert_eq!(table.len(), 1000);
        for g in &gs {
            let a = oracle.evaluate(g).unwrap();
            let b = table.evaluate(g).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn malformed_files_report_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let objectives = vec![Objective::maximize("top1"), Objective::minimize("latency_ms")];
        let cases = [
            ("genotype,top1\n0-0,1\n", 1u64),
            ("genotype,top1,latency_ms\n0-0,1.0,2.0\n0-1,abc,2.0\n", 3),
            ("genotype,top1,latency_ms\n0-0,1.0,2.0\n0-x,1.0,2.0\n", 3),
            ("genotype,top1,latency_ms\n0-0,1.0,2.0\n0-1,1.0\n", 3),
            ("genotype,top1,latency_ms\n0-0,1.0,2.0\n0-1,1.0,2.0\n0-0,3.0,4.0\n", 4),
        ];
        for (i, (text, line)) in cases.iter().enumerate() {
            let path = dir.path().join(format!("bad{i}.csv"));
            std::fs::write(&path, text).unwrap();
            match TabularOracle::load(&path, objectives.clone()) {
                Err(EvalError::TableFormat { line: l, .. }) => assert_eq!(l, *line, "case {i}"),
                other => panic!("case {i}: {other:?}"),
            }
        }
    }
}
