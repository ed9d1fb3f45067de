use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{cross_validate, ConstructionMode, EfcConfig};
use crate::error::Result;
use crate::model::ClassifierKind;
use crate::synth::{generate, SynthName, SyntheticSpec};
use crate::util::millis;

/// Grid of synthetic datasets, classifiers and construction modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub datasets: Vec<SynthName>,
    pub n: usize,
    pub classifiers: Vec<ClassifierKind>,
    pub modes: Vec<ConstructionMode>,
    pub folds: usize,
    pub seed: u64,
    pub efc: EfcConfig,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            datasets: SynthName::BENCHMARK.to_vec(),
            n: 1000,
            classifiers: vec![ClassifierKind::DecisionTree, ClassifierKind::NaiveBayes, ClassifierKind::RandomForest],
            modes: ConstructionMode::ALL.to_vec(),
            folds: 10,
            seed: 0,
            efc: EfcConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub classifier: String,
    pub mode: String,
    /// Mean accuracy in percent.
    pub accuracy: f64,
    pub std: f64,
    pub features: f64,
    pub construct_ms: f64,
    pub total_ms: f64,
}

/// Cross-validates every cell of the grid. When `out_dir` is given, writes
/// `report.csv` and a fixed-width `report.txt` there.
pub fn benchmark_report(spec: &BenchSpec, out_dir: Option<&Path>) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &name in &spec.datasets {
        let ds = generate(&SyntheticSpec::new(name, spec.n, spec.seed))?;
        for &classifier in &spec.classifiers {
            for &mode in &spec.modes {
                let t = Instant::now();
                let r = cross_validate(&ds, classifier, mode, spec.folds, spec.seed, &spec.efc)?;
                let row = BenchRow {
                    dataset: name.as_str().to_string(),
                    classifier: classifier.as_str().to_string(),
                    mode: mode.as_str().to_string(),
                    accuracy: 100.0 * r.mean_accuracy(),
                    std: 100.0 * r.std_accuracy(),
                    features: r.mean_feature_count(),
                    construct_ms: r.fold_construct_ms.iter().sum::<f64>() / r.fold_construct_ms.len() as f64,
                    total_ms: millis(t),
                };
                log::info!("{} {} {}: {:.2}", row.dataset, row.classifier, row.mode, row.accuracy);
                rows.push(row);
            }
        }
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("report.csv"))?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        fs::write(dir.join("report.txt"), render_table(&rows))?;
    }
    Ok(rows)
}

pub(crate) fn render_table(rows: &[BenchRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<20} {:<4} {:<6} {:>8} {:>7} {:>9} {:>12}",
        "dataset", "clf", "mode", "acc%", "std", "features", "construct_ms"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<20} {:<4} {:<6} {:>8.2} {:>7.2} {:>9.1} {:>12.1}",
            r.dataset, r.classifier, r.mode, r.accuracy, r.std, r.features, r.construct_ms
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::ExplainConfig;
    use crate::model::ForestParams;

    #[test]
    fn small_grid_writes_reports() {
        let dir = tempfile::tempdir().unwrap();
        let spec = BenchSpec {
            datasets: vec![SynthName::Toy],
            n: 200,
            classifiers: vec![ClassifierKind::NaiveBayes],
            modes: vec![ConstructionMode::Base, ConstructionMode::Log],
            folds: 3,
            seed: 1,
            efc: EfcConfig {
                forest: ForestParams { tree_count: 20, ..Default::default() },
                explain: ExplainConfig { samples_per_attribute: 20, max_to_explain: 60, ..Default::default() },
                ..Default::default()
            },
        };
        let rows = benchmark_report(&spec, Some(dir.path())).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].features, 0.0);
        let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(std::fs::read_to_string(dir.path().join("report.txt")).unwrap().contains("Toy") || csv.contains("toy"));
    }
}
