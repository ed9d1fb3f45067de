use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{hex, run_efc, EfcConfig};
use crate::construct::{ConstructConfig, Feature, FeatureKinds};
use crate::data::{augment, Dataset};
use crate::error::{Error, Result};
use crate::model::{accuracy, ClassifierKind};
use crate::util::{millis, mix_seed, rng_for};

/// Which features are added to each training fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstructionMode {
    /// Original attributes only.
    Base,
    Log,
    Rel,
    Cart,
    /// Rules and num-of-N features.
    DrThr,
    All,
    /// All kinds, with the score threshold chosen on a hold-out split.
    Fs,
}

impl ConstructionMode {
    pub const ALL: [ConstructionMode; 7] = [
        ConstructionMode::Base,
        ConstructionMode::Log,
        ConstructionMode::Rel,
        ConstructionMode::Cart,
        ConstructionMode::DrThr,
        ConstructionMode::All,
        ConstructionMode::Fs,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConstructionMode::Base => "base",
            ConstructionMode::Log => "log",
            ConstructionMode::Rel => "rel",
            ConstructionMode::Cart => "cart",
            ConstructionMode::DrThr => "drthr",
            ConstructionMode::All => "all",
            ConstructionMode::Fs => "fs",
        }
    }

    fn kinds(&self) -> FeatureKinds {
        let none = FeatureKinds::NONE;
        match self {
            ConstructionMode::Base => none,
            ConstructionMode::Log => FeatureKinds { logical: true, ..none },
            ConstructionMode::Rel => FeatureKinds { relational: true, ..none },
            ConstructionMode::Cart => FeatureKinds { cartesian: true, ..none },
            ConstructionMode::DrThr => FeatureKinds { rule: true, threshold: true, ..none },
            ConstructionMode::All | ConstructionMode::Fs => FeatureKinds::default(),
        }
    }
}

impl fmt::Display for ConstructionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstructionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConstructionMode::ALL
            .iter()
            .copied()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown construction mode `{}`", s)))
    }
}

/// Score thresholds tried by feature selection.
pub const FS_THRESHOLDS: [f64; 3] = [0.0, 0.25, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub classifier: ClassifierKind,
    pub mode: ConstructionMode,
    pub fold_accuracies: Vec<f64>,
    pub fold_feature_counts: Vec<usize>,
    /// SHA-256 of each fold's constructed feature keys.
    pub fold_feature_hashes: Vec<String>,
    /// Construction time per fold, in milliseconds.
    pub fold_construct_ms: Vec<f64>,
    pub stratified: bool,
}

impl CvResult {
    pub fn mean_accuracy(&self) -> f64 {
        self.fold_accuracies.iter().sum::<f64>() / self.fold_accuracies.len() as f64
    }

    /// Sample standard deviation of the fold accuracies.
    pub fn std_accuracy(&self) -> f64 {
        let k = self.fold_accuracies.len();
        if k < 2 {
            return 0.0;
        }
        let m = self.mean_accuracy();
        (self.fold_accuracies.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
    }

    pub fn mean_feature_count(&self) -> f64 {
        self.fold_feature_counts.iter().sum::<usize>() as f64 / self.fold_feature_counts.len() as f64
    }
}

/// Test-row indices of each fold and whether the split is stratified.
///
/// Rows of each class are shuffled and dealt round-robin. If some class has
/// fewer rows than folds, all rows are shuffled and cut into contiguous
/// folds instead.
pub fn fold_indices(ds: &Dataset, folds: usize, seed: u64) -> Result<(Vec<Vec<usize>>, bool)> {
    let n = ds.n_instances();
    if folds < 2 || folds > n {
        return Err(Error::InvalidConfig(format!("need 2 <= folds <= {}, got {}", n, folds)));
    }
    let mut rng = rng_for(seed, u64::MAX - 7);
    let counts = ds.class_counts();
    let stratified = counts.iter().all(|&c| c == 0 || c >= folds);
    let mut out = vec![Vec::new(); folds];
    if stratified {
        let mut next = 0;
        for class in 0..ds.n_classes() {
            let mut rows: Vec<usize> = (0..n).filter(|&i| ds.labels()[i] == class).collect();
            rows.shuffle(&mut rng);
            for i in rows {
                out[next].push(i);
                next = (next + 1) % folds;
            }
        }
    } else {
        log::warn!("a class has fewer than {} instances; folds are not stratified", folds);
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng);
        for (k, i) in rows.into_iter().enumerate() {
            out[k * folds / n].push(i);
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok((out, stratified))
}

fn feature_hash(features: &[Feature]) -> String {
    let mut h = Sha256::new();
    for f in features {
        h.update(f.key().as_bytes());
        h.update([0u8]);
    }
    hex(&h.finalize())
}

fn efc_for(mode: ConstructionMode, base: &EfcConfig, seed: u64) -> EfcConfig {
    EfcConfig { construct: ConstructConfig { kinds: mode.kinds(), ..base.construct.clone() }, seed, ..base.clone() }
}

fn construct(
    train: &Dataset,
    mode: ConstructionMode,
    classifier: ClassifierKind,
    efc: &EfcConfig,
    seed: u64,
) -> Result<Vec<Feature>> {
    match mode {
        ConstructionMode::Base => Ok(Vec::new()),
        ConstructionMode::Fs => {
            let cfg = efc_for(mode, efc, seed);
            let threshold = select_threshold(train, classifier, &cfg, seed)?;
            let r = run_efc(train, &cfg)?;
            Ok(r.features.into_iter().filter(|s| s.score >= threshold).map(|s| s.feature).collect())
        }
        _ => Ok(run_efc(train, &efc_for(mode, efc, seed))?.kept_features()),
    }
}

/// Picks the score threshold that maximises hold-out accuracy on a
/// stratified 75/25 split of `train`; ties go to the lower threshold.
fn select_threshold(train: &Dataset, classifier: ClassifierKind, cfg: &EfcConfig, seed: u64) -> Result<f64> {
    let (folds, _) = fold_indices(train, 4, mix_seed(seed, 11))?;
    let hold: Vec<usize> = folds[0].clone();
    let fit: Vec<usize> = folds[1..].concat();
    let (fit, hold) = (train.subset(&fit), train.subset(&hold));
    if fit.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Ok(FS_THRESHOLDS[0]);
    }
    let r = run_efc(&fit, cfg)?;
    let mut best = (f64::NEG_INFINITY, FS_THRESHOLDS[0]);
    for &t in &FS_THRESHOLDS {
        let kept: Vec<Feature> = r.features.iter().filter(|s| s.score >= t).map(|s| s.feature.clone()).collect();
        let model = classifier.train(&augment(&fit, &kept)?, seed)?;
        let acc = accuracy(&model, &augment(&hold, &kept)?)?;
        if acc > best.0 {
            best = (acc, t);
        }
    }
    log::debug!("selected score threshold {} ({:.4})", best.1, best.0);
    Ok(best.1)
}

/// k-fold cross-validation of `classifier` on `ds`, with features built by
/// `mode` on each training fold only and then applied to its test fold.
pub fn cross_validate(
    ds: &Dataset,
    classifier: ClassifierKind,
    mode: ConstructionMode,
    folds: usize,
    seed: u64,
    efc: &EfcConfig,
) -> Result<CvResult> {
    efc.validate()?;
    let (test_sets, stratified) = fold_indices(ds, folds, seed)?;
    let per_fold: Vec<(f64, usize, String, f64)> = test_sets
        .par_iter()
        .enumerate()
        .map(|(k, test_rows)| {
            let fold_seed = mix_seed(seed, k as u64);
            let mut in_test = vec![false; ds.n_instances()];
            for &i in test_rows {
                in_test[i] = true;
            }
            let train_rows: Vec<usize> = (0..ds.n_instances()).filter(|&i| !in_test[i]).collect();
            let train = ds.subset(&train_rows);
            let test = ds.subset(test_rows);
            let t = Instant::now();
            let features = construct(&train, mode, classifier, efc, fold_seed)?;
            let construct_ms = millis(t);
            let model = classifier.train(&augment(&train, &features)?, fold_seed)?;
            let acc = accuracy(&model, &augment(&test, &features)?)?;
            log::info!("fold {}: {} features, accuracy {:.4}", k, features.len(), acc);
            Ok((acc, features.len(), feature_hash(&features), construct_ms))
        })
        .collect::<Result<_>>()?;
    Ok(CvResult {
        classifier,
        mode,
        fold_accuracies: per_fold.iter().map(|p| p.0).collect(),
        fold_feature_counts: per_fold.iter().map(|p| p.1).collect(),
        fold_feature_hashes: per_fold.iter().map(|p| p.2.clone()).collect(),
        fold_construct_ms: per_fold.iter().map(|p| p.3).collect(),
        stratified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthName, SyntheticSpec};

    #[test]
    fn folds_partition_rows() {
        let ds = generate(&SyntheticSpec::new(SynthName::Toy, 203, 1)).unwrap();
        let (f, strat) = fold_indices(&ds, 10, 4).unwrap();
        assert!(strat);
        let mut all: Vec<usize> = f.concat();
        all.sort_unstable();
        assert_eq!(all, (0..203).collect::<Vec<_>>());
        let sizes: Vec<usize> = f.iter().map(|x| x.len()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let c1 = ds.class_counts()[1];
        for fold in &f {
            let k = fold.iter().filter(|&&i| ds.labels()[i] == 1).count();
            assert!((k as f64 - c1 as f64 / 10.0).abs() <= 1.0);
        }
    }

    #[test]
    fn tiny_class_falls_back() {
        let ds = generate(&SyntheticSpec::new(SynthName::Toy, 40, 1)).unwrap();
        let mut labels = vec![0; 40];
        labels[3] = 1;
        let ds = ds.with_labels(labels).unwrap();
        let (f, strat) = fold_indices(&ds, 5, 1).unwrap();
        assert!(!strat);
        assert_eq!(f.iter().map(|x| x.len()).sum::<usize>(), 40);
        assert!(fold_indices(&ds, 1, 1).is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for m in ConstructionMode::ALL {
            assert_eq!(m.as_str().parse::<ConstructionMode>().unwrap(), m);
        }
        assert!("nope".parse::<ConstructionMode>().is_err());
    }
}
