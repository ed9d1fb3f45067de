//! End-to-end runs: explanation-driven construction, the exhaustive
//! baseline, cross-validation and benchmark reports.

mod bench;
mod cv;

pub use self::bench::{benchmark_report, BenchRow, BenchSpec};
pub use self::cv::{cross_validate, fold_indices, ConstructionMode, CvResult};

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::construct::{generate_features_until, ConstructConfig, Feature};
use crate::data::{augment, Dataset};
use crate::error::{Error, Result};
use crate::explain::{get_explanations, select_explanation_instances, ExplainConfig, ExplanationMatrix};
use crate::groups::{collect_groups, thresholds, CandidateGroup};
use crate::mdl::{score_and_filter, ScoredFeature};
use crate::model::{train_random_forest, ForestParams};
use crate::util::{millis, mix_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfcConfig {
    pub thr_l: f64,
    pub thr_u: f64,
    pub step: f64,
    pub noise_thr: f64,
    /// Features scoring below this are discarded.
    pub min_score: f64,
    pub construct: ConstructConfig,
    /// Its seed is replaced by one derived from `seed`.
    pub explain: ExplainConfig,
    /// Its seed is replaced by one derived from `seed`.
    pub forest: ForestParams,
    pub seed: u64,
    /// Use these groups instead of mining them from explanations.
    pub groups_override: Option<Vec<Vec<usize>>>,
    /// Wall-clock limit for construction; `None` for no limit.
    pub time_budget: Option<Duration>,
}

impl Default for EfcConfig {
    fn default() -> Self {
        EfcConfig {
            thr_l: 0.1,
            thr_u: 0.8,
            step: 0.1,
            noise_thr: 0.01,
            min_score: 0.0,
            construct: ConstructConfig::default(),
            explain: ExplainConfig::default(),
            forest: ForestParams::default(),
            seed: 0,
            groups_override: None,
            time_budget: None,
        }
    }
}

impl EfcConfig {
    pub fn validate(&self) -> Result<()> {
        thresholds(self.thr_l, self.thr_u, self.step)?;
        if !(0.0..1.0).contains(&self.noise_thr) {
            return Err(Error::InvalidConfig(format!("noise_thr must be in [0, 1), got {}", self.noise_thr)));
        }
        if !self.min_score.is_finite() {
            return Err(Error::InvalidConfig("min_score must be finite".into()));
        }
        self.construct.validate()?;
        self.explain.validate()?;
        if self.forest.tree_count == 0 {
            return Err(Error::InvalidConfig("tree_count must be at least 1".into()));
        }
        Ok(())
    }

    fn forest_params(&self) -> ForestParams {
        ForestParams { seed: mix_seed(self.seed, 1), ..self.forest.clone() }
    }

    fn explain_config(&self) -> ExplainConfig {
        ExplainConfig { seed: mix_seed(self.seed, 2), ..self.explain.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    /// No candidate group survived; the dataset is returned unchanged.
    NoGroups,
    /// The time budget ran out during construction.
    TimedOut,
}

/// Wall-clock time per phase, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub train_ms: f64,
    pub explain_ms: f64,
    pub groups_ms: f64,
    pub construct_ms: f64,
    pub evaluate_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfcResult {
    pub status: RunStatus,
    /// Class whose explanations were mined and whose rules were learned.
    pub class_index: usize,
    pub explained_instances: usize,
    pub groups: Vec<CandidateGroup>,
    /// Features enumerated before scoring.
    pub candidates: Vec<Feature>,
    /// Kept features, best first.
    pub features: Vec<ScoredFeature>,
    pub enriched: Dataset,
    pub timings: Timings,
    #[serde(skip)]
    pub explanations: Option<ExplanationMatrix>,
}

impl EfcResult {
    /// SHA-256 over everything except timings, as lowercase hex.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Stable<'a> {
            status: RunStatus,
            class_index: usize,
            groups: &'a [CandidateGroup],
            candidates: Vec<&'a str>,
            features: Vec<(&'a str, u64)>,
            enriched: &'a Dataset,
        }
        let stable = Stable {
            status: self.status,
            class_index: self.class_index,
            groups: &self.groups,
            candidates: self.candidates.iter().map(|f| f.key()).collect(),
            features: self.features.iter().map(|s| (s.feature.key(), s.score.to_bits())).collect(),
            enriched: &self.enriched,
        };
        let bytes = serde_json::to_vec(&stable).expect("serializable");
        hex(&Sha256::digest(&bytes))
    }

    pub fn kept_features(&self) -> Vec<Feature> {
        self.features.iter().map(|s| s.feature.clone()).collect()
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{:02x}", b)).collect()
}

/// Explanation-driven feature construction on `ds`.
///
/// Trains the explanation forest, explains instances of the selected class,
/// mines candidate groups over the threshold range, constructs features
/// inside the groups, scores them and appends the survivors.
pub fn run_efc(ds: &Dataset, cfg: &EfcConfig) -> Result<EfcResult> {
    cfg.validate()?;
    let start = Instant::now();
    if ds.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::SingleClass);
    }
    let mut timings = Timings::default();
    let explain_cfg = cfg.explain_config();
    let (class, instances) = select_explanation_instances(ds, &explain_cfg)?;
    log::info!("explaining class {} with {} instances", ds.class_attribute().values()[class], instances.len());

    let (groups, explanations) = match &cfg.groups_override {
        Some(over) => {
            let groups = over
                .iter()
                .enumerate()
                .map(|(rank, g)| {
                    let mut attrs = g.clone();
                    attrs.sort_unstable();
                    attrs.dedup();
                    CandidateGroup { attrs, support: 0, first_seen_rank: rank, threshold: 0.0 }
                })
                .collect::<Vec<_>>();
            (groups, None)
        }
        None => {
            let t = Instant::now();
            let model = train_random_forest(ds, &cfg.forest_params())?;
            timings.train_ms = millis(t);
            let t = Instant::now();
            let e = get_explanations(ds, &model, class, &instances, &explain_cfg)?;
            timings.explain_ms = millis(t);
            let t = Instant::now();
            let groups = collect_groups(&e, cfg.thr_l, cfg.thr_u, cfg.step, cfg.noise_thr)?;
            timings.groups_ms = millis(t);
            (groups, Some(e))
        }
    };
    log::info!("{} candidate groups", groups.len());

    if groups.is_empty() {
        timings.total_ms = millis(start);
        return Ok(EfcResult {
            status: RunStatus::NoGroups,
            class_index: class,
            explained_instances: instances.len(),
            groups,
            candidates: Vec::new(),
            features: Vec::new(),
            enriched: ds.clone(),
            timings,
            explanations,
        });
    }

    let deadline = cfg.time_budget.map(|b| start + b);
    let t = Instant::now();
    let attr_groups: Vec<Vec<usize>> = groups.iter().map(|g| g.attrs.clone()).collect();
    let (candidates, cut) = generate_features_until(ds, &attr_groups, class, &cfg.construct, deadline)?;
    timings.construct_ms = millis(t);
    log::info!("{} candidate features", candidates.len());
    if cut {
        log::warn!("time budget exhausted after {} candidates", candidates.len());
        timings.total_ms = millis(start);
        return Ok(EfcResult {
            status: RunStatus::TimedOut,
            class_index: class,
            explained_instances: instances.len(),
            groups,
            candidates,
            features: Vec::new(),
            enriched: ds.clone(),
            timings,
            explanations,
        });
    }

    let t = Instant::now();
    let features = score_and_filter(&candidates, ds, cfg.min_score, cfg.construct.bins)?;
    let kept: Vec<Feature> = features.iter().map(|s| s.feature.clone()).collect();
    let enriched = augment(ds, &kept)?;
    timings.evaluate_ms = millis(t);
    timings.total_ms = millis(start);
    Ok(EfcResult {
        status: RunStatus::Completed,
        class_index: class,
        explained_instances: instances.len(),
        groups,
        candidates,
        features,
        enriched,
        timings,
        explanations,
    })
}

/// The same construction over a single group holding every attribute, with
/// no explanation step.
pub fn run_exhaustive(ds: &Dataset, cfg: &EfcConfig) -> Result<EfcResult> {
    let cfg = EfcConfig { groups_override: Some(vec![(0..ds.n_attributes()).collect()]), ..cfg.clone() };
    run_efc(ds, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::FeatureKinds;
    use crate::data::Attribute;
    use crate::synth::{generate, SynthName, SyntheticSpec};

    fn quick() -> EfcConfig {
        EfcConfig {
            forest: ForestParams { tree_count: 30, ..Default::default() },
            explain: ExplainConfig { samples_per_attribute: 30, max_to_explain: 150, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn deterministic() {
        let ds = generate(&SyntheticSpec::new(SynthName::Toy, 600, 5)).unwrap();
        let a = run_efc(&ds, &quick()).unwrap();
        let b = run_efc(&ds, &quick()).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.enriched.n_attributes(), ds.n_attributes() + a.features.len());
        assert_eq!(a.status, RunStatus::Completed);
    }

    #[test]
    fn constant_attributes_pass_through() {
        let n = 40;
        let ds = Dataset::new(
            "flat",
            vec![Attribute::numeric("x", 0), Attribute::nominal("b", 1, vec!["u".into()])],
            Attribute::nominal("c", 2, vec!["0".into(), "1".into()]),
            (0..n).flat_map(|_| [1.0, 0.0]).collect(),
            (0..n).map(|i| i % 2).collect(),
        )
        .unwrap();
        let r = run_efc(&ds, &quick()).unwrap();
        assert_eq!(r.status, RunStatus::NoGroups);
        assert!(r.features.is_empty());
        assert_eq!(r.enriched, ds);
    }

    #[test]
    fn exhaustive_matches_all_attribute_group() {
        let ds = generate(&SyntheticSpec::new(SynthName::Concept, 300, 2)).unwrap();
        let cfg = quick();
        let ex = run_exhaustive(&ds, &cfg).unwrap();
        let over = run_efc(&ds, &EfcConfig { groups_override: Some(vec![(0..5).collect()]), ..cfg }).unwrap();
        assert_eq!(ex.fingerprint(), over.fingerprint());
    }

    #[test]
    fn zero_budget_times_out() {
        let ds = generate(&SyntheticSpec::new(SynthName::Toy, 300, 2)).unwrap();
        let cfg = EfcConfig { time_budget: Some(Duration::ZERO), ..quick() };
        let r = run_exhaustive(&ds, &cfg).unwrap();
        assert_eq!(r.status, RunStatus::TimedOut);
        assert_eq!(r.enriched, ds);
    }

    #[test]
    fn invalid_config() {
        let ds = generate(&SyntheticSpec::new(SynthName::Toy, 100, 2)).unwrap();
        let bad = EfcConfig { thr_l: 0.9, thr_u: 0.5, ..quick() };
        assert!(matches!(run_efc(&ds, &bad), Err(Error::InvalidConfig(_))));
        let none = EfcConfig {
            construct: ConstructConfig { kinds: FeatureKinds::NONE, ..Default::default() },
            groups_override: Some(vec![vec![0, 1]]),
            ..quick()
        };
        assert!(run_efc(&ds, &none).unwrap().features.is_empty());
    }
}
