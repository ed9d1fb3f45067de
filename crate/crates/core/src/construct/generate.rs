use std::collections::HashSet;
use std::time::Instant;

use super::{construct_operator_features_until, ConstructConfig, Feature, FeatureKind, ThresholdVariant};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rules::{learn_rules_on, RuleParams};

/// Operator features, then rule and num-of-N features learned group by
/// group for `class`.
///
/// Positives covered by an accepted rule are withheld from later groups.
/// With `pci` set, groups stop being visited once that fraction of the
/// class is covered.
pub fn generate_features(
    ds: &Dataset,
    groups: &[Vec<usize>],
    class: usize,
    cfg: &ConstructConfig,
) -> Result<Vec<Feature>> {
    Ok(generate_features_until(ds, groups, class, cfg, None)?.0)
}

pub(crate) fn generate_features_until(
    ds: &Dataset,
    groups: &[Vec<usize>],
    class: usize,
    cfg: &ConstructConfig,
    deadline: Option<Instant>,
) -> Result<(Vec<Feature>, bool)> {
    cfg.validate()?;
    if class >= ds.n_classes() {
        return Err(Error::InvalidConfig(format!("class index {} out of range", class)));
    }
    let (mut features, cut) = construct_operator_features_until(ds, groups, cfg, deadline)?;
    if cut {
        return Ok((features, true));
    }
    if !(cfg.kinds.rule || cfg.kinds.threshold) {
        return Ok((features, false));
    }
    let mut seen: HashSet<String> = features.iter().map(|f| f.key().to_string()).collect();
    let params = RuleParams { cf_threshold: cfg.cf, max_conditions: cfg.max_rule_conditions, bins: cfg.rule_bins };
    let n_c = ds.labels().iter().filter(|&&l| l == class).count();
    let mut active: Vec<usize> = (0..ds.n_instances()).collect();
    let mut variants = vec![ThresholdVariant::NumOfN];
    variants.extend(cfg.extra_threshold_variants.iter().copied().filter(|v| *v != ThresholdVariant::NumOfN));

    for group in groups {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok((features, true));
        }
        let rules = learn_rules_on(ds, &mut active, group, class, &params)?;
        for rule in rules {
            let conditions = rule.conditions.clone();
            if cfg.kinds.rule {
                let f = Feature::new(FeatureKind::Rule(rule), group.clone());
                if seen.insert(f.key().to_string()) {
                    features.push(f);
                }
            }
            if cfg.kinds.threshold && conditions.len() >= 2 {
                for &variant in &variants {
                    let f =
                        Feature::new(FeatureKind::Threshold { variant, conditions: conditions.clone() }, group.clone());
                    if seen.insert(f.key().to_string()) {
                        features.push(f);
                    }
                }
            }
        }
        if let Some(pci) = cfg.pci {
            let remaining = active.iter().filter(|&&i| ds.labels()[i] == class).count();
            if (n_c - remaining) as f64 >= pci * n_c as f64 {
                break;
            }
        }
    }
    Ok((features, false))
}
