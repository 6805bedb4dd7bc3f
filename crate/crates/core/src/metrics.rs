//! Classification accuracy (CA_t, CA_s), verification pairs and ROC AUC,
//! and the utility and privacy metrics of a trained closed environment.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::certify::TrainedEnvironment;
use crate::data::{LabeledDataset, Target};
use crate::error::{Error, Result};
use crate::predictors::{cosine_score, AlgorithmId, Classifier};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityMode {
    /// Best CA_t over the trainable algorithms.
    #[serde(alias = "max-accuracy")]
    MaxAccuracy,
    /// ROC AUC of the cosine verifier on test pairs.
    #[serde(alias = "verification-auc")]
    VerificationAuc,
}

impl std::str::FromStr for UtilityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-accuracy" | "max_accuracy" => Ok(UtilityMode::MaxAccuracy),
            "verification-auc" | "verification_auc" => Ok(UtilityMode::VerificationAuc),
            other => Err(Error::Config(format!("unknown utility mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Utility,
    Sensitive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReportEntry {
    pub algorithm: AlgorithmId,
    pub task: Task,
    pub value: f64,
}

/// Mean 0-1 accuracy of `model` on `ds` against `target`.
pub fn classification_accuracy<C: Classifier + ?Sized>(
    model: &C,
    ds: &LabeledDataset,
    target: Target,
) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Metric("accuracy of an empty dataset".into()));
    }
    let mut hits = 0usize;
    for (i, r) in ds.records().iter().enumerate() {
        let label = r.binary_label(target).map_err(|e| Error::Record {
            index: i,
            source: Box::new(e),
        })?;
        if model.predict(&r.features)? == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / ds.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationPair {
    pub i: usize,
    pub j: usize,
    pub same_identity: bool,
    pub score: f64,
}

/// Every within-identity pair plus a seeded sample of cross-identity pairs,
/// `negatives_per_positive` times as many (capped by availability), scored
/// with the cosine verifier on `ds`'s features.
///
/// The pair list depends only on the labels and the seed, so a sanitized
/// copy of `ds` yields the same pairs.
pub fn build_verification_pairs(
    ds: &LabeledDataset,
    negatives_per_positive: usize,
    seed: u64,
) -> Result<Vec<VerificationPair>> {
    let ids = ds
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.utility_label
                .ok_or_else(|| Error::Pairing(format!("record {i} has no identity label")))
        })
        .collect::<Result<Vec<i64>>>()?;
    let distinct: HashSet<i64> = ids.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(Error::Pairing(
            "verification pairs need at least two identities".into(),
        ));
    }
    let n = ids.len();
    let mut positives = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if ids[i] == ids[j] {
                positives.push((i, j));
            }
        }
    }
    let available = n * (n - 1) / 2 - positives.len();
    let wanted = (negatives_per_positive.saturating_mul(positives.len())).min(available);
    let mut rng = seed::stream(seed, seed::TAG_PAIRS);
    let mut negatives: Vec<(usize, usize)> = if 2 * wanted >= available {
        let mut all = Vec::with_capacity(available);
        for i in 0..n {
            for j in i + 1..n {
                if ids[i] != ids[j] {
                    all.push((i, j));
                }
            }
        }
        all.shuffle(&mut rng);
        all.truncate(wanted);
        all
    } else {
        let mut seen = HashSet::with_capacity(wanted);
        let mut out = Vec::with_capacity(wanted);
        while out.len() < wanted {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if ids[a] == ids[b] {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key) {
                out.push(key);
            }
        }
        out
    };
    negatives.sort_unstable();

    let pair = |(i, j): (usize, usize), same: bool| -> Result<VerificationPair> {
        Ok(VerificationPair {
            i,
            j,
            same_identity: same,
            score: cosine_score(ds.features(i), ds.features(j))?,
        })
    };
    positives
        .into_iter()
        .map(|p| pair(p, true))
        .chain(negatives.into_iter().map(|p| pair(p, false)))
        .collect()
}

/// Mann-Whitney AUC: the probability that a random positive outscores a
/// random negative, ties counted one half.
pub fn roc_auc(pairs: &[VerificationPair]) -> Result<f64> {
    let (pos, neg): (Vec<&VerificationPair>, Vec<&VerificationPair>) =
        pairs.iter().partition(|p| p.same_identity);
    let pos: Vec<f64> = pos.iter().map(|p| p.score).collect();
    let neg: Vec<f64> = neg.iter().map(|p| p.score).collect();
    roc_auc_scores(&pos, &neg)
}

/// [`roc_auc`] on raw score lists.
///
/// Uses mid-ranks over the pooled sorted scores. The statistic is kept as an
/// integer count of half-wins, so the result equals the brute-force
/// pair count exactly.
pub fn roc_auc_scores(positive: &[f64], negative: &[f64]) -> Result<f64> {
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::Metric(
            "ROC AUC needs at least one positive and one negative".into(),
        ));
    }
    if positive.iter().chain(negative).any(|s| !s.is_finite()) {
        return Err(Error::Metric("ROC AUC scores must be finite".into()));
    }
    let mut pooled: Vec<(f64, bool)> = positive
        .iter()
        .map(|&s| (s, true))
        .chain(negative.iter().map(|&s| (s, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    // twice the rank sum of the positives, with tied blocks sharing the
    // mean of their 1-based ranks
    let mut twice_rank_sum: u128 = 0;
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start + 1;
        // total_cmp separates -0.0 and 0.0; ties are numeric equality
        while end < pooled.len() && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        let twice_mid_rank = (start + 1 + end) as u128;
        let pos_in_block = pooled[start..end].iter().filter(|p| p.1).count() as u128;
        twice_rank_sum += twice_mid_rank * pos_in_block;
        start = end;
    }
    let p = positive.len() as u128;
    let n = negative.len() as u128;
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * p * n) as f64)
}

/// `1 - 2 |CA_s - 0.5|`.
pub fn privacy_term(sensitive_accuracy: f64) -> f64 {
    1.0 - 2.0 * (sensitive_accuracy - 0.5).abs()
}

/// Max CA_t over the given algorithms.
pub fn utility_from_accuracies(accuracies: &[(AlgorithmId, f64)]) -> Result<f64> {
    accuracies
        .iter()
        .map(|(_, a)| *a)
        .reduce(f64::max)
        .ok_or_else(|| Error::Metric("utility over an empty algorithm set".into()))
}

/// Min privacy term over the trainable algorithms; VA entries are ignored.
pub fn privacy_from_accuracies(sensitive_accuracies: &[(AlgorithmId, f64)]) -> Result<f64> {
    sensitive_accuracies
        .iter()
        .filter(|(a, _)| a.is_trainable())
        .map(|(_, ca)| privacy_term(*ca))
        .reduce(f64::min)
        .ok_or_else(|| Error::Metric("privacy needs at least one trainable classifier".into()))
}

/// The privacy formula presumes balanced sensitive priors; allow a
/// difference of one record for odd sizes.
pub fn check_sensitive_balance(ds: &LabeledDataset) -> Result<()> {
    let (p, n) = ds.sensitive_counts();
    if p + n != ds.len() {
        return Err(Error::Precondition("sensitive labels are missing".into()));
    }
    if p.abs_diff(n) > 1 {
        return Err(Error::Precondition(format!(
            "sensitive labels are imbalanced ({p} positive vs {n} negative)"
        )));
    }
    Ok(())
}

/// CA on `ds` for every trained classifier of `target`, sorted by algorithm.
pub fn accuracies(
    env: &TrainedEnvironment,
    ds: &LabeledDataset,
    target: Target,
) -> Result<Vec<(AlgorithmId, f64)>> {
    env.classifiers(target)
        .map(|(id, model)| Ok((id, classification_accuracy(model, ds, target)?)))
        .collect()
}

/// VA's AUC on the verification pairs of `ds`.
pub fn verification_auc(env: &TrainedEnvironment, ds: &LabeledDataset) -> Result<f64> {
    let pairs = build_verification_pairs(ds, env.negatives_per_positive, env.pair_seed)?;
    roc_auc(&pairs)
}

/// Utility `u` on the sanitized test set.
pub fn utility_metric(
    env: &TrainedEnvironment,
    sanitized_test: &LabeledDataset,
    mode: UtilityMode,
) -> Result<f64> {
    if env.algorithms.is_empty() {
        return Err(Error::Metric("empty algorithm set".into()));
    }
    match mode {
        UtilityMode::MaxAccuracy => {
            utility_from_accuracies(&accuracies(env, sanitized_test, Target::Utility)?)
        }
        UtilityMode::VerificationAuc => verification_auc(env, sanitized_test),
    }
}

/// Privacy `p` on the sanitized test set.
pub fn privacy_metric(env: &TrainedEnvironment, sanitized_test: &LabeledDataset) -> Result<f64> {
    check_sensitive_balance(sanitized_test)?;
    privacy_from_accuracies(&accuracies(env, sanitized_test, Target::Sensitive)?)
}
