//! The closed environment: training the algorithm set, applying a
//! sanitizer and producing the certification report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{split_indices, LabeledDataset, Target};
use crate::error::{Error, Result};
use crate::metrics::{
    accuracies, check_sensitive_balance, privacy_from_accuracies, utility_from_accuracies,
    verification_auc, UtilityMode,
};
use crate::predictors::{AlgorithmId, TrainedClassifier, TrainingGrid};
use crate::sanitizer::{
    fit_linear_sanitizer, fit_mmd_sanitizer, linear::DEFAULT_STOP_ACCURACY, Method, MmdConfig,
    Sanitizer,
};
use crate::seed;

pub const REPORT_SCHEMA: &str = "report_v1";

pub const LEAKAGE_WARNING: &str =
    "sanitizer stopping rule was evaluated on the test set; test metrics are optimistic";

/// Settings of a closed environment other than its datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub algorithms: BTreeSet<AlgorithmId>,
    pub grid: TrainingGrid,
    pub utility_mode: UtilityMode,
    /// Negative verification pairs drawn per positive pair.
    pub negatives_per_positive: usize,
    pub master_seed: u64,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            algorithms: [AlgorithmId::Va, AlgorithmId::Svm, AlgorithmId::Rf].into(),
            grid: TrainingGrid::default(),
            utility_mode: UtilityMode::VerificationAuc,
            negatives_per_positive: 1,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClosedEnvironment {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub config: EnvironmentConfig,
}

impl ClosedEnvironment {
    pub fn new(
        train: LabeledDataset,
        test: LabeledDataset,
        config: EnvironmentConfig,
    ) -> Result<Self> {
        if config.algorithms.is_empty() {
            return Err(Error::Config("the algorithm set is empty".into()));
        }
        config.grid.validate()?;
        if config.negatives_per_positive == 0 {
            return Err(Error::Config(
                "negatives_per_positive must be positive".into(),
            ));
        }
        if train.dim() != test.dim() {
            return Err(Error::Dimension {
                expected: train.dim(),
                got: test.dim(),
            });
        }
        if !train.is_labeled() || !test.is_labeled() {
            return Err(Error::Config(
                "training and test sets must be labeled".into(),
            ));
        }
        if config.utility_mode == UtilityMode::VerificationAuc {
            if !config.algorithms.contains(&AlgorithmId::Va) {
                return Err(Error::Config(
                    "verification utility needs VA in the algorithm set".into(),
                ));
            }
            if train.identities_disjoint(&test) == Some(false) {
                return Err(Error::Config(
                    "training and test sets share identities".into(),
                ));
            }
        }
        Ok(Self {
            train,
            test,
            config,
        })
    }

    fn grid_for(&self, algorithm: AlgorithmId, target: Target) -> TrainingGrid {
        let stream = match target {
            Target::Sensitive => 0x100,
            Target::Utility => 0x200,
        } + algorithm as u64;
        self.config
            .grid
            .with_seed(seed::derive(self.config.master_seed, stream))
    }

    pub fn pair_seed(&self) -> u64 {
        seed::derive(self.config.master_seed, seed::TAG_PAIRS)
    }

    /// Trains every trainable algorithm for `s`, and for `t` in
    /// max-accuracy mode.
    pub fn train(&self) -> Result<TrainedEnvironment> {
        let mut sensitive = BTreeMap::new();
        let mut utility = BTreeMap::new();
        for &alg in self.config.algorithms.iter().filter(|a| a.is_trainable()) {
            let grid = self.grid_for(alg, Target::Sensitive);
            sensitive.insert(
                alg,
                TrainedClassifier::train(alg, &self.train, Target::Sensitive, &grid)?,
            );
            if self.config.utility_mode == UtilityMode::MaxAccuracy {
                let grid = self.grid_for(alg, Target::Utility);
                utility.insert(
                    alg,
                    TrainedClassifier::train(alg, &self.train, Target::Utility, &grid)?,
                );
            }
        }
        Ok(TrainedEnvironment {
            algorithms: self.config.algorithms.clone(),
            sensitive,
            utility,
            utility_mode: self.config.utility_mode,
            negatives_per_positive: self.config.negatives_per_positive,
            pair_seed: self.pair_seed(),
        })
    }

    /// Fits a sanitizer of the requested kind on this environment.
    pub fn fit_sanitizer(&self, cfg: &SanitizerConfig) -> Result<Sanitizer> {
        match cfg.method {
            Method::Identity => Ok(Sanitizer::Identity {
                dim: self.train.dim(),
            }),
            Method::Linear => {
                let grid = self
                    .config
                    .grid
                    .with_seed(seed::derive(self.config.master_seed, 0x300));
                let max_iterations = cfg.max_iterations.unwrap_or(self.train.dim());
                let san = match cfg.stop_on {
                    StopSet::Test => fit_linear_sanitizer(
                        &self.train,
                        &self.test,
                        cfg.stop_accuracy,
                        max_iterations,
                        &grid,
                    )?,
                    StopSet::Holdout => {
                        let (fit, hold) = split_indices(
                            &self.train,
                            0.8,
                            seed::derive(self.config.master_seed, 0x301),
                        )?;
                        fit_linear_sanitizer(
                            &self.train.subset(&fit)?,
                            &self.train.subset(&hold)?,
                            cfg.stop_accuracy,
                            max_iterations,
                            &grid,
                        )?
                    }
                };
                Ok(Sanitizer::Linear(san))
            }
            Method::Mmd => Ok(Sanitizer::Mmd(fit_mmd_sanitizer(&self.train, &cfg.mmd)?)),
        }
    }

    pub fn certify(
        &self,
        sanitizer: &Sanitizer,
        users: Option<&LabeledDataset>,
    ) -> Result<CertificationReport> {
        let trained = self.train()?;
        trained.report(self, sanitizer, users)
    }

    /// SHA-256 over datasets, settings and the sanitizer.
    pub fn config_digest(
        &self,
        sanitizer: &Sanitizer,
        users: Option<&LabeledDataset>,
    ) -> Result<String> {
        let mut h = Sha256::new();
        let mut part = |label: &str, text: &str| {
            h.update(label.as_bytes());
            h.update((text.len() as u64).to_le_bytes());
            h.update(text.as_bytes());
        };
        part("train", &self.train.digest());
        part("test", &self.test.digest());
        part(
            "user",
            &users.map(LabeledDataset::digest).unwrap_or_default(),
        );
        part("config", &serde_json::to_string(&self.config)?);
        part(
            "sanitizer",
            &serde_json::to_string(&sanitizer.to_document())?,
        );
        Ok(hex::encode(h.finalize()))
    }
}

/// Which set drives the linear sanitizer's stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopSet {
    Test,
    /// A seeded 20% of the training set; the sanitizer's SVMs see the rest.
    Holdout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SanitizerConfig {
    pub method: Method,
    pub stop_accuracy: f64,
    /// Defaults to the feature dimension.
    pub max_iterations: Option<usize>,
    pub stop_on: StopSet,
    pub mmd: MmdConfig,
}

impl Default for SanitizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Identity,
            stop_accuracy: DEFAULT_STOP_ACCURACY,
            max_iterations: None,
            stop_on: StopSet::Test,
            mmd: MmdConfig::default(),
        }
    }
}

/// Classifiers trained inside a closed environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedEnvironment {
    pub algorithms: BTreeSet<AlgorithmId>,
    pub sensitive: BTreeMap<AlgorithmId, TrainedClassifier>,
    pub utility: BTreeMap<AlgorithmId, TrainedClassifier>,
    pub utility_mode: UtilityMode,
    pub negatives_per_positive: usize,
    pub pair_seed: u64,
}

impl TrainedEnvironment {
    /// Classifiers of `target`, ordered by algorithm.
    pub fn classifiers(
        &self,
        target: Target,
    ) -> impl Iterator<Item = (AlgorithmId, &TrainedClassifier)> {
        let map = match target {
            Target::Sensitive => &self.sensitive,
            Target::Utility => &self.utility,
        };
        map.iter().map(|(k, v)| (*k, v))
    }

    /// The same classifiers restricted to `subset`.
    pub fn restricted(&self, subset: &BTreeSet<AlgorithmId>) -> Self {
        let keep = |m: &BTreeMap<AlgorithmId, TrainedClassifier>| {
            m.iter()
                .filter(|(k, _)| subset.contains(k))
                .map(|(k, v)| (*k, v.clone()))
                .collect()
        };
        Self {
            algorithms: self.algorithms.intersection(subset).copied().collect(),
            sensitive: keep(&self.sensitive),
            utility: keep(&self.utility),
            ..self.clone()
        }
    }

    /// Sanitizes the test (and user) sets and evaluates every metric.
    pub fn report(
        &self,
        env: &ClosedEnvironment,
        sanitizer: &Sanitizer,
        users: Option<&LabeledDataset>,
    ) -> Result<CertificationReport> {
        let sanitized_test = sanitizer.sanitize_dataset(&env.test)?;
        let sanitized_users = users.map(|u| sanitizer.sanitize_dataset(u)).transpose()?;
        self.report_sanitized(
            env,
            sanitizer,
            &sanitized_test,
            sanitized_users.as_ref(),
            users,
        )
    }

    /// Like [`report`](Self::report) for sets that are already sanitized.
    /// `raw_users` only feeds the configuration digest.
    pub fn report_sanitized(
        &self,
        env: &ClosedEnvironment,
        sanitizer: &Sanitizer,
        sanitized_test: &LabeledDataset,
        sanitized_users: Option<&LabeledDataset>,
        raw_users: Option<&LabeledDataset>,
    ) -> Result<CertificationReport> {
        check_sensitive_balance(sanitized_test)?;
        let has_va = self.algorithms.contains(&AlgorithmId::Va);
        let ca_s = accuracies(self, sanitized_test, Target::Sensitive)?;
        let ca_t = accuracies(self, sanitized_test, Target::Utility)?;
        let auc = has_va
            .then(|| verification_auc(self, sanitized_test))
            .transpose()?;

        let utility = match self.utility_mode {
            UtilityMode::MaxAccuracy => utility_from_accuracies(&ca_t)?,
            UtilityMode::VerificationAuc => auc.ok_or_else(|| {
                Error::Metric("verification utility needs VA in the algorithm set".into())
            })?,
        };
        let privacy = privacy_from_accuracies(&ca_s)?;

        let mut per_algorithm: BTreeMap<AlgorithmId, AlgorithmMetrics> = self
            .algorithms
            .iter()
            .map(|a| (*a, AlgorithmMetrics::default()))
            .collect();
        for (a, v) in &ca_s {
            per_algorithm.entry(*a).or_default().sensitive_accuracy = Some(*v);
        }
        for (a, v) in &ca_t {
            per_algorithm.entry(*a).or_default().utility_accuracy = Some(*v);
        }
        if let Some(v) = auc {
            per_algorithm
                .entry(AlgorithmId::Va)
                .or_default()
                .verification_auc = Some(v);
        }

        let user_evaluations = sanitized_users
            .map(|u| -> Result<UserEvaluation> {
                let sensitive_accuracy: BTreeMap<_, _> = accuracies(self, u, Target::Sensitive)?
                    .into_iter()
                    .collect();
                let verification_auc = if has_va && u.is_labeled() {
                    Some(verification_auc(self, u)?)
                } else {
                    None
                };
                Ok(UserEvaluation {
                    records: u.len(),
                    verification_auc,
                    sensitive_accuracy,
                })
            })
            .transpose()?;

        let mut warnings = Vec::new();
        if sanitizer.consulted(&env.test.digest()) {
            warnings.push(LEAKAGE_WARNING.to_string());
        }
        if let Sanitizer::Linear(l) = sanitizer {
            if !l.converged {
                warnings.push(format!(
                    "linear sanitizer stopped after {} iterations without reaching CA_s <= {}",
                    l.iterations_used, l.stop_accuracy
                ));
            }
        }

        Ok(CertificationReport {
            schema: REPORT_SCHEMA.to_string(),
            utility_mode: self.utility_mode,
            utility,
            privacy,
            per_algorithm,
            user_evaluations,
            sanitizer: sanitizer.descriptor(),
            config_digest: env.config_digest(sanitizer, raw_users)?,
            seeds: Seeds {
                master_seed: env.config.master_seed,
                pair_seed: self.pair_seed,
            },
            warnings,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitive_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub utility_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserEvaluation {
    pub records: usize,
    pub verification_auc: Option<f64>,
    pub sensitive_accuracy: BTreeMap<AlgorithmId, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub master_seed: u64,
    pub pair_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub schema: String,
    pub utility_mode: UtilityMode,
    pub utility: f64,
    pub privacy: f64,
    pub per_algorithm: BTreeMap<AlgorithmId, AlgorithmMetrics>,
    pub user_evaluations: Option<UserEvaluation>,
    pub sanitizer: serde_json::Value,
    pub config_digest: String,
    pub seeds: Seeds,
    pub warnings: Vec<String>,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

impl CertificationReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Plain-text table: utility and privacy, then per-algorithm and user
    /// columns.
    pub fn summary(&self) -> String {
        let mode = match self.utility_mode {
            UtilityMode::MaxAccuracy => "max CA_t",
            UtilityMode::VerificationAuc => "verification AUC",
        };
        let method = self
            .sanitizer
            .get("method")
            .and_then(|m| m.as_str())
            .unwrap_or("?");
        let mut out = String::new();
        let _ = writeln!(out, "sanitizer: {method}");
        let _ = writeln!(
            out,
            "{:<18}{:>16}{:>16}",
            "", "Utility metric", "Privacy metric"
        );
        let _ = writeln!(
            out,
            "{:<18}{:>16.4}{:>16.4}",
            mode, self.utility, self.privacy
        );
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<10}{:>10}{:>10}{:>10}{:>14}",
            "algorithm", "CA_s", "CA_t", "AUC", "user data"
        );
        for (alg, m) in &self.per_algorithm {
            let user = self.user_evaluations.as_ref().and_then(|u| match alg {
                AlgorithmId::Va => u.verification_auc,
                _ => u.sensitive_accuracy.get(alg).copied(),
            });
            let _ = writeln!(
                out,
                "{:<10}{:>10}{:>10}{:>10}{:>14}",
                alg.as_str(),
                cell(m.sensitive_accuracy),
                cell(m.utility_accuracy),
                cell(m.verification_auc),
                cell(user)
            );
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}
