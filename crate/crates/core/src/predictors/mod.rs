//! The closed environment's algorithm set: a linear SVM, a random forest and
//! the cosine verification algorithm (VA), plus the grid-search protocol
//! used to train the two classifiers.

mod forest;
mod svm;

use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, Target};
use crate::error::{Error, Result};

pub use forest::{fit_forest, train_random_forest, ForestModel, ForestParams, TreeNode};
pub use svm::{fit_svm, primal_objective, train_linear_svm, LinearModel, SvmFit, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmId {
    #[serde(rename = "VA")]
    Va,
    #[serde(rename = "SVM")]
    Svm,
    #[serde(rename = "RF")]
    Rf,
}

impl AlgorithmId {
    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::Va => "VA",
            AlgorithmId::Svm => "SVM",
            AlgorithmId::Rf => "RF",
        }
    }

    /// VA never trains and is not a classifier of `s`.
    pub fn is_trainable(self) -> bool {
        !matches!(self, AlgorithmId::Va)
    }
}

impl std::fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "VA" => Ok(AlgorithmId::Va),
            "SVM" => Ok(AlgorithmId::Svm),
            "RF" => Ok(AlgorithmId::Rf),
            _ => Err(Error::Config(format!("unknown algorithm id `{s}`"))),
        }
    }
}

/// Hyper-parameter grids and validation protocol shared by both classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingGrid {
    pub svm_c_values: Vec<f64>,
    pub rf_tree_counts: Vec<usize>,
    /// `None` is unlimited depth (minimum leaf size 2).
    pub rf_depths: Vec<Option<usize>>,
    pub validation_fraction: f64,
    /// Standardize features before SVM fitting; weights are mapped back to
    /// the raw feature space.
    pub standardize_svm: bool,
    pub seed: u64,
}

impl Default for TrainingGrid {
    fn default() -> Self {
        Self {
            svm_c_values: vec![1e-3, 1e-1, 1.0, 100.0],
            rf_tree_counts: vec![25, 50, 100],
            rf_depths: vec![Some(3), Some(5), None],
            validation_fraction: 0.2,
            standardize_svm: false,
            seed: 0,
        }
    }
}

impl TrainingGrid {
    pub fn validate(&self) -> Result<()> {
        if self.svm_c_values.is_empty()
            || self.rf_tree_counts.is_empty()
            || self.rf_depths.is_empty()
        {
            return Err(Error::Config("training grids must be nonempty".into()));
        }
        if self
            .svm_c_values
            .iter()
            .any(|c| !(c.is_finite() && *c > 0.0))
        {
            return Err(Error::Config("SVM C values must be positive".into()));
        }
        if self.rf_tree_counts.contains(&0) {
            return Err(Error::Config("tree counts must be positive".into()));
        }
        if self.rf_depths.contains(&Some(0)) {
            return Err(Error::Config("tree depths must be positive".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config("validation_fraction must be in (0,1)".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Validation accuracy of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub setting: String,
    pub validation_accuracy: f64,
}

/// A trained binary predictor `q: X -> {-1,+1}`.
pub trait Classifier {
    fn dim(&self) -> usize;

    /// Prediction without the dimension check.
    fn decide(&self, x: &[f64]) -> i8;

    fn predict(&self, x: &[f64]) -> Result<i8> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.decide(x))
    }
}

/// Serializable trained classifier, tagged by `model_type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type", rename_all = "snake_case")]
pub enum TrainedClassifier {
    LinearSvm(LinearModel),
    RandomForest(ForestModel),
}

impl TrainedClassifier {
    pub fn train(
        algorithm: AlgorithmId,
        train: &LabeledDataset,
        target: Target,
        grid: &TrainingGrid,
    ) -> Result<Self> {
        match algorithm {
            AlgorithmId::Svm => Ok(Self::LinearSvm(train_linear_svm(train, target, grid)?)),
            AlgorithmId::Rf => Ok(Self::RandomForest(train_random_forest(
                train, target, grid,
            )?)),
            AlgorithmId::Va => Err(Error::Training("VA is stateless and never trains".into())),
        }
    }

    pub fn algorithm(&self) -> AlgorithmId {
        match self {
            Self::LinearSvm(_) => AlgorithmId::Svm,
            Self::RandomForest(_) => AlgorithmId::Rf,
        }
    }
}

impl Classifier for TrainedClassifier {
    fn dim(&self) -> usize {
        match self {
            Self::LinearSvm(m) => m.dim(),
            Self::RandomForest(m) => m.dim(),
        }
    }

    fn decide(&self, x: &[f64]) -> i8 {
        match self {
            Self::LinearSvm(m) => m.decide(x),
            Self::RandomForest(m) => m.decide(x),
        }
    }
}

/// Cosine similarity `x1.x2 / (|x1| |x2|)`, clamped to [-1, 1].
pub fn cosine_score(x1: &[f64], x2: &[f64]) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(Error::Dimension {
            expected: x1.len(),
            got: x2.len(),
        });
    }
    let n1 = crate::linalg::norm(x1);
    let n2 = crate::linalg::norm(x2);
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::Numeric(
            "cosine similarity is undefined for a zero vector".into(),
        ));
    }
    Ok((crate::linalg::dot(x1, x2) / (n1 * n2)).clamp(-1.0, 1.0))
}

/// Binary labels for `target`, checking that both classes occur.
pub(crate) fn two_class_labels(ds: &LabeledDataset, target: Target) -> Result<Vec<i8>> {
    let labels = ds
        .records()
        .iter()
        .map(|r| r.binary_label(target))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| match e {
            Error::Metric(m) => Error::Training(m),
            other => other,
        })?;
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::Training(format!(
            "training data for {target:?} contains a single class"
        )));
    }
    Ok(labels)
}
