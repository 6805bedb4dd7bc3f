//! Privacy certification of a closed environment: a fixed training set and
//! algorithm set, a sanitization function applied to user features, and
//! utility and privacy metrics computed inside that environment.

pub mod certify;
pub mod cli;
pub mod data;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod predictors;
pub mod sanitizer;
pub mod seed;

pub use certify::{
    CertificationReport, ClosedEnvironment, EnvironmentConfig, SanitizerConfig, TrainedEnvironment,
};
pub use data::{FeatureRecord, LabeledDataset, Role, SyntheticConfig, Target};
pub use error::{Error, Result};
pub use metrics::UtilityMode;
pub use predictors::{AlgorithmId, Classifier, TrainedClassifier, TrainingGrid};
pub use sanitizer::{Method, Sanitizer};
