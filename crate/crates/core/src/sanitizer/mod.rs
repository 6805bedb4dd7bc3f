//! Sanitization functions `f: X -> X`.

pub mod linear;
pub mod mmd;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::data::{LabeledDataset, Role};
use crate::error::{Error, Result};

pub use linear::{fit_linear_sanitizer, LinearSanitizer};
pub use mmd::{fit_mmd_sanitizer, Bandwidth, BandwidthRule, MmdConfig, MmdSanitizer, MmdState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Identity,
    Linear,
    Mmd,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Identity => "identity",
            Method::Linear => "linear",
            Method::Mmd => "mmd",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "none" => Ok(Method::Identity),
            "linear" => Ok(Method::Linear),
            "mmd" => Ok(Method::Mmd),
            _ => Err(Error::Config(format!("unknown sanitization method `{s}`"))),
        }
    }
}

/// Per-record seed for randomized sanitizers: role in the high word,
/// record index in the low word.
pub fn sample_seed(role: Role, index: usize) -> u64 {
    (role.tag() << 32) | index as u64
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sanitizer {
    Identity { dim: usize },
    Linear(LinearSanitizer),
    Mmd(MmdSanitizer),
}

/// On-disk form, tagged by `method`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SanitizerDocument {
    Identity { dim: usize },
    Linear(LinearSanitizer),
    Mmd(MmdState),
}

impl Sanitizer {
    pub fn method(&self) -> Method {
        match self {
            Sanitizer::Identity { .. } => Method::Identity,
            Sanitizer::Linear(_) => Method::Linear,
            Sanitizer::Mmd(_) => Method::Mmd,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Sanitizer::Identity { dim } => *dim,
            Sanitizer::Linear(l) => l.dim,
            Sanitizer::Mmd(m) => m.dim(),
        }
    }

    pub fn apply(&self, x: &[f64], sample_seed: u64) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        match self {
            Sanitizer::Identity { .. } => Ok(x.to_vec()),
            Sanitizer::Linear(l) => l.apply(x),
            Sanitizer::Mmd(m) => mmd::sanitize_mmd(x, m, sample_seed),
        }
    }

    /// Maps every record through `f`, keeping labels and role. Records are
    /// processed in parallel; each uses its own seed, so the output does
    /// not depend on scheduling.
    pub fn sanitize_dataset(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        if ds.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: ds.dim(),
            });
        }
        if let Sanitizer::Identity { .. } = self {
            return Ok(ds.clone());
        }
        let role = ds.role();
        let features = ds
            .records()
            .par_iter()
            .enumerate()
            .map(|(i, r)| {
                self.apply(&r.features, sample_seed(role, i))
                    .map_err(|e| Error::Record {
                        index: i,
                        source: Box::new(e),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        ds.with_features(features)
    }

    /// Whether fitting used the dataset with this digest beyond training,
    /// i.e. to decide when to stop.
    pub fn consulted(&self, digest: &str) -> bool {
        match self {
            Sanitizer::Linear(l) => l.evaluation_digest == digest,
            _ => false,
        }
    }

    /// Short parameter summary for reports.
    pub fn descriptor(&self) -> serde_json::Value {
        match self {
            Sanitizer::Identity { dim } => json!({ "method": "identity", "dim": dim }),
            Sanitizer::Linear(l) => json!({
                "method": "linear",
                "dim": l.dim,
                "stop_accuracy": l.stop_accuracy,
                "iterations_used": l.iterations_used,
                "converged": l.converged,
                "rank": l.rank(),
                "accuracy_trace": l.accuracy_trace,
                "seed": l.seed,
            }),
            Sanitizer::Mmd(m) => {
                let s = m.state();
                json!({
                    "method": "mmd",
                    "dim": s.dim,
                    "dictionary_size": s.dictionary_indices.len(),
                    "sigma": s.sigma,
                    "sigma_rule": s.sigma_rule,
                    "step_size": s.step_size,
                    "iterations": s.iterations,
                    "class_subsample": s.class_subsample,
                    "early_stop_tolerance": s.early_stop_tolerance,
                    "seed": s.seed,
                })
            }
        }
    }

    pub fn to_document(&self) -> SanitizerDocument {
        match self {
            Sanitizer::Identity { dim } => SanitizerDocument::Identity { dim: *dim },
            Sanitizer::Linear(l) => SanitizerDocument::Linear(l.clone()),
            Sanitizer::Mmd(m) => SanitizerDocument::Mmd(m.state().clone()),
        }
    }

    /// Rebuilds a sanitizer. MMD documents need the training set they were
    /// fitted on.
    pub fn from_document(doc: SanitizerDocument, train: Option<&LabeledDataset>) -> Result<Self> {
        match doc {
            SanitizerDocument::Identity { dim } => Ok(Sanitizer::Identity { dim }),
            SanitizerDocument::Linear(l) => {
                l.validate()?;
                Ok(Sanitizer::Linear(l))
            }
            SanitizerDocument::Mmd(state) => {
                let train = train.ok_or_else(|| {
                    Error::Config("an MMD sanitizer needs its training set to load".into())
                })?;
                Ok(Sanitizer::Mmd(MmdSanitizer::rehydrate(state, train)?))
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str, train: Option<&LabeledDataset>) -> Result<Self> {
        Self::from_document(serde_json::from_str(text)?, train)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, train: Option<&LabeledDataset>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, train)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureRecord;

    fn tiny() -> LabeledDataset {
        let records = vec![
            FeatureRecord::labeled(vec![1.0, 2.0, 3.0], 0, 1),
            FeatureRecord::labeled(vec![-1.0, 0.5, 2.0], 1, -1),
        ];
        LabeledDataset::new(records, Role::Test).unwrap()
    }

    #[test]
    fn identity_is_a_no_op() {
        let ds = tiny();
        let out = Sanitizer::Identity { dim: 3 }
            .sanitize_dataset(&ds)
            .unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn projection_output_is_orthogonal_to_collapsed_axis() {
        let mut l = LinearSanitizer::identity(3);
        l.collapsed_directions.push(vec![0.0, 1.0, 0.0]);
        l.iterations_used = 1;
        l.projection = l.deflation(0).as_slice().to_vec();
        let san = Sanitizer::Linear(l);
        let out = san.sanitize_dataset(&tiny()).unwrap();
        for r in out.records() {
            assert!(r.features[1].abs() <= 1e-8);
        }
        assert_eq!(out.records()[0].sensitive_label, Some(1));
        assert_eq!(out.role(), Role::Test);
    }

    #[test]
    fn document_round_trip() {
        let san = Sanitizer::Linear(LinearSanitizer::identity(2));
        let back = Sanitizer::from_json(&san.to_json().unwrap(), None).unwrap();
        assert_eq!(back, san);
        assert!(Sanitizer::from_json("{\"method\":\"mmd\"}", None).is_err());
    }

    #[test]
    fn document_floats_survive_exactly() {
        let mut l = LinearSanitizer::identity(2);
        l.projection = vec![0.1 + 0.2, 1.0 / 3.0, -2.0_f64.sqrt(), 9.934143818248546e-1];
        let back = Sanitizer::from_json(&Sanitizer::Linear(l.clone()).to_json().unwrap(), None);
        match back {
            Ok(Sanitizer::Linear(b)) => {
                let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
                assert_eq!(bits(&b.projection), bits(&l.projection));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seeds_separate_roles() {
        assert_ne!(sample_seed(Role::Test, 5), sample_seed(Role::User, 5));
        assert_eq!(sample_seed(Role::Train, 5), 5);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = Sanitizer::Identity { dim: 2 }
            .sanitize_dataset(&tiny())
            .unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 2,
                got: 3
            }
        ));
    }
}
