//! Examples, datasets, CSV ingestion, the seeded synthetic generator and
//! train/validation splitting.
//!
//! Feature files are CSV with header `feature_0,...,feature_{d-1},t,s`.
//! User-role files may omit the `t,s` columns.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
    User,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Test => "test",
            Role::User => "user",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        match self {
            Role::Train => 0,
            Role::Test => 1,
            Role::User => 2,
        }
    }
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Role::Train),
            "test" => Ok(Role::Test),
            "user" => Ok(Role::User),
            other => Err(Error::Config(format!("unknown dataset role `{other}`"))),
        }
    }
}

/// Which label a classifier is trained against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// The utility label `t`; must be binary (±1) for classification.
    Utility,
    /// The sensitive label `s`.
    Sensitive,
}

/// One example `(x, t, s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub features: Vec<f64>,
    pub utility_label: Option<i64>,
    pub sensitive_label: Option<i8>,
}

impl FeatureRecord {
    pub fn labeled(features: Vec<f64>, utility_label: i64, sensitive_label: i8) -> Self {
        Self {
            features,
            utility_label: Some(utility_label),
            sensitive_label: Some(sensitive_label),
        }
    }

    pub fn unlabeled(features: Vec<f64>) -> Self {
        Self {
            features,
            utility_label: None,
            sensitive_label: None,
        }
    }

    /// Binary label for `target`, or an error if it is missing or not ±1.
    pub fn binary_label(&self, target: Target) -> Result<i8> {
        match target {
            Target::Sensitive => self
                .sensitive_label
                .ok_or_else(|| Error::Metric("record has no sensitive label".into())),
            Target::Utility => match self.utility_label {
                Some(1) => Ok(1),
                Some(-1) => Ok(-1),
                Some(t) => Err(Error::Training(format!(
                    "utility label {t} is not binary; classification of t needs t in {{-1,+1}}"
                ))),
                None => Err(Error::Metric("record has no utility label".into())),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    records: Vec<FeatureRecord>,
    role: Role,
    dim: usize,
}

impl LabeledDataset {
    /// Validates the dataset invariants: shared dimension, finite
    /// features, `s` in {-1,+1}, and labels present unless `role` is user.
    pub fn new(records: Vec<FeatureRecord>, role: Role) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyDataset)?;
        let dim = first.features.len();
        if dim == 0 {
            return Err(Error::Config("feature dimension must be positive".into()));
        }
        for (i, r) in records.iter().enumerate() {
            let row = i + 1;
            if r.features.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: r.features.len(),
                });
            }
            if let Some(j) = r.features.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation {
                    row,
                    message: format!("feature_{j} is not finite"),
                });
            }
            match r.sensitive_label {
                Some(1) | Some(-1) => {}
                Some(s) => {
                    return Err(Error::Validation {
                        row,
                        message: format!("sensitive label must be -1 or 1, got {s}"),
                    })
                }
                None if role != Role::User => {
                    return Err(Error::Validation {
                        row,
                        message: format!("{} records need a sensitive label", role.as_str()),
                    })
                }
                None => {}
            }
            if role != Role::User && r.utility_label.is_none() {
                return Err(Error::Validation {
                    row,
                    message: format!("{} records need a utility label", role.as_str()),
                });
            }
        }
        Ok(Self { records, role, dim })
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.records
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.records[i].features
    }

    /// True when every record carries both labels.
    pub fn is_labeled(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.utility_label.is_some() && r.sensitive_label.is_some())
    }

    /// `(count of s=+1, count of s=-1)` over labeled records.
    pub fn sensitive_counts(&self) -> (usize, usize) {
        self.records
            .iter()
            .fold((0, 0), |(p, n), r| match r.sensitive_label {
                Some(1) => (p + 1, n),
                Some(_) => (p, n + 1),
                None => (p, n),
            })
    }

    pub fn identities(&self) -> BTreeSet<i64> {
        self.records
            .iter()
            .filter_map(|r| r.utility_label)
            .collect()
    }

    /// Whether the two datasets share no identity. `None` when either side
    /// is missing labels and the question cannot be answered.
    pub fn identities_disjoint(&self, other: &LabeledDataset) -> Option<bool> {
        if !self.is_labeled() || !other.is_labeled() {
            return None;
        }
        Some(self.identities().is_disjoint(&other.identities()))
    }

    /// Same labels and role, new features (one vector per record).
    pub fn with_features(&self, features: Vec<Vec<f64>>) -> Result<Self> {
        if features.len() != self.records.len() {
            return Err(Error::Config(format!(
                "expected {} feature vectors, got {}",
                self.records.len(),
                features.len()
            )));
        }
        let records = self
            .records
            .iter()
            .zip(features)
            .map(|(r, x)| FeatureRecord {
                features: x,
                utility_label: r.utility_label,
                sensitive_label: r.sensitive_label,
            })
            .collect();
        Self::new(records, self.role)
    }

    /// Records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let records = indices.iter().map(|&i| self.records[i].clone()).collect();
        Self::new(records, self.role)
    }

    pub fn with_role(mut self, role: Role) -> Result<Self> {
        if role != Role::User && !self.is_labeled() {
            return Err(Error::Config(format!(
                "cannot relabel an unlabeled dataset as {}",
                role.as_str()
            )));
        }
        self.role = role;
        Ok(self)
    }

    /// Hex SHA-256 of the canonical CSV text.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.to_csv_string().as_bytes()))
    }

    /// Canonical CSV text. Labels are written only when every record has them.
    pub fn to_csv_string(&self) -> String {
        let labeled = self.is_labeled();
        let mut out = String::new();
        for j in 0..self.dim {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "feature_{j}");
        }
        if labeled {
            out.push_str(",t,s");
        }
        out.push('\n');
        for r in &self.records {
            for (j, v) in r.features.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
            }
            if let (true, Some(t), Some(s)) = (labeled, r.utility_label, r.sensitive_label) {
                let _ = write!(out, ",{t},{s}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn load_dataset(path: impl AsRef<Path>, role: Role) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, role)
}

pub fn save_dataset(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ds.to_csv_string()).map_err(|e| Error::io(path, e))
}

/// Parses CSV from any reader. Data rows are numbered from 1 in errors.
pub fn read_dataset<R: Read>(reader: R, role: Role) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema {
            column: "header".into(),
            message: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let has_labels = names.len() >= 2 && names[names.len() - 2..] == ["t", "s"];
    let dim = if has_labels {
        names.len() - 2
    } else {
        names.len()
    };
    for (j, name) in names[..dim].iter().enumerate() {
        let expected = format!("feature_{j}");
        if *name != expected {
            // A lone trailing `t` or `s` means one label column is missing.
            let column = match *name {
                "t" => "s".to_string(),
                "s" => "t".to_string(),
                _ => expected.clone(),
            };
            return Err(Error::Schema {
                column,
                message: format!("expected `{expected}`, found `{name}`"),
            });
        }
    }
    if dim == 0 {
        return Err(Error::Schema {
            column: "feature_0".into(),
            message: "no feature columns".into(),
        });
    }
    if !has_labels && role != Role::User {
        return Err(Error::Schema {
            column: "t".into(),
            message: format!("{} files need `t,s` columns", role.as_str()),
        });
    }

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { len, .. } => Error::Dimension {
                expected: names.len(),
                got: *len as usize,
            },
            _ => Error::Validation {
                row: row_no,
                message: e.to_string(),
            },
        })?;
        let mut features = Vec::with_capacity(dim);
        for j in 0..dim {
            let v: f64 = row[j].parse().map_err(|_| Error::Schema {
                column: format!("feature_{j}"),
                message: format!("row {row_no}: cannot parse `{}` as a number", &row[j]),
            })?;
            features.push(v);
        }
        let record = if has_labels {
            let t: i64 = row[dim].parse().map_err(|_| Error::Schema {
                column: "t".into(),
                message: format!("row {row_no}: cannot parse `{}` as an integer", &row[dim]),
            })?;
            let s: i64 = row[dim + 1].parse().map_err(|_| Error::Schema {
                column: "s".into(),
                message: format!(
                    "row {row_no}: cannot parse `{}` as an integer",
                    &row[dim + 1]
                ),
            })?;
            if s != 1 && s != -1 {
                return Err(Error::Validation {
                    row: row_no,
                    message: format!("sensitive label must be -1 or 1, got {s}"),
                });
            }
            FeatureRecord::labeled(features, t, s as i8)
        } else {
            FeatureRecord::unlabeled(features)
        };
        records.push(record);
    }
    LabeledDataset::new(records, role)
}

fn default_identity_scale() -> f64 {
    20.0
}

/// Parameters of the synthetic generator.
///
/// The sensitive signal lives on axis `e_0` only; identity centers lie on a
/// sphere of radius `identity_scale` inside `span(e_1..e_k)`,
/// `k = identity_subspace_dim`, so the two are orthogonal by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub d: usize,
    pub m: usize,
    #[serde(alias = "m'")]
    pub m_prime: usize,
    pub n: usize,
    pub sensitive_axis_separation: f64,
    /// Total identities, partitioned across the three sets.
    pub identity_count: usize,
    pub identity_subspace_dim: usize,
    pub noise_scale: f64,
    #[serde(default = "default_identity_scale")]
    pub identity_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            d: 50,
            m: 2000,
            m_prime: 1000,
            n: 1000,
            sensitive_axis_separation: 6.0,
            identity_count: 300,
            identity_subspace_dim: 2,
            noise_scale: 1.0,
            identity_scale: default_identity_scale(),
            seed: 7,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.m == 0 || self.m_prime == 0 || self.n == 0 {
            return Err(Error::Config("d, m, m_prime and n must be positive".into()));
        }
        if self.identity_subspace_dim == 0 {
            return Err(Error::Config(
                "identity_subspace_dim must be positive".into(),
            ));
        }
        if self.identity_subspace_dim + 1 > self.d {
            return Err(Error::Config(format!(
                "identity_subspace_dim + 1 <= d is required (identity_subspace_dim = {}, d = {})",
                self.identity_subspace_dim, self.d
            )));
        }
        for (name, v) in [
            ("sensitive_axis_separation", self.sensitive_axis_separation),
            ("noise_scale", self.noise_scale),
            ("identity_scale", self.identity_scale),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        let counts = self.identity_allocation()?;
        for ((count, size), role) in counts
            .iter()
            .zip([self.m, self.m_prime, self.n])
            .zip(["train", "test", "user"])
        {
            if *count > size {
                return Err(Error::Config(format!(
                    "{role} set has {size} records but {count} identities"
                )));
            }
        }
        Ok(())
    }

    /// Identities per set (train, test, user): proportional to set size,
    /// even, and at least two so that both sensitive classes appear.
    pub fn identity_allocation(&self) -> Result<[usize; 3]> {
        if self.identity_count < 6 {
            return Err(Error::Config(
                "identity_count must be at least 6 (two per set)".into(),
            ));
        }
        let total = (self.m + self.m_prime + self.n) as f64;
        let share = |size: usize| {
            let raw = (self.identity_count as f64 * size as f64 / total).floor() as usize;
            (raw - raw % 2).max(2)
        };
        let test = share(self.m_prime);
        let user = share(self.n);
        let train = self
            .identity_count
            .checked_sub(test + user)
            .filter(|&t| t >= 2)
            .ok_or_else(|| Error::Config("identity_count too small for three sets".into()))?;
        Ok([train - train % 2, test, user])
    }
}

/// Draws train, test and user sets. Pure function of `cfg`.
///
/// `x = (s * separation / 2) e_0 + c_t + noise_scale * N(0, I_d)` where
/// identity `t` has center `c_t` and sensitive class `s(t)`; classes
/// alternate across identities, and records are assigned to identities
/// round-robin, so every set is balanced in `s` to within one record.
pub fn generate_synthetic(
    cfg: &SyntheticConfig,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    cfg.validate()?;
    let alloc = cfg.identity_allocation()?;
    let mut rng = seed::rng(cfg.seed);
    let k = cfg.identity_subspace_dim;

    let total_ids: usize = alloc.iter().sum();
    let centers: Vec<Vec<f64>> = (0..total_ids)
        .map(|_| {
            let mut u: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            let len = crate::linalg::norm(&u);
            // a zero draw has probability zero; fall back to the first axis
            if len > 0.0 {
                u.iter_mut().for_each(|v| *v *= cfg.identity_scale / len);
            } else {
                u[0] = cfg.identity_scale;
            }
            u
        })
        .collect();

    let half_gap = cfg.sensitive_axis_separation / 2.0;
    let mut first_id = 0usize;
    let mut sets = Vec::with_capacity(3);
    for ((size, ids), role) in [cfg.m, cfg.m_prime, cfg.n].into_iter().zip(alloc).zip([
        Role::Train,
        Role::Test,
        Role::User,
    ]) {
        let mut records = Vec::with_capacity(size);
        for r in 0..size {
            let local = r % ids;
            let identity = first_id + local;
            let s: i8 = if local % 2 == 0 { 1 } else { -1 };
            let mut x: Vec<f64> = (0..cfg.d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    cfg.noise_scale * z
                })
                .collect();
            x[0] += f64::from(s) * half_gap;
            for (xi, ci) in x[1..=k].iter_mut().zip(&centers[identity]) {
                *xi += ci;
            }
            records.push(FeatureRecord::labeled(x, identity as i64, s));
        }
        first_id += ids;
        sets.push(LabeledDataset::new(records, role)?);
    }
    let user = sets.pop().expect("three sets");
    let test = sets.pop().expect("three sets");
    let train = sets.pop().expect("three sets");
    Ok((train, test, user))
}

/// Index partition behind [`split_train_validation`]: `(train, validation)`,
/// each sorted ascending.
///
/// The shuffle is stratified by `s` when labels are present: each class is
/// shuffled separately and spread evenly over the combined order before the
/// cut, so both sides see both classes whenever their sizes allow.
pub fn split_indices(
    ds: &LabeledDataset,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Split(format!("fraction {fraction} is not in (0,1)")));
    }
    let n = ds.len();
    let n_train = (fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Split(format!(
            "fraction {fraction} of {n} records leaves one side empty"
        )));
    }

    let mut strata: Vec<Vec<usize>> = vec![Vec::new(); 3];
    for (i, r) in ds.records().iter().enumerate() {
        let slot = match r.sensitive_label {
            Some(1) => 0,
            Some(_) => 1,
            None => 2,
        };
        strata[slot].push(i);
    }
    let mut rng = seed::stream(seed, seed::TAG_SPLIT);
    let mut keyed: Vec<(f64, usize, usize)> = Vec::with_capacity(n);
    for (slot, members) in strata.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        let len = members.len() as f64;
        for (rank, &idx) in members.iter().enumerate() {
            keyed.push(((rank as f64 + 0.5) / len, slot, idx));
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut train: Vec<usize> = keyed[..n_train].iter().map(|k| k.2).collect();
    let mut validation: Vec<usize> = keyed[n_train..].iter().map(|k| k.2).collect();
    train.sort_unstable();
    validation.sort_unstable();
    Ok((train, validation))
}

pub fn split_train_validation(
    ds: &LabeledDataset,
    fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train, validation) = split_indices(ds, fraction, seed)?;
    Ok((ds.subset(&train)?, ds.subset(&validation)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, role: Role) -> Result<LabeledDataset> {
        read_dataset(text.as_bytes(), role)
    }

    const FOUR_ROWS: &str = "feature_0,feature_1,feature_2,t,s\n\
        0.5,1,-2,3,1\n\
        1.5,0,2,3,-1\n\
        -0.25,4,0,7,1\n\
        2,2,2,7,-1\n";

    #[test]
    fn loads_valid_file() {
        let ds = parse(FOUR_ROWS, Role::Train).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.dim(), 3);
        assert_eq!(ds.records()[2].features, vec![-0.25, 4.0, 0.0]);
        assert_eq!(ds.records()[2].utility_label, Some(7));
        assert_eq!(ds.sensitive_counts(), (2, 2));
    }

    #[test]
    fn bad_sensitive_label_cites_row() {
        let text = "feature_0,t,s\n1,0,1\n2,0,0\n";
        match parse(text, Role::Train) {
            Err(Error::Validation { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_data_section() {
        assert!(matches!(
            parse("feature_0,feature_1,t,s\n", Role::Train),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn garbled_header_names_column() {
        match parse("feature_0,feat_1,t,s\n1,2,0,1\n", Role::Train) {
            Err(Error::Schema { column, .. }) => assert_eq!(column, "feature_1"),
            other => panic!("unexpected {other:?}"),
        }
        match parse("feature_0,feature_1,t\n1,2,0\n", Role::Train) {
            Err(Error::Schema { column, .. }) => assert_eq!(column, "s"),
            other => panic!("unexpected {other:?}"),
        }
        match parse("feature_0,t,s\nabc,0,1\n", Role::Train) {
            Err(Error::Schema { column, .. }) => assert_eq!(column, "feature_0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inconsistent_row_length_is_dimension_error() {
        assert!(matches!(
            parse("feature_0,feature_1,t,s\n1,2,0,1\n1,0,1\n", Role::Train),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn user_files_may_omit_labels() {
        let ds = parse("feature_0,feature_1\n1,2\n3,4\n", Role::User).unwrap();
        assert!(!ds.is_labeled());
        assert!(parse("feature_0,feature_1\n1,2\n", Role::Test).is_err());
    }

    #[test]
    fn csv_round_trip_is_byte_exact() {
        let ds = parse(FOUR_ROWS, Role::Train).unwrap();
        let text = ds.to_csv_string();
        let again = parse(&text, Role::Train).unwrap();
        assert_eq!(again, ds);
        assert_eq!(again.to_csv_string(), text);
    }

    #[test]
    fn generator_rejects_small_dimension() {
        let cfg = SyntheticConfig {
            d: 3,
            identity_subspace_dim: 3,
            ..SyntheticConfig::default()
        };
        match generate_synthetic(&cfg) {
            Err(Error::Config(msg)) => assert!(msg.contains("identity_subspace_dim + 1 <= d")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generator_is_deterministic_and_balanced() {
        let cfg = SyntheticConfig {
            d: 8,
            m: 101,
            m_prime: 40,
            n: 31,
            identity_count: 20,
            ..SyntheticConfig::default()
        };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a, b);
        for ds in [&a.0, &a.1, &a.2] {
            let (p, n) = ds.sensitive_counts();
            assert!(p.abs_diff(n) <= 1, "{p} vs {n}");
        }
        assert_eq!(a.0.identities_disjoint(&a.1), Some(true));
        assert_eq!(a.0.identities_disjoint(&a.2), Some(true));
        assert_eq!(a.1.identities_disjoint(&a.2), Some(true));
        assert_eq!((a.0.len(), a.1.len(), a.2.len()), (101, 40, 31));
    }

    #[test]
    fn identities_keep_one_sensitive_class() {
        let (train, _, _) = generate_synthetic(&SyntheticConfig {
            d: 6,
            m: 60,
            m_prime: 20,
            n: 20,
            identity_count: 10,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let mut seen = std::collections::HashMap::new();
        for r in train.records() {
            let s = *seen
                .entry(r.utility_label.unwrap())
                .or_insert(r.sensitive_label.unwrap());
            assert_eq!(s, r.sensitive_label.unwrap());
        }
    }

    fn numbered(n: usize) -> LabeledDataset {
        let records = (0..n)
            .map(|i| {
                FeatureRecord::labeled(vec![i as f64], i as i64, if i % 2 == 0 { 1 } else { -1 })
            })
            .collect();
        LabeledDataset::new(records, Role::Train).unwrap()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = numbered(10);
        let (tr, va) = split_train_validation(&ds, 0.8, 3).unwrap();
        assert_eq!((tr.len(), va.len()), (8, 2));
        assert_eq!(
            split_indices(&ds, 0.8, 3).unwrap(),
            split_indices(&ds, 0.8, 3).unwrap()
        );
    }

    #[test]
    fn split_keeps_both_classes() {
        let ds = numbered(100);
        let (tr, va) = split_train_validation(&ds, 0.8, 11).unwrap();
        assert_eq!(tr.sensitive_counts(), (40, 40));
        assert_eq!(va.sensitive_counts(), (10, 10));
    }

    #[test]
    fn split_rejects_empty_side() {
        let ds = numbered(3);
        assert!(matches!(
            split_train_validation(&ds, 0.1, 0),
            Err(Error::Split(_))
        ));
        assert!(matches!(
            split_train_validation(&ds, 0.9, 0),
            Err(Error::Split(_))
        ));
        assert!(matches!(
            split_train_validation(&ds, 1.0, 0),
            Err(Error::Split(_))
        ));
    }
}
