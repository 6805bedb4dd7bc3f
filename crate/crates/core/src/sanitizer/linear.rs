//! Iterative null-space projection `f(x) = P x`.
//!
//! Each round trains a linear SVM for `s` on the projected training set and
//! collapses its weight direction with the rank-1 deflation `I - w w^T`
//! (`w` unit). Rounds stop once the SVM's sensitive accuracy on the
//! projected evaluation set drops to `stop_accuracy`, or the budget runs out.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, Target};
use crate::error::{Error, Result};
use crate::linalg::{dot, mat_vec, norm};
use crate::metrics::classification_accuracy;
use crate::predictors::{train_linear_svm, TrainingGrid};
use crate::seed;

pub const DEFAULT_STOP_ACCURACY: f64 = 0.55;

/// Rank tolerance relative to the largest singular value.
pub const RANK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSanitizer {
    pub dim: usize,
    /// Composite projection, row-major `dim x dim`.
    pub projection: Vec<f64>,
    /// Unit SVM weight collapsed in each round, in that round's projected
    /// coordinates.
    pub collapsed_directions: Vec<Vec<f64>>,
    pub stop_accuracy: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// SVM sensitive accuracy on the projected evaluation set, one entry
    /// per round including the final check.
    pub accuracy_trace: Vec<f64>,
    pub seed: u64,
    /// Digest of the set that drove the stopping rule.
    #[serde(default)]
    pub evaluation_digest: String,
}

impl LinearSanitizer {
    pub fn identity(dim: usize) -> Self {
        let mut projection = vec![0.0; dim * dim];
        for i in 0..dim {
            projection[i * dim + i] = 1.0;
        }
        Self {
            dim,
            projection,
            collapsed_directions: Vec::new(),
            stop_accuracy: DEFAULT_STOP_ACCURACY,
            iterations_used: 0,
            converged: true,
            accuracy_trace: Vec::new(),
            seed: 0,
            evaluation_digest: String::new(),
        }
    }

    /// `P x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(mat_vec(&self.projection, self.dim, self.dim, x))
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.projection)
    }

    /// Numerical rank of `P` at [`RANK_TOLERANCE`].
    pub fn rank(&self) -> usize {
        numerical_rank(&self.matrix(), RANK_TOLERANCE)
    }

    /// The deflation `I - w w^T` of round `k`.
    pub fn deflation(&self, k: usize) -> DMatrix<f64> {
        let w = nalgebra::DVector::from_column_slice(&self.collapsed_directions[k]);
        DMatrix::identity(self.dim, self.dim) - &w * w.transpose()
    }

    /// The composite projection after the first `k` rounds.
    pub fn partial_projection(&self, k: usize) -> DMatrix<f64> {
        (0..k).fold(DMatrix::identity(self.dim, self.dim), |p, i| {
            self.deflation(i) * p
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.projection.len() != self.dim * self.dim {
            return Err(Error::State(format!(
                "projection has {} entries, expected {}",
                self.projection.len(),
                self.dim * self.dim
            )));
        }
        if self.collapsed_directions.len() != self.iterations_used {
            return Err(Error::State(
                "one collapsed direction per iteration expected".into(),
            ));
        }
        for w in &self.collapsed_directions {
            if w.len() != self.dim || (norm(w) - 1.0).abs() > 1e-9 {
                return Err(Error::State(
                    "collapsed directions must be unit vectors".into(),
                ));
            }
        }
        Ok(())
    }
}

pub fn numerical_rank(m: &DMatrix<f64>, relative_tolerance: f64) -> usize {
    let sv = m.singular_values();
    let largest = sv.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sv.iter()
        .filter(|&&s| s > relative_tolerance * largest)
        .count()
}

fn project(ds: &LabeledDataset, p: &[f64]) -> Result<LabeledDataset> {
    let d = ds.dim();
    let features = ds
        .records()
        .iter()
        .map(|r| mat_vec(p, d, d, &r.features))
        .collect();
    ds.with_features(features)
}

/// Fits the projection. `evaluation` drives the stopping rule; passing the
/// test set reproduces the classic procedure, passing a separate split
/// keeps the test set out of fitting.
pub fn fit_linear_sanitizer(
    train: &LabeledDataset,
    evaluation: &LabeledDataset,
    stop_accuracy: f64,
    max_iterations: usize,
    grid: &TrainingGrid,
) -> Result<LinearSanitizer> {
    let d = train.dim();
    if evaluation.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: evaluation.dim(),
        });
    }
    if max_iterations > d {
        return Err(Error::Config(format!(
            "max_iterations ({max_iterations}) cannot exceed the dimension ({d})"
        )));
    }
    if !(0.0..=1.0).contains(&stop_accuracy) {
        return Err(Error::Config("stop_accuracy must be in [0,1]".into()));
    }

    let mut san = LinearSanitizer::identity(d);
    san.stop_accuracy = stop_accuracy;
    san.converged = false;
    san.seed = grid.seed;
    san.evaluation_digest = evaluation.digest();
    loop {
        let round = san.iterations_used;
        let projected_train = project(train, &san.projection)?;
        let projected_eval = project(evaluation, &san.projection)?;
        let round_grid = grid.with_seed(seed::derive(grid.seed, round as u64));
        let svm = train_linear_svm(&projected_train, Target::Sensitive, &round_grid)?;
        let acc = classification_accuracy(&svm, &projected_eval, Target::Sensitive)?;
        san.accuracy_trace.push(acc);
        log::debug!("linear sanitizer round {round}: CA_s = {acc:.4}");
        if acc <= stop_accuracy {
            san.converged = true;
            break;
        }
        if round == max_iterations {
            break;
        }
        let len = norm(&svm.weights);
        if len == 0.0 || !len.is_finite() {
            return Err(Error::Training(
                "SVM weight vanished; nothing left to collapse".into(),
            ));
        }
        let w: Vec<f64> = svm.weights.iter().map(|v| v / len).collect();
        // P <- (I - w w^T) P = P - w (w^T P)
        let mut wt_p = vec![0.0; d];
        for (i, wi) in w.iter().enumerate() {
            let row = &san.projection[i * d..(i + 1) * d];
            for (acc, v) in wt_p.iter_mut().zip(row) {
                *acc += wi * v;
            }
        }
        for (i, wi) in w.iter().enumerate() {
            for (j, v) in wt_p.iter().enumerate() {
                san.projection[i * d + j] -= wi * v;
            }
        }
        san.collapsed_directions.push(w);
        san.iterations_used += 1;
    }
    Ok(san)
}

/// `|w_k . (P'_k P_{k-1} x)|` maximized over rounds `k` and inputs `xs`,
/// with `w_k` the unit direction of round `k`.
pub fn max_collapse_residual(san: &LinearSanitizer, xs: &[&[f64]]) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..san.iterations_used {
        let before = san.partial_projection(k);
        let deflate = san.deflation(k);
        let step = deflate * before;
        let w = &san.collapsed_directions[k];
        for x in xs {
            let v = nalgebra::DVector::from_column_slice(x);
            let projected = &step * v;
            worst = worst.max(dot(w, projected.as_slice()).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_leaves_inputs() {
        let san = LinearSanitizer::identity(3);
        assert_eq!(san.apply(&[1.0, -2.0, 3.5]).unwrap(), vec![1.0, -2.0, 3.5]);
        assert_eq!(san.rank(), 3);
        assert!(matches!(san.apply(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn single_collapse_annihilates_direction() {
        let mut san = LinearSanitizer::identity(3);
        let w = vec![0.6, 0.0, 0.8];
        san.collapsed_directions.push(w.clone());
        san.iterations_used = 1;
        // symmetric, so column-major storage equals row-major
        san.projection = san.deflation(0).as_slice().to_vec();
        san.validate().unwrap();
        let y = san.apply(&[2.0, 1.0, -3.0]).unwrap();
        assert!(dot(&w, &y).abs() < 1e-12);
        assert_eq!(san.rank(), 2);
        let yy = san.apply(&y).unwrap();
        let diff: f64 = y.iter().zip(&yy).map(|(a, b)| (a - b).abs()).sum();
        assert!(diff < 1e-12);
    }
}
