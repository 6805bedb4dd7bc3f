use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{two_class_labels, Classifier, GridScore, TrainingGrid};
use crate::data::{split_train_validation, LabeledDataset, Target};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};
use crate::seed;

/// Soft-margin linear SVM `sign(w.x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub chosen_c: f64,
    pub seed: u64,
    pub standardized: bool,
    #[serde(default)]
    pub validation: Vec<GridScore>,
}

impl LinearModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

impl Classifier for LinearModel {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    /// A zero score maps to +1.
    fn decide(&self, x: &[f64]) -> i8 {
        if self.score(x) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    /// Stop when the spread of projected dual gradients falls below this.
    pub tolerance: f64,
    pub max_epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_epochs: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SvmFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Dual objective `1/2 |w|^2 - sum(alpha)` after each epoch.
    pub dual_objective: Vec<f64>,
    pub epochs: usize,
    pub converged: bool,
}

/// Dual coordinate descent for the L1-loss soft-margin SVM
/// `min 1/2 |w|^2 + 1/2 b^2 + C sum max(0, 1 - y (w.x + b))`.
///
/// The bias is handled as an extra constant feature. Every coordinate step
/// minimizes the dual exactly inside the box `[0, C]`, so the dual objective
/// never increases between epochs. Coordinates are visited in a seeded
/// random order each epoch.
pub fn fit_svm(
    rows: &[&[f64]],
    labels: &[i8],
    c: f64,
    seed: u64,
    params: SvmParams,
) -> Result<SvmFit> {
    if rows.is_empty() || rows.len() != labels.len() {
        return Err(Error::Training("SVM needs one label per row".into()));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Parameter(format!("C must be positive, got {c}")));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Dimension {
            expected: d,
            got: rows.iter().map(|r| r.len()).find(|&l| l != d).unwrap_or(d),
        });
    }
    if rows.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numeric("non-finite feature in SVM input".into()));
    }

    let n = rows.len();
    let q_diag: Vec<f64> = rows.iter().map(|r| dot(r, r) + 1.0).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seed::rng(seed);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut epochs = 0;

    while epochs < params.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let y = f64::from(labels[i]);
            let g = y * (dot(&w, rows[i]) + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, c);
                let delta = (alpha[i] - old) * y;
                if delta != 0.0 {
                    axpy(delta, rows[i], &mut w);
                    b += delta;
                }
            }
        }
        trace.push(0.5 * (dot(&w, &w) + b * b) - alpha.iter().sum::<f64>());
        if pg_max - pg_min < params.tolerance {
            converged = true;
            break;
        }
    }
    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(Error::Numeric(
            "SVM solver produced non-finite weights".into(),
        ));
    }
    Ok(SvmFit {
        weights: w,
        bias: b,
        dual_objective: trace,
        epochs,
        converged,
    })
}

/// Primal objective of [`fit_svm`] at `(w, b)`.
pub fn primal_objective(rows: &[&[f64]], labels: &[i8], c: f64, w: &[f64], b: f64) -> f64 {
    let hinge: f64 = rows
        .iter()
        .zip(labels)
        .map(|(r, &y)| (1.0 - f64::from(y) * (dot(w, r) + b)).max(0.0))
        .sum();
    0.5 * (dot(w, w) + b * b) + c * hinge
}

struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(ds: &LabeledDataset) -> Self {
        let d = ds.dim();
        let n = ds.len() as f64;
        let mut mean = vec![0.0; d];
        for r in ds.records() {
            axpy(1.0 / n, &r.features, &mut mean);
        }
        let mut var = vec![0.0; d];
        for r in ds.records() {
            for j in 0..d {
                let c = r.features[j] - mean[j];
                var[j] += c * c / n;
            }
        }
        // constant columns (e.g. after a projection) keep unit scale
        let scale = var
            .iter()
            .map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, scale }
    }

    fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Maps `(w, b)` fitted on standardized inputs back to raw inputs.
    fn unscale(&self, w: Vec<f64>, b: f64) -> (Vec<f64>, f64) {
        let raw: Vec<f64> = w.iter().zip(&self.scale).map(|(w, s)| w / s).collect();
        let shift = dot(&raw, &self.mean);
        (raw, b - shift)
    }
}

fn fit_on(
    ds: &LabeledDataset,
    target: Target,
    c: f64,
    seed: u64,
    standardize: bool,
) -> Result<(Vec<f64>, f64)> {
    let labels = two_class_labels(ds, target)?;
    if standardize {
        let st = Standardizer::fit(ds);
        let owned: Vec<Vec<f64>> = ds
            .records()
            .iter()
            .map(|r| st.transform(&r.features))
            .collect();
        let rows: Vec<&[f64]> = owned.iter().map(Vec::as_slice).collect();
        let fit = fit_svm(&rows, &labels, c, seed, SvmParams::default())?;
        Ok(st.unscale(fit.weights, fit.bias))
    } else {
        let rows: Vec<&[f64]> = ds.records().iter().map(|r| r.features.as_slice()).collect();
        let fit = fit_svm(&rows, &labels, c, seed, SvmParams::default())?;
        Ok((fit.weights, fit.bias))
    }
}

fn accuracy(w: &[f64], b: f64, ds: &LabeledDataset, target: Target) -> Result<f64> {
    let mut hits = 0usize;
    for r in ds.records() {
        let pred = if dot(w, &r.features) + b >= 0.0 {
            1
        } else {
            -1
        };
        if pred == r.binary_label(target)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / ds.len() as f64)
}

/// Grid search over `grid.svm_c_values` on a seeded train/validation split,
/// then a refit on all of `train` with the winning `C`. Ties go to the
/// smaller `C`.
pub fn train_linear_svm(
    train: &LabeledDataset,
    target: Target,
    grid: &TrainingGrid,
) -> Result<LinearModel> {
    grid.validate()?;
    two_class_labels(train, target)?;
    let (fit_side, val_side) =
        split_train_validation(train, 1.0 - grid.validation_fraction, grid.seed)?;
    let base = seed::derive(grid.seed, seed::TAG_SVM);

    let mut cs = grid.svm_c_values.clone();
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    let mut scores = Vec::with_capacity(cs.len());
    let mut best: Option<(f64, f64)> = None;
    for (i, &c) in cs.iter().enumerate() {
        let (w, b) = fit_on(
            &fit_side,
            target,
            c,
            seed::derive(base, i as u64),
            grid.standardize_svm,
        )?;
        let acc = accuracy(&w, b, &val_side, target)?;
        scores.push(GridScore {
            setting: format!("C={c}"),
            validation_accuracy: acc,
        });
        if best.is_none_or(|(_, a)| acc > a) {
            best = Some((c, acc));
        }
    }
    let (chosen_c, _) = best.expect("nonempty grid");
    let refit_seed = seed::derive(base, u64::MAX);
    let (weights, bias) = fit_on(train, target, chosen_c, refit_seed, grid.standardize_svm)?;
    Ok(LinearModel {
        weights,
        bias,
        chosen_c,
        seed: grid.seed,
        standardized: grid.standardize_svm,
        validation: scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureRecord, Role};

    fn model(w: Vec<f64>, b: f64) -> LinearModel {
        LinearModel {
            weights: w,
            bias: b,
            chosen_c: 1.0,
            seed: 0,
            standardized: false,
            validation: vec![],
        }
    }

    #[test]
    fn predict_examples() {
        let m = model(vec![1.0, 0.0], 0.0);
        assert_eq!(m.predict(&[2.0, 5.0]).unwrap(), 1);
        assert_eq!(m.predict(&[0.0, 3.0]).unwrap(), 1);
        assert_eq!(m.predict(&[-0.1, 3.0]).unwrap(), -1);
        assert!(matches!(m.predict(&[1.0]), Err(Error::Dimension { .. })));
    }

    fn blobs(n: usize, gap: f64) -> (Vec<Vec<f64>>, Vec<i8>) {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = seed::rng(5);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let y: i8 = if i % 2 == 0 { 1 } else { -1 };
            let mut x: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
            x[1] += f64::from(y) * gap / 2.0;
            xs.push(x);
            ys.push(y);
        }
        (xs, ys)
    }

    #[test]
    fn dual_objective_is_monotone() {
        let (xs, ys) = blobs(200, 1.0);
        let rows: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        for c in [0.1, 1.0, 100.0] {
            let fit = fit_svm(&rows, &ys, c, 9, SvmParams::default()).unwrap();
            for pair in fit.dual_objective.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-9 * pair[0].abs().max(1.0),
                    "{pair:?}"
                );
            }
        }
    }

    #[test]
    fn duality_gap_closes() {
        let (xs, ys) = blobs(200, 2.0);
        let rows: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let fit = fit_svm(
            &rows,
            &ys,
            1.0,
            3,
            SvmParams {
                tolerance: 1e-6,
                max_epochs: 20000,
            },
        )
        .unwrap();
        assert!(fit.converged);
        let primal = primal_objective(&rows, &ys, 1.0, &fit.weights, fit.bias);
        let dual = -fit.dual_objective.last().unwrap();
        assert!((primal - dual).abs() <= 1e-3 * primal, "{primal} vs {dual}");
    }

    #[test]
    fn separable_fixture_is_fit() {
        let (xs, ys) = blobs(200, 8.0);
        let rows: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let fit = fit_svm(&rows, &ys, 1.0, 1, SvmParams::default()).unwrap();
        let m = model(fit.weights, fit.bias);
        let hits = xs
            .iter()
            .zip(&ys)
            .filter(|(x, y)| m.decide(x) == **y)
            .count();
        assert!(hits as f64 / 200.0 >= 0.99);
    }

    #[test]
    fn single_class_is_training_error() {
        let records = (0..6)
            .map(|i| FeatureRecord::labeled(vec![i as f64, 1.0], 0, 1))
            .collect();
        let ds = LabeledDataset::new(records, Role::Train).unwrap();
        assert!(matches!(
            train_linear_svm(&ds, Target::Sensitive, &TrainingGrid::default()),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn standardized_fit_maps_back_to_raw_space() {
        let (mut xs, ys) = blobs(300, 6.0);
        for x in &mut xs {
            x[1] = x[1] * 50.0 + 7.0;
        }
        let records = xs
            .iter()
            .zip(&ys)
            .map(|(x, &y)| FeatureRecord::labeled(x.clone(), 0, y))
            .collect();
        let ds = LabeledDataset::new(records, Role::Train).unwrap();
        let grid = TrainingGrid {
            standardize_svm: true,
            ..TrainingGrid::default()
        };
        let m = train_linear_svm(&ds, Target::Sensitive, &grid).unwrap();
        assert!(m.standardized);
        let hits = xs
            .iter()
            .zip(&ys)
            .filter(|(x, y)| m.decide(x) == **y)
            .count();
        assert!(hits as f64 / 300.0 >= 0.97);
    }
}
