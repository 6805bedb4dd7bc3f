//! Kernel-witness perturbation `f(x) = x + D theta(x)`.
//!
//! For every sample a target class `s'` is drawn at random and `theta`
//! follows fixed-step gradient ascent on
//! `c(theta) = s' (mean_{X+} k(., y) - mean_{X-} k(., y))`, `y = x + D theta`,
//! with a Gaussian kernel `k`. The columns of `D` are training feature
//! vectors.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, Target};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, squared_distance};
use crate::seed;

pub const DEFAULT_SIGMA: f64 = 0.001;
pub const DEFAULT_STEP_SIZE: f64 = 0.05;
pub const DEFAULT_ITERATIONS: usize = 10_000;
pub const DEFAULT_DICTIONARY_SIZE: usize = 100;

/// Points used by the median-distance bandwidth rule.
const BANDWIDTH_SAMPLE: usize = 1000;

/// Below this exponent `exp` underflows to zero.
const UNDERFLOW_EXPONENT: f64 = -745.0;

/// Named bandwidth rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// Median pairwise Euclidean distance among training features.
    MedianDistance,
}

/// A kernel bandwidth: an explicit value or a rule resolved at fit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bandwidth {
    Value(f64),
    Rule(BandwidthRule),
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::Value(DEFAULT_SIGMA)
    }
}

impl std::str::FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" | "median_distance" | "median-distance" => {
                Ok(Bandwidth::Rule(BandwidthRule::MedianDistance))
            }
            _ => s
                .parse::<f64>()
                .map(Bandwidth::Value)
                .map_err(|_| Error::Config(format!("invalid bandwidth `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmdConfig {
    /// Capped at the training-set size.
    pub dictionary_size: usize,
    pub sigma: Bandwidth,
    pub step_size: f64,
    pub iterations: usize,
    /// Fixed seeded subsample of each class set; `None` uses every point.
    pub class_subsample: Option<usize>,
    /// Stop once the coefficient gradient norm falls below this value.
    pub early_stop_tolerance: Option<f64>,
    pub seed: u64,
}

impl Default for MmdConfig {
    fn default() -> Self {
        Self {
            dictionary_size: DEFAULT_DICTIONARY_SIZE,
            sigma: Bandwidth::default(),
            step_size: DEFAULT_STEP_SIZE,
            iterations: DEFAULT_ITERATIONS,
            class_subsample: None,
            early_stop_tolerance: None,
            seed: 0,
        }
    }
}

impl MmdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dictionary_size == 0 {
            return Err(Error::Config("dictionary_size must be positive".into()));
        }
        if let Bandwidth::Value(s) = self.sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Parameter(format!("sigma must be positive, got {s}")));
            }
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::Config("step_size must be positive".into()));
        }
        if self.class_subsample == Some(0) {
            return Err(Error::Config("class_subsample must be positive".into()));
        }
        if let Some(t) = self.early_stop_tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config(
                    "early_stop_tolerance must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Serializable form of a fitted MMD sanitizer. Dictionary and class
/// points are stored as indices into the training set, so the same
/// training file is needed to rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmdState {
    pub dim: usize,
    pub dictionary_indices: Vec<usize>,
    pub sigma: f64,
    pub sigma_rule: Option<BandwidthRule>,
    pub step_size: f64,
    pub iterations: usize,
    pub class_subsample: Option<usize>,
    pub plus_indices: Vec<usize>,
    pub minus_indices: Vec<usize>,
    pub early_stop_tolerance: Option<f64>,
    pub seed: u64,
    pub training_digest: String,
}

/// Row-major class points with their squared norms.
#[derive(Debug, Clone, PartialEq)]
struct ClassSet {
    points: Vec<f64>,
    norms: Vec<f64>,
}

impl ClassSet {
    fn new(points: Vec<f64>, dim: usize) -> Self {
        let norms = points.chunks_exact(dim).map(|p| dot(p, p)).collect();
        Self { points, norms }
    }

    fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }
}

/// A fitted MMD sanitizer with its class sets and dictionary in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct MmdSanitizer {
    state: MmdState,
    /// Dictionary columns, each of length `dim`.
    dictionary: Vec<Vec<f64>>,
    plus: ClassSet,
    minus: ClassSet,
}

impl MmdSanitizer {
    /// Builds a sanitizer directly from explicit parts.
    pub fn from_parts(
        dictionary: Vec<Vec<f64>>,
        plus: Vec<Vec<f64>>,
        minus: Vec<Vec<f64>>,
        sigma: f64,
        step_size: f64,
        iterations: usize,
        seed: u64,
    ) -> Result<Self> {
        let dim = plus
            .first()
            .or(minus.first())
            .map(Vec::len)
            .ok_or_else(|| Error::State("class sets are empty".into()))?;
        if plus.is_empty() || minus.is_empty() {
            return Err(Error::State("both class sets must be nonempty".into()));
        }
        if let Some(bad) = dictionary
            .iter()
            .chain(&plus)
            .chain(&minus)
            .find(|v| v.len() != dim)
        {
            return Err(Error::Dimension {
                expected: dim,
                got: bad.len(),
            });
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Parameter(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let state = MmdState {
            dim,
            dictionary_indices: Vec::new(),
            sigma,
            sigma_rule: None,
            step_size,
            iterations,
            class_subsample: None,
            plus_indices: Vec::new(),
            minus_indices: Vec::new(),
            early_stop_tolerance: None,
            seed,
            training_digest: String::new(),
        };
        Ok(Self {
            state,
            dictionary,
            plus: ClassSet::new(plus.concat(), dim),
            minus: ClassSet::new(minus.concat(), dim),
        })
    }

    /// Rebuilds a sanitizer from its stored state and the training set it
    /// was fitted on.
    pub fn rehydrate(state: MmdState, train: &LabeledDataset) -> Result<Self> {
        if train.digest() != state.training_digest {
            return Err(Error::State(
                "training set does not match the one the sanitizer was fitted on".into(),
            ));
        }
        if train.dim() != state.dim {
            return Err(Error::Dimension {
                expected: state.dim,
                got: train.dim(),
            });
        }
        let fetch = |i: &usize| -> Result<&[f64]> {
            if *i < train.len() {
                Ok(train.features(*i))
            } else {
                Err(Error::State(format!("stored index {i} is out of range")))
            }
        };
        let dictionary = state
            .dictionary_indices
            .iter()
            .map(|i| fetch(i).map(<[f64]>::to_vec))
            .collect::<Result<_>>()?;
        let gather = |idx: &[usize]| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(idx.len() * state.dim);
            for i in idx {
                out.extend_from_slice(fetch(i)?);
            }
            Ok(out)
        };
        let plus = ClassSet::new(gather(&state.plus_indices)?, state.dim);
        let minus = ClassSet::new(gather(&state.minus_indices)?, state.dim);
        if plus.is_empty() || minus.is_empty() {
            return Err(Error::State("both class sets must be nonempty".into()));
        }
        Ok(Self {
            dictionary,
            plus,
            minus,
            state,
        })
    }

    pub fn state(&self) -> &MmdState {
        &self.state
    }

    pub fn dim(&self) -> usize {
        self.state.dim
    }

    pub fn sigma(&self) -> f64 {
        self.state.sigma
    }

    pub fn dictionary(&self) -> &[Vec<f64>] {
        &self.dictionary
    }

    pub fn dictionary_size(&self) -> usize {
        self.dictionary.len()
    }

    pub fn set_iterations(&mut self, iterations: usize) {
        self.state.iterations = iterations;
    }

    pub fn set_dictionary(&mut self, dictionary: Vec<Vec<f64>>) -> Result<()> {
        if let Some(bad) = dictionary.iter().find(|v| v.len() != self.dim()) {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: bad.len(),
            });
        }
        self.dictionary = dictionary;
        Ok(())
    }

    /// `x + D theta`.
    pub fn perturb(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for (column, &t) in self.dictionary.iter().zip(theta) {
            axpy(t, column, &mut y);
        }
        y
    }

    /// Target class drawn for `sample_seed`.
    pub fn target_class(&self, sample_seed: u64) -> i8 {
        let mut rng = seed::stream(
            seed::derive(self.state.seed, seed::TAG_MMD_SAMPLE),
            sample_seed,
        );
        if rng.random::<bool>() {
            1
        } else {
            -1
        }
    }

    fn check_inputs(&self, theta: &[f64], x: &[f64], target: i8) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if theta.len() != self.dictionary_size() {
            return Err(Error::Dimension {
                expected: self.dictionary_size(),
                got: theta.len(),
            });
        }
        if target != 1 && target != -1 {
            return Err(Error::Parameter(format!(
                "target class must be +1 or -1, got {target}"
            )));
        }
        Ok(())
    }

    /// Mean kernel value against one class; `g` receives the mean of
    /// `k(x_j, y)(x_j - y) / sigma^2`.
    fn class_terms(&self, class: &ClassSet, y: &[f64], g: &mut [f64]) -> f64 {
        let d = self.dim();
        let n = class.norms.len();
        let scale = 1.0 / (2.0 * self.sigma() * self.sigma());
        let yy = dot(y, y);
        let kernel = |nn: f64, py: f64| {
            // clamp rounding below zero but let NaN through
            let d2 = nn + yy - 2.0 * py;
            kernel_from_squared(if d2 < 0.0 { 0.0 } else { d2 } * scale)
        };
        let mut total = 0.0;
        g.iter_mut().for_each(|v| *v = 0.0);
        let rows = class.points.chunks_exact(4 * d);
        let norms = class.norms.chunks_exact(4);
        let (tail_rows, tail_norms) = (rows.remainder(), norms.remainder());
        for (block, nn) in rows.zip(norms) {
            let (p0, rest) = block.split_at(d);
            let (p1, rest) = rest.split_at(d);
            let (p2, p3) = rest.split_at(d);
            let mut py = [0.0; 4];
            for i in 0..d {
                py[0] += p0[i] * y[i];
                py[1] += p1[i] * y[i];
                py[2] += p2[i] * y[i];
                py[3] += p3[i] * y[i];
            }
            let k = [
                kernel(nn[0], py[0]),
                kernel(nn[1], py[1]),
                kernel(nn[2], py[2]),
                kernel(nn[3], py[3]),
            ];
            total += (k[0] + k[1]) + (k[2] + k[3]);
            for i in 0..d {
                g[i] += (k[0] * p0[i] + k[1] * p1[i]) + (k[2] * p2[i] + k[3] * p3[i]);
            }
        }
        for (p, &nn) in tail_rows.chunks_exact(d).zip(tail_norms) {
            let k = kernel(nn, dot(p, y));
            total += k;
            axpy(k, p, g);
        }
        // sum k_j (x_j - y) = sum k_j x_j - (sum k_j) y
        let denom = n as f64 * self.sigma() * self.sigma();
        for (gi, yi) in g.iter_mut().zip(y) {
            *gi = (*gi - total * yi) / denom;
        }
        total / n as f64
    }

    fn witness_gradient(
        &self,
        y: &[f64],
        target: i8,
        gp: &mut [f64],
        gm: &mut [f64],
    ) -> (f64, Vec<f64>) {
        let kp = self.class_terms(&self.plus, y, gp);
        let km = self.class_terms(&self.minus, y, gm);
        let s = f64::from(target);
        let grad_y: Vec<f64> = gp.iter().zip(gm.iter()).map(|(a, b)| s * (a - b)).collect();
        (s * (kp - km), grad_y)
    }

    fn coefficient_gradient(&self, grad_y: &[f64]) -> Vec<f64> {
        self.dictionary
            .iter()
            .map(|c| crate::linalg::dot(c, grad_y))
            .collect()
    }
}

/// Reads `exp(-e)` for `e = |x - x'|^2 / 2 sigma^2`, flushing underflow to 0.
fn kernel_from_squared(e: f64) -> f64 {
    if -e < UNDERFLOW_EXPONENT {
        0.0
    } else {
        (-e).exp()
    }
}

/// `exp(-|x - x'|^2 / 2 sigma^2)`.
pub fn gaussian_kernel(x: &[f64], x2: &[f64], sigma: f64) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::Parameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if x.len() != x2.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: x2.len(),
        });
    }
    Ok(kernel_from_squared(
        squared_distance(x, x2) / (2.0 * sigma * sigma),
    ))
}

pub fn mmd_cost(theta: &[f64], x: &[f64], san: &MmdSanitizer, target: i8) -> Result<f64> {
    san.check_inputs(theta, x, target)?;
    let y = san.perturb(x, theta);
    let mut scratch = vec![0.0; san.dim()];
    let kp = san.class_terms(&san.plus, &y, &mut scratch);
    let km = san.class_terms(&san.minus, &y, &mut scratch);
    Ok(f64::from(target) * (kp - km))
}

/// Gradient of [`mmd_cost`] with respect to `theta`.
pub fn mmd_cost_gradient(
    theta: &[f64],
    x: &[f64],
    san: &MmdSanitizer,
    target: i8,
) -> Result<Vec<f64>> {
    san.check_inputs(theta, x, target)?;
    let y = san.perturb(x, theta);
    let mut gp = vec![0.0; san.dim()];
    let mut gm = vec![0.0; san.dim()];
    let (_, grad_y) = san.witness_gradient(&y, target, &mut gp, &mut gm);
    Ok(san.coefficient_gradient(&grad_y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmdTrace {
    pub output: Vec<f64>,
    pub target: i8,
    pub theta: Vec<f64>,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations_run: usize,
    pub perturbation_norm: f64,
}

/// Runs the ascent from `theta = 0` toward `target`.
pub fn ascend(san: &MmdSanitizer, x: &[f64], target: i8) -> Result<MmdTrace> {
    let nd = san.dictionary_size();
    let mut theta = vec![0.0; nd];
    san.check_inputs(&theta, x, target)?;
    let mut gp = vec![0.0; san.dim()];
    let mut gm = vec![0.0; san.dim()];
    let mut y = x.to_vec();
    let mut initial_cost = None;
    let mut iterations_run = 0;
    for it in 0..san.state.iterations {
        let (cost, grad_y) = san.witness_gradient(&y, target, &mut gp, &mut gm);
        initial_cost.get_or_insert(cost);
        let grad = san.coefficient_gradient(&grad_y);
        if !grad.iter().all(|g| g.is_finite()) || !cost.is_finite() {
            return Err(Error::Divergence { iteration: it });
        }
        if let Some(tol) = san.state.early_stop_tolerance {
            if norm(&grad) < tol {
                break;
            }
        }
        axpy(san.state.step_size, &grad, &mut theta);
        y = san.perturb(x, &theta);
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { iteration: it });
        }
        iterations_run = it + 1;
    }
    let final_cost = mmd_cost(&theta, x, san, target)?;
    let initial_cost = match initial_cost {
        Some(c) => c,
        None => final_cost,
    };
    let perturbation_norm = norm(&y.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>());
    Ok(MmdTrace {
        output: y,
        target,
        theta,
        initial_cost,
        final_cost,
        iterations_run,
        perturbation_norm,
    })
}

/// `x + D theta` after the ascent toward the class drawn for `sample_seed`.
pub fn sanitize_mmd(x: &[f64], san: &MmdSanitizer, sample_seed: u64) -> Result<Vec<f64>> {
    sanitize_mmd_traced(x, san, sample_seed).map(|t| t.output)
}

pub fn sanitize_mmd_traced(x: &[f64], san: &MmdSanitizer, sample_seed: u64) -> Result<MmdTrace> {
    ascend(san, x, san.target_class(sample_seed))
}

/// Median pairwise distance among (a seeded subsample of) the features.
pub fn median_pairwise_distance(ds: &LabeledDataset, seed: u64) -> Result<f64> {
    if ds.len() < 2 {
        return Err(Error::State(
            "median distance needs at least two points".into(),
        ));
    }
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    if ds.len() > BANDWIDTH_SAMPLE {
        let mut rng = seed::stream(seed, seed::TAG_BANDWIDTH);
        idx = rand::seq::index::sample(&mut rng, ds.len(), BANDWIDTH_SAMPLE).into_vec();
        idx.sort_unstable();
    }
    let mut dists = Vec::with_capacity(idx.len() * (idx.len() - 1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            dists.push(squared_distance(ds.features(i), ds.features(j)).sqrt());
        }
    }
    let n = dists.len();
    let mid = n / 2;
    let (_, upper, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    let median = if n % 2 == 1 {
        upper
    } else {
        let lower = dists[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    };
    if median.is_nan() || median <= 0.0 {
        return Err(Error::Parameter("median pairwise distance is zero".into()));
    }
    Ok(median)
}

fn seeded_subset(indices: Vec<usize>, keep: Option<usize>, rng: &mut seed::Rng) -> Vec<usize> {
    match keep {
        Some(k) if k < indices.len() => {
            let mut picked: Vec<usize> = rand::seq::index::sample(rng, indices.len(), k)
                .into_iter()
                .map(|i| indices[i])
                .collect();
            picked.sort_unstable();
            picked
        }
        _ => indices,
    }
}

/// Draws the dictionary and class sets from `train`.
pub fn fit_mmd_sanitizer(train: &LabeledDataset, cfg: &MmdConfig) -> Result<MmdSanitizer> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (i, r) in train.records().iter().enumerate() {
        match r.binary_label(Target::Sensitive)? {
            1 => plus.push(i),
            _ => minus.push(i),
        }
    }
    if plus.is_empty() || minus.is_empty() {
        return Err(Error::State(
            "both sensitive classes must occur in training".into(),
        ));
    }
    let mut rng = seed::stream(cfg.seed, seed::TAG_CLASS_SUBSAMPLE);
    let plus = seeded_subset(plus, cfg.class_subsample, &mut rng);
    let minus = seeded_subset(minus, cfg.class_subsample, &mut rng);

    let nd = cfg.dictionary_size.min(train.len());
    let mut rng = seed::stream(cfg.seed, seed::TAG_DICTIONARY);
    let mut dictionary_indices = rand::seq::index::sample(&mut rng, train.len(), nd).into_vec();
    dictionary_indices.sort_unstable();

    let (sigma, sigma_rule) = match cfg.sigma {
        Bandwidth::Value(s) => (s, None),
        Bandwidth::Rule(BandwidthRule::MedianDistance) => (
            median_pairwise_distance(train, cfg.seed)?,
            Some(BandwidthRule::MedianDistance),
        ),
    };
    let state = MmdState {
        dim: train.dim(),
        dictionary_indices,
        sigma,
        sigma_rule,
        step_size: cfg.step_size,
        iterations: cfg.iterations,
        class_subsample: cfg.class_subsample,
        plus_indices: plus,
        minus_indices: minus,
        early_stop_tolerance: cfg.early_stop_tolerance,
        seed: cfg.seed,
        training_digest: train.digest(),
    };
    MmdSanitizer::rehydrate(state, train)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(sigma: f64) -> MmdSanitizer {
        MmdSanitizer::from_parts(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 1.0]],
            vec![vec![-1.0, -1.0]],
            sigma,
            DEFAULT_STEP_SIZE,
            0,
            3,
        )
        .unwrap()
    }

    #[test]
    fn kernel_values() {
        let x = [0.5, -1.0, 2.0];
        assert_eq!(gaussian_kernel(&x, &x, 0.3).unwrap(), 1.0);
        let sigma: f64 = 0.7;
        let x2 = [0.5 + (2.0f64).sqrt() * sigma, -1.0, 2.0];
        let k = gaussian_kernel(&x, &x2, sigma).unwrap();
        assert!((k - (-1.0f64).exp()).abs() < 1e-12);
        let far = gaussian_kernel(&[0.0], &[1.0], 0.001).unwrap();
        assert_eq!(far, 0.0);
        assert!(matches!(
            gaussian_kernel(&x, &x, 0.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            gaussian_kernel(&x, &x, -1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn cost_closed_forms() {
        let san = two_point(1.0);
        let theta = [0.0, 0.0];
        // x at the sole member of X+
        let c = mmd_cost(&theta, &[1.0, 1.0], &san, 1).unwrap();
        assert!((c - (1.0 - (-4.0f64).exp())).abs() < 1e-15);
        let neg = mmd_cost(&theta, &[1.0, 1.0], &san, -1).unwrap();
        assert_eq!(neg, -c);
        // equidistant point
        let z = mmd_cost(&theta, &[1.0, -1.0], &san, 1).unwrap();
        assert!(z.abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_at_symmetry_point_and_for_zero_dictionary() {
        // each class is symmetric about the origin, D is a symmetric matrix
        let san = MmdSanitizer::from_parts(
            vec![vec![1.0, 0.5], vec![0.5, 1.0]],
            vec![vec![2.0, 0.0], vec![-2.0, 0.0]],
            vec![vec![0.0, 1.0], vec![0.0, -1.0]],
            1.0,
            DEFAULT_STEP_SIZE,
            0,
            0,
        )
        .unwrap();
        for target in [1, -1] {
            let g = mmd_cost_gradient(&[0.0, 0.0], &[0.0, 0.0], &san, target).unwrap();
            assert!(g.iter().all(|v| v.abs() < 1e-10));
        }
        let mut zero = two_point(1.0);
        zero.set_dictionary(vec![vec![0.0, 0.0]; 2]).unwrap();
        let g = mmd_cost_gradient(&[0.3, -0.2], &[0.4, 0.1], &zero, 1).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn no_iterations_returns_input() {
        let san = two_point(1.0);
        let x = [0.25, -0.75];
        assert_eq!(sanitize_mmd(&x, &san, 9).unwrap(), x.to_vec());
    }

    #[test]
    fn ascent_raises_cost() {
        let mut san = two_point(1.5);
        san.set_iterations(200);
        for seed in 0..10 {
            let t = sanitize_mmd_traced(&[0.2, -0.1], &san, seed).unwrap();
            assert!(t.final_cost >= t.initial_cost);
            assert_eq!(t.output, san.perturb(&[0.2, -0.1], &t.theta));
        }
    }

    #[test]
    fn divergence_reports_iteration() {
        let mut san = MmdSanitizer::from_parts(
            vec![vec![1e300, 0.0]],
            vec![vec![1.0, 1.0]],
            vec![vec![-1.0, -1.0]],
            1.0,
            1e300,
            5,
            0,
        )
        .unwrap();
        san.set_iterations(5);
        let err = ascend(&san, &[0.9, 0.9], 1).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn bandwidth_parsing() {
        assert_eq!(
            "median".parse::<Bandwidth>().unwrap(),
            Bandwidth::Rule(BandwidthRule::MedianDistance)
        );
        assert_eq!("0.5".parse::<Bandwidth>().unwrap(), Bandwidth::Value(0.5));
        assert!("wide".parse::<Bandwidth>().is_err());
        let json = serde_json::to_string(&Bandwidth::Rule(BandwidthRule::MedianDistance)).unwrap();
        assert_eq!(json, "\"median_distance\"");
        let back: Bandwidth = serde_json::from_str("0.001").unwrap();
        assert_eq!(back, Bandwidth::Value(0.001));
    }
}
