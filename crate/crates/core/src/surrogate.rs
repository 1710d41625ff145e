//! Sparse linear surrogate fitted on the auxiliary dataset.
//!
//! Minimizes `(1/m)·Σ(yᵢ − w·xᵢ − b)² + λ·Ω(w)` with an unpenalized intercept
//! `b`, where `Ω` is `‖w‖₁` (coordinate descent) or `‖w‖₂²` (normal
//! equations). Both solvers work on centered data through the sufficient
//! statistics `G = X̃ᵀX̃/m` and `c = X̃ᵀỹ/m`, which are accumulated from the
//! sparse binary rows directly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perturb::AdjacencyFeatureVector;

#[derive(Debug, Error, PartialEq)]
pub enum SurrogateError {
    #[error("feature dimension is zero")]
    Degenerate,
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("lambda must be >= 0, got {0}")]
    NegativeLambda(f64),
    #[error("feature vector has length {actual}, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("design matrix is rank deficient and lambda is 0")]
    RankDeficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    #[default]
    L1,
    L2,
}

impl Penalty {
    pub fn as_str(self) -> &'static str {
        match self {
            Penalty::L1 => "l1",
            Penalty::L2 => "l2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSettings {
    pub lambda: f64,
    pub penalty: Penalty,
    /// Coordinate descent stops once the largest coordinate update of a sweep
    /// is below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SurrogateSettings {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            penalty: Penalty::L1,
            tol: 1e-7,
            max_iter: 10_000,
        }
    }
}

/// Rows of (adjacency features, model score).
#[derive(Debug, Clone, Default)]
pub struct AuxiliaryDataset {
    feature_dim: usize,
    features: Vec<AdjacencyFeatureVector>,
    targets: Vec<f64>,
}

impl AuxiliaryDataset {
    pub fn new(feature_dim: usize) -> Self {
        Self {
            feature_dim,
            features: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn with_capacity(feature_dim: usize, rows: usize) -> Self {
        Self {
            feature_dim,
            features: Vec::with_capacity(rows),
            targets: Vec::with_capacity(rows),
        }
    }

    pub fn push(
        &mut self,
        features: AdjacencyFeatureVector,
        target: f64,
    ) -> Result<(), SurrogateError> {
        if features.len() != self.feature_dim {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.feature_dim,
                actual: features.len(),
            });
        }
        if !target.is_finite() {
            return Err(SurrogateError::NonFinite("target"));
        }
        self.features.push(features);
        self.targets.push(target);
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn features(&self) -> &[AdjacencyFeatureVector] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub penalty: Penalty,
    pub objective_value: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// Objective after each coordinate-descent sweep (single entry for L2).
    pub objective_trace: Vec<f64>,
}

impl SurrogateFit {
    pub fn predict(&self, features: &AdjacencyFeatureVector) -> Result<f64, SurrogateError> {
        if features.len() != self.weights.len() {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.weights.len(),
                actual: features.len(),
            });
        }
        Ok(self.intercept + features.active().map(|j| self.weights[j]).sum::<f64>())
    }
}

/// Centered second-order statistics of a dataset.
struct Moments {
    p: usize,
    // row-major p×p, centered and scaled by 1/m
    gram: Vec<f64>,
    cross: Vec<f64>,
    feature_mean: Vec<f64>,
    target_mean: f64,
    target_var: f64,
}

impl Moments {
    fn from_dataset(data: &AuxiliaryDataset) -> Self {
        let p = data.feature_dim;
        let m = data.len() as f64;
        let target_mean = data.targets.iter().sum::<f64>() / m;

        let mut counts = vec![0u64; p * p];
        let mut col_sums = vec![0u64; p];
        let mut cross = vec![0.0; p];
        let mut target_var = 0.0;
        let mut active = Vec::new();
        for (x, &y) in data.features.iter().zip(&data.targets) {
            let yc = y - target_mean;
            target_var += yc * yc;
            active.clear();
            active.extend(x.active());
            for (ai, &a) in active.iter().enumerate() {
                col_sums[a] += 1;
                cross[a] += yc;
                for &b in &active[..=ai] {
                    counts[a * p + b] += 1;
                }
            }
        }

        let feature_mean: Vec<f64> = col_sums.iter().map(|&s| s as f64 / m).collect();
        let mut gram = vec![0.0; p * p];
        for a in 0..p {
            for b in 0..=a {
                let g = counts[a * p + b] as f64 / m - feature_mean[a] * feature_mean[b];
                gram[a * p + b] = g;
                gram[b * p + a] = g;
            }
        }
        for c in &mut cross {
            *c /= m;
        }
        Self {
            p,
            gram,
            cross,
            feature_mean,
            target_mean,
            target_var: target_var / m,
        }
    }

    /// Mean squared residual of centered data, given `q = G·w`.
    fn loss(&self, w: &[f64], q: &[f64]) -> f64 {
        let cw: f64 = self.cross.iter().zip(w).map(|(c, w)| c * w).sum();
        let wq: f64 = w.iter().zip(q).map(|(w, q)| w * q).sum();
        (self.target_var - 2.0 * cw + wq).max(0.0)
    }

    fn intercept(&self, w: &[f64]) -> f64 {
        self.target_mean
            - self
                .feature_mean
                .iter()
                .zip(w)
                .map(|(mu, w)| mu * w)
                .sum::<f64>()
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn validate(data: &AuxiliaryDataset, settings: &SurrogateSettings) -> Result<(), SurrogateError> {
    if data.feature_dim == 0 {
        return Err(SurrogateError::Degenerate);
    }
    if data.is_empty() {
        return Err(SurrogateError::EmptyDataset);
    }
    if !settings.lambda.is_finite() {
        return Err(SurrogateError::NonFinite("lambda"));
    }
    if settings.lambda < 0.0 {
        return Err(SurrogateError::NegativeLambda(settings.lambda));
    }
    if !(settings.tol.is_finite() && settings.tol > 0.0) {
        return Err(SurrogateError::NonFinite("tol"));
    }
    if data.targets.iter().any(|t| !t.is_finite()) {
        return Err(SurrogateError::NonFinite("target"));
    }
    Ok(())
}

/// Smallest λ for which the L1 solution is all zeros.
pub fn lambda_max(data: &AuxiliaryDataset) -> Result<f64, SurrogateError> {
    validate(data, &SurrogateSettings::default())?;
    let moments = Moments::from_dataset(data);
    Ok(2.0 * moments.cross.iter().fold(0.0f64, |acc, c| acc.max(c.abs())))
}

pub fn fit(
    data: &AuxiliaryDataset,
    settings: &SurrogateSettings,
) -> Result<SurrogateFit, SurrogateError> {
    validate(data, settings)?;
    let moments = Moments::from_dataset(data);
    match settings.penalty {
        Penalty::L1 => Ok(fit_lasso(&moments, settings)),
        Penalty::L2 => fit_ridge(&moments, settings),
    }
}

// Cyclic coordinate descent with covariance updates: `q = G·w` is kept in
// sync so each coordinate step costs O(p).
fn fit_lasso(mo: &Moments, settings: &SurrogateSettings) -> SurrogateFit {
    let p = mo.p;
    let lambda = settings.lambda;
    let mut w = vec![0.0; p];
    let mut q = vec![0.0; p];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < settings.max_iter {
        sweeps += 1;
        let mut max_delta = 0.0f64;
        for j in 0..p {
            let gjj = mo.gram[j * p + j];
            if gjj <= 1e-15 {
                // constant feature
                continue;
            }
            let rho = mo.cross[j] - q[j] + gjj * w[j];
            let updated = soft_threshold(rho, lambda / 2.0) / gjj;
            let delta = updated - w[j];
            if delta != 0.0 {
                w[j] = updated;
                let col = &mo.gram[j * p..(j + 1) * p];
                for (qk, g) in q.iter_mut().zip(col) {
                    *qk += delta * g;
                }
                max_delta = max_delta.max(delta.abs());
            }
        }
        let l1: f64 = w.iter().map(|x| x.abs()).sum();
        trace.push(mo.loss(&w, &q) + lambda * l1);
        if max_delta < settings.tol {
            converged = true;
            break;
        }
    }

    let objective_value = trace
        .last()
        .copied()
        .unwrap_or(mo.target_var);
    SurrogateFit {
        intercept: mo.intercept(&w),
        weights: w,
        lambda,
        penalty: Penalty::L1,
        objective_value,
        iterations_used: sweeps,
        converged,
        objective_trace: trace,
    }
}

fn fit_ridge(mo: &Moments, settings: &SurrogateSettings) -> Result<SurrogateFit, SurrogateError> {
    let p = mo.p;
    let lambda = settings.lambda;
    let mut a = DMatrix::from_row_slice(p, p, &mo.gram);
    for j in 0..p {
        a[(j, j)] += lambda;
    }
    let max_diag = (0..p).map(|j| a[(j, j)]).fold(0.0f64, f64::max);
    let chol = a.cholesky().ok_or(SurrogateError::RankDeficient)?;
    let min_pivot = (0..p)
        .map(|j| chol.l_dirty()[(j, j)].powi(2))
        .fold(f64::INFINITY, f64::min);
    if lambda == 0.0 && min_pivot <= 1e-10 * max_diag.max(f64::MIN_POSITIVE) {
        return Err(SurrogateError::RankDeficient);
    }
    let w: Vec<f64> = chol
        .solve(&DVector::from_column_slice(&mo.cross))
        .iter()
        .copied()
        .collect();
    if w.iter().any(|x| !x.is_finite()) {
        return Err(SurrogateError::RankDeficient);
    }
    let q: Vec<f64> = (0..p)
        .map(|i| (0..p).map(|k| mo.gram[i * p + k] * w[k]).sum())
        .collect();
    let l2: f64 = w.iter().map(|x| x * x).sum();
    let objective_value = mo.loss(&w, &q) + lambda * l2;
    Ok(SurrogateFit {
        intercept: mo.intercept(&w),
        weights: w,
        lambda,
        penalty: Penalty::L2,
        objective_value,
        iterations_used: 1,
        converged: true,
        objective_trace: vec![objective_value],
    })
}
