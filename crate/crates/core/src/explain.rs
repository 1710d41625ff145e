//! Relational local explanations.
//!
//! [`explain`] runs the full loop: decompose the input, draw `m` weak
//! perturbations, score each rearranged input with the black box, record
//! the strict lower triangle of every element graph as a feature row, fit
//! the sparse linear surrogate, and scatter its weights into a symmetric
//! pair matrix. [`RelationalExplanation::to_local`] turns that matrix into a
//! per-element attribution by taking off-diagonal row means.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::{
    identity_placement, partition_image, reassemble, tokenize_text, DecomposeError, Modality,
    PatchRect, RawInput, SampleDecomposition, SlotLayout,
};
use crate::models::{ModelError, ModelHandle, PlacementInfo, ScoreQuery};
use crate::perturb::{
    build_adjacency, feature_len, lower_triangle, pair_at, pair_index, PermutationStream,
    PermuteMode, PerturbError,
};
use crate::surrogate::{self, AuxiliaryDataset, Penalty, SurrogateError, SurrogateFit, SurrogateSettings};

/// Permutations per image explanation when none are requested explicitly.
pub const IMAGE_DEFAULT_PERMUTATIONS: usize = 5000;
/// Permutations per text explanation when none are requested explicitly.
pub const TEXT_DEFAULT_PERMUTATIONS: usize = 2000;
pub const DEFAULT_GRID_SIDE: usize = 7;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("need at least one permutation, got {0}")]
    InsufficientPermutations(usize),
    #[error("k = {k} is outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("expected {expected} input, got {actual}")]
    ModalityMismatch {
        expected: &'static str,
        actual: &'static str,
    },
    #[error("invalid relation matrix: {0}")]
    InvalidMatrix(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Permutations {
    /// 5000 for images, 2000 for text.
    #[default]
    Auto,
    Fixed(usize),
}

impl Permutations {
    pub fn resolve(self, modality: Modality) -> usize {
        match (self, modality) {
            (Permutations::Fixed(m), _) => m,
            (Permutations::Auto, Modality::Image) => IMAGE_DEFAULT_PERMUTATIONS,
            (Permutations::Auto, Modality::Text) => TEXT_DEFAULT_PERMUTATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainConfig {
    pub target_class: usize,
    /// Image grid side; ignored for text.
    pub grid_side: usize,
    pub permutations: Permutations,
    pub seed: u64,
    pub permute_mode: PermuteMode,
    pub surrogate: SurrogateSettings,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            target_class: 0,
            grid_side: DEFAULT_GRID_SIDE,
            permutations: Permutations::Auto,
            seed: 0,
            permute_mode: PermuteMode::Replacement,
            surrogate: SurrogateSettings::default(),
        }
    }
}

/// Symmetric, zero-diagonal matrix of pairwise relation weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationalExplanation {
    n: usize,
    matrix: Vec<f64>,
    pub target_class: usize,
    pub permutations_used: usize,
    /// Black-box score of the unperturbed input. Not used for fitting.
    pub original_score: f64,
    pub surrogate: Option<SurrogateFit>,
}

/// Per-element attribution vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalExplanation {
    pub values: Vec<f64>,
}

impl LocalExplanation {
    pub fn n(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedPair {
    /// Always `u > v`.
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl RelationalExplanation {
    /// Builds an explanation from a full row-major matrix, checking symmetry,
    /// a zero diagonal, and finiteness.
    pub fn from_matrix(n: usize, matrix: Vec<f64>) -> Result<Self, ExplainError> {
        if matrix.len() != n * n {
            return Err(ExplainError::InvalidMatrix(format!(
                "{} entries for n = {n}",
                matrix.len()
            )));
        }
        for u in 0..n {
            if matrix[u * n + u] != 0.0 {
                return Err(ExplainError::InvalidMatrix(format!("nonzero diagonal at {u}")));
            }
            for v in 0..u {
                let a = matrix[u * n + v];
                if !a.is_finite() {
                    return Err(ExplainError::InvalidMatrix(format!("non-finite entry at ({u}, {v})")));
                }
                if a != matrix[v * n + u] {
                    return Err(ExplainError::InvalidMatrix(format!("asymmetric at ({u}, {v})")));
                }
            }
        }
        Ok(Self {
            n,
            matrix,
            target_class: 0,
            permutations_used: 0,
            original_score: f64::NAN,
            surrogate: None,
        })
    }

    /// Scatters lower-triangle pair weights into both `A[u][v]` and `A[v][u]`.
    pub fn from_pair_weights(n: usize, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), feature_len(n));
        let mut matrix = vec![0.0; n * n];
        for (k, &w) in weights.iter().enumerate() {
            let (u, v) = pair_at(k);
            matrix[u * n + v] = w;
            matrix[v * n + u] = w;
        }
        Self {
            n,
            matrix,
            target_class: 0,
            permutations_used: 0,
            original_score: f64::NAN,
            surrogate: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.matrix[u * self.n + v]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.matrix.chunks_exact(self.n)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|u| (0..u).all(|v| self.get(u, v) == self.get(v, u)))
    }

    /// `e[u] = (1/(n−1))·Σ_{v≠u} A[u][v]`.
    pub fn to_local(&self) -> LocalExplanation {
        let denom = (self.n - 1) as f64;
        let values = self
            .rows()
            .enumerate()
            .map(|(u, row)| {
                let off_diag: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|&(v, _)| v != u)
                    .map(|(_, a)| a)
                    .sum();
                off_diag / denom
            })
            .collect();
        LocalExplanation { values }
    }

    /// The `k` pairs with the largest `|weight|`, ties broken by `(u, v)`.
    pub fn top_pairs(&self, k: usize) -> Result<Vec<RankedPair>, ExplainError> {
        let max = feature_len(self.n);
        if k == 0 || k > max {
            return Err(ExplainError::KOutOfRange { k, max });
        }
        let mut pairs: Vec<RankedPair> = (1..self.n)
            .flat_map(|u| (0..u).map(move |v| (u, v)))
            .map(|(u, v)| RankedPair {
                u,
                v,
                weight: self.get(u, v),
            })
            .collect();
        pairs.sort_by(|a, b| {
            b.weight
                .abs()
                .total_cmp(&a.weight.abs())
                .then((a.u, a.v).cmp(&(b.u, b.v)))
        });
        pairs.truncate(k);
        Ok(pairs)
    }

    /// Weight of the unordered pair `{u, v}` as stored by the surrogate.
    pub fn pair_weight(&self, u: usize, v: usize) -> f64 {
        let (hi, lo) = if u > v { (u, v) } else { (v, u) };
        debug_assert!(pair_index(hi, lo) < feature_len(self.n));
        self.get(hi, lo)
    }
}

/// A relational explanation together with the decomposition it refers to.
#[derive(Debug, Clone)]
pub struct Explanation {
    pub decomposition: SampleDecomposition,
    pub relational: RelationalExplanation,
}

pub fn decompose(input: &RawInput, grid_side: usize) -> Result<SampleDecomposition, DecomposeError> {
    match input {
        RawInput::Image(img) => partition_image(img, grid_side),
        RawInput::Text(text) => tokenize_text(text),
    }
}

pub fn explain(
    model: &mut ModelHandle,
    input: &RawInput,
    config: &ExplainConfig,
) -> Result<Explanation, ExplainError> {
    let decomposition = decompose(input, config.grid_side)?;
    let relational = explain_decomposition(model, &decomposition, config)?;
    Ok(Explanation {
        decomposition,
        relational,
    })
}

/// The permutation / scoring / fitting loop on an already decomposed input.
pub fn explain_decomposition(
    model: &mut ModelHandle,
    decomp: &SampleDecomposition,
    config: &ExplainConfig,
) -> Result<RelationalExplanation, ExplainError> {
    let m = config.permutations.resolve(decomp.modality());
    if m < 1 {
        return Err(ExplainError::InsufficientPermutations(m));
    }
    let n = decomp.len();
    let layout = decomp.layout();

    let identity = identity_placement(decomp);
    let original = reassemble(decomp, &identity)?;
    let original_score = model.score_batch(
        &[ScoreQuery {
            input: &original,
            placement: Some(placement_info(layout, &identity, n)),
        }],
        config.target_class,
    )?[0];

    let mut stream = PermutationStream::new(config.seed, config.permute_mode);
    let mut dataset = AuxiliaryDataset::with_capacity(feature_len(n), m);
    let batch = model.batch_size();
    let mut remaining = m;
    while remaining > 0 {
        let take = remaining.min(batch);
        remaining -= take;
        let samples = (0..take)
            .map(|_| stream.next_sample(decomp))
            .collect::<Result<Vec<_>, _>>()?;
        let inputs = samples
            .iter()
            .map(|s| reassemble(decomp, &s.placement))
            .collect::<Result<Vec<_>, _>>()?;
        let queries: Vec<ScoreQuery<'_>> = samples
            .iter()
            .zip(&inputs)
            .map(|(s, input)| ScoreQuery {
                input,
                placement: Some(placement_info(layout, &s.placement, n)),
            })
            .collect();
        let scores = model.score_batch(&queries, config.target_class)?;
        for (sample, score) in samples.iter().zip(scores) {
            let adj = build_adjacency(layout, n, &sample.placement);
            dataset.push(lower_triangle(&adj)?, score)?;
        }
    }

    let fit = surrogate::fit(&dataset, &config.surrogate)?;
    let mut rel = RelationalExplanation::from_pair_weights(n, &fit.weights);
    rel.target_class = config.target_class;
    rel.permutations_used = m;
    rel.original_score = original_score;
    rel.surrogate = Some(fit);
    Ok(rel)
}

fn placement_info<'a>(layout: &'a SlotLayout, placement: &'a [usize], n: usize) -> PlacementInfo<'a> {
    PlacementInfo {
        layout,
        placement,
        element_count: n,
    }
}

/// JSON form of an explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDocument {
    pub modality: Modality,
    pub n: usize,
    pub elements: Vec<ElementDoc>,
    pub target_class: usize,
    pub matrix: Vec<Vec<f64>>,
    pub local: Vec<f64>,
    pub settings: SettingsDoc,
    pub original_score: f64,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementDoc {
    Patch(PatchRect),
    Token(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingsDoc {
    pub m: usize,
    pub seed: u64,
    pub lambda: f64,
    pub penalty: Penalty,
    pub permute_mode: PermuteMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_side: Option<usize>,
}

impl ExplanationDocument {
    pub fn new(explanation: &Explanation, config: &ExplainConfig, model: &str) -> Self {
        let decomp = &explanation.decomposition;
        let rel = &explanation.relational;
        let elements = match decomp.modality() {
            Modality::Image => decomp.patch_rects().into_iter().map(ElementDoc::Patch).collect(),
            Modality::Text => decomp
                .tokens()
                .into_iter()
                .map(|t| ElementDoc::Token(t.to_owned()))
                .collect(),
        };
        Self {
            modality: decomp.modality(),
            n: rel.n(),
            elements,
            target_class: rel.target_class,
            matrix: rel.rows().map(<[f64]>::to_vec).collect(),
            local: rel.to_local().values,
            settings: SettingsDoc {
                m: rel.permutations_used,
                seed: config.seed,
                lambda: config.surrogate.lambda,
                penalty: config.surrogate.penalty,
                permute_mode: config.permute_mode,
                grid_side: decomp.geometry().map(|g| g.grid_side),
            },
            original_score: rel.original_score,
            model: model.to_owned(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }

    pub fn relational(&self) -> Result<RelationalExplanation, ExplainError> {
        if self.matrix.len() != self.n || self.matrix.iter().any(|r| r.len() != self.n) {
            return Err(ExplainError::InvalidMatrix("matrix shape does not match n".into()));
        }
        let mut rel = RelationalExplanation::from_matrix(self.n, self.matrix.concat())?;
        rel.target_class = self.target_class;
        rel.permutations_used = self.settings.m;
        rel.original_score = self.original_score;
        Ok(rel)
    }
}
