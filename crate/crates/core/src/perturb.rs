//! Weak perturbations: elements are redistributed over the slots of their
//! layout, and each rearrangement is summarized as the element-level graph of
//! which elements ended up next to each other.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::{SampleDecomposition, SlotLayout};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PerturbError {
    #[error("adjacency matrix is not symmetric at ({row}, {col})")]
    AsymmetricInput { row: usize, col: usize },
    #[error("adjacency matrix has a nonzero diagonal entry at {0}")]
    NonZeroDiagonal(usize),
    #[error("feature vector has length {actual}, expected {expected} for some n")]
    BadFeatureLength { expected: usize, actual: usize },
    #[error("need at least 2 elements to permute, got {0}")]
    TooFewElements(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PermuteMode {
    /// Every slot draws an element uniformly with replacement.
    #[default]
    Replacement,
    /// A uniformly random bijection of elements onto slots.
    Shuffle,
}

impl PermuteMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PermuteMode::Replacement => "replacement",
            PermuteMode::Shuffle => "shuffle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutedSample {
    /// `placement[slot]` is the element shown in that slot.
    pub placement: Vec<usize>,
    /// Position of this sample in its generating stream.
    pub seed_draw: u64,
}

/// Draws one placement of `n` elements over `slots` slots.
pub fn weak_permute<R: Rng + ?Sized>(
    n: usize,
    slots: usize,
    mode: PermuteMode,
    rng: &mut R,
) -> Vec<usize> {
    match mode {
        PermuteMode::Replacement => (0..slots).map(|_| rng.random_range(0..n)).collect(),
        PermuteMode::Shuffle => {
            debug_assert_eq!(n, slots, "shuffle needs one element per slot");
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            p
        }
    }
}

/// Seeded, sequential source of permuted samples.
///
/// The sequence of placements is a pure function of the seed and mode.
#[derive(Debug, Clone)]
pub struct PermutationStream {
    rng: ChaCha8Rng,
    mode: PermuteMode,
    drawn: u64,
}

impl PermutationStream {
    pub fn new(seed: u64, mode: PermuteMode) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            mode,
            drawn: 0,
        }
    }

    pub fn next_sample(
        &mut self,
        decomp: &SampleDecomposition,
    ) -> Result<PermutedSample, PerturbError> {
        let n = decomp.len();
        if n < 2 {
            return Err(PerturbError::TooFewElements(n));
        }
        let placement = weak_permute(n, decomp.layout().slot_count(), self.mode, &mut self.rng);
        let sample = PermutedSample {
            placement,
            seed_draw: self.drawn,
        };
        self.drawn += 1;
        Ok(sample)
    }

    pub fn drawn(&self) -> u64 {
        self.drawn
    }
}

/// Symmetric 0/1 matrix over elements (not slots).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementAdjacencyMatrix {
    n: usize,
    entries: Vec<u8>,
}

impl ElementAdjacencyMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0; n * n],
        }
    }

    /// Wraps raw row-major entries without validation; `lower_triangle`
    /// checks symmetry.
    pub fn from_entries(n: usize, entries: Vec<u8>) -> Self {
        assert_eq!(entries.len(), n * n);
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> u8 {
        self.entries[u * self.n + v]
    }

    pub fn set_pair(&mut self, u: usize, v: usize) {
        self.entries[u * self.n + v] = 1;
        self.entries[v * self.n + u] = 1;
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }
}

/// Element graph of a placement: `u` and `v` are linked when some pair of
/// neighboring slots holds exactly `{u, v}`. Self-links from duplicates are
/// dropped.
pub fn build_adjacency(layout: &SlotLayout, n: usize, placement: &[usize]) -> ElementAdjacencyMatrix {
    let mut adj = ElementAdjacencyMatrix::zeros(n);
    for &(s, t) in layout.edges() {
        let (u, v) = (placement[s], placement[t]);
        if u != v {
            adj.set_pair(u, v);
        }
    }
    adj
}

/// Index of pair `(u, v)`, `u > v`, in strict-lower-triangle row-major order.
pub fn pair_index(u: usize, v: usize) -> usize {
    debug_assert!(u > v);
    u * (u - 1) / 2 + v
}

/// Inverse of [`pair_index`].
pub fn pair_at(index: usize) -> (usize, usize) {
    // largest u with u(u-1)/2 <= index
    let mut u = ((1.0 + (1.0 + 8.0 * index as f64).sqrt()) / 2.0) as usize;
    while u * (u - 1) / 2 > index {
        u -= 1;
    }
    while (u + 1) * u / 2 <= index {
        u += 1;
    }
    (u, index - u * (u - 1) / 2)
}

pub fn feature_len(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Binary strict-lower-triangle features, order `(1,0), (2,0), (2,1), (3,0), ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AdjacencyFeatureVector {
    values: Vec<u8>,
}

impl AdjacencyFeatureVector {
    pub fn new(values: Vec<u8>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices of the ones.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, _)| i)
    }

    /// Expands back to the symmetric zero-diagonal matrix.
    pub fn to_matrix(&self) -> Result<ElementAdjacencyMatrix, PerturbError> {
        let len = self.values.len();
        let mut n = 1;
        while feature_len(n) < len {
            n += 1;
        }
        if feature_len(n) != len {
            return Err(PerturbError::BadFeatureLength {
                expected: feature_len(n),
                actual: len,
            });
        }
        let mut m = ElementAdjacencyMatrix::zeros(n);
        for k in self.active() {
            let (u, v) = pair_at(k);
            m.set_pair(u, v);
        }
        Ok(m)
    }
}

pub fn lower_triangle(adj: &ElementAdjacencyMatrix) -> Result<AdjacencyFeatureVector, PerturbError> {
    let n = adj.n();
    for u in 0..n {
        if adj.get(u, u) != 0 {
            return Err(PerturbError::NonZeroDiagonal(u));
        }
        for v in 0..u {
            if adj.get(u, v) != adj.get(v, u) {
                return Err(PerturbError::AsymmetricInput { row: u, col: v });
            }
        }
    }
    let mut values = Vec::with_capacity(feature_len(n));
    for u in 1..n {
        values.extend_from_slice(&adj.entries()[u * n..u * n + u]);
    }
    Ok(AdjacencyFeatureVector { values })
}
