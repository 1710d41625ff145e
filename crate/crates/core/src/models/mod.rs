//! Black-box scoring.
//!
//! Everything the explainer and the IROF harness know about a model goes
//! through [`ModelHandle::score_batch`]: a list of raw inputs in, one finite
//! score per input out. Built-in synthetic models with known ground truth
//! live in [`synthetic`]; external models are reached through a child
//! process speaking the line-delimited JSON protocol in [`protocol`].

use std::fmt;

use thiserror::Error;

use crate::decompose::{RawInput, SlotLayout};

pub mod bridge;
pub mod protocol;
pub mod synthetic;

pub use bridge::{handshake_timeout_from_env, spawn_bridge, BridgeClient, DEFAULT_HANDSHAKE_TIMEOUT};
pub use synthetic::{
    parse_builtin, ColorBoundaryModel, ConstantModel, LexiconSentimentModel, PairSyntheticModel,
    SurvivingPixelModel, SyntheticSpec,
};

pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model unavailable: {0}")]
    ModelUnavailable(String),
    #[error("protocol error: {0}")]
    ProtocolError(String),
    #[error("model returned a non-finite score at position {index}")]
    ScoreNotFinite { index: usize },
    #[error("failed to spawn bridge `{command}`: {reason}")]
    SpawnFailed { command: String, reason: String },
    #[error("bridge did not complete the handshake within {0:?}")]
    HandshakeTimeout(std::time::Duration),
    #[error("invalid model input: {0}")]
    InvalidInput(String),
    #[error("invalid model spec `{spec}`: {reason}")]
    InvalidSpec { spec: String, reason: String },
}

/// Placement metadata attached to a query built from a permuted sample.
#[derive(Debug, Clone, Copy)]
pub struct PlacementInfo<'a> {
    pub layout: &'a SlotLayout,
    pub placement: &'a [usize],
    pub element_count: usize,
}

impl PlacementInfo<'_> {
    /// Whether elements `u` and `v` sit in neighboring slots.
    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.layout.edges().iter().any(|&(s, t)| {
            let (a, b) = (self.placement[s], self.placement[t]);
            (a == u && b == v) || (a == v && b == u)
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScoreQuery<'a> {
    pub input: &'a RawInput,
    pub placement: Option<PlacementInfo<'a>>,
}

impl<'a> ScoreQuery<'a> {
    pub fn raw(input: &'a RawInput) -> Self {
        Self {
            input,
            placement: None,
        }
    }
}

/// A model that can be queried in batches.
pub trait BlackBox: Send {
    /// One score per query, in order. `target_class` may be ignored by
    /// scalar-output models.
    fn score(
        &mut self,
        queries: &[ScoreQuery<'_>],
        target_class: usize,
    ) -> Result<Vec<f64>, ModelError>;

    /// Short human-readable description, recorded in output metadata.
    fn describe(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    BuiltinSynthetic,
    ExternalBridge,
}

/// A black-box model plus the batch size used to query it.
pub struct ModelHandle {
    kind: ModelKind,
    model: Box<dyn BlackBox>,
    batch_size: usize,
}

impl fmt::Debug for ModelHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelHandle")
            .field("kind", &self.kind)
            .field("model", &self.model.describe())
            .field("batch_size", &self.batch_size)
            .finish()
    }
}

impl ModelHandle {
    pub fn builtin(model: impl BlackBox + 'static) -> Self {
        Self {
            kind: ModelKind::BuiltinSynthetic,
            model: Box::new(model),
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }

    pub fn bridge(client: BridgeClient) -> Self {
        Self {
            kind: ModelKind::ExternalBridge,
            model: Box::new(client),
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }

    /// Panics if `batch_size` is zero.
    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        assert!(batch_size >= 1, "batch size must be at least 1");
        self.batch_size = batch_size;
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn describe(&self) -> String {
        self.model.describe()
    }

    /// Scores `queries` in chunks of at most `batch_size`, checking that
    /// every score is finite and that the model answered each query.
    pub fn score_batch(
        &mut self,
        queries: &[ScoreQuery<'_>],
        target_class: usize,
    ) -> Result<Vec<f64>, ModelError> {
        if queries.is_empty() {
            return Err(ModelError::InvalidInput("empty query list".into()));
        }
        let modality = queries[0].input.modality();
        if queries.iter().any(|q| q.input.modality() != modality) {
            return Err(ModelError::InvalidInput("mixed modalities in one batch".into()));
        }
        let mut out = Vec::with_capacity(queries.len());
        for chunk in queries.chunks(self.batch_size) {
            let scores = self.model.score(chunk, target_class)?;
            if scores.len() != chunk.len() {
                return Err(ModelError::ProtocolError(format!(
                    "expected {} scores, got {}",
                    chunk.len(),
                    scores.len()
                )));
            }
            if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
                return Err(ModelError::ScoreNotFinite {
                    index: out.len() + i,
                });
            }
            out.extend(scores);
        }
        Ok(out)
    }

    /// Convenience for a single input without placement metadata.
    pub fn score_one(&mut self, input: &RawInput, target_class: usize) -> Result<f64, ModelError> {
        Ok(self.score_batch(&[ScoreQuery::raw(input)], target_class)?[0])
    }
}
