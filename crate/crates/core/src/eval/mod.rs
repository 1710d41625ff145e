//! IROF (iterative removal of features) evaluation.
//!
//! The image is segmented with SLIC, segments are ranked by their mean
//! attribution, and the most important segments are painted with the
//! image's mean color one by one. The class score of each partially erased
//! image, relative to the original score, forms a curve; IROF is the area
//! over that curve. Faithful attributions make the score collapse early,
//! which gives a large area.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::{Element, SampleDecomposition};
use crate::explain::{self, ExplainConfig, ExplainError, LocalExplanation};
use crate::image::ImageBuffer;
use crate::models::{ModelError, ModelHandle, ScoreQuery};

pub mod slic;

pub use slic::{rgb_to_lab, slic_segment, Segmentation, SlicParams};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot make {k} segments from {pixels} pixels")]
    TooManySegments { k: usize, pixels: usize },
    #[error("invalid segmentation: {0}")]
    InvalidSegmentation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("original class score is {0}, must be > 0")]
    ZeroOriginalScore(f64),
    #[error("attribution map is {actual:?}, image is {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("pixel attributions need an image decomposition")]
    ModalityMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
}

/// One attribution value per pixel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelAttribution {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrofReport {
    pub irof: f64,
    /// `curve[l]` is the score with the `l` top segments removed, divided by
    /// the original score.
    pub curve: Vec<f64>,
    pub segments_removed_order: Vec<usize>,
    pub segment_count: usize,
    pub original_score: f64,
}

/// Every pixel of patch `u` gets `local.values[u]`.
pub fn attribution_to_pixels(
    decomp: &SampleDecomposition,
    local: &LocalExplanation,
) -> Result<PixelAttribution, EvalError> {
    let geo = decomp.geometry().ok_or(EvalError::ModalityMismatch)?;
    if local.n() != decomp.len() {
        return Err(EvalError::InvalidParameter(format!(
            "{} attribution values for {} patches",
            local.n(),
            decomp.len()
        )));
    }
    let mut values = vec![0.0; geo.width * geo.height];
    for (element, &value) in decomp.elements().iter().zip(&local.values) {
        let Element::Patch { rect, .. } = element else {
            return Err(EvalError::ModalityMismatch);
        };
        for y in rect.y..rect.y + rect.height {
            values[y * geo.width + rect.x..y * geo.width + rect.x + rect.width].fill(value);
        }
    }
    Ok(PixelAttribution {
        width: geo.width,
        height: geo.height,
        values,
    })
}

/// I.i.d. uniform values in the open interval (−1, 1).
pub fn random_attribution(n: usize, seed: u64) -> LocalExplanation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n)
        .map(|_| loop {
            let v: f64 = rng.random_range(-1.0..1.0);
            if v > -1.0 {
                break v;
            }
        })
        .collect();
    LocalExplanation { values }
}

/// Segment ids by descending mean attribution, ties by ascending id.
pub fn rank_segments(attribution: &PixelAttribution, seg: &Segmentation) -> Vec<usize> {
    let mut sums = vec![0.0; seg.segment_count()];
    for (&l, &v) in seg.labels().iter().zip(&attribution.values) {
        sums[l as usize] += v;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(seg.sizes())
        .map(|(s, n)| s / n as f64)
        .collect();
    let mut order: Vec<usize> = (0..seg.segment_count()).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    order
}

pub fn irof(
    model: &mut ModelHandle,
    image: &ImageBuffer,
    attribution: &PixelAttribution,
    seg: &Segmentation,
    target_class: usize,
) -> Result<IrofReport, EvalError> {
    let dims = (image.width(), image.height());
    for actual in [
        (attribution.width, attribution.height),
        (seg.width(), seg.height()),
    ] {
        if actual != dims {
            return Err(EvalError::ShapeMismatch {
                expected: dims,
                actual,
            });
        }
    }
    if attribution.values.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::InvalidParameter("non-finite attribution".into()));
    }

    let order = rank_segments(attribution, seg);
    let fill = image.mean_color();
    let mut members = vec![Vec::new(); seg.segment_count()];
    for (idx, &l) in seg.labels().iter().enumerate() {
        members[l as usize].push(idx);
    }

    let mut images = Vec::with_capacity(order.len() + 1);
    let mut current = image.clone();
    images.push(current.clone());
    for &s in &order {
        for &idx in &members[s] {
            current.set_pixel(idx % dims.0, idx / dims.0, fill);
        }
        images.push(current.clone());
    }
    let inputs: Vec<_> = images.into_iter().map(crate::decompose::RawInput::Image).collect();
    let queries: Vec<ScoreQuery<'_>> = inputs.iter().map(ScoreQuery::raw).collect();
    let scores = model.score_batch(&queries, target_class)?;

    let original_score = scores[0];
    if original_score <= 0.0 {
        return Err(EvalError::ZeroOriginalScore(original_score));
    }
    let mut curve: Vec<f64> = scores.iter().map(|s| s / original_score).collect();
    curve[0] = 1.0;
    let irof = aoc(&curve);
    Ok(IrofReport {
        irof,
        curve,
        segments_removed_order: order,
        segment_count: seg.segment_count(),
        original_score,
    })
}

/// Area over a normalized curve: mean of `1 − min(c, 1)`.
pub fn aoc(curve: &[f64]) -> f64 {
    curve.iter().map(|c| 1.0 - c.min(1.0)).sum::<f64>() / curve.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributionMethod {
    Rle,
    Random,
}

impl AttributionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributionMethod::Rle => "rle",
            AttributionMethod::Random => "random",
        }
    }
}

impl std::str::FromStr for AttributionMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rle" => Ok(Self::Rle),
            "random" => Ok(Self::Random),
            other => Err(format!("unknown method `{other}` (expected rle or random)")),
        }
    }
}

/// One JSON line of a batch evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrofRecord {
    pub image_id: String,
    pub segment_count: usize,
    pub curve: Vec<f64>,
    pub irof: f64,
    pub method: AttributionMethod,
    pub seed: u64,
}

/// Per-method aggregate row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrofSummary {
    pub summary: bool,
    pub method: AttributionMethod,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator; 0 for a single row).
    pub std: f64,
}

/// Mean ± std of `irof` per method, in order of first appearance.
pub fn summarize(records: &[IrofRecord]) -> Vec<IrofSummary> {
    let mut methods: Vec<AttributionMethod> = Vec::new();
    for r in records {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    methods
        .into_iter()
        .map(|method| {
            let xs: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method)
                .map(|r| r.irof)
                .collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let std = if xs.len() > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            IrofSummary {
                summary: true,
                method,
                count: xs.len(),
                mean,
                std,
            }
        })
        .collect()
}

/// Scores one image with one attribution method.
///
/// `seed` drives the permutation stream for RLE and the draw for the random
/// baseline; both attribute at the patch level of `explain_config.grid_side`.
pub fn evaluate_method(
    model: &mut ModelHandle,
    image: &ImageBuffer,
    seg: &Segmentation,
    method: AttributionMethod,
    explain_config: &ExplainConfig,
    seed: u64,
) -> Result<IrofReport, EvalError> {
    let input = crate::decompose::RawInput::Image(image.clone());
    let decomp = explain::decompose(&input, explain_config.grid_side).map_err(ExplainError::from)?;
    let local = match method {
        AttributionMethod::Rle => {
            let config = ExplainConfig {
                seed,
                ..explain_config.clone()
            };
            explain::explain_decomposition(model, &decomp, &config)?.to_local()
        }
        AttributionMethod::Random => random_attribution(decomp.len(), seed),
    };
    let pixels = attribution_to_pixels(&decomp, &local)?;
    irof(model, image, &pixels, seg, explain_config.target_class)
}
