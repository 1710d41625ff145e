//! Relational local explanations for black-box models.
//!
//! An input is split into elements (image patches on a grid, or words).
//! Elements are shuffled around their slots many times, every rearranged
//! input is scored by the model, and a sparse linear surrogate is fitted on
//! which pairs of elements ended up next to each other. The fitted weights
//! form a symmetric pair matrix; its row means are an ordinary per-element
//! attribution.
//!
//! ```
//! use rle::models::{ModelHandle, PairSyntheticModel, SyntheticSpec};
//! use rle::{explain, ExplainConfig, Permutations, RawInput};
//!
//! let spec = SyntheticSpec::new(vec![((0, 2), 1.0)]);
//! let mut model = ModelHandle::builtin(PairSyntheticModel::new(spec).unwrap());
//! let input = RawInput::Text("the cat sat on the mat".into());
//! let config = ExplainConfig { permutations: Permutations::Fixed(500), ..Default::default() };
//! let out = explain(&mut model, &input, &config).unwrap();
//! let best = out.relational.top_pairs(1).unwrap()[0];
//! assert_eq!((best.u, best.v), (2, 0));
//! ```

pub mod cli;
pub mod decompose;
pub mod eval;
pub mod explain;
pub mod image;
pub mod models;
pub mod perturb;
pub mod render;
pub mod surrogate;

pub use decompose::{Modality, RawInput, SampleDecomposition};
pub use explain::{
    explain, ExplainConfig, ExplainError, Explanation, ExplanationDocument, LocalExplanation,
    Permutations, RelationalExplanation,
};
pub use image::ImageBuffer;
pub use models::{ModelError, ModelHandle};
