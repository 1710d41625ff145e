//! Splitting inputs into ordered elements on a slot layout, and putting
//! rearranged elements back together as raw model inputs.
//!
//! Images are cut into a `grid_side × grid_side` grid of equal patches whose
//! slots are connected by the 4-neighborhood. Sentences are split on
//! whitespace into one element per word, and consecutive slots form a chain.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{ImageBuffer, CHANNELS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecomposeError {
    #[error("image of {width}x{height} is not divisible into a {grid_side}x{grid_side} grid")]
    DimensionNotDivisible {
        width: usize,
        height: usize,
        grid_side: usize,
    },
    #[error("grid side must be at least 2, got {0}")]
    TooSmall(usize),
    #[error("sentence must contain at least 2 tokens, got {0}")]
    TooFewTokens(usize),
    #[error("placement covers {assigned} of {slots} slots")]
    IncompletePlacement { assigned: usize, slots: usize },
    #[error("placement refers to element {index}, but only {count} elements exist")]
    InvalidElement { index: usize, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Image,
    Text,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Image => "image",
            Modality::Text => "text",
        }
    }
}

/// A model input in its raw form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawInput {
    Image(ImageBuffer),
    Text(String),
}

impl RawInput {
    pub fn modality(&self) -> Modality {
        match self {
            RawInput::Image(_) => Modality::Image,
            RawInput::Text(_) => Modality::Text,
        }
    }
}

/// Location of one patch inside the source image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchRect {
    pub row: usize,
    pub col: usize,
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Element {
    /// A rectangular pixel block, stored row-major RGB8.
    Patch { rect: PatchRect, pixels: Vec<u8> },
    Token(String),
}

/// Slots and the unordered pairs of slots that count as neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotLayout {
    slot_count: usize,
    // (a, b) with a < b, sorted and distinct
    edges: Vec<(usize, usize)>,
}

impl SlotLayout {
    /// 4-neighborhood of a `side × side` grid with row-major slot indices.
    pub fn grid(side: usize) -> Self {
        let mut edges = Vec::with_capacity(2 * side * side.saturating_sub(1));
        for r in 0..side {
            for c in 0..side {
                let s = r * side + c;
                if c + 1 < side {
                    edges.push((s, s + 1));
                }
                if r + 1 < side {
                    edges.push((s, s + side));
                }
            }
        }
        edges.sort_unstable();
        Self {
            slot_count: side * side,
            edges,
        }
    }

    /// A simple path `0 - 1 - ... - (len-1)`.
    pub fn chain(len: usize) -> Self {
        Self {
            slot_count: len,
            edges: (1..len).map(|i| (i - 1, i)).collect(),
        }
    }

    pub fn slot_count(&self) -> usize {
        self.slot_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, slot: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == slot || b == slot)
            .count()
    }
}

/// Geometry shared by all patches of a partitioned image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub grid_side: usize,
    pub patch_width: usize,
    pub patch_height: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleDecomposition {
    elements: Vec<Element>,
    layout: SlotLayout,
    modality: Modality,
    geometry: Option<GridGeometry>,
}

impl SampleDecomposition {
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn layout(&self) -> &SlotLayout {
        &self.layout
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    /// Grid geometry for image decompositions, `None` for text.
    pub fn geometry(&self) -> Option<&GridGeometry> {
        self.geometry.as_ref()
    }

    pub fn tokens(&self) -> Vec<&str> {
        self.elements
            .iter()
            .filter_map(|e| match e {
                Element::Token(t) => Some(t.as_str()),
                Element::Patch { .. } => None,
            })
            .collect()
    }

    pub fn patch_rects(&self) -> Vec<PatchRect> {
        self.elements
            .iter()
            .filter_map(|e| match e {
                Element::Patch { rect, .. } => Some(*rect),
                Element::Token(_) => None,
            })
            .collect()
    }
}

/// Cuts `image` into `grid_side²` equal patches, row-major.
pub fn partition_image(
    image: &ImageBuffer,
    grid_side: usize,
) -> Result<SampleDecomposition, DecomposeError> {
    if grid_side < 2 {
        return Err(DecomposeError::TooSmall(grid_side));
    }
    let (width, height) = (image.width(), image.height());
    if width % grid_side != 0 || height % grid_side != 0 {
        return Err(DecomposeError::DimensionNotDivisible {
            width,
            height,
            grid_side,
        });
    }
    let patch_width = width / grid_side;
    let patch_height = height / grid_side;
    let src = image.pixels();
    let row_bytes = patch_width * CHANNELS;

    let mut elements = Vec::with_capacity(grid_side * grid_side);
    for row in 0..grid_side {
        for col in 0..grid_side {
            let rect = PatchRect {
                row,
                col,
                x: col * patch_width,
                y: row * patch_height,
                width: patch_width,
                height: patch_height,
            };
            let mut pixels = Vec::with_capacity(patch_height * row_bytes);
            for py in rect.y..rect.y + patch_height {
                let start = (py * width + rect.x) * CHANNELS;
                pixels.extend_from_slice(&src[start..start + row_bytes]);
            }
            elements.push(Element::Patch { rect, pixels });
        }
    }

    Ok(SampleDecomposition {
        elements,
        layout: SlotLayout::grid(grid_side),
        modality: Modality::Image,
        geometry: Some(GridGeometry {
            width,
            height,
            grid_side,
            patch_width,
            patch_height,
        }),
    })
}

/// One element per whitespace-separated token; punctuation stays attached.
pub fn tokenize_text(sentence: &str) -> Result<SampleDecomposition, DecomposeError> {
    let elements: Vec<Element> = sentence
        .split_whitespace()
        .map(|t| Element::Token(t.to_owned()))
        .collect();
    if elements.len() < 2 {
        return Err(DecomposeError::TooFewTokens(elements.len()));
    }
    Ok(SampleDecomposition {
        layout: SlotLayout::chain(elements.len()),
        elements,
        modality: Modality::Text,
        geometry: None,
    })
}

/// Renders a placement (slot index → element index) as a raw input.
///
/// Elements may be placed more than once or not at all.
pub fn reassemble(
    decomp: &SampleDecomposition,
    placement: &[usize],
) -> Result<RawInput, DecomposeError> {
    let slots = decomp.layout.slot_count();
    if placement.len() != slots {
        return Err(DecomposeError::IncompletePlacement {
            assigned: placement.len(),
            slots,
        });
    }
    let count = decomp.elements.len();
    if let Some(&index) = placement.iter().find(|&&e| e >= count) {
        return Err(DecomposeError::InvalidElement { index, count });
    }

    match decomp.geometry {
        Some(geo) => {
            let mut pixels = vec![0u8; geo.width * geo.height * CHANNELS];
            let row_bytes = geo.patch_width * CHANNELS;
            for (slot, &elem) in placement.iter().enumerate() {
                let Element::Patch { pixels: block, .. } = &decomp.elements[elem] else {
                    unreachable!("image decompositions only hold patches");
                };
                let x0 = (slot % geo.grid_side) * geo.patch_width;
                let y0 = (slot / geo.grid_side) * geo.patch_height;
                for (dy, src_row) in block.chunks_exact(row_bytes).enumerate() {
                    let start = ((y0 + dy) * geo.width + x0) * CHANNELS;
                    pixels[start..start + row_bytes].copy_from_slice(src_row);
                }
            }
            let image = ImageBuffer::new(geo.width, geo.height, pixels)
                .expect("geometry matches the source image");
            Ok(RawInput::Image(image))
        }
        None => {
            let words: Vec<&str> = placement
                .iter()
                .map(|&e| match &decomp.elements[e] {
                    Element::Token(t) => t.as_str(),
                    Element::Patch { .. } => unreachable!("text decompositions only hold tokens"),
                })
                .collect();
            Ok(RawInput::Text(words.join(" ")))
        }
    }
}

/// The placement that puts every element back in its own slot.
pub fn identity_placement(decomp: &SampleDecomposition) -> Vec<usize> {
    (0..decomp.layout.slot_count()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gradient(w: usize, h: usize) -> ImageBuffer {
        ImageBuffer::from_fn(w, h, |x, y| [(x * 7) as u8, (y * 3) as u8, ((x + y) % 251) as u8])
            .unwrap()
    }

    #[test]
    fn imagenet_sized_grid() {
        let d = partition_image(&gradient(224, 224), 7).unwrap();
        assert_eq!(d.len(), 49);
        for rect in d.patch_rects() {
            assert_eq!((rect.width, rect.height), (32, 32));
        }
    }

    #[test]
    fn grid_edges() {
        assert_eq!(
            SlotLayout::grid(2).edges(),
            &[(0, 1), (0, 2), (1, 3), (2, 3)]
        );
        assert_eq!(SlotLayout::grid(3).edges().len(), 12);
        for side in 2..9 {
            assert_eq!(SlotLayout::grid(side).edges().len(), 2 * side * (side - 1));
        }
    }

    #[test]
    fn partition_errors() {
        assert_eq!(
            partition_image(&gradient(10, 10), 1),
            Err(DecomposeError::TooSmall(1))
        );
        assert!(matches!(
            partition_image(&gradient(10, 12), 3),
            Err(DecomposeError::DimensionNotDivisible { .. })
        ));
    }

    #[test]
    fn tokenize() {
        let d = tokenize_text("I love you").unwrap();
        assert_eq!(d.tokens(), vec!["I", "love", "you"]);
        assert_eq!(d.layout().edges(), &[(0, 1), (1, 2)]);

        let d = tokenize_text("you gonna suffer but you'll be happy about it").unwrap();
        assert_eq!(d.len(), 9);
        assert_eq!(d.layout().edges().len(), 8);

        assert_eq!(tokenize_text("hi"), Err(DecomposeError::TooFewTokens(1)));
        assert_eq!(tokenize_text("  "), Err(DecomposeError::TooFewTokens(0)));
    }

    #[test]
    fn text_reassembly() {
        let d = tokenize_text("I love you").unwrap();
        assert_eq!(
            reassemble(&d, &[2, 1, 0]).unwrap(),
            RawInput::Text("you love I".into())
        );
        assert_eq!(
            reassemble(&d, &[0, 0, 2]).unwrap(),
            RawInput::Text("I I you".into())
        );
        let d = tokenize_text("  spaced\tout   words ").unwrap();
        assert_eq!(
            reassemble(&d, &identity_placement(&d)).unwrap(),
            RawInput::Text("spaced out words".into())
        );
    }

    #[test]
    fn placement_errors() {
        let d = tokenize_text("I love you").unwrap();
        assert_eq!(
            reassemble(&d, &[0, 1]),
            Err(DecomposeError::IncompletePlacement {
                assigned: 2,
                slots: 3
            })
        );
        assert_eq!(
            reassemble(&d, &[0, 1, 3]),
            Err(DecomposeError::InvalidElement { index: 3, count: 3 })
        );
    }

    #[test]
    fn swapped_patches_move_pixels() {
        let img = gradient(4, 4);
        let d = partition_image(&img, 2).unwrap();
        let RawInput::Image(out) = reassemble(&d, &[1, 0, 2, 3]).unwrap() else {
            panic!("expected image");
        };
        assert_eq!(out.pixel(0, 0), img.pixel(2, 0));
        assert_eq!(out.pixel(3, 1), img.pixel(1, 1));
        assert_eq!(out.pixel(1, 3), img.pixel(1, 3));
    }

    #[test]
    fn chain_layout_is_a_path() {
        for len in 2..12 {
            let layout = SlotLayout::chain(len);
            assert_eq!(layout.edges().len(), len - 1);
            for s in 1..len - 1 {
                assert_eq!(layout.degree(s), 2);
            }
        }
    }

    proptest! {
        #[test]
        fn identity_reassembly_is_bit_exact(
            side in 2usize..6,
            pw in 1usize..6,
            ph in 1usize..6,
            seed in any::<u64>(),
        ) {
            let (w, h) = (side * pw, side * ph);
            let mut state = seed | 1;
            let img = ImageBuffer::from_fn(w, h, |_, _| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                [state as u8, (state >> 8) as u8, (state >> 16) as u8]
            }).unwrap();
            let d = partition_image(&img, side).unwrap();
            prop_assert_eq!(d.len(), side * side);
            let out = reassemble(&d, &identity_placement(&d)).unwrap();
            prop_assert_eq!(out, RawInput::Image(img));
        }
    }
}
