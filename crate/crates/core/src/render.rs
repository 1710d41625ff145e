//! Figures for explanations: a tinted patch overlay and a pair heatmap for
//! images, highlighted HTML and ANSI text for sentences.
//!
//! Green marks positive influence, red negative.

use std::fmt::Write as _;

use thiserror::Error;

use crate::decompose::{identity_placement, reassemble, Modality, RawInput, SampleDecomposition};
use crate::explain::{LocalExplanation, RelationalExplanation};
use crate::image::ImageBuffer;

pub const POSITIVE: [u8; 3] = [26, 150, 65];
pub const NEGATIVE: [u8; 3] = [215, 25, 28];
const WHITE: [u8; 3] = [255, 255, 255];

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("cannot render a {actual} decomposition as {expected}")]
    ModalityMismatch {
        expected: &'static str,
        actual: &'static str,
    },
    #[error("explanation has {explanation} elements, decomposition has {decomposition}")]
    SizeMismatch {
        explanation: usize,
        decomposition: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderStyle {
    /// Elements with `|e| < threshold · max|e|` are left plain.
    pub threshold: f64,
    /// Tint opacity of the strongest element.
    pub max_alpha: f64,
    /// Side of one heatmap cell in pixels.
    pub cell_size: usize,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            threshold: 0.2,
            max_alpha: 0.6,
            cell_size: 16,
        }
    }
}

pub struct ImageFigures {
    pub overlay: ImageBuffer,
    pub heatmap: ImageBuffer,
}

pub struct TextFigures {
    pub html: String,
    pub ansi: String,
}

/// Signed intensity in [−1, 1] per element, zeroed below the threshold.
pub fn highlight_levels(local: &LocalExplanation, threshold: f64) -> Vec<f64> {
    let max = local.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    local
        .values
        .iter()
        .map(|&v| {
            if max == 0.0 || v.abs() < threshold * max {
                0.0
            } else {
                v / max
            }
        })
        .collect()
}

fn blend(under: [u8; 3], over: [u8; 3], alpha: f64) -> [u8; 3] {
    std::array::from_fn(|c| (under[c] as f64 * (1.0 - alpha) + over[c] as f64 * alpha).round() as u8)
}

/// Diverging color for `t` in [−1, 1]: red through white to green.
pub fn diverging(t: f64) -> [u8; 3] {
    let t = t.clamp(-1.0, 1.0);
    if t >= 0.0 {
        blend(WHITE, POSITIVE, t)
    } else {
        blend(WHITE, NEGATIVE, -t)
    }
}

fn check(
    rel: &RelationalExplanation,
    decomp: &SampleDecomposition,
    expected: Modality,
) -> Result<(), RenderError> {
    if decomp.modality() != expected {
        return Err(RenderError::ModalityMismatch {
            expected: expected.as_str(),
            actual: decomp.modality().as_str(),
        });
    }
    if rel.n() != decomp.len() {
        return Err(RenderError::SizeMismatch {
            explanation: rel.n(),
            decomposition: decomp.len(),
        });
    }
    Ok(())
}

pub fn render_image_explanation(
    rel: &RelationalExplanation,
    decomp: &SampleDecomposition,
    style: &RenderStyle,
) -> Result<ImageFigures, RenderError> {
    check(rel, decomp, Modality::Image)?;
    let RawInput::Image(mut overlay) =
        reassemble(decomp, &identity_placement(decomp)).expect("identity placement is complete")
    else {
        unreachable!("image decompositions reassemble to images")
    };
    let levels = highlight_levels(&rel.to_local(), style.threshold);
    for (rect, &t) in decomp.patch_rects().iter().zip(&levels) {
        if t == 0.0 {
            continue;
        }
        let tint = if t > 0.0 { POSITIVE } else { NEGATIVE };
        let alpha = style.max_alpha * t.abs();
        for y in rect.y..rect.y + rect.height {
            for x in rect.x..rect.x + rect.width {
                overlay.set_pixel(x, y, blend(overlay.pixel(x, y), tint, alpha));
            }
        }
    }
    Ok(ImageFigures {
        overlay,
        heatmap: render_heatmap(rel, style.cell_size),
    })
}

/// `n × n` cells, color scale symmetric about zero.
pub fn render_heatmap(rel: &RelationalExplanation, cell_size: usize) -> ImageBuffer {
    let n = rel.n();
    let cell = cell_size.max(1);
    let max = rel.matrix().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let side = n * cell;
    ImageBuffer::from_fn(side, side, |x, y| {
        let a = rel.get(y / cell, x / cell);
        diverging(if max > 0.0 { a / max } else { 0.0 })
    })
    .expect("heatmap dimensions are positive")
}

fn css_color(t: f64) -> String {
    let [r, g, b] = if t > 0.0 { POSITIVE } else { NEGATIVE };
    format!("rgba({r},{g},{b},{:.3})", t.abs())
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

pub fn render_text_explanation(
    rel: &RelationalExplanation,
    decomp: &SampleDecomposition,
    style: &RenderStyle,
) -> Result<TextFigures, RenderError> {
    check(rel, decomp, Modality::Text)?;
    let tokens = decomp.tokens();
    let local = rel.to_local();
    let levels = highlight_levels(&local, style.threshold);

    let mut html = String::from(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Relational explanation</title>\n\
         <style>\nbody{font-family:sans-serif}\n.tok{padding:2px 3px;border-radius:3px}\n\
         table{border-collapse:collapse}\ntd,th{padding:4px 6px;text-align:center;font-size:12px}\n</style>\n\
         </head>\n<body>\n<p class=\"tokens\">\n",
    );
    for ((token, &t), e) in tokens.iter().zip(&levels).zip(&local.values) {
        let token = escape_html(token);
        if t == 0.0 {
            let _ = writeln!(html, "<span class=\"tok\" title=\"{e:.6}\">{token}</span>");
        } else {
            let _ = writeln!(
                html,
                "<span class=\"tok\" title=\"{e:.6}\" style=\"background-color:{}\">{token}</span>",
                css_color(t)
            );
        }
    }
    html.push_str("</p>\n<table class=\"relations\">\n<tr><th></th>");
    for token in &tokens {
        let _ = write!(html, "<th>{}</th>", escape_html(token));
    }
    html.push_str("</tr>\n");
    let max = rel.matrix().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (u, row) in rel.rows().enumerate() {
        let _ = write!(html, "<tr><th>{}</th>", escape_html(tokens[u]));
        for &a in row {
            let [r, g, b] = diverging(if max > 0.0 { a / max } else { 0.0 });
            let _ = write!(
                html,
                "<td style=\"background-color:rgb({r},{g},{b})\">{a:.4}</td>"
            );
        }
        html.push_str("</tr>\n");
    }
    html.push_str("</table>\n</body>\n</html>\n");

    let mut ansi = String::new();
    for (i, (token, &t)) in tokens.iter().zip(&levels).enumerate() {
        if i > 0 {
            ansi.push(' ');
        }
        if t == 0.0 {
            ansi.push_str(token);
        } else {
            let [r, g, b] = diverging(t);
            let _ = write!(ansi, "\x1b[48;2;{r};{g};{b}m\x1b[38;2;0;0;0m{token}\x1b[0m");
        }
    }
    ansi.push('\n');

    Ok(TextFigures { html, ansi })
}
