//! SLIC superpixels: k-means in CIELAB + image-plane space with a local
//! search window, followed by connectivity enforcement.

use std::collections::VecDeque;

use super::EvalError;
use crate::image::ImageBuffer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    /// Target number of segments.
    pub k: usize,
    pub compactness: f64,
    pub iters: usize,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            k: 100,
            compactness: 10.0,
            iters: 10,
        }
    }
}

/// Per-pixel segment labels in `0..segment_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    segment_count: usize,
}

impl Segmentation {
    /// Validates that labels are dense, every segment is non-empty and
    /// 4-connected.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Result<Self, EvalError> {
        if labels.len() != width * height || labels.is_empty() {
            return Err(EvalError::InvalidSegmentation(format!(
                "{} labels for {width}x{height}",
                labels.len()
            )));
        }
        let segment_count = *labels.iter().max().expect("non-empty") as usize + 1;
        let seg = Self {
            width,
            height,
            labels,
            segment_count,
        };
        let sizes = seg.sizes();
        if let Some(id) = sizes.iter().position(|&s| s == 0) {
            return Err(EvalError::InvalidSegmentation(format!("segment {id} is empty")));
        }
        let (components, _) = connected_components(width, height, &seg.labels);
        let component_count = components.iter().max().map_or(0, |&c| c + 1);
        if component_count != segment_count {
            return Err(EvalError::InvalidSegmentation(
                "some segment is not 4-connected".into(),
            ));
        }
        Ok(seg)
    }

    /// Equal rectangular blocks, `cols × rows`, labeled row-major.
    pub fn blocks(width: usize, height: usize, cols: usize, rows: usize) -> Result<Self, EvalError> {
        if cols == 0 || rows == 0 || !width.is_multiple_of(cols) || !height.is_multiple_of(rows) {
            return Err(EvalError::InvalidSegmentation(format!(
                "{width}x{height} does not split into {cols}x{rows} blocks"
            )));
        }
        let (bw, bh) = (width / cols, height / rows);
        let labels = (0..height)
            .flat_map(|y| (0..width).map(move |x| ((y / bh) * cols + x / bw) as u32))
            .collect();
        Self::from_labels(width, height, labels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn segment_count(&self) -> usize {
        self.segment_count
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.segment_count];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }
}

fn srgb_to_linear(c: u8) -> f64 {
    let c = f64::from(c) / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// sRGB (D65) to CIELAB.
pub fn rgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(srgb_to_linear);
    let x = (0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b) / 0.950_47;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = (0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b) / 1.088_83;
    let f = |t: f64| {
        if t > 216.0 / 24389.0 {
            t.cbrt()
        } else {
            (24389.0 / 27.0 * t + 16.0) / 116.0
        }
    };
    let (fx, fy, fz) = (f(x), f(y), f(z));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

#[derive(Debug, Clone, Copy)]
struct Center {
    lab: [f64; 3],
    x: f64,
    y: f64,
}

fn lab_dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

pub fn slic_segment(image: &ImageBuffer, params: &SlicParams) -> Result<Segmentation, EvalError> {
    let (w, h) = (image.width(), image.height());
    let pixels = w * h;
    if params.k < 2 {
        return Err(EvalError::InvalidParameter(format!("k must be >= 2, got {}", params.k)));
    }
    if params.k > pixels {
        return Err(EvalError::TooManySegments {
            k: params.k,
            pixels,
        });
    }
    if !(params.compactness.is_finite() && params.compactness >= 0.0) {
        return Err(EvalError::InvalidParameter("compactness must be >= 0".into()));
    }

    let lab: Vec<[f64; 3]> = image
        .pixels()
        .chunks_exact(3)
        .map(|p| rgb_to_lab([p[0], p[1], p[2]]))
        .collect();
    let step = ((pixels as f64) / params.k as f64).sqrt();
    let spatial_weight = (params.compactness / step).powi(2);

    let gradient = |x: usize, y: usize| {
        let l = |xx: usize, yy: usize| &lab[yy * w + xx];
        let (x0, x1) = (x.saturating_sub(1), (x + 1).min(w - 1));
        let (y0, y1) = (y.saturating_sub(1), (y + 1).min(h - 1));
        lab_dist2(l(x1, y), l(x0, y)) + lab_dist2(l(x, y1), l(x, y0))
    };

    // Seed grid, with at least as many columns as the aspect ratio asks for.
    let nx = ((params.k as f64 * w as f64 / h as f64).sqrt().ceil() as usize).clamp(1, w);
    let ny = ((params.k as f64 / nx as f64).round() as usize).clamp(1, h);
    let (sx, sy) = (w as f64 / nx as f64, h as f64 / ny as f64);
    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (cx, cy) = ((i as f64 + 0.5) * sx, (j as f64 + 0.5) * sy);
            let px = (cx.floor() as usize).min(w - 1);
            let py = (cy.floor() as usize).min(h - 1);
            // move to the lowest-gradient pixel of the 3×3 neighborhood, if
            // one is strictly lower than the seed pixel
            let mut best = (gradient(px, py), px, py);
            for yy in py.saturating_sub(1)..=(py + 1).min(h - 1) {
                for xx in px.saturating_sub(1)..=(px + 1).min(w - 1) {
                    let g = gradient(xx, yy);
                    if g < best.0 {
                        best = (g, xx, yy);
                    }
                }
            }
            let (x, y) = if (best.1, best.2) == (px, py) {
                (cx, cy)
            } else {
                (best.1 as f64 + 0.5, best.2 as f64 + 0.5)
            };
            centers.push(Center {
                lab: lab[best.2 * w + best.1],
                x,
                y,
            });
        }
    }

    let distance = |c: &Center, idx: usize| {
        let (x, y) = ((idx % w) as f64 + 0.5, (idx / w) as f64 + 0.5);
        lab_dist2(&c.lab, &lab[idx]) + spatial_weight * ((c.x - x).powi(2) + (c.y - y).powi(2))
    };

    let mut labels = vec![u32::MAX; pixels];
    let mut dist = vec![f64::INFINITY; pixels];
    for _ in 0..params.iters.max(1) {
        labels.fill(u32::MAX);
        dist.fill(f64::INFINITY);
        for (ci, c) in centers.iter().enumerate() {
            let x0 = (c.x - step).floor().max(0.0) as usize;
            let x1 = ((c.x + step).ceil() as usize).min(w);
            let y0 = (c.y - step).floor().max(0.0) as usize;
            let y1 = ((c.y + step).ceil() as usize).min(h);
            for y in y0..y1 {
                for x in x0..x1 {
                    let idx = y * w + x;
                    let d = distance(c, idx);
                    if d < dist[idx] {
                        dist[idx] = d;
                        labels[idx] = ci as u32;
                    }
                }
            }
        }
        // pixels no window reached go to the nearest center overall
        for (idx, label) in labels.iter_mut().enumerate() {
            if *label == u32::MAX {
                let (ci, _) = centers
                    .iter()
                    .enumerate()
                    .map(|(ci, c)| (ci, distance(c, idx)))
                    .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
                *label = ci as u32;
            }
        }

        let mut acc = vec![[0.0f64; 6]; centers.len()];
        for (idx, &l) in labels.iter().enumerate() {
            let a = &mut acc[l as usize];
            a[0] += lab[idx][0];
            a[1] += lab[idx][1];
            a[2] += lab[idx][2];
            a[3] += (idx % w) as f64 + 0.5;
            a[4] += (idx / w) as f64 + 0.5;
            a[5] += 1.0;
        }
        for (c, a) in centers.iter_mut().zip(&acc) {
            if a[5] > 0.0 {
                c.lab = [a[0] / a[5], a[1] / a[5], a[2] / a[5]];
                c.x = a[3] / a[5];
                c.y = a[4] / a[5];
            }
        }
    }

    let min_size = ((step * step / 4.0) as usize).max(1);
    let labels = enforce_connectivity(w, h, &labels, min_size);
    Segmentation::from_labels(w, h, labels)
}

/// 4-connected components of equal labels, numbered in raster order.
/// Returns the component id per pixel and the pixel lists.
fn connected_components(w: usize, h: usize, labels: &[u32]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut comp = vec![usize::MAX; w * h];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = members.len();
        let mut list = vec![start];
        comp[start] = id;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for q in neighbors(w, h, p) {
                if comp[q] == usize::MAX && labels[q] == labels[start] {
                    comp[q] = id;
                    list.push(q);
                    queue.push_back(q);
                }
            }
        }
        members.push(list);
    }
    (comp, members)
}

fn neighbors(w: usize, h: usize, p: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (p % w, p / w);
    [
        (x > 0).then(|| p - 1),
        (x + 1 < w).then(|| p + 1),
        (y > 0).then(|| p - w),
        (y + 1 < h).then(|| p + w),
    ]
    .into_iter()
    .flatten()
}

/// Splits every label into its 4-connected pieces, then folds pieces
/// smaller than `min_size` into their largest neighboring piece. Output
/// labels are dense and numbered in raster order of first appearance.
fn enforce_connectivity(w: usize, h: usize, labels: &[u32], min_size: usize) -> Vec<u32> {
    let (mut comp, mut members) = connected_components(w, h, labels);
    let mut alive = members.len();
    loop {
        let mut merged_any = false;
        for id in 0..members.len() {
            let size = members[id].len();
            if size == 0 || size >= min_size || alive <= 1 {
                continue;
            }
            let mut target: Option<usize> = None;
            for &p in &members[id] {
                for q in neighbors(w, h, p) {
                    let c = comp[q];
                    if c == id {
                        continue;
                    }
                    target = match target {
                        Some(t)
                            if members[t].len() > members[c].len()
                                || (members[t].len() == members[c].len() && t < c) =>
                        {
                            Some(t)
                        }
                        _ => Some(c),
                    };
                }
            }
            if let Some(t) = target {
                let moved = std::mem::take(&mut members[id]);
                for &p in &moved {
                    comp[p] = t;
                }
                members[t].extend(moved);
                alive -= 1;
                merged_any = true;
            }
        }
        if !merged_any {
            break;
        }
    }

    let mut remap = vec![u32::MAX; members.len()];
    let mut next = 0u32;
    comp.iter()
        .map(|&c| {
            if remap[c] == u32::MAX {
                remap[c] = next;
                next += 1;
            }
            remap[c]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lab_reference_values() {
        let white = rgb_to_lab([255, 255, 255]);
        assert!((white[0] - 100.0).abs() < 1e-3 && white[1].abs() < 1e-3 && white[2].abs() < 1e-3);
        assert_eq!(rgb_to_lab([0, 0, 0]), [0.0, 0.0, 0.0]);
        let red = rgb_to_lab([255, 0, 0]);
        assert!((red[0] - 53.24).abs() < 0.05 && (red[1] - 80.09).abs() < 0.05 && (red[2] - 67.20).abs() < 0.05);
    }

    #[test]
    fn uniform_image_splits_into_equal_quadrants() {
        let img = ImageBuffer::filled(64, 64, [90, 120, 200]).unwrap();
        let seg = slic_segment(&img, &SlicParams { k: 4, ..Default::default() }).unwrap();
        assert_eq!(seg.segment_count(), 4);
        assert_eq!(seg.sizes(), vec![1024; 4]);
    }

    #[test]
    fn small_fragments_are_absorbed() {
        // label 1 appears as a big block and as an isolated pixel inside label 0
        let (w, h) = (8, 4);
        let mut labels: Vec<u32> = (0..w * h).map(|i| if i % w < 4 { 0 } else { 1 }).collect();
        labels[w + 1] = 1;
        let out = enforce_connectivity(w, h, &labels, 3);
        let seg = Segmentation::from_labels(w, h, out).unwrap();
        assert_eq!(seg.segment_count(), 2);
        assert_eq!(seg.labels()[w + 1], seg.labels()[0]);
    }

    #[test]
    fn rejects_bad_labelings() {
        assert!(Segmentation::from_labels(2, 1, vec![0, 2]).is_err());
        assert!(Segmentation::from_labels(3, 1, vec![0, 1, 0]).is_err());
        assert!(Segmentation::blocks(10, 10, 3, 2).is_err());
        assert_eq!(Segmentation::blocks(8, 4, 4, 2).unwrap().sizes(), vec![4; 8]);
    }

    #[test]
    fn too_many_segments() {
        let img = ImageBuffer::filled(3, 3, [0, 0, 0]).unwrap();
        assert!(matches!(
            slic_segment(&img, &SlicParams { k: 10, ..Default::default() }),
            Err(EvalError::TooManySegments { k: 10, pixels: 9 })
        ));
    }
}
