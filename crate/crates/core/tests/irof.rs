mod common;

use common::{noise_image, red_blue_scene, SplitMix};
use rle::eval::{irof, slic_segment, PixelAttribution, Segmentation, SlicParams};
use rle::models::{ModelHandle, SurvivingPixelModel};
use rle::ImageBuffer;

fn random_map(w: usize, h: usize, seed: u64) -> PixelAttribution {
    let mut rng = SplitMix(seed);
    PixelAttribution {
        width: w,
        height: h,
        values: (0..w * h).map(|_| rng.unit() * 2.0 - 1.0).collect(),
    }
}

#[test]
fn surviving_pixel_model_matches_closed_form() {
    for (w, h, cols, rows, seed) in [(8, 8, 2, 2, 1), (32, 32, 4, 4, 2), (40, 24, 5, 3, 3), (60, 60, 10, 6, 4)] {
        let img = noise_image(w, h, seed);
        let seg = Segmentation::blocks(w, h, cols, rows).unwrap();
        let l = seg.segment_count() as f64;
        let mut model = ModelHandle::builtin(SurvivingPixelModel { fill: img.mean_color() });
        let mut last = None;
        for a in 0..5 {
            let report = irof(&mut model, &img, &random_map(w, h, seed * 10 + a), &seg, 0).unwrap();
            assert_eq!(report.curve.len(), seg.segment_count() + 1);
            assert_eq!(report.curve[0], 1.0);
            assert!(report.curve.windows(2).all(|p| p[1] < p[0]));
            // mean over l = 0..=L of 1 - (1 - l/L)
            let expected = (0..=seg.segment_count()).map(|i| i as f64 / l).sum::<f64>() / (l + 1.0);
            assert!((report.irof - expected).abs() < 1e-9, "{} vs {expected}", report.irof);
            let tail = *report.curve.last().unwrap();
            if let Some(prev) = last {
                assert_eq!(tail.to_bits(), f64::to_bits(prev));
            }
            last = Some(tail);
        }
    }
}

fn majority_consistent(img: &ImageBuffer, seg: &Segmentation) -> bool {
    let mut votes = vec![std::collections::BTreeMap::<[u8; 3], usize>::new(); seg.segment_count()];
    for (i, &l) in seg.labels().iter().enumerate() {
        *votes[l as usize].entry(img.pixel(i % img.width(), i / img.width())).or_default() += 1;
    }
    let majority: Vec<[u8; 3]> = votes
        .iter()
        .map(|v| *v.iter().max_by_key(|(_, &c)| c).unwrap().0)
        .collect();
    seg.labels()
        .iter()
        .enumerate()
        .all(|(i, &l)| majority[l as usize] == img.pixel(i % img.width(), i / img.width()))
}

#[test]
fn two_tone_boundary_is_respected() {
    let img = ImageBuffer::from_fn(64, 64, |x, _| if x < 32 { [230, 40, 40] } else { [40, 40, 230] }).unwrap();
    let seg = slic_segment(&img, &SlicParams { k: 2, ..SlicParams::default() }).unwrap();
    assert_eq!(seg.segment_count(), 2);
    assert!(majority_consistent(&img, &seg));

    let img = ImageBuffer::from_fn(64, 64, |_, y| if y < 20 { [0, 0, 0] } else { [250, 250, 250] }).unwrap();
    let seg = slic_segment(&img, &SlicParams { k: 4, ..SlicParams::default() }).unwrap();
    assert!(majority_consistent(&img, &seg));
}

/// Smooth color field plus ±12 grain.
fn textured(w: usize, h: usize, seed: u64) -> ImageBuffer {
    let mut rng = SplitMix(seed);
    let (fx, fy) = (0.02 + rng.unit() * 0.1, 0.02 + rng.unit() * 0.1);
    ImageBuffer::from_fn(w, h, |x, y| {
        let base = [
            128.0 + 90.0 * (x as f64 * fx).sin(),
            128.0 + 90.0 * (y as f64 * fy).cos(),
            128.0 + 60.0 * ((x + y) as f64 * 0.05).sin(),
        ];
        base.map(|b| (b + rng.unit() * 24.0 - 12.0).clamp(0.0, 255.0) as u8)
    })
    .unwrap()
}

fn corpus() -> Vec<ImageBuffer> {
    let mut images = vec![
        ImageBuffer::filled(64, 64, [120, 130, 140]).unwrap(),
        ImageBuffer::from_fn(64, 48, |x, y| [(x * 4) as u8, (y * 5) as u8, 90]).unwrap(),
        ImageBuffer::from_fn(50, 75, |x, y| if (x / 25 + y / 25) % 2 == 0 { [0, 0, 0] } else { [255, 255, 255] }).unwrap(),
        ImageBuffer::from_fn(96, 96, |x, y| {
            let d = ((x as f64 - 48.0).powi(2) + (y as f64 - 48.0).powi(2)).sqrt();
            if d < 30.0 { [250, 200, 0] } else { [10, 60, 10] }
        })
        .unwrap(),
    ];
    for seed in 0..4 {
        images.push(textured(80, 64, seed));
        images.push(red_blue_scene(96, seed));
    }
    images
}

#[test]
fn segment_count_stays_near_target() {
    for (i, img) in corpus().iter().enumerate() {
        for k in [4, 9, 25, 64, 100] {
            let seg = slic_segment(img, &SlicParams { k, ..SlicParams::default() }).unwrap();
            let n = seg.segment_count();
            assert!(2 * n >= k && n <= 2 * k, "image {i}, k {k}: {n} segments");
            let relabeled = Segmentation::from_labels(seg.width(), seg.height(), seg.labels().to_vec());
            assert_eq!(relabeled.unwrap(), seg);
        }
    }
}

#[test]
fn slic_is_deterministic() {
    let img = red_blue_scene(96, 11);
    let a = slic_segment(&img, &SlicParams::default()).unwrap();
    let b = slic_segment(&img, &SlicParams::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn too_many_segments() {
    let img = ImageBuffer::filled(3, 3, [0, 0, 0]).unwrap();
    assert!(slic_segment(&img, &SlicParams { k: 10, ..SlicParams::default() }).is_err());
}
