//! Compare RLE against random attributions with IROF on a batch of
//! synthetic red/blue scenes.
//!
//! cargo run --release --example irof_benchmark -- 10

use rle::eval::{evaluate_method, slic_segment, summarize, AttributionMethod, IrofRecord, SlicParams};
use rle::models::ColorBoundaryModel;
use rle::{ExplainConfig, ImageBuffer, ModelHandle, Permutations};

fn scene(seed: u64) -> ImageBuffer {
    let slots = [(0, 1), (1, 2), (3, 4), (4, 5), (6, 7), (7, 8), (0, 3), (3, 6), (1, 4), (4, 7), (2, 5), (5, 8)];
    let (red, blue) = slots[seed as usize % slots.len()];
    ImageBuffer::from_fn(96, 96, |x, y| {
        let slot = (y / 32) * 3 + x / 32;
        if slot == red {
            [255, 0, 0]
        } else if slot == blue {
            [0, 0, 255]
        } else {
            let g = 110 + ((x * 31 + y * 17 + seed as usize * 7) % 31) as u8;
            [g, g, g]
        }
    })
    .unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(6);
    let config = ExplainConfig {
        grid_side: 3,
        permutations: Permutations::Fixed(2000),
        ..Default::default()
    };
    let mut model = ModelHandle::builtin(ColorBoundaryModel::red_blue(32));
    let mut records = Vec::new();
    for seed in 0..n {
        let img = scene(seed);
        let seg = slic_segment(&img, &SlicParams::default())?;
        for method in [AttributionMethod::Rle, AttributionMethod::Random] {
            let r = evaluate_method(&mut model, &img, &seg, method, &config, seed)?;
            println!("scene {seed} {:>6}: irof {:.3} over {} segments", method.as_str(), r.irof, r.segment_count);
            records.push(IrofRecord {
                image_id: format!("scene{seed}"),
                segment_count: r.segment_count,
                curve: r.curve,
                irof: r.irof,
                method,
                seed,
            });
        }
    }
    for s in summarize(&records) {
        println!("{:>6}: mean {:.3} std {:.3} (n={})", s.method.as_str(), s.mean, s.std, s.count);
    }
    Ok(())
}
