//! Recover a planted pair interaction on a 3x3 grid and draw the pair matrix.
//!
//! cargo run --example relational_heatmap -- heatmap.png

use rle::models::{PairSyntheticModel, SyntheticSpec};
use rle::render::render_heatmap;
use rle::{explain, ExplainConfig, ImageBuffer, ModelHandle, RawInput};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "heatmap.png".into());
    // score rises when patches 2 and 5 touch, falls when 0 and 8 touch
    let spec = SyntheticSpec::new(vec![((2, 5), 1.0), ((0, 8), -0.5)]).with_noise(0.05, 3);
    let mut model = ModelHandle::builtin(PairSyntheticModel::new(spec)?);
    let img = ImageBuffer::from_fn(60, 60, |x, y| [(x * 4) as u8, (y * 4) as u8, 128])?;
    let config = ExplainConfig {
        grid_side: 3,
        seed: 11,
        ..Default::default()
    };
    let rel = explain(&mut model, &RawInput::Image(img), &config)?.relational;

    for row in rel.rows() {
        println!("{}", row.iter().map(|v| format!("{v:+.3}")).collect::<Vec<_>>().join(" "));
    }
    for p in rel.top_pairs(3)? {
        println!("({}, {}) {:+.4}", p.u, p.v, p.weight);
    }
    render_heatmap(&rel, 24).save(&out)?;
    println!("wrote {out}");
    Ok(())
}
