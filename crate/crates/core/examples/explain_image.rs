//! Explain a synthetic red/blue scene with the boundary model and write the
//! overlay figure.
//!
//! cargo run --example explain_image -- out.png

use rle::models::ColorBoundaryModel;
use rle::render::{render_image_explanation, RenderStyle};
use rle::{explain, ExplainConfig, ImageBuffer, ModelHandle, RawInput};

fn scene() -> ImageBuffer {
    // red patch at slot 4, blue at slot 5 on a 3x3 grid of 32px patches
    ImageBuffer::from_fn(96, 96, |x, y| match (x / 32, y / 32) {
        (1, 1) => [255, 0, 0],
        (2, 1) => [0, 0, 255],
        _ => {
            let g = 110 + ((x * 7 + y * 13) % 31) as u8;
            [g, g, g]
        }
    })
    .unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "overlay.png".into());
    let mut model = ModelHandle::builtin(ColorBoundaryModel::red_blue(32));
    let config = ExplainConfig {
        grid_side: 3,
        seed: 1,
        ..Default::default()
    };
    let ex = explain(&mut model, &RawInput::Image(scene()), &config)?;

    let local = ex.relational.to_local();
    for row in local.values.chunks(3) {
        println!("{}", row.iter().map(|v| format!("{v:+.4}")).collect::<Vec<_>>().join("  "));
    }
    let top = ex.relational.top_pairs(1)?[0];
    println!("strongest pair: patches {} and {} ({:+.4})", top.u, top.v, top.weight);

    let figs = render_image_explanation(&ex.relational, &ex.decomposition, &RenderStyle::default())?;
    figs.overlay.save(&out)?;
    println!("wrote {out}");
    Ok(())
}
