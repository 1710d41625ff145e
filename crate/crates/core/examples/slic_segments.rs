//! Segment an image into superpixels and write a boundary map.
//!
//! cargo run --example slic_segments -- input.png 100 segments.png

use rle::eval::{slic_segment, SlicParams};
use rle::ImageBuffer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let img = match args.next() {
        Some(path) => ImageBuffer::open(path)?,
        None => ImageBuffer::from_fn(120, 90, |x, y| {
            let d = ((x as f64 - 60.0).powi(2) + (y as f64 - 45.0).powi(2)).sqrt();
            if d < 30.0 { [230, 180, 40] } else { [40, (y * 2) as u8, 160] }
        })?,
    };
    let k = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100);
    let out = args.next().unwrap_or_else(|| "segments.png".into());

    let seg = slic_segment(&img, &SlicParams { k, ..Default::default() })?;
    let sizes = seg.sizes();
    println!(
        "{} segments (asked for {k}), sizes {}..{}",
        seg.segment_count(),
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap()
    );

    let labels = seg.labels();
    let (w, h) = (seg.width(), seg.height());
    let mut edges = img.clone();
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            let right = x + 1 < w && labels[y * w + x + 1] != l;
            let down = y + 1 < h && labels[(y + 1) * w + x] != l;
            if right || down {
                edges.set_pixel(x, y, [0, 0, 0]);
            }
        }
    }
    edges.save(&out)?;
    println!("wrote {out}");
    Ok(())
}
