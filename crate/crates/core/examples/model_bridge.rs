//! Talk to an external model over the NDJSON stdio bridge.
//!
//! With no argument this starts the test fixture bridge, which scores a
//! sentence by its first word. Any command speaking the protocol works:
//!
//! cargo run --example model_bridge -- "python3 my_bridge.py --model resnet"

use std::time::Duration;

use rle::models::bridge::spawn_bridge;
use rle::{explain, ExplainConfig, Permutations, RawInput};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let command = std::env::args().nth(1).unwrap_or_else(|| {
        format!("python3 {}/tests/fixtures/bridge.py index", env!("CARGO_MANIFEST_DIR"))
    });
    let mut model = spawn_bridge(&command, Duration::from_secs(10))?;
    println!("connected: {}", model.describe());

    let input = RawInput::Text("3 1 4 1 5".into());
    println!("score of unchanged input: {}", model.score_one(&input, 0)?);

    let config = ExplainConfig {
        permutations: Permutations::Fixed(500),
        ..Default::default()
    };
    let ex = explain(&mut model, &input, &config)?;
    let tokens = ex.decomposition.tokens();
    for p in ex.relational.top_pairs(3)? {
        println!("{} ~ {}: {:+.4}", tokens[p.u], tokens[p.v], p.weight);
    }
    Ok(())
}
