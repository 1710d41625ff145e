//! Explain a sentence against the built-in lexicon sentiment model.
//!
//! cargo run --example explain_text -- "not bad at all, quite good really"

use rle::models::LexiconSentimentModel;
use rle::render::{render_text_explanation, RenderStyle};
use rle::{explain, ExplainConfig, ModelHandle, RawInput};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sentence = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "you gonna suffer but you'll be happy about it".into());
    let mut model = ModelHandle::builtin(LexiconSentimentModel::default());
    let config = ExplainConfig {
        target_class: 1,
        seed: 7,
        ..Default::default()
    };
    let ex = explain(&mut model, &RawInput::Text(sentence), &config)?;
    let tokens = ex.decomposition.tokens();

    println!("p(positive) = {:.3}", ex.relational.original_score);
    for p in ex.relational.top_pairs(5)? {
        println!("{:>10} ~ {:<10} {:+.4}", tokens[p.u], tokens[p.v], p.weight);
    }
    let local = ex.relational.to_local();
    for (t, v) in tokens.iter().zip(&local.values) {
        println!("{t:>10} {v:+.4}");
    }
    let figs = render_text_explanation(&ex.relational, &ex.decomposition, &RenderStyle::default())?;
    println!("{}", figs.ansi);
    Ok(())
}
