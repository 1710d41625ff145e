use std::path::PathBuf;
use std::time::{Duration, Instant};

use rle::decompose::RawInput;
use rle::models::{spawn_bridge, BridgeClient, ModelError, ModelHandle, ModelKind, ScoreQuery};
use rle::ImageBuffer;

fn fixture_command(mode: &str) -> String {
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bridge.py");
    format!("python3 '{}' {mode}", script.display())
}

fn bridge(mode: &str) -> Result<ModelHandle, ModelError> {
    spawn_bridge(&fixture_command(mode), Duration::from_secs(10))
}

fn texts(words: &[&str]) -> Vec<RawInput> {
    words.iter().map(|w| RawInput::Text(w.to_string())).collect()
}

fn score(handle: &mut ModelHandle, inputs: &[RawInput]) -> Result<Vec<f64>, ModelError> {
    let queries: Vec<ScoreQuery<'_>> = inputs.iter().map(ScoreQuery::raw).collect();
    handle.score_batch(&queries, 0)
}

#[test]
fn echo_bridge_scores() {
    let mut h = bridge("echo").unwrap();
    assert_eq!(h.kind(), ModelKind::ExternalBridge);
    assert_eq!(score(&mut h, &texts(&["a b", "c d", "e f"])).unwrap(), vec![0.42; 3]);
    let img = RawInput::Image(ImageBuffer::filled(4, 4, [1, 2, 3]).unwrap());
    assert_eq!(h.score_one(&img, 5).unwrap(), 0.42);
}

#[test]
fn order_is_preserved_across_batches() {
    let mut h = bridge("index").unwrap().with_batch_size(3);
    let words: Vec<String> = (0..10).map(|i| format!("{i} x")).collect();
    let inputs: Vec<RawInput> = words.iter().map(|w| RawInput::Text(w.clone())).collect();
    let expected: Vec<f64> = (0..10).map(f64::from).collect();
    assert_eq!(score(&mut h, &inputs).unwrap(), expected);

    let images: Vec<RawInput> = [7u8, 200, 51]
        .iter()
        .map(|&v| RawInput::Image(ImageBuffer::filled(2, 3, [v, 0, 0]).unwrap()))
        .collect();
    let got = score(&mut h, &images).unwrap();
    assert_eq!(got, vec![7.0 / 255.0, 200.0 / 255.0, 51.0 / 255.0]);
}

#[test]
fn nan_becomes_score_not_finite() {
    let mut h = bridge("nan").unwrap();
    let err = score(&mut h, &texts(&["1 a", "2 b"])).unwrap_err();
    assert!(matches!(err, ModelError::ScoreNotFinite { index: 0 }), "{err:?}");
}

#[test]
fn nonexistent_command_fails_to_spawn() {
    let err = spawn_bridge("/definitely/not/a/bridge --serve", Duration::from_secs(1)).unwrap_err();
    assert!(matches!(err, ModelError::SpawnFailed { .. }), "{err:?}");
    assert!(matches!(
        spawn_bridge("   ", Duration::from_secs(1)),
        Err(ModelError::SpawnFailed { .. })
    ));
}

#[test]
fn wrong_protocol_version_is_rejected() {
    let err = bridge("protocol").unwrap_err();
    assert!(matches!(err, ModelError::ProtocolError(_)), "{err:?}");
}

#[test]
fn silent_bridge_times_out() {
    let start = Instant::now();
    let err = spawn_bridge(&fixture_command("silent"), Duration::from_millis(300)).unwrap_err();
    assert!(matches!(err, ModelError::HandshakeTimeout(_)), "{err:?}");
    assert!(start.elapsed() < Duration::from_secs(5));
}

#[test]
fn early_exit_is_unavailable() {
    let err = bridge("exit").unwrap_err();
    assert!(matches!(err, ModelError::ModelUnavailable(_)), "{err:?}");
}

#[test]
fn error_and_malformed_responses() {
    let mut h = bridge("error").unwrap();
    let err = score(&mut h, &texts(&["a b"])).unwrap_err();
    assert!(matches!(&err, ModelError::ProtocolError(m) if m.contains("model exploded")), "{err:?}");

    let mut h = bridge("short").unwrap();
    assert!(matches!(score(&mut h, &texts(&["a", "b"])), Err(ModelError::ProtocolError(_))));

    let mut h = bridge("wrongid").unwrap();
    assert!(matches!(score(&mut h, &texts(&["a"])), Err(ModelError::ProtocolError(_))));
}

#[test]
fn unannounced_modality_is_refused() {
    let client = BridgeClient::spawn(&fixture_command("textonly"), Duration::from_secs(10)).unwrap();
    assert_eq!(client.modalities(), ["text"]);
    let mut h = ModelHandle::bridge(client);
    let img = RawInput::Image(ImageBuffer::filled(2, 2, [0, 0, 0]).unwrap());
    assert!(matches!(h.score_one(&img, 0), Err(ModelError::InvalidInput(_))));
    assert_eq!(h.score_one(&RawInput::Text("x y".into()), 0).unwrap(), 0.42);
}

#[test]
fn explain_through_bridge() {
    let mut h = bridge("echo").unwrap().with_batch_size(16);
    let config = rle::ExplainConfig {
        permutations: rle::Permutations::Fixed(50),
        ..Default::default()
    };
    let out = rle::explain(&mut h, &RawInput::Text("one two three".into()), &config).unwrap();
    assert_eq!(out.relational.original_score, 0.42);
    assert!(out.relational.matrix().iter().all(|&a| a == 0.0));
}
