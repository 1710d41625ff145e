mod common;

use common::chi_square_uniform_p;
use proptest::prelude::*;
use rle::decompose::{partition_image, tokenize_text};
use rle::perturb::{
    build_adjacency, lower_triangle, PermutationStream, PermuteMode,
};
use rle::ImageBuffer;

fn placement_counts(mode: PermuteMode, n: usize, draws: usize, seed: u64) -> std::collections::BTreeMap<Vec<usize>, u64> {
    let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    let d = tokenize_text(&words.join(" ")).unwrap();
    let mut stream = PermutationStream::new(seed, mode);
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..draws {
        *counts.entry(stream.next_sample(&d).unwrap().placement).or_insert(0) += 1;
    }
    counts
}

#[test]
fn replacement_is_uniform_over_four_placements() {
    for seed in [1, 2, 3] {
        let counts = placement_counts(PermuteMode::Replacement, 2, 10_000, seed);
        assert_eq!(counts.len(), 4);
        let p = chi_square_uniform_p(&counts.values().copied().collect::<Vec<_>>());
        assert!(p > 0.01, "seed {seed}: p = {p}, counts {counts:?}");
    }
}

#[test]
fn shuffle_is_uniform_over_bijections() {
    let counts = placement_counts(PermuteMode::Shuffle, 3, 60_000, 5);
    assert_eq!(counts.len(), 6);
    for placement in counts.keys() {
        let mut sorted = placement.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2]);
    }
    let p = chi_square_uniform_p(&counts.values().copied().collect::<Vec<_>>());
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn stream_is_a_function_of_the_seed() {
    let d = tokenize_text("a b c d e").unwrap();
    let draw = |seed| {
        let mut s = PermutationStream::new(seed, PermuteMode::Replacement);
        (0..50).map(|_| s.next_sample(&d).unwrap().placement).collect::<Vec<_>>()
    };
    assert_eq!(draw(9), draw(9));
    assert_ne!(draw(9), draw(10));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn grid_adjacency_is_symmetric_with_zero_diagonal(
        side in 2usize..6,
        seed in any::<u64>(),
        shuffle in any::<bool>(),
    ) {
        let img = ImageBuffer::filled(side * 2, side * 2, [9, 9, 9]).unwrap();
        let d = partition_image(&img, side).unwrap();
        let mode = if shuffle { PermuteMode::Shuffle } else { PermuteMode::Replacement };
        let mut stream = PermutationStream::new(seed, mode);
        let sample = stream.next_sample(&d).unwrap();
        if shuffle {
            let mut sorted = sample.placement.clone();
            sorted.sort();
            prop_assert_eq!(sorted, (0..d.len()).collect::<Vec<_>>());
        }
        let adj = build_adjacency(d.layout(), d.len(), &sample.placement);
        for u in 0..d.len() {
            prop_assert_eq!(adj.get(u, u), 0);
            for v in 0..d.len() {
                prop_assert_eq!(adj.get(u, v), adj.get(v, u));
            }
        }
        let x = lower_triangle(&adj).unwrap();
        prop_assert_eq!(x.to_matrix().unwrap(), adj);
    }
}
