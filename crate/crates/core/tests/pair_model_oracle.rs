mod common;

use common::{pairs, population_pair_weights};
use rle::models::{ModelHandle, PairSyntheticModel, SyntheticSpec};
use rle::{explain, ExplainConfig, ImageBuffer, Permutations, RawInput};

fn explain_grid(terms: Vec<((usize, usize), f64)>, seed: u64) -> rle::RelationalExplanation {
    let model = PairSyntheticModel::new(SyntheticSpec::new(terms)).unwrap();
    let mut handle = ModelHandle::builtin(model);
    let img = ImageBuffer::from_fn(30, 30, |x, y| [(x * 8) as u8, (y * 8) as u8, 100]).unwrap();
    let config = ExplainConfig {
        grid_side: 3,
        permutations: Permutations::Fixed(5000),
        seed,
        ..Default::default()
    };
    explain(&mut handle, &RawInput::Image(img), &config).unwrap().relational
}

#[test]
fn population_oracle_singles_out_planted_pair() {
    let w = population_pair_weights(3, &[((2, 5), 1.0)], 1_000_000, 17);
    let all = pairs(9);
    let best = (0..w.len()).max_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs())).unwrap();
    assert_eq!(all[best], (5, 2));
    let runner_up = (0..w.len()).filter(|&j| j != best).map(|j| w[j].abs()).fold(0.0, f64::max);
    assert!(w[best] > 0.9 && runner_up < 0.05, "{} vs {runner_up}", w[best]);
}

#[test]
fn planted_pair_ranks_first_for_every_seed() {
    for seed in 0..10 {
        let rel = explain_grid(vec![((2, 5), 1.0)], seed);
        let top = rel.top_pairs(1).unwrap()[0];
        assert_eq!((top.u, top.v), (5, 2), "seed {seed}");
        assert!(top.weight > 0.0);
        let local = rel.to_local().values;
        let mut order: Vec<usize> = (0..9).collect();
        order.sort_by(|&a, &b| local[b].total_cmp(&local[a]));
        let mut top2 = order[..2].to_vec();
        top2.sort();
        assert_eq!(top2, vec![2, 5], "seed {seed}");
    }
}

#[test]
fn opposite_pairs_recover_signs() {
    for seed in 0..10 {
        let rel = explain_grid(vec![((0, 1), 1.0), ((4, 8), -1.0)], 100 + seed);
        assert!(rel.get(0, 1) > 0.0, "seed {seed}");
        assert!(rel.get(4, 8) < 0.0, "seed {seed}");
        assert!(rel.is_symmetric());
    }
}
