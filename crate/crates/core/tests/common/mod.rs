//! Reference computations shared by the integration tests and the acceptance
//! run. Nothing here calls the library's solvers or samplers.

#![allow(dead_code, clippy::needless_range_loop)]

use rle::ImageBuffer;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// SplitMix64; deliberately not the library's RNG.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * n as f64) as usize
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Solves `a x = b` by Gauss-Jordan elimination with partial pivoting.
/// Returns `None` for a (numerically) singular system.
pub fn gauss_jordan(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for k in 0..n {
            a[col][k] /= p;
        }
        b[col] /= p;
        for row in 0..n {
            if row != col && a[row][col] != 0.0 {
                let f = a[row][col];
                for k in 0..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    Some(b)
}

/// Ordinary least squares with an intercept via the raw normal equations
/// on `[x | 1]`. Returns `(weights, intercept)`.
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let p = x[0].len() + 1;
    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for (row, &t) in x.iter().zip(y) {
        let z: Vec<f64> = row.iter().copied().chain(std::iter::once(1.0)).collect();
        for i in 0..p {
            rhs[i] += z[i] * t;
            for j in 0..p {
                gram[i][j] += z[i] * z[j];
            }
        }
    }
    let beta = gauss_jordan(gram, rhs)?;
    Some((beta[..p - 1].to_vec(), beta[p - 1]))
}

/// Edges of an `side × side` 4-neighborhood grid, row-major slots.
pub fn grid_edges(side: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let s = r * side + c;
            if c + 1 < side {
                edges.push((s, s + 1));
            }
            if r + 1 < side {
                edges.push((s, s + side));
            }
        }
    }
    edges
}

/// All element pairs `(u, v)` with `u > v`, in the order `(1,0), (2,0), (2,1), ...`.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (1..n).flat_map(|u| (0..u).map(move |v| (u, v))).collect()
}

/// Population least-squares weights of the pair-indicator regression for a
/// planted-pair target, estimated by Monte Carlo over with-replacement
/// placements on a `side × side` grid. Returns weights in [`pairs`] order.
pub fn population_pair_weights(
    side: usize,
    terms: &[((usize, usize), f64)],
    draws: usize,
    seed: u64,
) -> Vec<f64> {
    let n = side * side;
    let edges = grid_edges(side);
    let all = pairs(n);
    let index = |u: usize, v: usize| {
        let (a, b) = if u > v { (u, v) } else { (v, u) };
        all.iter().position(|&p| p == (a, b)).unwrap()
    };
    let d = all.len();
    let p = d + 1;
    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    let mut rng = SplitMix(seed);
    let mut placement = vec![0; n];
    let mut x = vec![0u8; d];
    for _ in 0..draws {
        for slot in placement.iter_mut() {
            *slot = rng.below(n);
        }
        x.iter_mut().for_each(|v| *v = 0);
        for &(s, t) in &edges {
            let (a, b) = (placement[s], placement[t]);
            if a != b {
                x[index(a, b)] = 1;
            }
        }
        let y: f64 = terms
            .iter()
            .map(|&((u, v), c)| c * f64::from(x[index(u, v)]))
            .sum();
        let active: Vec<usize> = (0..d).filter(|&j| x[j] == 1).chain(std::iter::once(d)).collect();
        for &i in &active {
            rhs[i] += y;
            for &j in &active {
                gram[i][j] += 1.0;
            }
        }
    }
    let beta = gauss_jordan(gram, rhs).expect("population design is full rank");
    beta[..d].to_vec()
}

/// Upper-tail p-value of Pearson's chi-square test against uniform.
pub fn chi_square_uniform_p(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

/// RGB noise image in which no pixel equals the image mean color.
pub fn noise_image(width: usize, height: usize, seed: u64) -> ImageBuffer {
    let mut rng = SplitMix(seed);
    let img = ImageBuffer::from_fn(width, height, |_, _| {
        [rng.below(256) as u8, rng.below(256) as u8, rng.below(256) as u8]
    })
    .unwrap();
    let fill = img.mean_color();
    let pixels = img
        .pixels()
        .chunks_exact(3)
        .flat_map(|p| {
            if p == fill {
                [p[0] ^ 1, p[1], p[2]]
            } else {
                [p[0], p[1], p[2]]
            }
        })
        .collect();
    let img = ImageBuffer::new(width, height, pixels).unwrap();
    assert!(img.pixels().chunks_exact(3).all(|p| p != img.mean_color()));
    img
}

/// Gray noise background on a 3×3 patch grid with one red patch and one
/// blue patch sharing an edge, positions chosen by `seed`.
pub fn red_blue_scene(side_px: usize, seed: u64) -> ImageBuffer {
    let mut rng = SplitMix(seed);
    let patch = side_px / 3;
    let edges = grid_edges(3);
    let (a, b) = edges[rng.below(edges.len())];
    let (red, blue) = if rng.below(2) == 0 { (a, b) } else { (b, a) };
    ImageBuffer::from_fn(side_px, side_px, |x, y| {
        let slot = (y / patch) * 3 + x / patch;
        if slot == red {
            [255, 0, 0]
        } else if slot == blue {
            [0, 0, 255]
        } else {
            let g = 110 + rng.below(31) as u8;
            [g, g, g]
        }
    })
    .unwrap()
}
