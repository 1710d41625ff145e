//! Fit the sparse surrogate directly on hand-made adjacency rows and walk
//! down the regularization path.

use rle::perturb::AdjacencyFeatureVector;
use rle::surrogate::{fit, lambda_max, AuxiliaryDataset, Penalty, SurrogateSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = [2.0, 0.0, -1.0, 0.0, 0.5, 0.0];
    let mut data = AuxiliaryDataset::new(truth.len());
    let mut state = 0x2545_f491_4f6c_dd1du64;
    for _ in 0..400 {
        let row: Vec<u8> = (0..truth.len())
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state & 1) as u8
            })
            .collect();
        let y: f64 = row.iter().zip(&truth).map(|(&x, w)| f64::from(x) * w).sum::<f64>() + 0.3;
        data.push(AdjacencyFeatureVector::new(row), y)?;
    }

    let lmax = lambda_max(&data)?;
    println!("lambda_max = {lmax:.4}");
    for frac in [1.0, 0.5, 0.1, 0.01, 0.0] {
        let f = fit(&data, &SurrogateSettings { lambda: frac * lmax, ..Default::default() })?;
        let w: Vec<String> = f.weights.iter().map(|w| format!("{w:+.3}")).collect();
        println!(
            "lambda {:.4}: [{}] b={:+.3} sweeps={}",
            f.lambda,
            w.join(", "),
            f.intercept,
            f.iterations_used
        );
    }

    let ridge = fit(&data, &SurrogateSettings { lambda: 0.1, penalty: Penalty::L2, ..Default::default() })?;
    println!("ridge: {:?}", ridge.weights.iter().map(|w| (w * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    Ok(())
}
