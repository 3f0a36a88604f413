//! True-parameter generation.

use mrle_core::Tensor;
use rand::seq::index;
use rand::Rng;

use crate::config::{ExperimentConfig, Family};
use crate::error::{HarnessError, Result};

/// `s` nonzero entries at positions drawn uniformly without replacement, with
/// values uniform in `[magnitude/2, magnitude]` and a random sign. For the
/// graphical family the draws are off-diagonal pairs placed symmetrically and
/// each diagonal entry is its row's off-diagonal l1 sum plus the margin, so
/// the matrix is strictly diagonally dominant and therefore positive definite.
pub fn generate_truth<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Result<Tensor> {
    let spec = &config.truth;
    let draw = |rng: &mut R| {
        let v = rng.random_range(spec.magnitude / 2.0..=spec.magnitude);
        if rng.random_bool(0.5) {
            v
        } else {
            -v
        }
    };
    let dims = config.param_dims();
    let mut data = vec![0.0; dims.iter().product()];
    match config.family {
        Family::Graphical => {
            let p = dims[0];
            let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j))).collect();
            if spec.sparsity > pairs.len() {
                return Err(infeasible(spec.sparsity, pairs.len()));
            }
            for k in index::sample(rng, pairs.len(), spec.sparsity).into_vec() {
                let (i, j) = pairs[k];
                let v = draw(rng);
                data[i * p + j] = v;
                data[j * p + i] = v;
            }
            for i in 0..p {
                let row: f64 = (0..p).filter(|&j| j != i).map(|j| data[i * p + j].abs()).sum();
                data[i * p + i] = row + spec.diagonal_margin;
            }
        }
        _ => {
            if spec.sparsity > data.len() {
                return Err(infeasible(spec.sparsity, data.len()));
            }
            for k in index::sample(rng, data.len(), spec.sparsity).into_vec() {
                data[k] = draw(rng);
            }
        }
    }
    Tensor::new(&dims, data).map_err(|e| HarnessError::Config(e.to_string()))
}

fn infeasible(s: usize, capacity: usize) -> HarnessError {
    HarnessError::Config(format!("sparsity {s} exceeds the {capacity} available positions"))
}
