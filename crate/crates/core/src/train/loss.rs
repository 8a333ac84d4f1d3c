use crate::classify::logistic;
use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before the log.
pub const PROB_EPS: f64 = 1e-7;

/// Mean over positions of `w * (-y ln p - (1 - y) ln(1 - p))`.
pub fn weighted_cross_entropy(pred: &[f64], label: &[u8], weight: &[f64]) -> Result<f64> {
    if pred.len() != label.len() || pred.len() != weight.len() || pred.is_empty() {
        return Err(Error::shape(format!(
            "loss inputs have lengths {}, {}, {}",
            pred.len(),
            label.len(),
            weight.len()
        )));
    }
    let total: f64 = pred
        .iter()
        .zip(label)
        .zip(weight)
        .map(|((&p, &y), &w)| w * position_loss(p, y))
        .sum();
    Ok(total / pred.len() as f64)
}

#[inline]
fn position_loss(p: f64, y: u8) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if y != 0 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Features of one tile with its target grids.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: Vec<u8>,
    pub weight: Vec<f64>,
}

/// Mean batch loss of a two-class model and its gradient.
///
/// `params` uses the model weight layout: one block of `dim` weights plus a
/// bias per output position. `grad` is overwritten. Where a prediction is
/// clamped the loss is flat, so that position contributes no gradient.
pub fn loss_and_gradient(params: &[f64], dim: usize, batch: &[Example], grad: &mut [f64]) -> f64 {
    let block = dim + 1;
    let positions = params.len() / block;
    debug_assert_eq!(params.len(), positions * block);
    grad.fill(0.0);
    if batch.is_empty() {
        return 0.0;
    }
    let scale = 1.0 / (positions * batch.len()) as f64;
    let mut loss = 0.0;
    for ex in batch {
        for pos in 0..positions {
            let w = &params[pos * block..][..block];
            let z = w[..dim].iter().zip(&ex.features).map(|(a, b)| a * b).sum::<f64>() + w[dim];
            let p = logistic(z);
            let (y, wt) = (ex.label[pos], ex.weight[pos]);
            loss += wt * position_loss(p, y);
            if p > PROB_EPS && p < 1.0 - PROB_EPS {
                let g = wt * (p - y as f64) * scale;
                let gw = &mut grad[pos * block..][..block];
                for (gi, xi) in gw[..dim].iter_mut().zip(&ex.features) {
                    *gi += g * xi;
                }
                gw[dim] += g;
            }
        }
    }
    loss * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_prediction_is_near_zero() {
        let label = [1, 0, 1, 1, 0, 0, 0, 1, 0];
        let pred: Vec<f64> = label.iter().map(|&y| y as f64).collect();
        let loss = weighted_cross_entropy(&pred, &label, &[5.0; 9]).unwrap();
        assert!((0.0..=9.0 * PROB_EPS * 5.0).contains(&loss));
    }

    #[test]
    fn half_everywhere_is_ln2() {
        let loss = weighted_cross_entropy(&[0.5; 9], &[1, 0, 1, 0, 1, 0, 1, 0, 1], &[1.0; 9]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn linear_in_weights() {
        let pred = [0.2, 0.7, 0.4, 0.9, 0.1, 0.5, 0.3, 0.6, 0.8];
        let label = [0, 1, 1, 1, 0, 0, 1, 0, 1];
        let a = weighted_cross_entropy(&pred, &label, &[1.0, 5.0, 1.0, 1.0, 5.0, 1.0, 1.0, 1.0, 5.0]).unwrap();
        let b = weighted_cross_entropy(&pred, &label, &[2.0, 10.0, 2.0, 2.0, 10.0, 2.0, 2.0, 2.0, 10.0]).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        assert!(matches!(
            weighted_cross_entropy(&[0.5; 9], &[0; 4], &[1.0; 9]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn batch_loss_matches_per_example_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dim = 4;
        let params: Vec<f64> = (0..9 * (dim + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let batch: Vec<Example> = (0..5).map(|_| random_example(&mut rng, dim)).collect();
        let mut grad = vec![0.0; params.len()];
        let loss = loss_and_gradient(&params, dim, &batch, &mut grad);
        let direct: f64 = batch
            .iter()
            .map(|ex| {
                let pred: Vec<f64> = (0..9)
                    .map(|pos| {
                        let w = &params[pos * (dim + 1)..][..dim + 1];
                        logistic(w[..dim].iter().zip(&ex.features).map(|(a, b)| a * b).sum::<f64>() + w[dim])
                    })
                    .collect();
                weighted_cross_entropy(&pred, &ex.label, &ex.weight).unwrap()
            })
            .sum::<f64>()
            / batch.len() as f64;
        assert!((loss - direct).abs() < 1e-12);
    }

    fn random_example(rng: &mut ChaCha8Rng, dim: usize) -> Example {
        Example {
            features: (0..dim).map(|_| rng.random_range(0.0..1.0)).collect(),
            label: (0..9).map(|_| rng.random_bool(0.5) as u8).collect(),
            weight: (0..9).map(|_| if rng.random_bool(0.3) { 5.0 } else { 1.0 }).collect(),
        }
    }

    /// Central differences against the analytic gradient.
    pub(crate) fn gradient_check(seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = rng.random_range(1..8);
        let params: Vec<f64> = (0..9 * (dim + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let batch: Vec<Example> = (0..rng.random_range(1..6)).map(|_| random_example(&mut rng, dim)).collect();
        let mut grad = vec![0.0; params.len()];
        loss_and_gradient(&params, dim, &batch, &mut grad);
        let mut scratch = vec![0.0; params.len()];
        let h = 1e-5;
        let numeric: Vec<f64> = (0..params.len())
            .map(|i| {
                let mut p = params.clone();
                p[i] = params[i] + h;
                let up = loss_and_gradient(&p, dim, &batch, &mut scratch);
                p[i] = params[i] - h;
                let down = loss_and_gradient(&p, dim, &batch, &mut scratch);
                (up - down) / (2.0 * h)
            })
            .collect();
        relative_error(&numeric, &grad)
    }

    /// `|a - b| / max(|a|, |b|)` over whole gradient vectors, so single
    /// near-zero components do not dominate through roundoff.
    pub(crate) fn relative_error(a: &[f64], b: &[f64]) -> f64 {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        norm(&diff) / norm(a).max(norm(b)).max(1e-12)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn gradient_matches_finite_differences(seed in any::<u64>()) {
            let rel = gradient_check(seed);
            prop_assert!(rel < 1e-5, "relative error {rel}");
        }

        #[test]
        fn loss_is_non_negative(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pred: Vec<f64> = (0..9).map(|_| rng.random_range(0.0..=1.0)).collect();
            let ex = random_example(&mut rng, 1);
            prop_assert!(weighted_cross_entropy(&pred, &ex.label, &ex.weight).unwrap() >= 0.0);
        }
    }
}
