//! Finite-difference and reference-loop checks of the trainers.

use mdclass_core::convnet::{adam_step, AdamConfig, AdamState, Architecture, NetworkParams, Tensor};
use mdclass_core::models::linear::logistic_loss_and_grad;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MINI: Architecture = Architecture {
    input_size: 16,
    blocks: 2,
    kernels: 4,
    dense_units: 6,
    dropout: 0.5,
};

pub fn random_net(seed: u64) -> NetworkParams<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = NetworkParams::<f64>::he_uniform(MINI, &mut rng).unwrap();
    // Non-zero biases so every bias gradient is exercised.
    for v in p.values.iter_mut() {
        if *v == 0.0 {
            *v = rng.random_range(-0.1..0.1);
        }
    }
    p
}

pub fn random_images(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..16 * 16).map(|_| rng.random::<f64>()).collect())
        .collect()
}

pub fn analytic_gradient(p: &NetworkParams<f64>, images: &[Vec<f64>], labels: &[f64]) -> Vec<f64> {
    let refs: Vec<&[f64]> = images.iter().map(|v| v.as_slice()).collect();
    let batch = Tensor::stack_images(&refs, MINI.input_size).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (_, cache) = p.forward(&batch, false, &mut rng).unwrap();
    p.backward(&cache, labels).unwrap()
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (norm(a) + norm(b)).max(1e-12)
}

/// Relative error between backpropagation and central differences, per
/// parameter group of a small random network.
pub fn convnet_gradient_errors() -> Vec<(String, f64)> {
    let p = random_net(11);
    let images = random_images(3, 12);
    let labels = [1.0, 0.0, 1.0];
    let refs: Vec<&[f64]> = images.iter().map(|v| v.as_slice()).collect();
    let grad = analytic_gradient(&p, &images, &labels);
    let h = 1e-6;
    p.layout
        .groups()
        .into_iter()
        .map(|(name, range)| {
            let num: Vec<f64> = range
                .clone()
                .map(|i| {
                    let mut q = p.clone();
                    q.values[i] += h;
                    let up = q.loss(&refs, &labels, None);
                    q.values[i] -= 2.0 * h;
                    let down = q.loss(&refs, &labels, None);
                    (up - down) / (2.0 * h)
                })
                .collect();
            (name.to_string(), relative_error(&grad[range], &num))
        })
        .collect()
}

/// Largest relative error of the regularized logistic gradient over a few
/// random problems.
pub fn logistic_gradient_error() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let d = 6;
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = (0..40).map(|_| f64::from(rng.random::<bool>())).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = rng.random_range(-1.0..1.0);
        let l2 = 0.05;
        let (_, grad) = logistic_loss_and_grad(&w, b, &rows, &y, l2);
        let h = 1e-5;
        let num: Vec<f64> = (0..=d)
            .map(|j| {
                let (mut wp, mut wm) = (w.clone(), w.clone());
                let (mut bp, mut bm) = (b, b);
                if j < d {
                    wp[j] += h;
                    wm[j] -= h;
                } else {
                    bp += h;
                    bm -= h;
                }
                let up = logistic_loss_and_grad(&wp, bp, &rows, &y, l2).0;
                let down = logistic_loss_and_grad(&wm, bm, &rows, &y, l2).0;
                (up - down) / (2.0 * h)
            })
            .collect();
        let diff: f64 = grad.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = grad.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    worst
}

/// Textbook Adam on f(θ) = θ², written out independently.
pub fn reference_adam(theta0: f64, steps: usize, alpha: f64) -> f64 {
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut theta = theta0;
    let mut m = 0.0;
    let mut v = 0.0;
    for t in 1..=steps {
        let g = 2.0 * theta;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let m_hat = m / (1.0 - b1.powi(t as i32));
        let v_hat = v / (1.0 - b2.powi(t as i32));
        theta -= alpha * m_hat / (v_hat.sqrt() + eps);
    }
    theta
}

/// `(library, reference)` after 100 steps from θ = 1 with step size 0.1.
pub fn adam_on_quadratic() -> (f64, f64) {
    let cfg = AdamConfig {
        alpha: 0.1,
        ..AdamConfig::default()
    };
    let mut theta = vec![1.0f64];
    let mut state = AdamState::new(1, cfg);
    for _ in 0..100 {
        let g = [2.0 * theta[0]];
        adam_step(&mut theta, &g, &mut state).unwrap();
    }
    (theta[0], reference_adam(1.0, 100, 0.1))
}
