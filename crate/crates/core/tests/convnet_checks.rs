mod common;

use common::gradients::{adam_on_quadratic, analytic_gradient, convnet_gradient_errors, random_images, random_net};
use mdclass_core::convnet::{bce_from_logit, train, AdamConfig, Architecture, Example, TrainConfig};
use mdclass_core::dataset::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gradients_match_central_differences() {
    for (name, rel) in convnet_gradient_errors() {
        assert!(rel < 1e-4, "{name}: relative error {rel:e}");
    }
}

#[test]
fn dropout_gradient_matches_masked_loss() {
    let p = random_net(3);
    let images = random_images(2, 4);
    let refs: Vec<&[f64]> = images.iter().map(|v| v.as_slice()).collect();
    let labels = [0.0, 1.0];
    let masks = vec![
        vec![true, false, true, true, false, true],
        vec![false, true, true, false, true, true],
    ];
    let mut grad = vec![0.0; p.len()];
    for ((x, &y), m) in refs.iter().zip(&labels).zip(&masks) {
        let c = p.forward_sample(x, Some(m));
        p.backward_sample(&c, y, 0.5, &mut grad);
    }
    let h = 1e-6;
    let range = p.layout.dense1_weights.clone();
    for i in range.step_by(7) {
        let mut q = p.clone();
        q.values[i] += h;
        let up = q.loss(&refs, &labels, Some(&masks));
        q.values[i] -= 2.0 * h;
        let down = q.loss(&refs, &labels, Some(&masks));
        let num = (up - down) / (2.0 * h);
        assert!((num - grad[i]).abs() <= 1e-4 * (num.abs() + grad[i].abs()).max(1e-8));
    }
}

#[test]
fn duplicated_sample_has_same_mean_gradient() {
    let p = random_net(5);
    let x = random_images(1, 6).remove(0);
    let one = analytic_gradient(&p, &[x.clone()], &[1.0]);
    let two = analytic_gradient(&p, &[x.clone(), x], &[1.0, 1.0]);
    for (a, b) in one.iter().zip(&two) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
    }
}

#[test]
fn confident_correct_prediction_has_vanishing_gradient() {
    let mut p = random_net(8);
    let bias = p.layout.dense2_bias.start;
    p.values[bias] = 40.0;
    let x = random_images(1, 9);
    let g = analytic_gradient(&p, &x, &[1.0]);
    let norm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm < 1e-12, "{norm}");
}

#[test]
fn inverted_dropout_preserves_expected_activation() {
    let mut p = random_net(21);
    for i in p.layout.dense2_weights.clone() {
        p.values[i] = 1.0;
    }
    let b = p.layout.dense2_bias.start;
    p.values[b] = 0.0;
    let x = random_images(1, 22).remove(0);
    let inference = p.forward_sample(&x, None).logit;
    assert!(inference > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 20_000;
    let masks = p.dropout_masks(n, &mut rng);
    let mean = masks.iter().map(|m| p.forward_sample(&x, Some(m)).logit).sum::<f64>() / n as f64;
    assert!((mean - inference).abs() < 0.02 * inference, "{mean} vs {inference}");
}

#[test]
fn outputs_are_probabilities_and_losses_finite() {
    let p = random_net(30);
    let mut images = random_images(5, 31);
    images.push(vec![0.0; 256]);
    images.push(vec![1.0; 256]);
    for x in &images {
        let prob = p.predict_one(x).unwrap();
        assert!(prob > 0.0 && prob < 1.0);
        let z = p.forward_sample(x, None).logit;
        assert!(bce_from_logit(z, 1.0).is_finite() && bce_from_logit(z, 0.0).is_finite());
    }
}

#[test]
fn adam_follows_reference_loop_on_quadratic() {
    let (theta, expected) = adam_on_quadratic();
    assert!(theta.abs() < 1.0);
    assert!((theta - expected).abs() < 1e-12, "{theta} vs {expected}");
}

/// Column band for one class, row band for the other, with mild noise.
fn band_images(n: usize, size: usize, seed: u64) -> Vec<(Vec<f32>, Label)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let human = i % 2 == 0;
            let at = rng.random_range(size / 4..3 * size / 4);
            let img = (0..size * size)
                .map(|k| {
                    let (r, c) = (k / size, k % size);
                    let on = if human { c.abs_diff(at) <= 1 } else { r.abs_diff(at) <= 1 };
                    let base = if on { 0.9 } else { 0.1 };
                    base + rng.random_range(-0.05f32..0.05)
                })
                .collect();
            (img, Label::from_bool(human))
        })
        .collect()
}

fn small_net() -> Architecture {
    Architecture {
        input_size: 32,
        blocks: 3,
        kernels: 4,
        dense_units: 8,
        dropout: 0.5,
    }
}

#[test]
fn toy_bands_are_fit_within_thirty_epochs() {
    let data = band_images(20, 32, 1);
    let set: Vec<Example> = data.iter().map(|(x, l)| Example { input: x, label: *l }).collect();
    let cfg = TrainConfig {
        batch_size: 4,
        max_epochs: 30,
        patience: None,
        adam: AdamConfig {
            alpha: 1e-2,
            ..AdamConfig::default()
        },
        seed: 4,
    };
    let out = train(small_net(), &set, &[], &cfg).unwrap();
    assert!(out.history.len() <= 30);
    let best = out.history[out.best_epoch - 1];
    assert_eq!(best.train_acc, 1.0, "{:?}", out.history.last());
    let again = train(small_net(), &set, &[], &cfg).unwrap();
    // Validation columns are NaN without a validation set, so compare text.
    assert_eq!(format!("{:?}", out.history), format!("{:?}", again.history));
}

#[test]
fn shuffled_labels_validate_near_chance() {
    let data = band_images(240, 32, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let set: Vec<Example> = data
        .iter()
        .map(|(x, _)| Example {
            input: x,
            label: Label::from_bool(rng.random::<bool>()),
        })
        .collect();
    let (train_set, val) = set.split_at(120);
    let cfg = TrainConfig {
        batch_size: 8,
        max_epochs: 10,
        patience: None,
        seed: 5,
        ..TrainConfig::default()
    };
    let out = train(small_net(), train_set, val, &cfg).unwrap();
    let last = out.history.last().unwrap();
    assert!((last.val_acc - 0.5).abs() <= 0.1, "{last:?}");
}
