//! Helpers shared by several test targets.
#![allow(dead_code)]

pub mod gradients;
pub mod otsu;

use std::collections::BTreeSet;
use std::path::PathBuf;

use mdclass_core::dataset::Label;
use mdclass_core::harness::{holdout_split, Manifest, ManifestRow, Role, SplitConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A manifest with 3 to 12 experiments per class, random sizes and ids, and
/// rows in random order.
pub fn random_manifest(seed: u64) -> Manifest {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<u32> = (0..1000).collect();
    ids.shuffle(&mut rng);
    let mut next = ids.into_iter();
    let mut rows = Vec::new();
    for label in [Label::Human, Label::Robot] {
        for _ in 0..rng.random_range(3..=12) {
            let id = next.next().unwrap();
            for frame_index in 0..rng.random_range(1..=60) {
                rows.push(ManifestRow {
                    path: PathBuf::from(format!("maps/e{id:03}_f{frame_index:03}.pgm")),
                    label,
                    experiment_id: id,
                    frame_index,
                    seed: rng.random(),
                });
            }
        }
    }
    rows.shuffle(&mut rng);
    Manifest::new(rows, PathBuf::from("."))
}

/// Splits `cases` random manifests and checks every row lands in exactly one
/// set, each set is whole experiments, and the test share per class is met.
/// Returns the number of violating manifests and of manifests the split
/// refused (no training experiment left), which are not violations.
pub fn split_violations(cases: u64) -> (usize, usize) {
    let mut bad = 0;
    let mut refused = 0;
    for case in 0..cases {
        let manifest = random_manifest(case);
        let experiments = manifest.experiments().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(case ^ 0xabcd);
        let cfg = SplitConfig {
            test_fraction: rng.random_range(0.05..0.35),
            val_fraction: rng.random_range(0.0..0.3),
            seed: case,
        };
        let plan = match holdout_split(&experiments, &cfg) {
            Ok(p) => p,
            Err(mdclass_core::Error::Data(_)) => {
                refused += 1;
                continue;
            }
            Err(e) => {
                eprintln!("manifest {case}: {e}");
                bad += 1;
                continue;
            }
        };
        let sets = [Role::Train, Role::Validation, Role::Test].map(|r| plan.ids(r));
        let mut ok = sets[0].is_disjoint(sets[1]) && sets[0].is_disjoint(sets[2]) && sets[1].is_disjoint(sets[2]);
        let union: BTreeSet<u32> = sets.iter().flat_map(|s| s.iter().copied()).collect();
        let all: BTreeSet<u32> = experiments.iter().map(|e| e.id).collect();
        ok &= union == all;
        let mut roles_by_experiment = std::collections::BTreeMap::new();
        for row in &manifest.rows {
            let roles: Vec<Role> = [Role::Train, Role::Validation, Role::Test]
                .into_iter()
                .filter(|r| plan.ids(*r).contains(&row.experiment_id))
                .collect();
            ok &= roles.len() == 1;
            if let Some(&r) = roles.first() {
                let prev = roles_by_experiment.insert(row.experiment_id, r);
                ok &= prev.is_none_or(|p| p == r);
            }
        }
        for label in [Label::Human, Label::Robot] {
            let of_class: Vec<_> = experiments.iter().filter(|e| e.label == label).collect();
            let total: usize = of_class.iter().map(|e| e.frames).sum();
            let test: usize = of_class.iter().filter(|e| plan.test.contains(&e.id)).map(|e| e.frames).sum();
            ok &= test as f64 >= cfg.test_fraction * total as f64;
            ok &= of_class.iter().any(|e| plan.train.contains(&e.id));
        }
        if !ok {
            eprintln!("manifest {case}: {cfg:?} gave {plan:?}");
            bad += 1;
        }
    }
    (bad, refused)
}
