use halfspace_core::geometry::{sample_uniform_sphere, UnitVector};
use halfspace_core::regression::{kkms_learn, label_sign, LabeledSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labeled(d: usize, n: usize, seed: u64, w: &UnitVector, flip: f64) -> LabeledSample {
    let pts = sample_uniform_sphere(d, n, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let labels = pts
        .iter()
        .map(|p| {
            let y = label_sign(w.dot(p.as_slice()));
            if rng.random::<f64>() < flip {
                -y
            } else {
                y
            }
        })
        .collect();
    LabeledSample::new(pts, labels).unwrap()
}

fn target(d: usize) -> UnitVector {
    UnitVector::normalize((1..=d).map(|i| i as f64).collect()).unwrap()
}

#[test]
fn kkms_realizable() {
    let w = target(4);
    let train = labeled(4, 5000, 1, &w, 0.0);
    let clf = kkms_learn(&train, 7).unwrap();
    let test = labeled(4, 50_000, 2, &w, 0.0);
    let err = clf.empirical_error(&test);
    assert!(err <= 0.05, "held-out error {err}");
}

#[test]
fn kkms_random_labels() {
    let pts = sample_uniform_sphere(4, 2000, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let labels = pts.iter().map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let clf = kkms_learn(&LabeledSample::new(pts, labels).unwrap(), 3).unwrap();
    let test_pts = sample_uniform_sphere(4, 50_000, 5).unwrap();
    let labels = test_pts.iter().map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let err = clf.empirical_error(&LabeledSample::new(test_pts, labels).unwrap());
    assert!(err <= 0.52, "held-out error {err}");
}

#[test]
fn kkms_random_classification_noise() {
    let w = target(4);
    let train = labeled(4, 10_000, 6, &w, 0.1);
    let clf = kkms_learn(&train, 7).unwrap();
    let test = labeled(4, 50_000, 7, &w, 0.1);
    let err = clf.empirical_error(&test);
    assert!(err <= 0.15, "held-out error {err}");
}
