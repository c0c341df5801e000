use halfspace_core::evaluation::{label_oracle, mc_error, Classifier, NoiseKind, NoiseModel};
use halfspace_core::geometry::{fill_uniform_sphere, UnitVector};
use halfspace_core::ptas::{ptas_learn, PtasConfig, PtasOutcome};
use halfspace_core::rng::{self, par_chunks};

fn rcn(d: usize, p: f64, seed: u64) -> NoiseModel {
    let w = UnitVector::random(d, &mut rng::stream(seed, 77)).unwrap();
    NoiseModel::new(NoiseKind::Rcn { p }, w).unwrap()
}

fn learn(model: &NoiseModel, eta: f64, seed: u64) -> PtasOutcome {
    let mut o = label_oracle(model.clone(), seed);
    ptas_learn(&mut o, eta, 0.5, &PtasConfig::default()).unwrap()
}

#[test]
fn rcn_no_worse_than_localization_alone() {
    let model = rcn(8, 0.05, 1);
    let out = learn(&model, 0.12, 2);
    let n = 100_000;
    let chosen = mc_error(&out, &model, n, 3).unwrap();
    let half = mc_error(&out.combined.halfspace, &model, n, 3).unwrap();
    assert!(chosen.mean <= 0.12, "{chosen:?}");
    // same test points, so the difference is paired
    assert!(chosen.mean <= half.mean + 3.0 * (chosen.stderr + half.stderr), "{chosen:?} vs {half:?}");
}

/// Error of the combined rule splits over the strip and its complement.
#[test]
fn error_decomposes_over_the_strip() {
    let model = rcn(6, 0.05, 4);
    let out = learn(&model, 0.1, 5);
    let c = &out.combined;
    let d = model.dimension();
    let n = 200_000;
    // (in strip, inner wrong, outside, halfspace wrong)
    let parts = par_chunks(n, 6, |r, range| {
        let mut x = vec![0.0; d];
        let mut acc = [0u64; 4];
        for _ in range {
            fill_uniform_sphere(r, &mut x);
            let y = model.label(&x, r);
            if c.strip.contains(&x) {
                acc[0] += 1;
                acc[1] += u64::from(c.inner.predict(&x) != y);
            } else {
                acc[2] += 1;
                acc[3] += u64::from(c.halfspace.predict(&x) != y);
            }
        }
        acc
    });
    let t = parts.iter().fold([0u64; 4], |mut a, p| {
        a.iter_mut().zip(p).for_each(|(x, y)| *x += y);
        a
    });
    let nf = n as f64;
    let decomposed = (t[1] + t[3]) as f64 / nf;
    let direct = mc_error(c, &model, n as u64, 7).unwrap();
    assert!((direct.mean - decomposed).abs() <= 4.0 * direct.stderr * 2f64.sqrt(), "{direct:?} vs {decomposed}");
}

#[test]
fn disagreement_outside_strip_is_small() {
    let (eta, mu) = (0.12, 0.5);
    let model = rcn(8, 0.05, 8);
    let out = learn(&model, eta, 9);
    let c = &out.combined;
    let w_star = &model.target;
    let d = model.dimension();
    let n = 200_000;
    let far: u64 = par_chunks(n, 10, |r, range| {
        let mut x = vec![0.0; d];
        range
            .filter(|_| {
                fill_uniform_sphere(r, &mut x);
                !c.strip.contains(&x) && c.halfspace.predict(&x) != w_star.predict(&x)
            })
            .count() as u64
    })
    .into_iter()
    .sum();
    let f = far as f64 / n as f64;
    let se = (f * (1.0 - f) / n as f64).sqrt();
    assert!(f <= mu * eta / 2.0 + 3.0 * se, "{f}");
}

#[test]
fn labels_grow_slowly_as_eta_shrinks() {
    let model = rcn(6, 0.01, 11);
    let labels: Vec<u64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&eta| learn(&model, eta, 12).report.labels_used)
        .collect();
    // 1/η grows 4×; the label count should grow like a power of log(1/η)
    let ratio = labels[2] as f64 / labels[0] as f64;
    let log_ratio = (40f64.ln() / 10f64.ln()).powi(2);
    assert!(ratio <= log_ratio, "{labels:?}");
}
