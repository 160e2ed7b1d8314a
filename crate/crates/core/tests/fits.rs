use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use subplanck::analysis::{fit_bose, fit_exponential, DecayModel};
use subplanck::Error;

fn delta_axis() -> Vec<f64> {
    (0..12).map(|i| 2.2 * i as f64 / 11.0).collect()
}

fn temperature_axis() -> Vec<f64> {
    subplanck::analysis::default_temperature_grid()
}

fn noisy(y: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.01).unwrap();
    y.iter().map(|v| v * (1.0 + normal.sample(&mut rng))).collect()
}

#[test]
fn exponential_exact_recovery() {
    let x = delta_axis();
    let y: Vec<f64> = x.iter().map(|d| 2.0 * (-0.5 * d).exp()).collect();
    let fit = fit_exponential(&x, &y).unwrap();
    assert!((fit.params[0] - 2.0).abs() < 1e-8 && (fit.params[1] - 0.5).abs() < 1e-8, "{:?}", fit.params);
    assert!(fit.accepted());
    assert_eq!(fit.model, DecayModel::Exponential);
}

#[test]
fn exponential_with_noise() {
    let x = delta_axis();
    let clean: Vec<f64> = x.iter().map(|d| 0.5847 * (-0.3585 * d).exp()).collect();
    for seed in 0..5 {
        let fit = fit_exponential(&x, &noisy(&clean, seed)).unwrap();
        assert!((fit.params[0] / 0.5847 - 1.0).abs() < 0.03, "seed {seed}: {:?}", fit.params);
        assert!((fit.params[1] / 0.3585 - 1.0).abs() < 0.03, "seed {seed}: {:?}", fit.params);
        assert!(fit.accepted());
    }
}

#[test]
fn bose_exact_recovery() {
    let t = temperature_axis();
    let truth = [0.5799, 0.0127, 0.6688];
    let y: Vec<f64> = t.iter().map(|&v| DecayModel::Bose.evaluate(&truth, v)).collect();
    let fit = fit_bose(&t, &y).unwrap();
    for (got, want) in fit.params.iter().zip(truth) {
        assert!((got - want).abs() < 1e-6 * want.max(1.0), "{:?}", fit.params);
    }
}

#[test]
fn bose_with_noise() {
    let t = temperature_axis();
    let truth = [1.0, 0.4, 0.8];
    let clean: Vec<f64> = t.iter().map(|&v| DecayModel::Bose.evaluate(&truth, v)).collect();
    for seed in 0..5 {
        let fit = fit_bose(&t, &noisy(&clean, 100 + seed)).unwrap();
        assert!(fit.accepted());
        assert!((fit.params[0] / truth[0] - 1.0).abs() < 0.03, "seed {seed}: {:?}", fit.params);
        for (&v, c) in t.iter().zip(&clean) {
            assert!((fit.evaluate(v) - c).abs() < 0.02 * truth[0], "seed {seed}, T = {v}");
        }
    }
}

#[test]
fn bose_large_temperature_tail() {
    let truth: [f64; 3] = [0.5799, 0.0127, 0.6688];
    // a·e^{-bT/Tc} up to the constant factor e^{b/2}
    for t in [50.0_f64, 200.0, 1000.0] {
        let asymptote = truth[0] * (-truth[1] * t / truth[2]).exp();
        let ratio = DecayModel::Bose.evaluate(&truth, t) / asymptote;
        assert!((ratio / (truth[1] / 2.0).exp() - 1.0).abs() < 1e-4, "T = {t}: {ratio}");
    }
}

#[test]
fn preconditions() {
    let x = [0.0, 1.0, 2.0, 3.0];
    let y = [1.0, 0.5, 0.25, 0.125];
    assert!(matches!(fit_exponential(&x, &y), Err(Error::InsufficientData { got: 4, need: 5 })));
    assert!(matches!(fit_exponential(&[0.0, 1.0, 2.0, 3.0, 4.0], &y), Err(Error::DimensionMismatch { .. })));
    let t = temperature_axis();
    let flat = vec![0.3; t.len()];
    assert!(matches!(fit_bose(&t, &flat), Err(Error::DegenerateData(_))));
    assert!(matches!(fit_bose(&t[..5], &flat[..5]), Err(Error::InsufficientData { got: 5, need: 6 })));
    let negative = [1.0, 0.5, -0.2, 0.1, 0.05];
    assert!(fit_exponential(&[0.0, 1.0, 2.0, 3.0, 4.0], &negative).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exponential_scale_equivariance(a in 0.1f64..5.0, c in 0.05f64..1.5, k in 0.01f64..100.0, seed in 0u64..1000) {
        let x = delta_axis();
        let y = noisy(&x.iter().map(|d| a * (-c * d).exp()).collect::<Vec<_>>(), seed);
        let base = fit_exponential(&x, &y).unwrap();
        let scaled = fit_exponential(&x, &y.iter().map(|v| k * v).collect::<Vec<_>>()).unwrap();
        prop_assert!((scaled.params[0] / (k * base.params[0]) - 1.0).abs() < 1e-6);
        prop_assert!((scaled.params[1] / base.params[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bose_scale_equivariance(b in 0.05f64..0.8, tc in 0.3f64..2.0, k in 0.01f64..100.0, seed in 0u64..1000) {
        let t = temperature_axis();
        let y = noisy(&t.iter().map(|&v| DecayModel::Bose.evaluate(&[1.0, b, tc], v)).collect::<Vec<_>>(), seed);
        if let Ok(base) = fit_bose(&t, &y) {
            let scaled = fit_bose(&t, &y.iter().map(|v| k * v).collect::<Vec<_>>()).unwrap();
            prop_assert!((scaled.params[0] / (k * base.params[0]) - 1.0).abs() < 1e-6);
            prop_assert!((scaled.params[1] / base.params[1] - 1.0).abs() < 1e-6);
            prop_assert!((scaled.params[2] / base.params[2] - 1.0).abs() < 1e-6);
        }
    }
}
