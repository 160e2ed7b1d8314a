use nalgebra::DMatrix;
use num_complex::Complex64;
use subplanck::analysis::Scenario;
use subplanck::open_system::{unitary_evolve, EvolveOptions};
use subplanck::{BathSpec, DensityMatrix, OpenSystem, StateVector, Temperature};

fn hi() -> Scenario {
    Scenario::hi_compass().unwrap()
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn closed_evolution_matches_exact_phases() {
    let sc = hi();
    let system = OpenSystem::new(&sc.basis, &BathSpec::closed()).unwrap();
    let t = sc.snapshot_time();
    let default_dt = system.default_time_step(sc.revival_time());
    assert!((default_dt - 0.2447).abs() < 1e-3, "dt = {default_dt}");
    let dt = default_dt / 2.0;
    let rho0 = DensityMatrix::from_pure(&sc.initial);
    let traj = system.evolve(&rho0, &EvolveOptions { dt, t_final: t, snapshot_times: vec![t / 2.0, t] }).unwrap();
    assert!(traj.invariants_hold());
    for snap in &traj.snapshots {
        let exact = DensityMatrix::from_pure(&unitary_evolve(&sc.initial, sc.basis.energies(), snap.time));
        let err = max_abs_diff(snap.rho.matrix(), exact.matrix());
        assert!(err < 1e-9, "t = {}: deviation {err:e}", snap.time);
        assert!((snap.rho.purity() - 1.0).abs() < 1e-9);
        for (p, q) in snap.rho.populations().iter().zip(rho0.populations()) {
            assert!((p - q).abs() < 1e-10);
        }
    }
}

#[test]
fn two_level_decay_rate() {
    let energies = vec![-0.1, -0.1 + 7.34e-3];
    let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.063, 0.063, 0.0]);
    let bath = BathSpec::new(540.0, Temperature::Hartree(0.0)).unwrap();
    let system = OpenSystem::from_parts(energies, &x, &bath).unwrap();
    let gamma = system.relaxation_rate(0, 1);
    let t_final = 3.0 / gamma;
    let times: Vec<f64> = (1..=6).map(|k| k as f64 * t_final / 6.0).collect();
    let rho0 = DensityMatrix::from_pure(&StateVector::basis_state(2, 1));
    let traj = system.evolve(&rho0, &EvolveOptions { dt: 1.0, t_final, snapshot_times: times }).unwrap();
    for snap in &traj.snapshots {
        let expected = (-gamma * snap.time).exp();
        let got = snap.rho.populations()[1];
        assert!((got / expected - 1.0).abs() < 0.02, "t = {}: {got} vs {expected}", snap.time);
    }
}

#[test]
fn zero_temperature_energy_decreases() {
    let sc = hi();
    let system = OpenSystem::new(&sc.basis, &BathSpec::new(1000.0, Temperature::Hartree(0.0)).unwrap()).unwrap();
    let t = sc.snapshot_time();
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * t / 10.0).collect();
    let rho0 = DensityMatrix::from_pure(&sc.initial);
    let dt = system.default_time_step(sc.revival_time());
    let traj = system.evolve(&rho0, &EvolveOptions { dt, t_final: t, snapshot_times: times }).unwrap();
    assert!(traj.max_trace_drift < 1e-8);
    assert!(traj.snapshots.iter().all(|s| s.hermiticity_residual < 1e-10));
    let e: Vec<f64> = traj.snapshots.iter().map(|s| s.rho.mean_energy(sc.basis.energies())).collect();
    assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
    let purity: Vec<f64> = traj.snapshots.iter().map(|s| s.rho.purity()).collect();
    assert!(purity.last().unwrap() < &1.0);
}

#[test]
fn harmonic_ladder_relaxes_to_gibbs() {
    let n = 5;
    let energies: Vec<f64> = (0..n).map(|k| k as f64 + 0.5).collect();
    let x = DMatrix::from_fn(n, n, |m, k| if m.abs_diff(k) == 1 { (m.max(k) as f64 / 2.0).sqrt() } else { 0.0 });
    let temperature = 0.8;
    let bath = BathSpec::new(0.5, Temperature::Hartree(temperature)).unwrap();
    let system = OpenSystem::from_parts(energies.clone(), &x, &bath).unwrap();
    let ops = system.operators();
    let nbar = 1.0 / (1.0f64 / temperature).exp_m1();
    for m in 0..n {
        for k in 0..n {
            assert!((ops.absorption[(m, k)] - 0.25 * nbar * ops.lowering[(m, k)]).abs() < 1e-12);
            assert!((ops.emission[(m, k)] - 0.25 * (nbar + 1.0) * ops.lowering[(m, k)]).abs() < 1e-12);
        }
    }
    let mut start = StateVector::basis_state(n, 3);
    start.coeffs[1] = Complex64::new(0.6, 0.2);
    let norm = start.norm_sqr().sqrt();
    start.coeffs.iter_mut().for_each(|c| *c /= norm);
    let t_final = 200.0;
    let traj = system
        .evolve(&DensityMatrix::from_pure(&start), &EvolveOptions { dt: 0.01, t_final, snapshot_times: vec![t_final] })
        .unwrap();
    assert!(traj.invariants_hold());
    let rho = &traj.snapshots[0].rho;
    let z: f64 = energies.iter().map(|e| (-e / temperature).exp()).sum();
    for (k, p) in rho.populations().iter().enumerate() {
        let gibbs = (-energies[k] / temperature).exp() / z;
        assert!((p - gibbs).abs() < 1e-4, "level {k}: {p} vs {gibbs}");
    }
    let off: f64 = (0..n).flat_map(|m| (0..n).filter(move |&k| k != m).map(move |k| (m, k))).map(|(m, k)| rho.matrix()[(m, k)].norm()).fold(0.0, f64::max);
    assert!(off < 1e-4, "coherence {off}");
}

#[test]
fn thermal_bath_preserves_state_invariants() {
    let sc = hi();
    let bath = BathSpec::new(540.0, Temperature::Fundamental(10.0)).unwrap();
    let snap = sc.evolve(&bath).unwrap();
    assert!(snap.invariants_hold(), "{snap:?}");
    assert!(snap.trace_residual < 1e-8);
    assert!(snap.hermiticity_residual < 1e-10);
    assert!(snap.min_eigenvalue > -1e-6);
    let purity = snap.rho.purity();
    assert!(purity > 0.0 && purity < 1.0);
}
