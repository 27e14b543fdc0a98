use super::*;
use crate::lattice::{contract, frame_potential_exact, Placement, DEFAULT_MAX_ENTRIES};
use crate::noise::{amplitude_damping, depolarizing};
use crate::sym::weingarten;

#[test]
fn haar_gates_are_unitary_and_reproducible() {
    let mut rng = sample_rng(7, 3);
    for d in [2, 3] {
        let u = sample_haar_gate(d, &mut rng);
        let err = (u.adjoint() * &u - CMatrix::identity(d * d, d * d)).norm();
        assert!(err < 1e-12, "{err}");
    }
    let a = CircuitSample::draw(6, 3, 2, 11, 5);
    let b = CircuitSample::draw(6, 3, 2, 11, 5);
    let c = CircuitSample::draw(6, 3, 2, 11, 6);
    assert_eq!(a.gates, b.gates);
    assert_ne!(a.gates, c.gates);
    assert_eq!(a.gates.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 2, 3]);
}

#[test]
fn haar_moments() {
    let n = 40_000u64;
    let samples: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let u = sample_haar_gate(2, &mut sample_rng(1, i));
            let p = u[(0, 0)].norm_sqr();
            (p, p * p)
        })
        .collect();
    let first = McEstimate::from_samples(&samples.iter().map(|s| s.0).collect::<Vec<_>>()).unwrap();
    let second = McEstimate::from_samples(&samples.iter().map(|s| s.1).collect::<Vec<_>>()).unwrap();
    assert!(first.z_score(0.25, 0.0) < 3.0, "{first:?}");
    // Every index coincides, so the fourth moment is the sum of all Wg entries.
    let wg = weingarten(4, 2).unwrap();
    let predicted: f64 = wg.entries.iter().sum();
    assert!((predicted - 0.1).abs() < 1e-14);
    assert!(second.z_score(predicted, 0.0) < 3.0, "{second:?}");
}

fn spec(n: usize, k: usize, t: usize, setup: Setup, ch: KrausChannel) -> LatticeSpec {
    LatticeSpec::new(n, k, t, 2, setup, ch).unwrap()
}

#[test]
fn density_matrix_matches_lattice() {
    let targets = [Target::PurityB, Target::PurityRB, Target::HolevoZero];
    for setup in [Setup::I, Setup::II] {
        for ch in [depolarizing(2, 0.2).unwrap(), amplitude_damping(0.3).unwrap()] {
            for t in [1, 3] {
                let s = spec(4, 1, t, setup, ch.clone());
                let mut cases = targets.to_vec();
                if setup == Setup::II {
                    cases.push(Target::Fidelity);
                }
                for target in cases {
                    let exact = contract(&s, target).unwrap().exp();
                    let mc = simulate_annealed(&s, target, 1500, 17).unwrap();
                    let z = mc.z_score(exact, 0.0);
                    assert!(z < 4.0, "{setup:?} {ch} t={t} {target:?}: {mc:?} vs {exact} (z={z:.2})");
                }
            }
        }
    }
}

#[test]
fn spread_placement_matches_lattice() {
    let s = spec(4, 2, 2, Setup::II, amplitude_damping(0.3).unwrap()).with_placement(Placement::Spread);
    for target in [Target::PurityB, Target::PurityRB] {
        let exact = contract(&s, target).unwrap().exp();
        let mc = simulate_annealed(&s, target, 1000, 23).unwrap();
        assert!(mc.z_score(exact, 0.0) < 4.0, "{target:?}: {mc:?} vs {exact}");
    }
}

#[test]
fn trajectories_match_lattice() {
    let opts = OracleOptions { mode: EvolutionMode::Trajectories { per_circuit: 4 }, ..Default::default() };
    for setup in [Setup::I, Setup::II] {
        for ch in [depolarizing(2, 0.3).unwrap(), amplitude_damping(0.3).unwrap()] {
            let s = spec(6, 2, 3, setup, ch.clone());
            let mut cases = vec![Target::PurityB, Target::PurityRB, Target::HolevoZero];
            if setup == Setup::II {
                cases.push(Target::Fidelity);
            }
            for target in cases {
                let exact = contract(&s, target).unwrap().exp();
                let mc = simulate_annealed_with(&s, target, 1500, 5, &opts).unwrap();
                let z = mc.z_score(exact, 0.0);
                assert!(z < 4.0, "{setup:?} {ch} {target:?}: {mc:?} vs {exact} (z={z:.2})");
            }
        }
    }
}

#[test]
fn alpha3_oracle_matches_lattice() {
    let ch = depolarizing(2, 0.25).unwrap();
    let s = LatticeSpec::new(4, 1, 3, 3, Setup::II, ch).unwrap();
    for target in [Target::PurityB, Target::PurityRB] {
        let exact = contract(&s, target).unwrap().exp();
        let dm = simulate_annealed(&s, target, 2000, 9).unwrap();
        assert!(dm.z_score(exact, 0.0) < 4.0, "{target:?} dm {dm:?} vs {exact}");
        let opts = OracleOptions { mode: EvolutionMode::Trajectories { per_circuit: 4 }, ..Default::default() };
        let tr = simulate_annealed_with(&s, target, 2000, 9, &opts).unwrap();
        assert!(tr.z_score(exact, 0.0) < 4.0, "{target:?} traj {tr:?} vs {exact}");
    }
}

#[test]
fn full_depolarizing_is_deterministic() {
    let s = spec(4, 2, 3, Setup::I, depolarizing(2, 1.0).unwrap());
    let mc = simulate_annealed(&s, Target::PurityB, 200, 1).unwrap();
    assert!((mc.mean - 2f64.powi(-4)).abs() < 1e-12);
    assert!(mc.std_error < 1e-12);
}

#[test]
fn identity_channel_setups_agree() {
    for target in [Target::PurityB, Target::PurityRB] {
        let a = simulate_samples(&spec(4, 2, 3, Setup::I, KrausChannel::identity(2)), target, 200, 4, &Default::default()).unwrap();
        let b = simulate_samples(&spec(4, 2, 3, Setup::II, KrausChannel::identity(2)), target, 200, 4, &Default::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn determinism_and_bounds() {
    let s = spec(4, 1, 2, Setup::II, amplitude_damping(0.4).unwrap());
    let a = simulate_samples(&s, Target::PurityRB, 150, 99, &Default::default()).unwrap();
    let b = simulate_samples(&s, Target::PurityRB, 150, 99, &Default::default()).unwrap();
    assert_eq!(a, b);
    for x in a {
        assert!(x <= 1.0 + 1e-12 && x >= 2f64.powi(-5) - 1e-12);
    }
    assert!(simulate_annealed(&s, Target::PurityB, 50, 0).is_err());
}

#[test]
fn trace_is_preserved_through_noisy_evolution() {
    let s = spec(4, 1, 3, Setup::II, amplitude_damping(0.5).unwrap());
    let reg = Register::for_target(&s, Target::PurityRB);
    let kraus = Kraus::new(&s.channel);
    let circuit = CircuitSample::draw(4, 3, 2, 3, 0);
    let rho = evolve_dm(&circuit, &reg, &kraus, Setup::II);
    let dim = 32;
    let tr: Complex64 = (0..dim).map(|i| rho[i * dim + i]).sum();
    assert!((tr - Complex64::new(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn size_ceiling() {
    let s = spec(12, 2, 2, Setup::I, depolarizing(2, 0.1).unwrap());
    assert!(matches!(simulate_annealed(&s, Target::PurityRB, 100, 0), Err(Error::TooLarge { .. })));
}

#[test]
fn frame_potential_estimates() {
    let f = frame_potential(6, 0, 2, 100, 0).unwrap();
    assert_eq!(f.estimate.mean, 1.0);
    for (alpha, t) in [(2, 2), (3, 2), (2, 3)] {
        let f = frame_potential(4, t, alpha, 20_000, 8).unwrap();
        let exact = frame_potential_exact(4, t, alpha, 2, DEFAULT_MAX_ENTRIES).unwrap().exp();
        assert!(f.estimate.z_score(exact, 0.0) < 4.0, "{alpha} {t}: {:?} vs {exact}", f.estimate);
    }
}
