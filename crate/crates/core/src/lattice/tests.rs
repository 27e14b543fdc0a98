use super::brute::brute_force;
use super::sweep::{space_sweep, time_sweep};
use super::*;
use crate::noise::{amplitude_damping, depolarizing};
use crate::sym::gram;

fn dep(gamma: f64) -> KrausChannel {
    depolarizing(2, gamma).unwrap()
}

fn ad(gamma: f64) -> KrausChannel {
    amplitude_damping(gamma).unwrap()
}

#[test]
fn clean_gate_tensor_weights() {
    let t = gate_tensor(2, 2, &gram(2, 2).unwrap()).unwrap();
    let (e, s) = (0, 1);
    let close = |a: f64, b: f64| (a - b).abs() < 1e-14;
    assert!(close(t.get(e, e, e), 1.0));
    assert!(close(t.get(s, s, s), 1.0));
    assert!(close(t.get(e, e, s), 0.4));
    assert!(close(t.get(s, e, s), 0.4));
    assert!(close(t.get(e, s, s), 0.0));
    assert!(close(t.get(s, e, e), 0.0));
    for d in 2..6usize {
        let t = gate_tensor(d, 2, &gram(d, 2).unwrap()).unwrap();
        let df = d as f64;
        assert!((t.get(e, e, s) - df / (df * df + 1.0)).abs() < 1e-14);
    }
    assert!(gate_tensor(3, 2, &gram(2, 2).unwrap()).is_err());
}

fn all_targets() -> [(Target, TopBoundary); 6] {
    [
        (Target::PurityB, TopBoundary::Cycle),
        (Target::PurityRB, TopBoundary::Cycle),
        (Target::HolevoMixed, TopBoundary::Cycle),
        (Target::HolevoZero, TopBoundary::Zeros),
        (Target::PurityRB, TopBoundary::Identity),
        (Target::PurityB, TopBoundary::Zeros),
    ]
}

fn problem(n: usize, k: usize, alpha: usize, ch: &KrausChannel, setup: Setup, target: Target, top: TopBoundary) -> Problem {
    let replicas = if target == Target::Fidelity { vec![0] } else { (0..alpha).collect() };
    let plan = Plan { bottom_target: target, top, replicas, setup };
    build_problem(n, &Placement::Contiguous.sites(n, k), alpha, ch, &plan).unwrap()
}

#[test]
fn sweeps_match_brute_force() {
    let channels = [dep(0.3), ad(0.25)];
    for n in [2, 4, 6] {
        for t in 1..=4 {
            for alpha in [2, 3] {
                if alpha == 3 && (n > 4 || t > 3) {
                    continue;
                }
                for ch in &channels {
                    for setup in [Setup::I, Setup::II] {
                        let mut cases = all_targets().to_vec();
                        if setup == Setup::II && alpha == 2 {
                            cases.push((Target::Fidelity, TopBoundary::Cycle));
                        }
                        for (target, top) in cases {
                            let p = problem(n, n / 2 - 1 + (n == 2) as usize, alpha, ch, setup, target, top);
                            let exact = brute_force(&p, t);
                            let time = time_sweep(&p, &[t]).unwrap()[0];
                            let tag = format!("n={n} t={t} a={alpha} {ch} {setup:?} {target:?} {top:?}");
                            assert!((time - exact.ln()).abs() < 1e-11, "time {tag}: {time} vs {}", exact.ln());
                            if n >= 4 {
                                let space = space_sweep(&p, t).unwrap();
                                assert!((space - exact.ln()).abs() < 1e-11, "space {tag}: {space} vs {}", exact.ln());
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn time_series_matches_single_depths() {
    let p = problem(8, 2, 2, &ad(0.2), Setup::II, Target::PurityRB, TopBoundary::Cycle);
    let depths = [1, 2, 3, 5, 8];
    let series = time_sweep(&p, &depths).unwrap();
    for (i, &t) in depths.iter().enumerate() {
        let single = space_sweep(&p, t).unwrap();
        assert!((series[i] - single).abs() < 1e-11, "t={t}");
    }
}

#[test]
fn identity_top_gives_trace_one() {
    for n in [4, 8] {
        for t in 1..=4 {
            for setup in [Setup::I, Setup::II] {
                for ch in [dep(0.2), ad(0.2)] {
                    for target in [Target::PurityB, Target::PurityRB, Target::HolevoMixed, Target::HolevoZero] {
                        let spec = LatticeSpec::new(n, 2, t, 2, setup, ch.clone()).unwrap();
                        for dir in [Direction::Time, Direction::Space] {
                            let spec = spec.clone().with_direction(dir);
                            let v = contract_with_top(&spec, target, TopBoundary::Identity).unwrap();
                            assert!(v.abs() < 1e-12, "{n} {t} {setup:?} {target:?} {dir:?}: {v}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn noiseless_purities_are_exact() {
    for alpha in [2, 3] {
        for (n, k) in [(4, 1), (6, 3), (8, 8)] {
            for t in [1, 2, 5] {
                let spec = LatticeSpec::new(n, k, t, alpha, Setup::I, dep(0.0)).unwrap();
                let p = purities(&spec).unwrap();
                let want_b = -(((alpha - 1) * k) as f64) * 2f64.ln();
                assert!((p.log_purity_b - want_b).abs() < 1e-10, "{alpha} {n} {k} {t}");
                assert!(p.log_purity_rb.abs() < 1e-10, "{alpha} {n} {k} {t}: {}", p.log_purity_rb);
                assert!((p.coherent_info() - k as f64).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn global_haar_purity_scale() {
    // The d^{-N} + d^{-k} form drops a relative correction of order d^{k-N}.
    let spec = LatticeSpec::new(12, 3, 30, 2, Setup::I, dep(0.0)).unwrap();
    let pb = contract(&spec, Target::PurityB).unwrap().exp();
    let approx = 2f64.powi(-12) + 2f64.powi(-3);
    assert!((pb - approx).abs() <= 2f64.powi(-12) * 1.01);
}

#[test]
fn zero_noise_setups_agree_bitwise() {
    for target in [Target::PurityB, Target::PurityRB, Target::HolevoMixed, Target::HolevoZero] {
        for dir in [Direction::Time, Direction::Space] {
            let a = LatticeSpec::new(8, 2, 5, 2, Setup::I, dep(0.0)).unwrap().with_direction(dir);
            let mut b = a.clone();
            b.setup = Setup::II;
            assert_eq!(contract(&a, target).unwrap().to_bits(), contract(&b, target).unwrap().to_bits());
        }
    }
}

#[test]
fn purity_bounds_hold() {
    for setup in [Setup::I, Setup::II] {
        for ch in [dep(0.1), dep(1.0), ad(0.5), ad(1.0)] {
            for t in [1, 3, 6] {
                let spec = LatticeSpec::new(8, 2, t, 2, setup, ch.clone()).unwrap();
                for target in [Target::PurityB, Target::PurityRB, Target::HolevoMixed, Target::HolevoZero] {
                    let v = contract(&spec, target).unwrap();
                    assert!(v <= 1e-12, "{target:?} {v}");
                    assert!(v >= -10.0 * 2f64.ln() - 1e-9, "{target:?} {v}");
                }
            }
        }
    }
}

#[test]
fn full_depolarizing_in_setup_one() {
    let spec = LatticeSpec::new(8, 2, 3, 2, Setup::I, dep(1.0)).unwrap();
    for target in [Target::PurityB, Target::PurityRB, Target::HolevoMixed, Target::HolevoZero] {
        let v = contract(&spec, target).unwrap();
        // ρ_RB = I/2^k ⊗ I/2^N for the entangled legs, I/2^N otherwise.
        let bits = if target == Target::PurityRB { 10.0 } else { 8.0 };
        assert!((v + bits * 2f64.ln()).abs() < 1e-10, "{target:?}");
    }
    assert!(holevo_info(&spec).unwrap().abs() < 1e-10);
    // Output is I/2^N on B and the reference stays maximally mixed: I_c = -k.
    assert!((coherent_info(&spec).unwrap() + 2.0).abs() < 1e-10);
}

#[test]
fn noiseless_holevo_equals_k() {
    for k in [0, 2, 5, 8] {
        let spec = LatticeSpec::new(8, k, 4, 2, Setup::I, dep(0.0)).unwrap();
        assert!((holevo_info(&spec).unwrap() - k as f64).abs() < 1e-10);
        let b = contract(&spec, Target::PurityB).unwrap();
        assert_eq!(b.to_bits(), contract(&spec, Target::HolevoMixed).unwrap().to_bits());
    }
}

#[test]
fn fidelity_examples() {
    let spec = LatticeSpec::new(6, 0, 3, 2, Setup::II, dep(0.0)).unwrap();
    let f = fidelity_f2(&spec).unwrap();
    assert!((f.fidelity - 1.0).abs() < 1e-12);
    // F̃ = 1 - 2^{-6} for the identity channel.
    assert!((f.f2 + (1.0 - 2f64.powi(-6)).log2() / 3.0).abs() < 1e-12);
    let setup1 = LatticeSpec::new(6, 0, 3, 2, Setup::I, dep(0.1)).unwrap();
    assert!(fidelity_f2(&setup1).is_err());
    let full = LatticeSpec::new(6, 0, 3, 2, Setup::II, dep(1.0)).unwrap();
    assert!(matches!(fidelity_f2(&full), Err(Error::BelowNoiseFloor { .. })));
}

#[test]
fn direction_choice_and_ceiling() {
    let spec = LatticeSpec::new(64, 16, 6, 2, Setup::I, dep(0.1)).unwrap();
    assert_eq!(spec.resolve_direction(6), (Direction::Space, 128));
    let small = spec.clone().with_max_entries(64);
    assert!(matches!(contract(&small, Target::PurityB), Err(Error::TooLarge { needed: 128, ceiling: 64 })));
    let forced = spec.with_direction(Direction::Time);
    assert!(matches!(contract(&forced, Target::PurityB), Err(Error::TooLarge { .. })));
}

#[test]
fn placement_sites() {
    assert_eq!(Placement::Contiguous.sites(8, 3), vec![0, 1, 2]);
    assert_eq!(Placement::Spread.sites(8, 2), vec![2, 6]);
    assert_eq!(Placement::Spread.sites(16, 4), vec![2, 6, 10, 14]);
    assert_eq!(Placement::Spread.sites(8, 8), (0..8).collect::<Vec<_>>());
    assert!(Placement::Spread.sites(8, 0).is_empty());
    assert_eq!("spread".parse::<Placement>().unwrap(), Placement::Spread);
    assert!("middle".parse::<Placement>().is_err());
}

#[test]
fn placement_changes_finite_depth_but_not_noiseless_limit() {
    let base = LatticeSpec::new(8, 2, 2, 2, Setup::I, dep(0.1)).unwrap();
    let spread = base.clone().with_placement(Placement::Spread);
    assert_eq!(spread.logical_sites(), vec![2, 6]);
    let a = coherent_info(&base).unwrap();
    let b = coherent_info(&spread).unwrap();
    assert!((a - b).abs() > 1e-3, "{a} {b}");
    let clean = |p| coherent_info(&LatticeSpec::new(8, 2, 30, 2, Setup::I, KrausChannel::identity(2)).unwrap().with_placement(p)).unwrap();
    assert!((clean(Placement::Contiguous) - clean(Placement::Spread)).abs() < 1e-6);
}

#[test]
fn spec_validation() {
    assert!(LatticeSpec::new(7, 1, 2, 2, Setup::I, dep(0.1)).is_err());
    assert!(LatticeSpec::new(8, 9, 2, 2, Setup::I, dep(0.1)).is_err());
    assert!(LatticeSpec::new(8, 2, 0, 2, Setup::I, dep(0.1)).is_err());
    assert!(LatticeSpec::new(8, 2, 2, 5, Setup::I, dep(0.1)).is_err());
}

#[test]
fn frame_potential_single_layer_is_pairwise_haar() {
    for alpha in [2, 3] {
        for n in [2, 4, 6] {
            let got = frame_potential_exact(n, 1, alpha, 2, DEFAULT_MAX_ENTRIES).unwrap();
            let want = (n / 2) as f64 * haar_frame_potential_log(2, alpha, 2);
            assert!((got - want).abs() < 1e-12, "{alpha} {n}");
        }
    }
    assert_eq!(frame_potential_exact(8, 0, 2, 2, DEFAULT_MAX_ENTRIES).unwrap(), 0.0);
}

#[test]
fn frame_potential_approaches_haar() {
    for alpha in [2, 3] {
        let f = frame_potential_exact(6, 40, alpha, 2, DEFAULT_MAX_ENTRIES).unwrap();
        let haar = haar_frame_potential_log(6, alpha, 2);
        assert!((f - haar).abs() < 1e-6, "{alpha}: {f} vs {haar}");
    }
    // α!(D-1)!/(D+α-1)! against the printed D^{-2α} α! at D = 4.
    assert!((haar_frame_potential_log(2, 2, 2) - (2.0f64 / 20.0).ln()).abs() < 1e-14);
    assert!((printed_frame_potential_log(2, 2, 2) - (2.0f64 / 256.0).ln()).abs() < 1e-14);
}
