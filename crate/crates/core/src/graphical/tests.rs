use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::lattice::{Boundary, Configuration, Geometry, ModelParams, Neighbor};

fn window(m: usize, boundary: Boundary) -> Arc<Geometry> {
    Arc::new(Geometry::new(1, m, boundary).unwrap())
}

fn stream(geom: &Arc<Geometry>, lambda: f64, horizon: f64, seed: u64) -> EventStream {
    make_stream(seed, geom, ModelParams::new(lambda).unwrap(), horizon).unwrap()
}

fn random_config(geom: &Arc<Geometry>, rng: &mut ChaCha8Rng, p: f64) -> Configuration {
    let sites: Vec<_> = (0..geom.site_count()).filter(|_| rng.random_bool(p)).collect();
    Configuration::from_sites(geom, sites).unwrap()
}

/// Replays every event of the materialized stream, without any bookkeeping
/// of which clocks matter.
fn naive_replay(initial: &Configuration, stream: &EventStream, t: f64, mask: RecoveryMask) -> Configuration {
    let geom = stream.geometry();
    let mut c = initial.clone();
    for e in stream.events() {
        if e.time > t {
            break;
        }
        match e.kind {
            ObjectKind::Recovery(x) => {
                let on = match mask {
                    RecoveryMask::Full => true,
                    RecoveryMask::OnlyInside(r) => geom.sup_norm(x) <= r,
                    RecoveryMask::None => false,
                };
                if on {
                    c.set(x, false).unwrap();
                }
            }
            ObjectKind::Arrow { from, to } => {
                let src = match from {
                    Neighbor::Site(s) => c.is_infected(s),
                    Neighbor::Exterior => c.exterior(),
                };
                if src {
                    c.set(to, true).unwrap();
                }
            }
        }
    }
    c
}

#[test]
fn empty_stays_empty() {
    let g = window(6, Boundary::Free);
    for seed in 0..20 {
        let s = stream(&g, 3.0, 5.0, seed);
        let tr = evolve(&Configuration::empty(&g), &s, &EvolveConfig::new(vec![1.0, 5.0])).unwrap();
        assert!(tr.snapshots.iter().all(Configuration::is_empty));
        assert_eq!(stopping_times(&tr).tau, Some(0.0));
    }
}

#[test]
fn pure_death_extinction_time_is_first_recovery() {
    let g = window(3, Boundary::Free);
    let s = stream(&g, 0.0, 50.0, 4);
    let o = g.origin();
    let first = s.arrivals(s.recovery_object(o))[0];
    let init = Configuration::from_sites(&g, [o]).unwrap();
    let tr = evolve(&init, &s, &EvolveConfig::new(vec![])).unwrap();
    assert_eq!(tr.extinction_time, Some(first));
    assert_eq!(stopping_times(&tr).tau_n, Some(first));
}

#[test]
fn determinism_is_bit_exact() {
    let g = window(15, Boundary::Free);
    let init = Configuration::from_sites(&g, [g.origin()]).unwrap();
    let cfg = EvolveConfig::new(vec![0.5, 1.0, 2.0, 4.0]).guard(g.shell(3));
    let a = evolve(&init, &stream(&g, 2.0, 4.0, 99), &cfg).unwrap();
    let b = evolve(&init, &stream(&g, 2.0, 4.0, 99), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn engine_matches_naive_replay() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (boundary, mask) in [
        (Boundary::Free, RecoveryMask::Full),
        (Boundary::Periodic, RecoveryMask::Full),
        (Boundary::InfectedExterior, RecoveryMask::Full),
        (Boundary::Free, RecoveryMask::OnlyInside(2)),
        (Boundary::Free, RecoveryMask::None),
    ] {
        let g = window(5, boundary);
        for seed in 0..40 {
            let s = stream(&g, 1.7, 3.0, seed);
            let init = random_config(&g, &mut rng, 0.3);
            let probes = vec![0.7, 1.5, 3.0];
            let tr = evolve(&init, &s, &EvolveConfig::new(probes.clone()).recovery(mask)).unwrap();
            for (p, snap) in probes.iter().zip(&tr.snapshots) {
                assert_eq!(*snap, naive_replay(&init, &s, *p, mask), "{boundary:?} {mask:?} seed {seed}");
            }
        }
    }
}

#[test]
fn two_dimensional_engine_matches_naive_replay() {
    let g = Arc::new(Geometry::new(2, 2, Boundary::InfectedExterior).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for seed in 0..20 {
        let s = stream(&g, 0.8, 2.0, seed);
        let init = random_config(&g, &mut rng, 0.5);
        let tr = evolve(&init, &s, &EvolveConfig::new(vec![2.0])).unwrap();
        assert_eq!(tr.snapshots[0], naive_replay(&init, &s, 2.0, RecoveryMask::Full));
    }
}

#[test]
fn coupled_equals_individual_runs() {
    let g = window(8, Boundary::Free);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..30 {
        let s = stream(&g, 2.0, 3.0, seed);
        let inits: Vec<_> = (0..3).map(|_| random_config(&g, &mut rng, 0.2)).collect();
        let cfg = EvolveConfig::new(vec![0.5, 1.0, 3.0]).guard(g.shell(2));
        let coupled = evolve_coupled(&inits, &s, &cfg).unwrap();
        for (init, tr) in inits.iter().zip(&coupled) {
            let single = evolve(init, &s, &cfg).unwrap();
            assert_eq!(single.snapshots, tr.snapshots);
            assert_eq!(single.extinction_time, tr.extinction_time);
            assert_eq!(single.guard_hit_time, tr.guard_hit_time);
        }
    }
    assert!(evolve_coupled(&[], &stream(&g, 1.0, 1.0, 0), &EvolveConfig::new(vec![])).is_err());
}

#[test]
fn probe_beyond_horizon_is_rejected() {
    let g = window(2, Boundary::Free);
    let s = stream(&g, 1.0, 2.0, 0);
    let err = evolve(&Configuration::full(&g), &s, &EvolveConfig::new(vec![3.0])).unwrap_err();
    assert!(matches!(err, Error::ProbeBeyondHorizon { .. }));
}

#[test]
fn light_cone_violation_aborts() {
    let g = window(3, Boundary::Free);
    let init = Configuration::from_sites(&g, [g.origin()]).unwrap();
    let cfg = EvolveConfig::new(vec![]).light_cone(2, LightConeTarget::AllCopies);
    let aborted = (0..50)
        .map(|seed| evolve(&init, &stream(&g, 5.0, 20.0, seed), &cfg))
        .filter(|r| matches!(r, Err(Error::LightCone { .. })))
        .count();
    assert!(aborted > 0);
}

#[test]
fn infected_exterior_reinfects_an_empty_window() {
    let g = window(1, Boundary::InfectedExterior);
    let s = stream(&g, 2.0, 10.0, 5);
    let tr = evolve(&Configuration::empty(&g), &s, &EvolveConfig::new(vec![10.0])).unwrap();
    assert_eq!(tr.extinction_time, Some(0.0));
    assert!(tr.alive_at_end);
    assert!(s.arrivals(s.arrow_object(0, 1)).iter().any(|&t| t < 10.0));
}

#[test]
fn guard_hit_and_stop() {
    let g = window(4, Boundary::Free);
    let init = Configuration::from_sites(&g, [g.origin()]).unwrap();
    let guard = g.shell(1);
    let mut hits = 0;
    for seed in 0..100 {
        let s = stream(&g, 3.0, 10.0, seed);
        let full = evolve(&init, &s, &EvolveConfig::new(vec![10.0]).guard(guard.clone())).unwrap();
        let stopped = evolve(&init, &s, &EvolveConfig::new(vec![10.0]).guard(guard.clone()).stop_at_guard()).unwrap();
        assert_eq!(full.guard_hit_time, stopped.guard_hit_time);
        if let Some(sigma) = stopped.guard_hit_time {
            hits += 1;
            assert_eq!(stopped.end_time, sigma);
            assert!(stopped.snapshots[0].sites().any(|x| guard.contains(&x)));
            assert_eq!(stopping_times(&stopped).tau_n, None);
        }
    }
    assert!(hits > 0);
}

#[test]
fn guard_hit_probability_grows_with_time() {
    // all-ones start with the guard at the window edge: σ = 0
    let g = window(10, Boundary::Free);
    let s = stream(&g, 3.0, 4.0, 1);
    let tr = evolve(&Configuration::full(&g), &s, &EvolveConfig::new(vec![]).guard(g.shell(1))).unwrap();
    assert_eq!(tr.guard_hit_time, Some(0.0));
    // single infection: P(σ ≤ t) is non-decreasing in t, and tends to 1
    let init = Configuration::from_sites(&g, [g.origin()]).unwrap();
    let ts = [2.0, 4.0, 8.0, 16.0];
    let mut counts = [0usize; 4];
    for seed in 0..400 {
        let s = stream(&g, 3.0, 16.0, seed);
        let tr = evolve(&init, &s, &EvolveConfig::new(vec![]).guard(g.shell(1)).stop_at_guard()).unwrap();
        if let Some(sigma) = tr.guard_hit_time {
            for (c, &t) in counts.iter_mut().zip(&ts) {
                *c += usize::from(sigma <= t);
            }
        }
    }
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
    assert!(counts[0] < counts[3]);
}

fn coupled_triple(
    g: &Arc<Geometry>,
    rng: &mut ChaCha8Rng,
    seed: u64,
) -> (Vec<Configuration>, Vec<Trajectory>) {
    let a = random_config(g, rng, 0.15);
    let b = random_config(g, rng, 0.15);
    let ab = a.union(&b).unwrap();
    let s = stream(g, 2.0, 3.0, seed);
    let inits = vec![a, b, ab];
    let trs = evolve_coupled(&inits, &s, &EvolveConfig::new(vec![0.5, 1.5, 3.0])).unwrap();
    (inits, trs)
}

#[test]
fn additivity_and_monotonicity_small_cases() {
    let g = window(6, Boundary::Free);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..500 {
        let (_, trs) = coupled_triple(&g, &mut rng, seed);
        for p in 0..3 {
            let (a, b, ab) = (&trs[0].snapshots[p], &trs[1].snapshots[p], &trs[2].snapshots[p]);
            assert_eq!(a.union(b).unwrap(), *ab);
            assert!(a.is_subset(ab).unwrap() && b.is_subset(ab).unwrap());
        }
    }
}

#[test]
fn discrepancy_contained_in_single_site_process() {
    let g = window(8, Boundary::Free);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for seed in 0..300 {
        let eta = random_config(&g, &mut rng, 0.5);
        let x = rng.random_range(0..g.site_count());
        let s = stream(&g, 2.0, 3.0, seed);
        let inits = vec![eta.clone(), eta.flip(x).unwrap(), Configuration::from_sites(&g, [x]).unwrap()];
        let trs = evolve_coupled(&inits, &s, &EvolveConfig::new(vec![0.5, 1.0, 3.0]).track_discrepancy()).unwrap();
        for p in 0..3 {
            let (d, n) = trs[0].snapshots[p].sym_diff(&trs[1].snapshots[p]).unwrap();
            assert_eq!(n, trs[1].discrepancy.as_ref().unwrap()[p]);
            assert!(d.iter().all(|&y| trs[2].snapshots[p].is_infected(y)));
        }
    }
}

#[test]
fn pathwise_duality_small_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..300 {
        let g = window(rng.random_range(1..6), Boundary::Free);
        let a = random_config(&g, &mut rng, 0.3);
        let b = random_config(&g, &mut rng, 0.3);
        let t = rng.random_range(0.1..3.0);
        let s = stream(&g, rng.random_range(0.5..3.0), 3.0, case);
        let dual = dual_reverse(&s, t).unwrap();
        assert_eq!(hits(&a, &b, &s, t).unwrap(), hits(&b, &a, &dual, t).unwrap(), "case {case}");
    }
}

#[test]
fn pure_death_survival_matches_exponential() {
    // λ = 0: P(alive at t) = e^{-t}; 2·10^4 replicas, 3σ.
    let g = window(0, Boundary::Free);
    let init = Configuration::full(&g);
    let n = 20_000;
    let ts = [0.5, 1.0, 2.0];
    let mut alive = [0usize; 3];
    for seed in 0..n {
        let s = stream(&g, 0.0, 2.0, seed);
        let tr = evolve(&init, &s, &EvolveConfig::new(ts.to_vec())).unwrap();
        for (a, snap) in alive.iter_mut().zip(&tr.snapshots) {
            *a += usize::from(!snap.is_empty());
        }
    }
    for (a, t) in alive.iter().zip(ts) {
        let p = (-t as f64).exp();
        let phat = *a as f64 / n as f64;
        assert!((phat - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt(), "t={t}: {phat} vs {p}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monotone_coupling(seed in any::<u64>(), bits_a in any::<u16>(), extra in any::<u16>()) {
        let g = window(7, Boundary::Free);
        let a = Configuration::from_sites(&g, (0..15).filter(|i| bits_a >> i & 1 == 1)).unwrap();
        let b = Configuration::from_sites(&g, (0..15).filter(|i| (bits_a | extra) >> i & 1 == 1)).unwrap();
        let s = stream(&g, 2.0, 2.0, seed);
        let trs = evolve_coupled(&[a, b], &s, &EvolveConfig::new(vec![0.25, 1.0, 2.0])).unwrap();
        for p in 0..3 {
            prop_assert!(trs[0].snapshots[p].is_subset(&trs[1].snapshots[p]).unwrap());
        }
    }
}
