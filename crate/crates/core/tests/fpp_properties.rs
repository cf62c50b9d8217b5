use std::sync::Arc;

use contact_gap::fpp::{sample_weights, travel_times};
use contact_gap::lattice::{Boundary, Geometry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn mean_weight_is_one_over_lambda() {
    // 2·(2M+1)·2M edges in d=2: M=112 gives 101_024
    let g = Arc::new(Geometry::new(2, 112, Boundary::Free).unwrap());
    let f = sample_weights(&g, 2.0, 77).unwrap();
    let w: Vec<f64> = f.edge_weights().collect();
    assert!(w.len() >= 100_000);
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    // Exp(2) has standard deviation 0.5
    assert!((mean - 0.5).abs() <= 4.0 * 0.5 / n.sqrt(), "mean {mean}");
    assert!(w.iter().all(|&x| x > 0.0));
}

#[test]
fn triangle_inequality_on_random_triples() {
    let g = Arc::new(Geometry::new(2, 6, Boundary::Free).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for field_seed in 0..100u64 {
        let f = sample_weights(&g, 1.5, field_seed).unwrap();
        let all: Vec<_> = (0..g.site_count()).map(|x| travel_times(&f, x).unwrap()).collect();
        for _ in 0..100 {
            let (x, y, z) = (
                rng.random_range(0..g.site_count()),
                rng.random_range(0..g.site_count()),
                rng.random_range(0..g.site_count()),
            );
            assert!(all[x].times[z] <= all[x].times[y] + all[y].times[z] + 1e-12);
            // same path both ways, summed in opposite order
            assert!((all[x].times[y] - all[y].times[x]).abs() <= 1e-12 * all[x].times[y].max(1.0));
            checked += 1;
        }
        assert!(all.iter().enumerate().all(|(x, tt)| tt.times[x] == 0.0));
    }
    assert_eq!(checked, 10_000);
}

#[test]
fn balls_are_nested_and_piecewise_constant() {
    let g = Arc::new(Geometry::new(2, 8, Boundary::Free).unwrap());
    let f = sample_weights(&g, 1.0, 12).unwrap();
    let tt = travel_times(&f, g.origin()).unwrap();
    let mut prev = tt.ball(0.0);
    assert_eq!(prev, vec![g.origin()]);
    for k in 1..=60 {
        let b = tt.ball(k as f64 * 0.05);
        assert!(prev.iter().all(|x| b.contains(x)));
        prev = b;
    }
    // the size only jumps at travel times
    let mut times: Vec<f64> = tt.times.clone();
    times.sort_by(f64::total_cmp);
    for w in times.windows(2) {
        if w[1] > w[0] {
            let mid = 0.5 * (w[0] + w[1]);
            assert_eq!(tt.ball_size(mid), tt.ball_size(w[0]));
        }
    }
}
