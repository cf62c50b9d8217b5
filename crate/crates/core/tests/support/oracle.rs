//! Monte Carlo estimators against the exact finite-volume chain on
//! one-dimensional windows of at most five sites.
//!
//! Each suite draws 20 random cases from a fixed seed and compares one
//! number per case. Probabilities are scored against the binomial standard
//! error at the exact value; means and second moments against the
//! estimator's own standard error.

#![allow(dead_code)]

use std::sync::Arc;

use contact_gap::estimators::*;
use contact_gap::exact::{
    build_coupled_generator, build_generator, exact_extinction, marginal, semigroup_apply,
    semigroup_apply_complex, stationary, variance, Flavor,
};
use contact_gap::fpp::domination_check;
use contact_gap::lattice::{Boundary, Configuration, Geometry, LocalFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Gamma};

pub const CASES: usize = 20;
const REPLICAS: usize = 4000;

#[derive(Debug, Clone)]
pub struct Comparison {
    pub case: usize,
    pub what: String,
    pub mc: f64,
    pub exact: f64,
    pub sigma: f64,
}

impl Comparison {
    pub fn z(&self) -> f64 {
        let d = (self.mc - self.exact).abs();
        if d <= 1e-9 {
            0.0
        } else if self.sigma > 0.0 {
            d / self.sigma
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone)]
pub struct Suite {
    pub name: &'static str,
    pub comparisons: Vec<Comparison>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite { name, comparisons: Vec::new() }
    }

    fn probability(&mut self, case: usize, what: String, e: &Estimate, exact: f64) {
        let sigma = (exact * (1.0 - exact) / e.n as f64).max(0.0).sqrt();
        self.comparisons.push(Comparison { case, what, mc: e.estimate, exact, sigma });
    }

    fn moment(&mut self, case: usize, what: String, e: &Estimate, exact: f64) {
        self.comparisons.push(Comparison { case, what, mc: e.estimate, exact, sigma: e.se });
    }

    pub fn max_z(&self) -> f64 {
        self.comparisons.iter().map(Comparison::z).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> Vec<&Comparison> {
        self.comparisons.iter().filter(|c| c.z() > 3.0).collect()
    }

    pub fn passed(&self) -> bool {
        self.comparisons.len() == CASES && self.failures().is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {} cases, max |z| = {:.2}, failures = {}",
            self.name,
            self.comparisons.len(),
            self.max_z(),
            self.failures().len()
        )
    }
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x0dd1_ce00 ^ tag)
}

fn window(radius: usize, boundary: Boundary) -> Domain {
    Domain::Window { radius, boundary }
}

fn random_subset(r: &mut ChaCha8Rng, radius: usize, nonempty: bool) -> Vec<Vec<i64>> {
    let sites = 2 * radius + 1;
    loop {
        let mask: u32 = r.random_range(0..1u32 << sites);
        if nonempty && mask == 0 {
            continue;
        }
        return (0..sites)
            .filter(|&k| mask >> k & 1 == 1)
            .map(|k| vec![k as i64 - radius as i64])
            .collect();
    }
}

fn mask_in(radius: usize, boundary: Boundary, points: &[Vec<i64>]) -> u64 {
    let g = Arc::new(Geometry::new(1, radius, boundary).unwrap());
    Configuration::from_coords(&g, points.iter().map(|p| p.as_slice()))
        .unwrap()
        .to_mask()
        .unwrap()
}

fn site_bit(radius: usize, y: i64) -> u64 {
    1 << (y + radius as i64)
}

/// `P(ξ^A_t ≠ ∅)` in a free window.
pub fn survival() -> Suite {
    let mut s = Suite::new("survival_probability");
    let mut r = rng(1);
    for case in 0..CASES {
        let radius = r.random_range(1..=2);
        let lambda = r.random_range(0.5..3.0);
        let t = r.random_range(0.2..2.0);
        let a = random_subset(&mut r, radius, true);
        let cfg = MCConfig::new(1, lambda, REPLICAS, r.random(), vec![t])
            .with_domain(window(radius, Boundary::Free));
        let e = survival_probability(&cfg, &a).unwrap().points[0];
        let q = build_generator(1, radius, lambda, Flavor::Absorbing).unwrap();
        let exact = 1.0 - exact_extinction(&q, mask_in(radius, Boundary::Free, &a), t).unwrap();
        s.probability(case, format!("r={radius} λ={lambda:.3} t={t:.3} A={a:?}"), &e, exact);
    }
    s
}

/// `P(τ ≤ T)` by box size and `P(t < τ ≤ T)` for a single site.
pub fn extinction() -> Suite {
    let mut s = Suite::new("extinction_profile");
    let mut r = rng(2);
    for case in 0..CASES {
        let lambda = r.random_range(0.5..3.0);
        let horizon = r.random_range(0.5..3.0);
        let t = r.random_range(0.1..horizon);
        let side = r.random_range(1..=5);
        let cfg = MCConfig::new(1, lambda, REPLICAS, r.random(), vec![t])
            .with_survival_horizon(horizon)
            .with_domain(window(2, Boundary::Free));
        let q = build_generator(1, 2, lambda, Flavor::Absorbing).unwrap();
        if case % 2 == 0 {
            let a = centred_box(1, side);
            let p = extinction_profile(&cfg, &[side]).unwrap();
            let exact = exact_extinction(&q, mask_in(2, Boundary::Free, &a), horizon).unwrap();
            s.probability(case, format!("side={side} λ={lambda:.3} T={horizon:.3}"), &p.by_size.points[0], exact);
        } else {
            let p = extinction_profile(&cfg, &[1]).unwrap();
            let o = site_bit(2, 0);
            let exact = exact_extinction(&q, o, horizon).unwrap() - exact_extinction(&q, o, t).unwrap();
            s.probability(case, format!("late λ={lambda:.3} t={t:.3} T={horizon:.3}"), &p.by_time.points[0], exact);
        }
    }
    s
}

/// Forward and independent dual hitting probabilities.
pub fn duality() -> Suite {
    let mut s = Suite::new("duality_check");
    let mut r = rng(3);
    for case in 0..CASES {
        let radius = r.random_range(1..=2);
        let lambda = r.random_range(0.5..3.0);
        let t = r.random_range(0.2..2.0);
        let a = random_subset(&mut r, radius, true);
        let b = random_subset(&mut r, radius, true);
        let cfg = MCConfig::new(1, lambda, REPLICAS, r.random(), vec![t])
            .with_domain(window(radius, Boundary::Free));
        let rep = duality_check(&cfg, &a, &b, t).unwrap();
        assert_eq!(rep.pathwise_mismatches, 0);
        let exact = hitting_exact(1, radius, lambda, &a, &b, t).unwrap();
        let (side, e) = if case % 2 == 0 { ("forward", rep.forward) } else { ("dual", rep.dual) };
        s.probability(case, format!("{side} r={radius} t={t:.3} A={a:?} B={b:?}"), &e, exact);
    }
    s
}

/// Both sides of the finite-volume duality at `N = 1`.
pub fn finite_duality() -> Suite {
    let mut s = Suite::new("finite_duality_check");
    let mut r = rng(4);
    for case in 0..CASES {
        let lambda = r.random_range(0.5..3.0);
        let t = r.random_range(0.2..2.0);
        let eta = random_subset(&mut r, 1, false);
        let a = random_subset(&mut r, 1, true);
        let cfg = MCConfig::new(1, lambda, REPLICAS, r.random(), vec![t]);
        let rep = finite_duality_check(&cfg, &eta, &a, 1, t).unwrap();
        let (l, rh) = (rep.exact_lhs.unwrap(), rep.exact_rhs.unwrap());
        assert!((l - rh).abs() < 1e-9, "exact sides differ: {l} vs {rh}");
        if case % 2 == 0 {
            s.probability(case, format!("lhs η={eta:?} A={a:?} t={t:.3}"), &rep.lhs, l);
        } else {
            s.probability(case, format!("rhs η={eta:?} A={a:?} t={t:.3}"), &rep.rhs, rh);
        }
    }
    s
}

/// Site densities and cell probabilities of μ-samples against `μ_N`.
pub fn mu_marginals() -> Suite {
    let mut s = Suite::new("sample_mu");
    let mut r = rng(5);
    for case in 0..CASES {
        let radius = r.random_range(1..=2);
        let lambda = r.random_range(0.5..3.0);
        let cfg = MCConfig::new(1, lambda, REPLICAS, r.random(), vec![1.0])
            .with_burn_in(15.0)
            .with_domain(window(radius, Boundary::InfectedExterior));
        let samples = sample_mu(&cfg, radius).unwrap().samples;
        let q = build_generator(1, radius, lambda, Flavor::InfectedBoundary).unwrap();
        let mu = stationary(&q).unwrap();
        let n = samples.len();
        if case % 2 == 0 {
            let y = r.random_range(-(radius as i64)..=radius as i64);
            let bit = site_bit(radius, y);
            let exact = mu.expect(&q.space().real_vector(|m| (m & bit != 0) as u8 as f64));
            let hits = samples.iter().filter(|c| c.to_mask().unwrap() & bit != 0).count();
            s.probability(case, format!("density r={radius} λ={lambda:.3} y={y}"), &bernoulli(0.0, hits, n), exact);
        } else {
            let probe = Arc::new(Geometry::new(1, 1, Boundary::Free).unwrap());
            let cell = r.random_range(0..8usize);
            let exact = marginal(q.space(), &mu.probabilities, &probe).unwrap()[cell];
            let emp = Marginal::empirical(&probe, &samples).unwrap();
            let hits = (emp.probabilities[cell] * n as f64).round() as usize;
            s.probability(case, format!("cell r={radius} λ={lambda:.3} cell={cell:03b}"), &bernoulli(0.0, hits, n), exact);
        }
    }
    s
}

fn random_function(r: &mut ChaCha8Rng, radius: usize) -> LocalFunction {
    let k = r.random_range(1..=2usize);
    let mut support: Vec<Vec<i64>> = Vec::new();
    while support.len() < k {
        let p = vec![r.random_range(-(radius as i64)..=radius as i64)];
        if !support.contains(&p) {
            support.push(p);
        }
    }
    let table: Vec<f64> = (0..1 << k).map(|_| r.random_range(-1.0..1.0)).collect();
    LocalFunction::from_real_fn(support, |m| table[m as usize]).unwrap()
}

/// Two-replica `Var_{μ_N}(P_t f)` against the exact variance.
pub fn variance_oracle() -> Suite {
    let mut s = Suite::new("variance_decay");
    let mut r = rng(6);
    for case in 0..CASES {
        let radius = r.random_range(1..=2);
        let lambda = r.random_range(0.5..3.0);
        let t = r.random_range(0.0..1.5);
        let f = random_function(&mut r, radius);
        let cfg = MCConfig::new(1, lambda, REPLICAS, r.random(), vec![t])
            .with_burn_in(15.0)
            .with_domain(window(radius, Boundary::InfectedExterior));
        let e = variance_decay(&cfg, &f).unwrap().series.points[0];
        let q = build_generator(1, radius, lambda, Flavor::InfectedBoundary).unwrap();
        let mu = stationary(&q).unwrap();
        let ptf = semigroup_apply_complex(&q, &q.space().function_vector(&f), t).unwrap();
        let exact = variance(&mu, &ptf).unwrap();
        s.moment(case, format!("r={radius} λ={lambda:.3} t={t:.3} f on {:?}", f.support()), &e, exact);
    }
    s
}

/// Exact flip-coupling observables: `Σ_η μ_N(η) E g(ξ^η_t, ξ^{η^x}_t)`.
fn coupled_exact(radius: usize, lambda: f64, x: i64, t: f64, g: impl Fn(u64, u64) -> f64) -> f64 {
    let q = build_generator(1, radius, lambda, Flavor::InfectedBoundary).unwrap();
    let mu = stationary(&q).unwrap();
    let qc = build_coupled_generator(1, radius, lambda, Flavor::InfectedBoundary, 2).unwrap();
    let sp = qc.space();
    let gv = sp.real_vector(|s| g(sp.copy_mask(s, 0), sp.copy_mask(s, 1)));
    let pg = semigroup_apply(&qc, &gv, t).unwrap();
    let bit = site_bit(radius, x);
    mu.probabilities
        .iter()
        .enumerate()
        .map(|(eta, p)| p * pg[sp.pack(&[eta as u64, eta as u64 ^ bit]) as usize])
        .sum()
}

/// `P(ξ^η_t(y) ≠ ξ^{η^x}_t(y))` and `E|ξ^η_t Δ ξ^{η^x}_t|²`.
fn coupling_suite(name: &'static str, tag: u64, cluster: bool) -> Suite {
    let mut s = Suite::new(name);
    let mut r = rng(tag);
    for case in 0..CASES {
        let radius = r.random_range(1..=2);
        let lambda = r.random_range(0.5..3.0);
        let t = r.random_range(0.1..2.0);
        let span = -(radius as i64)..=radius as i64;
        let (x, y) = (r.random_range(span.clone()), r.random_range(span));
        let cfg = MCConfig::new(1, lambda, REPLICAS, r.random(), vec![t])
            .with_burn_in(15.0)
            .with_domain(window(radius, Boundary::InfectedExterior));
        let (d, c) = discrepancy_and_cluster(&cfg, &[x], &[vec![y]]).unwrap();
        if cluster {
            let exact = coupled_exact(radius, lambda, x, t, |a, b| ((a ^ b).count_ones() as f64).powi(2));
            s.moment(case, format!("r={radius} λ={lambda:.3} x={x} t={t:.3}"), &c.second_moment.points[0], exact);
        } else {
            let bit = site_bit(radius, y);
            let exact = coupled_exact(radius, lambda, x, t, |a, b| ((a ^ b) & bit != 0) as u8 as f64);
            s.probability(case, format!("r={radius} λ={lambda:.3} x={x} y={y} t={t:.3}"), &d.series[0].points[0], exact);
        }
    }
    s
}

pub fn discrepancy() -> Suite {
    coupling_suite("discrepancy_decay", 7, false)
}

pub fn cluster() -> Suite {
    coupling_suite("cluster_second_moment", 8, true)
}

/// Mean size at `t` given survival to `T`, from the forward semigroup:
/// `E[|ξ_t|; τ > T] = P_t(|·| · P_{T−t} 1_{≠∅})(0)`.
pub fn growth() -> Suite {
    let mut s = Suite::new("growth_given_survival");
    let mut r = rng(9);
    for case in 0..CASES {
        let lambda = r.random_range(2.5..4.0);
        let horizon = r.random_range(1.0..3.0);
        let t = r.random_range(0.1..horizon);
        let cfg = MCConfig::new(1, lambda, REPLICAS, r.random(), vec![t])
            .with_survival_horizon(horizon)
            .with_domain(window(2, Boundary::Free));
        let g = growth_given_survival(&cfg).unwrap();
        let q = build_generator(1, 2, lambda, Flavor::Absorbing).unwrap();
        let alive = q.space().real_vector(|m| (m != 0) as u8 as f64);
        let h = semigroup_apply(&q, &alive, horizon - t).unwrap();
        let sized: Vec<f64> = h.iter().enumerate().map(|(m, v)| (m as u64).count_ones() as f64 * v).collect();
        let o = site_bit(2, 0) as usize;
        let num = semigroup_apply(&q, &sized, t).unwrap()[o];
        let den = semigroup_apply(&q, &alive, horizon).unwrap()[o];
        s.moment(case, format!("λ={lambda:.3} t={t:.3} T={horizon:.3}"), &g.mean.points[0], num / den);
    }
    s
}

/// Contact-process hitting, travel-time CDF and mean sizes on a path of
/// five sites, where `T(0, y)` is a sum of `|y|` exponentials.
pub fn fpp() -> Suite {
    let mut s = Suite::new("domination_check");
    let mut r = rng(10);
    for case in 0..CASES {
        let lambda = r.random_range(0.5..3.0);
        let t = r.random_range(0.2..2.0);
        let y = r.random_range(-2..=2i64);
        let cfg = MCConfig::new(1, lambda, REPLICAS, r.random(), vec![t])
            .with_domain(window(2, Boundary::Free));
        let rep = domination_check(&cfg, &[y], &[t], lambda).unwrap();
        let erlang = |k: i64| {
            if k == 0 {
                1.0
            } else {
                Gamma::new(k.unsigned_abs() as f64, lambda).unwrap().cdf(t)
            }
        };
        let row = rep.rows[0];
        let label = format!("λ={lambda:.3} t={t:.3} y={y}");
        match case % 4 {
            0 => {
                let exact = hitting_exact(1, 2, lambda, &[vec![0]], &[vec![y]], t).unwrap();
                let e = Estimate { x: t, estimate: row.p_cp, se: row.se_cp, n: REPLICAS };
                s.probability(case, format!("p_cp {label}"), &e, exact);
            }
            1 => {
                let e = Estimate { x: t, estimate: row.p_fpp, se: row.se_fpp, n: REPLICAS };
                s.probability(case, format!("p_fpp {label}"), &e, erlang(y));
            }
            k => {
                let exact: f64 = (-2..=2).map(erlang).sum();
                let e = if k == 2 { rep.sizes[0].ball } else { rep.sizes[0].no_recovery };
                s.moment(case, format!("mean size {} {label}", if k == 2 { "ball" } else { "no-recovery" }), &e, exact);
            }
        }
    }
    s
}

/// Every suite, in a fixed order.
pub fn all() -> Vec<Suite> {
    vec![
        survival(),
        extinction(),
        duality(),
        finite_duality(),
        mu_marginals(),
        variance_oracle(),
        discrepancy(),
        cluster(),
        growth(),
        fpp(),
    ]
}
