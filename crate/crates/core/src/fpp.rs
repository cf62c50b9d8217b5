//! First-passage percolation with i.i.d. exponential edge weights, and its
//! comparison with the contact process.
//!
//! With weights `Exp(λ)` on the undirected edges, the ball
//! `B_t = {z : T(x, z) ≤ t}` has the law of the contact process from `x`
//! with recoveries switched off, so it stochastically dominates `ξ^x_t`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use ordered_float::OrderedFloat;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    bernoulli, fit_exponential, mean_estimate, run_replicas, Estimate, EstimateSeries, FitResult, MCConfig,
    GUARD_SHELL,
};
use crate::graphical::{evolve, EvolveConfig, LightConeTarget, RecoveryMask};
use crate::lattice::{Configuration, Geometry, Neighbor, Site};
use crate::seeds;

/// Exponential weights on the undirected edges inside a window. The edge
/// `{x, x + e_i}` is keyed by the coordinates of `x` and the axis `i`, so a
/// seed fixes the weight of every edge whatever the window.
#[derive(Debug, Clone)]
pub struct WeightField {
    geom: Arc<Geometry>,
    lambda: f64,
    seed: u64,
    /// `weights[x * d + i]` is the weight of `{x, x + e_i}`, or `NaN` when
    /// that edge leaves the window.
    weights: Vec<f64>,
}

pub fn sample_weights(geom: &Arc<Geometry>, lambda: f64, seed: u64) -> Result<WeightField> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("edge rate must be positive, got {lambda}")));
    }
    let exp = Exp::new(lambda).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let master = seeds::derive_seed(seed, &[seeds::label("fpp")]);
    let d = geom.dim();
    let mut weights = vec![f64::NAN; geom.site_count() * d];
    for x in 0..geom.site_count() {
        let coords = geom.coords(x);
        for i in 0..d {
            if let Neighbor::Site(_) = geom.neighbor(x, 2 * i) {
                let mut rng = seeds::substream(master, seeds::object_id(&coords, i as u64));
                // Exp can return 0.0 only with probability ~2^-53; resample to
                // keep every weight strictly positive.
                let mut w = 0.0;
                while w <= 0.0 {
                    w = exp.sample(&mut rng);
                }
                weights[x * d + i] = w;
            }
        }
    }
    Ok(WeightField {
        geom: Arc::clone(geom),
        lambda,
        seed,
        weights,
    })
}

impl WeightField {
    pub fn geometry(&self) -> &Arc<Geometry> {
        &self.geom
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Weight of the edge from `x` in direction `k` (numbered as in
    /// [`Geometry`]), if that edge stays in the window.
    pub fn weight(&self, x: Site, k: usize) -> Option<f64> {
        let d = self.geom.dim();
        match self.geom.neighbor(x, k) {
            Neighbor::Exterior => None,
            Neighbor::Site(y) => {
                let base = if k % 2 == 0 { x } else { y };
                Some(self.weights[base * d + k / 2])
            }
        }
    }

    /// All in-window edge weights.
    pub fn edge_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().copied().filter(|w| !w.is_nan())
    }
}

/// Single-source travel times `T(x, ·)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelTimes {
    pub source: Site,
    pub times: Vec<f64>,
}

impl TravelTimes {
    /// `{z : T(x, z) ≤ t}`.
    pub fn ball(&self, t: f64) -> Vec<Site> {
        (0..self.times.len()).filter(|&z| self.times[z] <= t).collect()
    }

    pub fn ball_size(&self, t: f64) -> usize {
        self.times.iter().filter(|&&s| s <= t).count()
    }
}

/// Dijkstra from `x` over the whole window.
pub fn travel_times(field: &WeightField, x: Site) -> Result<TravelTimes> {
    let geom = &field.geom;
    geom.check_site(x)?;
    let mut times = vec![f64::INFINITY; geom.site_count()];
    let mut heap = BinaryHeap::new();
    times[x] = 0.0;
    heap.push(Reverse((OrderedFloat(0.0), x)));
    while let Some(Reverse((OrderedFloat(t), z))) = heap.pop() {
        if t > times[z] {
            continue;
        }
        for k in 0..2 * geom.dim() {
            if let (Neighbor::Site(y), Some(w)) = (geom.neighbor(z, k), field.weight(z, k)) {
                let s = t + w;
                if s < times[y] {
                    times[y] = s;
                    heap.push(Reverse((OrderedFloat(s), y)));
                }
            }
        }
    }
    Ok(TravelTimes { source: x, times })
}

pub fn travel_time(field: &WeightField, x: Site, y: Site) -> Result<f64> {
    field.geom.check_site(y)?;
    Ok(travel_times(field, x)?.times[y])
}

pub fn ball(field: &WeightField, x: Site, t: f64) -> Result<Vec<Site>> {
    Ok(travel_times(field, x)?.ball(t))
}

/// One `(y, t)` cell of a [`DominationReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationRow {
    /// Offset of the target along `e_1`.
    pub y: i64,
    pub t: f64,
    pub p_cp: f64,
    pub se_cp: f64,
    pub p_fpp: f64,
    pub se_fpp: f64,
    /// `p_cp > p_fpp + 3σ`, with `σ` the combined standard error.
    pub violation: bool,
}

/// Mean of `|ξ^x_t|` without recoveries against the mean ball size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeComparison {
    pub t: f64,
    pub no_recovery: Estimate,
    pub ball: Estimate,
}

impl SizeComparison {
    pub fn agree(&self, k: f64) -> bool {
        let se = (self.no_recovery.se.powi(2) + self.ball.se.powi(2)).sqrt();
        (self.no_recovery.estimate - self.ball.estimate).abs() <= k * se
    }
}

/// Tail of the travel time at one `t`: `log P(T(0, y) ≤ t)` against `y`
/// beyond `c₃ t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub t: f64,
    pub series: EstimateSeries,
    pub fit: Option<FitResult>,
}

/// Result of [`domination_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub rows: Vec<DominationRow>,
    pub sizes: Vec<SizeComparison>,
    pub c3: f64,
    pub tails: Vec<TailFit>,
}

impl DominationReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violation).count()
    }
}

/// Compare `P(y ∈ ξ^0_t)` with `P(T(0, y) ≤ t)` for targets `y·e_1`, and
/// the no-recovery process with the ball in mean size. The three samples use
/// independent streams. Tail fits use points with `y > c₃ t`.
pub fn domination_check(cfg: &MCConfig, ys: &[i64], ts: &[f64], c3: f64) -> Result<DominationReport> {
    cfg.validate()?;
    if ys.is_empty() || ts.is_empty() {
        return Err(Error::InvalidParameter("empty target or time grid".into()));
    }
    if ts.windows(2).any(|w| w[1] < w[0]) || ts[0] < 0.0 {
        return Err(Error::InvalidParameter("time grid must be sorted and non-negative".into()));
    }
    let t_max = *ts.last().unwrap();
    let reach = ys.iter().map(|y| y.unsigned_abs() as usize).max().unwrap_or(0);
    let geom = cfg.geometry(reach, t_max)?;
    let origin = geom.index(&vec![0; cfg.dim])?;
    let targets: Vec<Site> = ys
        .iter()
        .map(|&y| {
            let mut p = vec![0; cfg.dim];
            p[0] = y;
            geom.index(&p)
        })
        .collect::<Result<_>>()?;
    let shell = geom.shell(GUARD_SHELL);
    let start = Configuration::from_sites(&geom, [origin])?;
    let guard = |ev: EvolveConfig| {
        if cfg.guarded() {
            ev.light_cone(GUARD_SHELL, LightConeTarget::AllCopies)
        } else {
            ev
        }
    };
    let full = guard(EvolveConfig::new(ts.to_vec()).until(t_max));
    let grow = guard(EvolveConfig::new(ts.to_vec()).until(t_max).recovery(RecoveryMask::None));

    struct Run {
        cp: Vec<Vec<bool>>,
        fpp: Vec<f64>,
        no_recovery: Vec<usize>,
        ball: Vec<usize>,
    }
    let runs = run_replicas(cfg.replicas, |i| {
        let s = cfg.stream(cfg.seed_for("fpp-domination", i, &[0]), &geom, t_max)?;
        let traj = evolve(&start, &s, &full)?;
        let cp = traj
            .snapshots
            .iter()
            .map(|c| targets.iter().map(|&y| c.is_infected(y)).collect())
            .collect();
        let field = sample_weights(&geom, cfg.lambda, cfg.seed_for("fpp-domination", i, &[1]))?;
        let tt = travel_times(&field, origin)?;
        if cfg.guarded() {
            if let Some(&z) = shell.iter().find(|&&z| tt.times[z] <= t_max) {
                return Err(Error::LightCone {
                    time: tt.times[z],
                    site: geom.coords(z),
                });
            }
        }
        let s = cfg.stream(cfg.seed_for("fpp-domination", i, &[2]), &geom, t_max)?;
        let no_recovery = evolve(&start, &s, &grow)?.counts();
        Ok(Run {
            cp,
            fpp: targets.iter().map(|&y| tt.times[y]).collect(),
            no_recovery,
            ball: ts.iter().map(|&t| tt.ball_size(t)).collect(),
        })
    })?;

    let n = runs.len();
    let mut rows = Vec::with_capacity(ys.len() * ts.len());
    for (j, &y) in ys.iter().enumerate() {
        for (k, &t) in ts.iter().enumerate() {
            let cp = bernoulli(t, runs.iter().filter(|r| r.cp[k][j]).count(), n);
            let fpp = bernoulli(t, runs.iter().filter(|r| r.fpp[j] <= t).count(), n);
            let se = (cp.se.powi(2) + fpp.se.powi(2)).sqrt();
            rows.push(DominationRow {
                y,
                t,
                p_cp: cp.estimate,
                se_cp: cp.se,
                p_fpp: fpp.estimate,
                se_fpp: fpp.se,
                violation: cp.estimate > fpp.estimate + 3.0 * se,
            });
        }
    }
    let sizes = ts
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let a: Vec<f64> = runs.iter().map(|r| r.no_recovery[k] as f64).collect();
            let b: Vec<f64> = runs.iter().map(|r| r.ball[k] as f64).collect();
            SizeComparison {
                t,
                no_recovery: mean_estimate(t, &a),
                ball: mean_estimate(t, &b),
            }
        })
        .collect();
    let tails = ts
        .iter()
        .filter(|&&t| t > 0.0)
        .map(|&t| {
            let mut series = EstimateSeries::new(format!("fpp_tail_t{t}"));
            for (j, &y) in ys.iter().enumerate() {
                let mut e = bernoulli(y.unsigned_abs() as f64, runs.iter().filter(|r| r.fpp[j] <= t).count(), n);
                e.x = y.unsigned_abs() as f64;
                series.push(e);
            }
            // strictly beyond c₃ t
            let fit = fit_exponential(&series, (c3 * t).next_up()).ok();
            TailFit { t, series, fit }
        })
        .collect();
    Ok(DominationReport { rows, sizes, c3, tails })
}
